//! Field-generic elimination and span machinery.
//!
//! Exact fields get textbook Gauss-Jordan with exact zero tests; the real
//! field routes rank decisions through an SVD with the relative cutoff from
//! its [`RealField`](crate::field::RealField) context, so every tolerance
//! decision in the crate flows through one place.

use crate::field::{Field, RealField};
use nalgebra::DMatrix;

/// Row-reduced basis of a growing span, with pivot bookkeeping.
///
/// Rows inserted so far are kept in reduced echelon form. Membership tests
/// reduce a candidate against the basis and ask the field whether the residual
/// is negligible relative to the original row.
#[derive(Clone, Debug)]
pub struct IncrementalSpan<F: Field> {
    field: F,
    dim: usize,
    rows: Vec<Vec<F::Elem>>,
    pivots: Vec<usize>,
}

impl<F: Field> IncrementalSpan<F> {
    pub fn new(field: F, dim: usize) -> Self {
        IncrementalSpan {
            field,
            dim,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, row: &[F::Elem]) -> Vec<F::Elem> {
        let f = &self.field;
        let mut v = row.to_vec();
        for (basis_row, &p) in self.rows.iter().zip(&self.pivots) {
            if !f.is_zero(&v[p]) {
                let c = v[p].clone();
                for (x, b) in v.iter_mut().zip(basis_row) {
                    *x = f.sub(x, &f.mul(&c, b));
                }
            }
        }
        v
    }

    /// True when `row` lies in the current span.
    pub fn contains(&self, row: &[F::Elem]) -> bool {
        assert_eq!(row.len(), self.dim);
        // Second reduction pass refines the float residual; it is a no-op on
        // exact fields where pivot columns are already exactly cleared.
        let residual = self.reduce(&self.reduce(row));
        self.field.residual_is_zero(&residual, row)
    }

    /// Inserts `row`; returns true when it enlarged the span.
    pub fn insert(&mut self, row: &[F::Elem]) -> bool {
        assert_eq!(row.len(), self.dim);
        let f = self.field.clone();
        let mut v = self.reduce(&self.reduce(row));
        if f.residual_is_zero(&v, row) {
            return false;
        }
        // pick the strongest pivot in the residual
        let pivot = (0..self.dim)
            .max_by(|&a, &b| {
                f.pivot_weight(&v[a])
                    .partial_cmp(&f.pivot_weight(&v[b]))
                    .unwrap()
            })
            .unwrap();
        debug_assert!(!f.is_zero(&v[pivot]));
        let inv = f.inv(&v[pivot]);
        for x in v.iter_mut() {
            *x = f.mul(x, &inv);
        }
        // clear the new pivot column from existing basis rows
        for row in self.rows.iter_mut() {
            if !f.is_zero(&row[pivot]) {
                let c = row[pivot].clone();
                for (x, b) in row.iter_mut().zip(&v) {
                    *x = f.sub(x, &f.mul(&c, b));
                }
            }
        }
        self.rows.push(v);
        self.pivots.push(pivot);
        true
    }

    /// The reduced basis rows (span generators).
    pub fn basis_rows(&self) -> &[Vec<F::Elem>] {
        &self.rows
    }

    /// Applies the reduction map `v -> v - sum_i v[p_i] * r_i`, a linear map
    /// whose kernel is exactly the current span.
    pub fn reduce_to_complement(&self, row: &[F::Elem]) -> Vec<F::Elem> {
        self.reduce(&self.reduce(row))
    }
}

/// Exact rank by Gauss-Jordan; used for every exact-field rank decision.
pub fn exact_rank<F: Field>(field: &F, rows: &[Vec<F::Elem>], dim: usize) -> usize {
    let mut span = IncrementalSpan::new(field.clone(), dim);
    for r in rows {
        span.insert(r);
    }
    span.rank()
}

/// Rank of real rows: count of singular values above `tol * sigma_max`.
pub fn real_rank(field: &RealField, rows: &[Vec<f64>], dim: usize) -> usize {
    if rows.is_empty() || dim == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > field.tolerance * smax).count()
}

/// Dense square matrix acting on `dim`-entry row vectors; `matrix[i]` holds
/// the coefficients of the i-th output coordinate.
#[derive(Clone, Debug)]
pub struct SquareMatrix<F: Field> {
    pub dim: usize,
    pub matrix: Vec<Vec<F::Elem>>,
}

impl<F: Field> SquareMatrix<F> {
    pub fn new(matrix: Vec<Vec<F::Elem>>) -> Self {
        let dim = matrix.len();
        assert!(matrix.iter().all(|r| r.len() == dim));
        SquareMatrix { dim, matrix }
    }

    pub fn identity(field: &F, dim: usize) -> Self {
        let matrix = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| if i == j { field.one() } else { field.zero() })
                    .collect()
            })
            .collect();
        SquareMatrix { dim, matrix }
    }

    pub fn apply(&self, field: &F, v: &[F::Elem]) -> Vec<F::Elem> {
        assert_eq!(v.len(), self.dim);
        self.matrix
            .iter()
            .map(|row| {
                let mut acc = field.zero();
                for (a, b) in row.iter().zip(v) {
                    acc = field.add(&acc, &field.mul(a, b));
                }
                acc
            })
            .collect()
    }

    pub fn is_invertible(&self, field: &F) -> bool {
        field.rank(&self.matrix, self.dim) == self.dim
    }
}
