//! Field abstraction: exact rationals, prime fields, and tolerance-based reals.
//!
//! All linear algebra in this crate is generic over a [`Field`] context object
//! that owns the arithmetic. Exact fields (`Q`, `F_p`) make every rank decision
//! by exact elimination; the real field makes them against a relative
//! singular-value threshold carried in the context.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Declared scalar domain of a vector list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FieldSpec {
    /// `f64` entries; `tolerance` is the relative singular-value cutoff used
    /// for rank decisions.
    Real { tolerance: f64 },
    /// Arbitrary-precision rationals.
    Rational,
    /// Integers mod a prime `p >= 2`.
    Prime { p: u64 },
}

impl FieldSpec {
    pub fn real_default() -> Self {
        FieldSpec::Real {
            tolerance: DEFAULT_REAL_TOLERANCE,
        }
    }

    /// Checks the declared invariants: `p` prime, tolerance nonnegative and
    /// zero exactly for the exact fields.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            FieldSpec::Real { tolerance } => {
                if !tolerance.is_finite() || *tolerance < 0.0 {
                    return Err(format!("real tolerance must be a nonnegative real, got {tolerance}"));
                }
                Ok(())
            }
            FieldSpec::Rational => Ok(()),
            FieldSpec::Prime { p } => {
                if is_prime_u64(*p) {
                    Ok(())
                } else {
                    Err(format!("{p} is not prime"))
                }
            }
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Real { .. } => write!(f, "R"),
            FieldSpec::Rational => write!(f, "Q"),
            FieldSpec::Prime { p } => write!(f, "F{p}"),
        }
    }
}

/// Relative cutoff for real rank decisions: singular values below
/// `tol * sigma_max` count as zero.
pub const DEFAULT_REAL_TOLERANCE: f64 = 1e-9;

/// Arithmetic context for a scalar field.
///
/// Elements are plain data; the context carries whatever the arithmetic needs
/// (the modulus for `F_p`, the rank tolerance for `R`).
pub trait Field: Clone + fmt::Debug {
    type Elem: Clone + PartialEq + fmt::Debug;

    fn spec(&self) -> FieldSpec;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    /// Multiplicative inverse. Panics on zero; callers pivot on nonzero entries.
    fn inv(&self, a: &Self::Elem) -> Self::Elem;

    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.mul(a, &self.inv(b))
    }

    /// True when the field is exact (no tolerance in rank decisions).
    fn is_exact(&self) -> bool {
        true
    }

    /// Decides whether `residual` (left over after eliminating against a basis)
    /// should be treated as the zero vector. Exact fields compare entrywise;
    /// the real field compares norms relative to the original row.
    fn residual_is_zero(&self, residual: &[Self::Elem], original: &[Self::Elem]) -> bool {
        let _ = original;
        residual.iter().all(|e| self.is_zero(e))
    }

    /// Pivot magnitude for elimination ordering. Exact fields only need
    /// zero/nonzero; the real field prefers the entry of largest magnitude.
    fn pivot_weight(&self, a: &Self::Elem) -> f64 {
        if self.is_zero(a) {
            0.0
        } else {
            1.0
        }
    }

    /// Row rank of `rows` in ambient dimension `dim`. Exact fields eliminate
    /// exactly; the real field counts singular values above its cutoff.
    fn rank(&self, rows: &[Vec<Self::Elem>], dim: usize) -> usize
    where
        Self: Sized,
    {
        crate::linalg::exact_rank(self, rows, dim)
    }

    /// Rescales a row to unit length. Only the real field has a norm; exact
    /// fields refuse.
    fn normalize_row(&self, row: &mut [Self::Elem]) -> Result<(), String> {
        let _ = row;
        Err("normalization is only defined over the reals".into())
    }
}

/// `f64` with a relative rank tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    pub tolerance: f64,
}

impl Default for RealField {
    fn default() -> Self {
        RealField {
            tolerance: DEFAULT_REAL_TOLERANCE,
        }
    }
}

impl Field for RealField {
    type Elem = f64;

    fn spec(&self) -> FieldSpec {
        FieldSpec::Real {
            tolerance: self.tolerance,
        }
    }
    fn zero(&self) -> f64 {
        0.0
    }
    fn one(&self) -> f64 {
        1.0
    }
    fn is_zero(&self, a: &f64) -> bool {
        *a == 0.0
    }
    fn add(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }
    fn sub(&self, a: &f64, b: &f64) -> f64 {
        a - b
    }
    fn mul(&self, a: &f64, b: &f64) -> f64 {
        a * b
    }
    fn neg(&self, a: &f64) -> f64 {
        -a
    }
    fn inv(&self, a: &f64) -> f64 {
        1.0 / a
    }
    fn is_exact(&self) -> bool {
        false
    }
    fn residual_is_zero(&self, residual: &[f64], original: &[f64]) -> bool {
        let rn = l2_norm(residual);
        let on = l2_norm(original);
        rn <= self.tolerance * on.max(1e-300)
    }
    fn pivot_weight(&self, a: &f64) -> f64 {
        a.abs()
    }
    fn rank(&self, rows: &[Vec<f64>], dim: usize) -> usize {
        crate::linalg::real_rank(self, rows, dim)
    }
    fn normalize_row(&self, row: &mut [f64]) -> Result<(), String> {
        let norm = l2_norm(row);
        if norm == 0.0 {
            return Err("cannot normalize a zero vector".into());
        }
        for x in row.iter_mut() {
            *x /= norm;
        }
        Ok(())
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Arbitrary-precision rational arithmetic.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RationalField;

impl Field for RationalField {
    type Elem = BigRational;

    fn spec(&self) -> FieldSpec {
        FieldSpec::Rational
    }
    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn inv(&self, a: &BigRational) -> BigRational {
        a.recip()
    }
    fn pivot_weight(&self, a: &BigRational) -> f64 {
        if a.is_zero() {
            0.0
        } else {
            // Prefer structurally smaller pivots to keep numerators from growing.
            let bits = a.numer().abs().bits() + a.denom().bits();
            1.0 / (1.0 + bits as f64)
        }
    }
}

/// Integers mod a prime `p`, elements stored reduced in `[0, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, String> {
        if is_prime_u64(p) {
            Ok(PrimeField { p })
        } else {
            Err(format!("{p} is not prime"))
        }
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn element(&self, value: i64) -> u64 {
        value.rem_euclid(self.p as i64) as u64
    }
}

impl Field for PrimeField {
    type Elem = u64;

    fn spec(&self) -> FieldSpec {
        FieldSpec::Prime { p: self.p }
    }
    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 + *b as u128) % self.p as u128) as u64
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 + self.p as u128 - *b as u128) % self.p as u128) as u64
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 * *b as u128) % self.p as u128) as u64
    }
    fn neg(&self, a: &u64) -> u64 {
        if *a == 0 {
            0
        } else {
            self.p - a
        }
    }
    fn inv(&self, a: &u64) -> u64 {
        assert!(*a != 0, "inverse of zero in F_{}", self.p);
        pow_mod(*a, self.p - 2, self.p)
    }
}

fn pow_mod(base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc: u128 = 1;
    let mut b = base as u128 % p as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % p as u128;
        }
        b = b * b % p as u128;
        exp >>= 1;
    }
    acc as u64
}

/// Deterministic Miller-Rabin, exact for all `u64` with these witnesses.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = ((x as u128 * x as u128) % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Parses a rational in `a/b` form with optional sign.
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let (num, den) = s
        .split_once('/')
        .ok_or_else(|| format!("expected a/b rational, got {s:?}"))?;
    let n: BigInt = num.parse().map_err(|_| format!("bad numerator {num:?}"))?;
    let d: BigInt = den.parse().map_err(|_| format!("bad denominator {den:?}"))?;
    if d.is_zero() {
        return Err("zero denominator".into());
    }
    Ok(BigRational::new(n, d))
}

/// Formats a rational as `a/b` (denominator always present and positive).
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}
