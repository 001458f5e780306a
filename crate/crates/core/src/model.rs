//! Vector-list model of locally correctable/decodable codes in geometric
//! form, with the rank, span, projection, and verification primitives the
//! reduction pipeline is built on.
//!
//! Everything here is multiset-aware: vectors are identified by index, never
//! by value, so repeated vectors stay distinguishable through reductions.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::{IncrementalSpan, SquareMatrix};
use std::collections::BTreeSet;

/// `ceil(delta * n)`, the matching size the geometric definition demands.
pub fn delta_threshold(delta: f64, n: usize) -> usize {
    (delta * n as f64).ceil() as usize
}

/// A list of `n` vectors in `F^d`. Order significant, repetitions allowed.
#[derive(Clone, Debug)]
pub struct VectorList<F: Field> {
    pub field: F,
    pub d: usize,
    pub rows: Vec<Vec<F::Elem>>,
}

impl<F: Field> VectorList<F> {
    pub fn new(field: F, d: usize, rows: Vec<Vec<F::Elem>>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::precondition(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    r.len(),
                    d
                )));
            }
        }
        Ok(VectorList { field, d, rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[F::Elem] {
        &self.rows[i]
    }

    /// Rows selected by an index set, in index order.
    pub fn rows_of<'a, I: IntoIterator<Item = &'a usize>>(&self, idx: I) -> Vec<Vec<F::Elem>> {
        idx.into_iter().map(|&i| self.rows[i].clone()).collect()
    }
}

/// Exact row rank of the list over its declared field.
pub fn rank<F: Field>(v: &VectorList<F>) -> usize {
    v.field.rank(&v.rows, v.d)
}

/// Indices of all elements spanned by the rows of `s`.
///
/// The result contains `s`, and is a fixed point of the closure.
pub fn span_closure<F: Field>(v: &VectorList<F>, s: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut span = IncrementalSpan::new(v.field.clone(), v.d);
    for &i in s {
        span.insert(v.row(i));
    }
    (0..v.n()).filter(|&i| span.contains(v.row(i))).collect()
}

/// Images of all rows under a linear map whose kernel is exactly
/// `span{v_j : j in U}`.
pub fn project_to_zero<F: Field>(v: &VectorList<F>, u: &BTreeSet<usize>) -> VectorList<F> {
    let mut span = IncrementalSpan::new(v.field.clone(), v.d);
    for &i in u {
        span.insert(v.row(i));
    }
    let rows = v
        .rows
        .iter()
        .map(|r| span.reduce_to_complement(r))
        .collect();
    VectorList {
        field: v.field.clone(),
        d: v.d,
        rows,
    }
}

/// Disjoint index triples decoding one element.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    pub owner: usize,
    pub triples: Vec<[usize; 3]>,
}

/// A `(3, delta)`-LCC in geometric form.
#[derive(Clone, Debug)]
pub struct LccInstance<F: Field> {
    pub vectors: VectorList<F>,
    pub matchings: Vec<Matching>,
    pub delta: f64,
}

impl<F: Field> LccInstance<F> {
    pub fn new(vectors: VectorList<F>, matchings: Vec<Matching>, delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta <= 1.0) {
            return Err(Error::precondition(format!("delta {delta} outside [0,1]")));
        }
        if matchings.len() != vectors.n() {
            return Err(Error::precondition(format!(
                "{} matchings for {} elements",
                matchings.len(),
                vectors.n()
            )));
        }
        for (i, m) in matchings.iter().enumerate() {
            if m.owner != i {
                return Err(Error::precondition(format!(
                    "matching {} declares owner {}",
                    i, m.owner
                )));
            }
        }
        Ok(LccInstance {
            vectors,
            matchings,
            delta,
        })
    }

    pub fn n(&self) -> usize {
        self.vectors.n()
    }

    pub fn d(&self) -> usize {
        self.vectors.d
    }

    /// All `(owner, triple)` incidences in index order.
    pub fn incidences(&self) -> impl Iterator<Item = (usize, [usize; 3])> + '_ {
        self.matchings
            .iter()
            .flat_map(|m| m.triples.iter().map(move |&t| (m.owner, t)))
    }
}

/// A `(q, delta)`-LDC in geometric form: targets are standard-basis indices.
#[derive(Clone, Debug)]
pub struct LdcInstance<F: Field> {
    pub vectors: VectorList<F>,
    /// For each matching, the decoded standard-basis coordinate.
    pub targets: Vec<usize>,
    /// One matching of disjoint q-tuples per target.
    pub matchings: Vec<Vec<Vec<usize>>>,
    pub delta: f64,
    pub query_arity: usize,
}

/// Per-element outcome of a verification pass.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct ElementCheck {
    pub matching_size: usize,
    pub required_size: usize,
    /// Pairs of triple positions within the matching that share an index.
    pub disjointness_violations: Vec<(usize, usize)>,
    /// Positions of tuples that fail to span their target.
    pub span_failures: Vec<usize>,
}

impl ElementCheck {
    pub fn ok(&self) -> bool {
        self.matching_size >= self.required_size
            && self.disjointness_violations.is_empty()
            && self.span_failures.is_empty()
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct VerificationReport {
    pub valid: bool,
    pub elements: Vec<ElementCheck>,
}

fn check_tuple_indices(owner: usize, tuple: &[usize], n: usize, exclude_owner: bool) -> Result<()> {
    for &j in tuple {
        if j >= n {
            return Err(Error::Structure {
                owner,
                reason: format!("index {} out of range 1..={}", j + 1, n),
            });
        }
        if exclude_owner && j == owner {
            return Err(Error::Structure {
                owner,
                reason: "tuple contains its owner".into(),
            });
        }
    }
    for a in 0..tuple.len() {
        for b in a + 1..tuple.len() {
            if tuple[a] == tuple[b] {
                return Err(Error::Structure {
                    owner,
                    reason: format!("repeated index {} inside a tuple", tuple[a] + 1),
                });
            }
        }
    }
    Ok(())
}

/// Span membership by rank comparison: `target in span(rows)` iff adding the
/// target row does not increase the rank.
pub fn spans_target<F: Field>(
    field: &F,
    dim: usize,
    tuple_rows: &[Vec<F::Elem>],
    target: &[F::Elem],
) -> bool {
    let base = field.rank(tuple_rows, dim);
    let mut with_target = tuple_rows.to_vec();
    with_target.push(target.to_vec());
    field.rank(&with_target, dim) == base
}

fn verify_matchings<F: Field>(
    v: &VectorList<F>,
    delta: f64,
    items: &[(usize, Vec<Vec<usize>>, Vec<F::Elem>)],
    exclude_owner: bool,
) -> Result<VerificationReport> {
    let n = v.n();
    let required = delta_threshold(delta, n);
    let mut elements = Vec::with_capacity(items.len());
    for (owner, tuples, target) in items {
        for t in tuples {
            check_tuple_indices(*owner, t, n, exclude_owner)?;
        }
        let mut check = ElementCheck {
            matching_size: tuples.len(),
            required_size: required,
            ..Default::default()
        };
        // pairwise disjointness across the matching
        for a in 0..tuples.len() {
            for b in a + 1..tuples.len() {
                if tuples[a].iter().any(|i| tuples[b].contains(i)) {
                    check.disjointness_violations.push((a, b));
                }
            }
        }
        for (pos, t) in tuples.iter().enumerate() {
            let rows = v.rows_of(t.iter());
            if !spans_target(&v.field, v.d, &rows, target) {
                check.span_failures.push(pos);
            }
        }
        elements.push(check);
    }
    let valid = elements.iter().all(ElementCheck::ok);
    Ok(VerificationReport { valid, elements })
}

/// Structural and span verification of an LCC instance.
///
/// Total on structurally well-formed input: size shortfalls, disjointness
/// violations and span failures are reported, not rejected. Malformed indices
/// are errors naming the offending matching.
pub fn verify_lcc<F: Field>(inst: &LccInstance<F>) -> Result<VerificationReport> {
    let items: Vec<_> = inst
        .matchings
        .iter()
        .map(|m| {
            (
                m.owner,
                m.triples.iter().map(|t| t.to_vec()).collect::<Vec<_>>(),
                inst.vectors.row(m.owner).to_vec(),
            )
        })
        .collect();
    verify_matchings(&inst.vectors, inst.delta, &items, true)
}

/// As [`verify_lcc`], but targets are the standard-basis vectors named by the
/// instance's target list.
pub fn verify_ldc<F: Field>(inst: &LdcInstance<F>) -> Result<VerificationReport> {
    let f = &inst.vectors.field;
    let d = inst.vectors.d;
    if inst.targets.len() != inst.matchings.len() {
        return Err(Error::precondition(format!(
            "{} targets for {} matchings",
            inst.targets.len(),
            inst.matchings.len()
        )));
    }
    let items: Vec<_> = inst
        .targets
        .iter()
        .zip(&inst.matchings)
        .map(|(&ti, tuples)| {
            let mut e = vec![f.zero(); d];
            e[ti] = f.one();
            (ti, tuples.clone(), e)
        })
        .collect();
    for (_, tuples, _) in &items {
        for t in tuples {
            if t.len() != inst.query_arity {
                return Err(Error::precondition(format!(
                    "tuple of arity {} in a {}-query LDC",
                    t.len(),
                    inst.query_arity
                )));
            }
        }
    }
    verify_matchings(&inst.vectors, inst.delta, &items, false)
}

/// A sub-instance together with the map from new indices to the old ones.
#[derive(Clone, Debug)]
pub struct Refined<F: Field> {
    pub instance: LccInstance<F>,
    /// `index_map[new] = old`
    pub index_map: Vec<usize>,
}

impl<F: Field> Refined<F> {
    /// Composes with an outer map, yielding indices into the outer space.
    pub fn compose(&self, outer: &[usize]) -> Vec<usize> {
        self.index_map.iter().map(|&i| outer[i]).collect()
    }
}

/// Restriction to a large subset: keeps the elements of `keep`, keeps only the
/// triples fully inside, halves delta.
pub fn refine_subset<F: Field>(inst: &LccInstance<F>, keep: &BTreeSet<usize>) -> Result<Refined<F>> {
    let n = inst.n();
    let min_keep = ((1.0 - inst.delta / 2.0) * n as f64).ceil() as usize;
    if keep.len() < min_keep {
        return Err(Error::precondition(format!(
            "keep set of size {} is below (1 - delta/2) n = {}",
            keep.len(),
            min_keep
        )));
    }
    Ok(restrict_to_subset(inst, keep, inst.delta / 2.0))
}

/// Unchecked subset restriction used by reductions that account for their own
/// delta bookkeeping.
pub fn restrict_to_subset<F: Field>(
    inst: &LccInstance<F>,
    keep: &BTreeSet<usize>,
    new_delta: f64,
) -> Refined<F> {
    let index_map: Vec<usize> = keep.iter().copied().collect();
    let mut back = vec![usize::MAX; inst.n()];
    for (new, &old) in index_map.iter().enumerate() {
        back[old] = new;
    }
    let rows = inst.vectors.rows_of(index_map.iter());
    let vectors = VectorList {
        field: inst.vectors.field.clone(),
        d: inst.vectors.d,
        rows,
    };
    let matchings = index_map
        .iter()
        .enumerate()
        .map(|(new, &old)| Matching {
            owner: new,
            triples: inst.matchings[old]
                .triples
                .iter()
                .filter(|t| t.iter().all(|&j| back[j] != usize::MAX))
                .map(|t| [back[t[0]], back[t[1]], back[t[2]]])
                .collect(),
        })
        .collect();
    Refined {
        instance: LccInstance {
            vectors,
            matchings,
            delta: new_delta,
        },
        index_map,
    }
}

/// Applies an invertible map to every vector, keeping the matchings.
///
/// `normalize` rescales each image to unit length and is only meaningful over
/// the reals; exact fields reject it.
pub fn apply_invertible<F: Field>(
    inst: &LccInstance<F>,
    m: &SquareMatrix<F>,
    normalize: bool,
) -> Result<LccInstance<F>> {
    let f = &inst.vectors.field;
    if m.dim != inst.d() {
        return Err(Error::precondition(format!(
            "map dimension {} != ambient dimension {}",
            m.dim,
            inst.d()
        )));
    }
    if !m.is_invertible(f) {
        return Err(Error::precondition("singular transformation"));
    }
    let mut rows: Vec<Vec<F::Elem>> = inst.vectors.rows.iter().map(|r| m.apply(f, r)).collect();
    if normalize {
        for r in rows.iter_mut() {
            f.normalize_row(r)
                .map_err(|e| Error::FieldMismatch(e.to_string()))?;
        }
    }
    Ok(LccInstance {
        vectors: VectorList {
            field: f.clone(),
            d: inst.d(),
            rows,
        },
        matchings: inst.matchings.clone(),
        delta: inst.delta,
    })
}

/// The 2-query LDC length bound `2^(delta d / 16 - 1)`.
pub fn ldc2_min_length(delta: f64, d: usize) -> f64 {
    (delta * d as f64 / 16.0 - 1.0).exp2()
}

/// True when a verified `(2, delta)`-LDC's length falls below the bound —
/// an internal-consistency violation on theorem-consistent inputs.
pub fn ldc2_violates_bound(n: usize, delta: f64, d: usize) -> bool {
    (n as f64) < ldc2_min_length(delta, d)
}
