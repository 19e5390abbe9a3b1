//! Generator sets and codifferential arithmetic.
//!
//! A codifferential `Df(x) = [hypo, hyper]` is stored as two finite lists of
//! offset pairs `(a, v)`; each list stands for its convex hull. The model it
//! induces near `x` is
//!
//! ```text
//! f(x + h) ≈ f(x) + max_{(a,v) ∈ hypo} (a + <v,h>) + min_{(b,w) ∈ hyper} (b + <w,h>)
//! ```
//!
//! Every constructor returns the normalized form (`max a = 0` over the hypo
//! set and `min b = 0` over the hyper set).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Default Euclidean tolerance on `(a, v)` used when deduplicating generators.
pub const DEDUP_TOL: f64 = 1e-12;
/// Absolute tolerance for offset comparisons.
pub const OFFSET_TOL: f64 = 1e-10;
/// Generator count above which evaluation emits a warning.
pub const GENERATOR_SOFT_CAP: usize = 4096;

/// One generator `(a, v)`. Serialized as `[a, [v1, ..., vd]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, Vec<f64>)", into = "(f64, Vec<f64>)")]
pub struct OffsetPair {
    pub a: f64,
    pub v: Vec<f64>,
}

impl From<(f64, Vec<f64>)> for OffsetPair {
    fn from((a, v): (f64, Vec<f64>)) -> Self {
        OffsetPair { a, v }
    }
}

impl From<OffsetPair> for (f64, Vec<f64>) {
    fn from(p: OffsetPair) -> Self {
        (p.a, p.v)
    }
}

impl OffsetPair {
    pub fn new(a: f64, v: Vec<f64>) -> Self {
        OffsetPair { a, v }
    }

    pub fn zero(dim: usize) -> Self {
        OffsetPair {
            a: 0.0,
            v: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && linalg::all_finite(&self.v)
    }

    /// Squared Euclidean norm of `(a, v)` in `R^{1+d}`.
    pub fn norm_sq(&self) -> f64 {
        self.a * self.a + linalg::norm_sq(&self.v)
    }

    pub fn dot(&self, other: &OffsetPair) -> f64 {
        self.a * other.a + linalg::dot(&self.v, &other.v)
    }

    pub fn dist(&self, other: &OffsetPair) -> f64 {
        let da = self.a - other.a;
        (da * da
            + self
                .v
                .iter()
                .zip(&other.v)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>())
        .sqrt()
    }

    pub fn plus(&self, other: &OffsetPair) -> OffsetPair {
        OffsetPair {
            a: self.a + other.a,
            v: linalg::add(&self.v, &other.v),
        }
    }

    pub fn scaled(&self, lambda: f64) -> OffsetPair {
        OffsetPair {
            a: lambda * self.a,
            v: linalg::scaled(lambda, &self.v),
        }
    }

    /// Value of the affine piece `a + <v, h>`.
    pub fn affine_at(&self, h: &[f64]) -> f64 {
        self.a + linalg::dot(&self.v, h)
    }
}

#[derive(Deserialize)]
struct GeneratorSetRepr {
    pairs: Vec<OffsetPair>,
}

impl TryFrom<GeneratorSetRepr> for GeneratorSet {
    type Error = Error;

    fn try_from(r: GeneratorSetRepr) -> Result<Self> {
        GeneratorSet::new(r.pairs)
    }
}

/// Nonempty finite list of offset pairs of a common dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeneratorSetRepr")]
pub struct GeneratorSet {
    pairs: Vec<OffsetPair>,
}

impl GeneratorSet {
    /// Validates nonemptiness, a common dimension and finiteness.
    pub fn new(pairs: Vec<OffsetPair>) -> Result<Self> {
        let first = pairs.first().ok_or(Error::EmptyGeneratorSet)?;
        let d = first.dim();
        for p in &pairs {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                });
            }
            if !p.is_finite() {
                return Err(Error::NonFinite("generator"));
            }
        }
        Ok(GeneratorSet { pairs })
    }

    /// Builds from raw `(a, v)` tuples; convenient in tests and examples.
    pub fn from_tuples(pairs: &[(f64, &[f64])]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|(a, v)| OffsetPair::new(*a, v.to_vec()))
                .collect(),
        )
    }

    pub(crate) fn from_pairs_unchecked(pairs: Vec<OffsetPair>) -> Self {
        debug_assert!(!pairs.is_empty());
        GeneratorSet { pairs }
    }

    pub fn singleton(pair: OffsetPair) -> Self {
        GeneratorSet { pairs: vec![pair] }
    }

    /// `{(0, 0)}` in dimension `dim`.
    pub fn zero(dim: usize) -> Self {
        Self::singleton(OffsetPair::zero(dim))
    }

    pub fn pairs(&self) -> &[OffsetPair] {
        &self.pairs
    }

    pub fn into_pairs(self) -> Vec<OffsetPair> {
        self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.pairs[0].dim()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, OffsetPair> {
        self.pairs.iter()
    }

    pub fn max_offset(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.a)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_offset(&self) -> f64 {
        self.pairs.iter().map(|p| p.a).fold(f64::INFINITY, f64::min)
    }

    fn shift_offsets(&self, delta: f64) -> GeneratorSet {
        GeneratorSet {
            pairs: self
                .pairs
                .iter()
                .map(|p| OffsetPair::new(p.a + delta, p.v.clone()))
                .collect(),
        }
    }

    /// Translates every generator by `z`.
    pub fn translate(&self, z: &OffsetPair) -> GeneratorSet {
        GeneratorSet {
            pairs: self.pairs.iter().map(|p| p.plus(z)).collect(),
        }
    }

    /// `lambda * conv(self)`, deduplicated.
    pub fn scaled(&self, lambda: f64) -> GeneratorSet {
        let pairs = self.pairs.iter().map(|p| p.scaled(lambda)).collect();
        dedup(&GeneratorSet { pairs }, DEDUP_TOL)
    }

    /// Support function `max <(a,v), (da,dv)>` over the hull.
    pub fn support(&self, da: f64, dv: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.a * da + linalg::dot(&p.v, dv))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max (a + <v,h>)` over the set.
    pub fn max_affine(&self, h: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.affine_at(h))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `min (b + <w,h>)` over the set.
    pub fn min_affine(&self, h: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.affine_at(h))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether some generator lies within `tol` of `pair`.
    pub fn contains_approx(&self, pair: &OffsetPair, tol: f64) -> bool {
        self.pairs.iter().any(|p| p.dist(pair) <= tol)
    }
}

/// Truncation levels `nu` (hypo) and `mu` (hyper); `+inf` keeps everything.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationParams {
    pub nu: f64,
    pub mu: f64,
}

impl TruncationParams {
    pub fn new(nu: f64, mu: f64) -> Result<Self> {
        for (name, val) in [("nu", nu), ("mu", mu)] {
            if val.is_nan() || val < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be >= 0 or +inf, got {val}"
                )));
            }
        }
        Ok(TruncationParams { nu, mu })
    }

    pub fn full() -> Self {
        TruncationParams {
            nu: f64::INFINITY,
            mu: f64::INFINITY,
        }
    }
}

impl Default for TruncationParams {
    fn default() -> Self {
        Self::full()
    }
}

/// A pair `[hypo, hyper]` of generator sets of equal dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codifferential {
    hypo: GeneratorSet,
    hyper: GeneratorSet,
}

impl Codifferential {
    /// Normalizing constructor.
    pub fn new(hypo: GeneratorSet, hyper: GeneratorSet) -> Result<Self> {
        Ok(normalize(&Self::unnormalized(hypo, hyper)?))
    }

    /// Keeps offsets as given. Use [`normalize`] before handing the value to
    /// truncation or the solvers.
    pub fn unnormalized(hypo: GeneratorSet, hyper: GeneratorSet) -> Result<Self> {
        if hypo.dim() != hyper.dim() {
            return Err(Error::DimensionMismatch {
                expected: hypo.dim(),
                got: hyper.dim(),
            });
        }
        Ok(Codifferential { hypo, hyper })
    }

    pub(crate) fn from_sets_unchecked(hypo: GeneratorSet, hyper: GeneratorSet) -> Self {
        Codifferential { hypo, hyper }
    }

    /// `[{(0, g)}, {(0, 0)}]` for a differentiable function with gradient `g`.
    pub fn smooth(grad: Vec<f64>) -> Self {
        let d = grad.len();
        Codifferential {
            hypo: GeneratorSet::singleton(OffsetPair::new(0.0, grad)),
            hyper: GeneratorSet::zero(d),
        }
    }

    pub fn hypo(&self) -> &GeneratorSet {
        &self.hypo
    }

    pub fn hyper(&self) -> &GeneratorSet {
        &self.hyper
    }

    pub fn dim(&self) -> usize {
        self.hypo.dim()
    }

    pub fn generator_count(&self) -> usize {
        self.hypo.len() + self.hyper.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.hypo.max_offset() == 0.0 && self.hyper.min_offset() == 0.0
    }

    /// `[A + C, B + D]`, normalized.
    pub fn add(&self, other: &Codifferential) -> Result<Codifferential> {
        let hypo = minkowski_sum(&self.hypo, &other.hypo)?;
        let hyper = minkowski_sum(&self.hyper, &other.hyper)?;
        Ok(normalize(&Codifferential { hypo, hyper }))
    }

    /// Model increment `max(a + <v,h>) + min(b + <w,h>)`.
    pub fn model(&self, h: &[f64]) -> f64 {
        self.hypo.max_affine(h) + self.hyper.min_affine(h)
    }
}

/// Shifts offsets so that `max a = 0` over hypo and `min b = 0` over hyper.
pub fn normalize(cd: &Codifferential) -> Codifferential {
    let a_max = cd.hypo.max_offset();
    let b_min = cd.hyper.min_offset();
    let hypo = if a_max == 0.0 {
        cd.hypo.clone()
    } else {
        cd.hypo.shift_offsets(-a_max)
    };
    let hyper = if b_min == 0.0 {
        cd.hyper.clone()
    } else {
        cd.hyper.shift_offsets(-b_min)
    };
    Codifferential { hypo, hyper }
}

/// All pairwise sums, deduplicated. `conv(result) = conv(g1) + conv(g2)`.
pub fn minkowski_sum(g1: &GeneratorSet, g2: &GeneratorSet) -> Result<GeneratorSet> {
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch {
            expected: g1.dim(),
            got: g2.dim(),
        });
    }
    let mut pairs = Vec::with_capacity(g1.len() * g2.len());
    for p in g1.iter() {
        for q in g2.iter() {
            pairs.push(p.plus(q));
        }
    }
    Ok(dedup(&GeneratorSet { pairs }, DEDUP_TOL))
}

/// `lambda * [A, B]`; negative factors swap the sets.
pub fn scale(lambda: f64, cd: &Codifferential) -> Codifferential {
    let (hypo, hyper) = if lambda >= 0.0 {
        (cd.hypo.scaled(lambda), cd.hyper.scaled(lambda))
    } else {
        (cd.hyper.scaled(lambda), cd.hypo.scaled(lambda))
    };
    normalize(&Codifferential { hypo, hyper })
}

/// Generators of the hypo set with `a >= -nu` (within [`OFFSET_TOL`]).
pub fn truncate_hypo(cd: &Codifferential, nu: f64) -> GeneratorSet {
    let kept: Vec<OffsetPair> = cd
        .hypo
        .iter()
        .filter(|p| p.a >= -nu - OFFSET_TOL)
        .cloned()
        .collect();
    if kept.is_empty() {
        // Unreachable for normalized input.
        return cd.hypo.clone();
    }
    GeneratorSet { pairs: kept }
}

/// Generators of the hyper set with `b <= mu` (within [`OFFSET_TOL`]).
pub fn truncate_hyper(cd: &Codifferential, mu: f64) -> GeneratorSet {
    let kept: Vec<OffsetPair> = cd
        .hyper
        .iter()
        .filter(|p| p.a <= mu + OFFSET_TOL)
        .cloned()
        .collect();
    if kept.is_empty() {
        return cd.hyper.clone();
    }
    GeneratorSet { pairs: kept }
}

/// Quasidifferential `[∂̲f, ∂̄f]`: vectors of the zero-offset generators.
pub fn extract_quasidifferential(cd: &Codifferential) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let pick = |g: &GeneratorSet| -> Vec<Vec<f64>> {
        g.iter()
            .filter(|p| p.a.abs() <= OFFSET_TOL)
            .map(|p| p.v.clone())
            .collect()
    };
    let lower = pick(&cd.hypo);
    let upper = pick(&cd.hyper);
    if lower.is_empty() || upper.is_empty() {
        return Err(Error::Precondition(
            "codifferential has no zero-offset generator; normalize it first".into(),
        ));
    }
    Ok((lower, upper))
}

/// Greedy dedup in list order: a pair is dropped when an earlier kept pair
/// lies within `tol`.
pub fn dedup(g: &GeneratorSet, tol: f64) -> GeneratorSet {
    // Kept pairs are bucketed on the grid of `(a, v_0)`; a duplicate can
    // only sit in the same or a neighbouring cell.
    let width = if tol > 0.0 { tol } else { f64::MIN_POSITIVE };
    let cell = |t: f64| (t / width).floor() as i64;
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut kept: Vec<OffsetPair> = Vec::with_capacity(g.len());
    for p in g.iter() {
        let (ka, kv) = (cell(p.a), p.v.first().map_or(0, |&t| cell(t)));
        let near = |b: (i64, i64)| {
            buckets
                .get(&b)
                .is_some_and(|ix| ix.iter().any(|&i| (kept[i].a - p.a).abs() <= tol && kept[i].dist(p) <= tol))
        };
        let dup = (-1..=1).any(|i| (-1..=1).any(|j| near((ka.saturating_add(i), kv.saturating_add(j)))));
        if !dup {
            buckets.entry((ka, kv)).or_default().push(kept.len());
            kept.push(p.clone());
        }
    }
    GeneratorSet { pairs: kept }
}
