//! Forward evaluation of values and codifferentials.

use log::warn;

use super::expr::{Expression, Node, NodeId};
use crate::codiff::{
    dedup, extract_quasidifferential, minkowski_sum, normalize, scale, Codifferential,
    GeneratorSet, OffsetPair, DEDUP_TOL, GENERATOR_SOFT_CAP,
};
use crate::error::{Error, Result};
use crate::linalg;

/// `f(x)` together with a normalized codifferential `Df(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalOutput {
    pub value: f64,
    pub cd: Codifferential,
    /// Set when some node exceeded [`GENERATOR_SOFT_CAP`] generators.
    pub cap_exceeded: bool,
}

/// Arguments of the approximation error `eps_f(alpha, dx, x, r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproximationProbe {
    x: Vec<f64>,
    delta_x: Vec<f64>,
    alpha: f64,
    radius: f64,
}

impl ApproximationProbe {
    pub fn new(x: Vec<f64>, delta_x: Vec<f64>, alpha: f64, radius: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
        }
        if x.len() != delta_x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: delta_x.len(),
            });
        }
        if linalg::norm(&delta_x) > radius {
            return Err(Error::InvalidParameter("|delta_x| exceeds the radius".into()));
        }
        Ok(ApproximationProbe {
            x,
            delta_x,
            alpha,
            radius,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn delta_x(&self) -> &[f64] {
        &self.delta_x
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

fn check_point(expr: &Expression, x: &[f64]) -> Result<()> {
    if x.len() != expr.dim() {
        return Err(Error::DimensionMismatch {
            expected: expr.dim(),
            got: x.len(),
        });
    }
    if !linalg::all_finite(x) {
        return Err(Error::NonFinite("evaluation point"));
    }
    Ok(())
}

fn affine_norm_residual(a: &[Vec<f64>], b: &[f64], x: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(row, bi)| linalg::dot(row, x) + bi).collect()
}

/// Values of every reachable node; unreachable entries are NaN.
fn node_values(expr: &Expression, x: &[f64]) -> Result<Vec<f64>> {
    let nodes = expr.nodes();
    let mut val = vec![f64::NAN; nodes.len()];
    for (i, node) in nodes.iter().enumerate() {
        if !expr.is_reachable(i) {
            continue;
        }
        let v = match node {
            Node::Variable(j) => x[*j],
            Node::Constant(c) => *c,
            Node::Affine { c, g } => c + linalg::dot(g, x),
            Node::SmoothScalar { f, child } => {
                let y = val[child.0];
                if !f.in_domain(y) {
                    return Err(Error::Domain {
                        node: i,
                        reason: format!("{f:?} undefined at {y}"),
                    });
                }
                f.value(y)
            }
            Node::SmoothMulti { g, children } => {
                let y: Vec<f64> = children.iter().map(|c| val[c.0]).collect();
                g.value(&y)
            }
            Node::Sum { weights, children } => weights
                .iter()
                .zip(children)
                .fold(0.0, |acc, (w, c)| acc + w * val[c.0]),
            Node::Max(children) => children
                .iter()
                .map(|c| val[c.0])
                .fold(f64::NEG_INFINITY, f64::max),
            Node::Min(children) => children
                .iter()
                .map(|c| val[c.0])
                .fold(f64::INFINITY, f64::min),
            Node::Product(l, r) => val[l.0] * val[r.0],
            Node::Reciprocal(c) => {
                let y = val[c.0];
                if y == 0.0 {
                    return Err(Error::Domain {
                        node: i,
                        reason: "reciprocal of zero".into(),
                    });
                }
                1.0 / y
            }
            Node::AffineNorm { a, b } => linalg::norm(&affine_norm_residual(a, b, x)),
        };
        if !v.is_finite() {
            return Err(Error::Domain {
                node: i,
                reason: format!("non-finite value {v}"),
            });
        }
        val[i] = v;
    }
    Ok(val)
}

impl Expression {
    /// `f(x)` without the codifferential.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_point(self, x)?;
        Ok(node_values(self, x)?[self.root().index()])
    }

    /// Values of all nodes (NaN for nodes the root does not use).
    pub fn node_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_point(self, x)?;
        node_values(self, x)
    }
}

/// Per-node derivative object: smooth nodes keep a plain gradient.
#[derive(Clone, Debug)]
enum Local {
    Smooth(Vec<f64>),
    General(Codifferential),
}

impl Local {
    fn into_cd(self) -> Codifferential {
        match self {
            Local::Smooth(g) => Codifferential::smooth(g),
            Local::General(cd) => cd,
        }
    }

    fn negated(&self) -> Local {
        match self {
            Local::Smooth(g) => Local::Smooth(linalg::scaled(-1.0, g)),
            Local::General(cd) => Local::General(scale(-1.0, cd)),
        }
    }
}

/// Linear combination `sum_i c_i D_i`.
fn combine(dim: usize, coeffs: &[f64], parts: &[&Local]) -> Local {
    let mut grad = vec![0.0; dim];
    let mut acc: Option<Codifferential> = None;
    for (c, part) in coeffs.iter().zip(parts) {
        match part {
            Local::Smooth(g) => linalg::axpy(*c, g, &mut grad),
            Local::General(cd) => {
                if *c == 0.0 {
                    continue;
                }
                let s = scale(*c, cd);
                acc = Some(match acc {
                    None => s,
                    Some(prev) => prev.add(&s).expect("dimensions checked at construction"),
                });
            }
        }
    }
    match acc {
        None => Local::Smooth(grad),
        Some(cd) => {
            let shift = OffsetPair::new(0.0, grad);
            let hypo = cd.hypo().translate(&shift);
            Local::General(normalize(&Codifferential::from_sets_unchecked(
                hypo,
                cd.hyper().clone(),
            )))
        }
    }
}

fn negate_set(g: &GeneratorSet) -> GeneratorSet {
    GeneratorSet::from_pairs_unchecked(g.iter().map(|p| p.scaled(-1.0)).collect())
}

/// Max rule: hypo = conv_i {(f_i - f, 0) + hypo_i - sum_{j != i} hyper_j},
/// hyper = sum_i hyper_i.
fn max_rule(dim: usize, values: &[f64], parts: &[&Local]) -> Local {
    let f = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    if parts.iter().all(|p| matches!(p, Local::Smooth(_))) {
        let pairs = values
            .iter()
            .zip(parts)
            .map(|(fi, p)| match p {
                Local::Smooth(g) => OffsetPair::new(fi - f, g.clone()),
                Local::General(_) => unreachable!(),
            })
            .collect();
        let hypo = dedup(&GeneratorSet::from_pairs_unchecked(pairs), DEDUP_TOL);
        return Local::General(normalize(&Codifferential::from_sets_unchecked(
            hypo,
            GeneratorSet::zero(dim),
        )));
    }

    let cds: Vec<Codifferential> = parts.iter().map(|p| (*p).clone().into_cd()).collect();
    let n = cds.len();
    let zero = GeneratorSet::zero(dim);
    let sum = |a: &GeneratorSet, b: &GeneratorSet| minkowski_sum(a, b).expect("same dimension");

    // prefix[i] = sum_{j<i} hyper_j, suffix[i] = sum_{j>=i} hyper_j
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(zero.clone());
    for cd in &cds {
        let next = sum(prefix.last().unwrap(), cd.hyper());
        prefix.push(next);
    }
    let mut suffix = vec![zero.clone(); n + 1];
    for i in (0..n).rev() {
        suffix[i] = sum(&suffix[i + 1], cds[i].hyper());
    }

    let mut pairs = Vec::new();
    for (i, cd) in cds.iter().enumerate() {
        let others = sum(&prefix[i], &suffix[i + 1]);
        let shift = OffsetPair::new(values[i] - f, vec![0.0; dim]);
        let term = sum(&cd.hypo().translate(&shift), &negate_set(&others));
        pairs.extend(term.into_pairs());
    }
    let hypo = dedup(&GeneratorSet::from_pairs_unchecked(pairs), DEDUP_TOL);
    let hyper = prefix.pop().unwrap();
    Local::General(normalize(&Codifferential::from_sets_unchecked(hypo, hyper)))
}

/// Min rule via `min f_i = -max(-f_i)`.
fn min_rule(dim: usize, values: &[f64], parts: &[&Local]) -> Local {
    let neg_values: Vec<f64> = values.iter().map(|v| -v).collect();
    let neg_parts: Vec<Local> = parts.iter().map(|p| p.negated()).collect();
    let refs: Vec<&Local> = neg_parts.iter().collect();
    match max_rule(dim, &neg_values, &refs) {
        Local::General(cd) => Local::General(scale(-1.0, &cd)),
        Local::Smooth(g) => Local::Smooth(linalg::scaled(-1.0, &g)),
    }
}

/// Finite generator set for `||Ax + b||`, built from the residual direction,
/// its antipode and the signed image axes.
fn affine_norm_cd(a: &[Vec<f64>], b: &[f64], x: &[f64]) -> Codifferential {
    let dim = x.len();
    let r = affine_norm_residual(a, b, x);
    let n = linalg::norm(&r);
    let m = r.len();
    let at = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (row, vi) in a.iter().zip(v) {
            linalg::axpy(*vi, row, &mut out);
        }
        out
    };
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(2 * m + 2);
    if n > 0.0 {
        let u = linalg::scaled(1.0 / n, &r);
        dirs.push(linalg::scaled(-1.0, &u));
        dirs.insert(0, u);
    }
    for k in 0..m {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; m];
            e[k] = s;
            dirs.push(e);
        }
    }
    let pairs = dirs
        .iter()
        .map(|v| {
            let offset = if n > 0.0 { linalg::dot(v, &r) - n } else { 0.0 };
            OffsetPair::new(offset, at(v))
        })
        .collect();
    let hypo = dedup(&GeneratorSet::from_pairs_unchecked(pairs), DEDUP_TOL);
    normalize(&Codifferential::from_sets_unchecked(hypo, GeneratorSet::zero(dim)))
}

/// Evaluates `f(x)` and a normalized codifferential by forward propagation of
/// the calculus rules.
pub fn evaluate(expr: &Expression, x: &[f64]) -> Result<EvalOutput> {
    check_point(expr, x)?;
    let dim = expr.dim();
    let val = node_values(expr, x)?;
    let nodes = expr.nodes();
    let mut loc: Vec<Option<Local>> = vec![None; nodes.len()];
    let mut cap_exceeded = false;

    for (i, node) in nodes.iter().enumerate() {
        if !expr.is_reachable(i) {
            continue;
        }
        let get = |id: &NodeId| loc[id.0].as_ref().expect("children evaluated first");
        let d = match node {
            Node::Variable(j) => {
                let mut e = vec![0.0; dim];
                e[*j] = 1.0;
                Local::Smooth(e)
            }
            Node::Constant(_) => Local::Smooth(vec![0.0; dim]),
            Node::Affine { g, .. } => Local::Smooth(g.clone()),
            Node::SmoothScalar { f, child } => {
                let s = f.derivative(val[child.0]);
                combine(dim, &[s], &[get(child)])
            }
            Node::SmoothMulti { g, children } => {
                let y: Vec<f64> = children.iter().map(|c| val[c.0]).collect();
                let coeffs = g.gradient(&y);
                let parts: Vec<&Local> = children.iter().map(get).collect();
                combine(dim, &coeffs, &parts)
            }
            Node::Sum { weights, children } => {
                let parts: Vec<&Local> = children.iter().map(get).collect();
                combine(dim, weights, &parts)
            }
            Node::Max(children) | Node::Min(children) => {
                let values: Vec<f64> = children.iter().map(|c| val[c.0]).collect();
                let parts: Vec<&Local> = children.iter().map(get).collect();
                if matches!(node, Node::Max(_)) {
                    max_rule(dim, &values, &parts)
                } else {
                    min_rule(dim, &values, &parts)
                }
            }
            Node::Product(l, r) => combine(dim, &[val[r.0], val[l.0]], &[get(l), get(r)]),
            Node::Reciprocal(c) => {
                let y = val[c.0];
                combine(dim, &[-1.0 / (y * y)], &[get(c)])
            }
            Node::AffineNorm { a, b } => Local::General(affine_norm_cd(a, b, x)),
        };
        if let Local::General(cd) = &d {
            if cd.generator_count() > GENERATOR_SOFT_CAP && !cap_exceeded {
                warn!(
                    "node {i} carries {} generators (soft cap {GENERATOR_SOFT_CAP})",
                    cd.generator_count()
                );
                cap_exceeded = true;
            }
        }
        loc[i] = Some(d);
    }

    let root = expr.root().index();
    let cd = loc[root].take().expect("root evaluated").into_cd();
    if cd.hypo().iter().chain(cd.hyper().iter()).any(|p| !p.is_finite()) {
        return Err(Error::Domain {
            node: root,
            reason: "non-finite codifferential".into(),
        });
    }
    Ok(EvalOutput {
        value: val[root],
        cd,
        cap_exceeded,
    })
}

/// `f'(x, h) = max_{v in ∂̲f} <v,h> + min_{w in ∂̄f} <w,h>`.
pub fn directional_derivative(cd: &Codifferential, h: &[f64]) -> f64 {
    let normalized;
    let cd = if cd.is_normalized() {
        cd
    } else {
        normalized = normalize(cd);
        &normalized
    };
    let (lower, upper) =
        extract_quasidifferential(cd).expect("normalized sets contain a zero-offset generator");
    let hi = lower
        .iter()
        .map(|v| linalg::dot(v, h))
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = upper
        .iter()
        .map(|w| linalg::dot(w, h))
        .fold(f64::INFINITY, f64::min);
    hi + lo
}

/// `eps_f = (f(x + alpha dx) - f(x) - model(alpha dx)) / alpha`.
pub fn approximation_error(expr: &Expression, probe: &ApproximationProbe) -> Result<f64> {
    let at_x = evaluate(expr, probe.x())?;
    approximation_error_from(expr, &at_x, probe.x(), probe.alpha(), probe.delta_x())
}

/// Same as [`approximation_error`] with the base evaluation supplied.
pub fn approximation_error_from(
    expr: &Expression,
    at_x: &EvalOutput,
    x: &[f64],
    alpha: f64,
    delta_x: &[f64],
) -> Result<f64> {
    let step = linalg::scaled(alpha, delta_x);
    let moved = linalg::add(x, &step);
    let f1 = expr.value(&moved)?;
    Ok((f1 - at_x.value - at_x.cd.model(&step)) / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{ExprBuilder, SmoothFn, SmoothMultiFn};
    use crate::codiff::OFFSET_TOL;

    fn paper_example() -> Expression {
        let mut b = ExprBuilder::new(2);
        let x0 = b.var(0);
        let x1 = b.var(1);
        let l1 = b.affine(0.0, vec![1.0, 1.0]);
        let sq = b.smooth_multi(SmoothMultiFn::SumSquares, vec![x0, x1]);
        let one = b.constant(-1.0);
        let q = b.add(vec![sq, one]);
        let mx = b.max(vec![l1, q]);
        let c0 = b.smooth(SmoothFn::Cube, x0);
        let c1 = b.smooth(SmoothFn::Cube, x1);
        let cubes = b.add(vec![c0, c1]);
        let l2 = b.affine(1.0, vec![-2.0, -1.0]);
        let l3 = b.affine(2.0, vec![-1.0, -2.0]);
        let mn = b.min(vec![cubes, l2, l3]);
        let root = b.add(vec![mx, mn]);
        b.build(root).unwrap()
    }

    fn hull_eq(a: &GeneratorSet, b: &GeneratorSet) -> bool {
        let mut dirs = vec![];
        for i in 0..40 {
            let t = i as f64 * 0.37;
            dirs.push((t.cos(), vec![t.sin(), (1.3 * t).cos()]));
        }
        dirs.iter()
            .all(|(da, dv)| (a.support(*da, dv) - b.support(*da, dv)).abs() <= 1e-10)
    }

    #[test]
    fn paper_example_generators() {
        let out = evaluate(&paper_example(), &[0.0, 0.0]).unwrap();
        assert_eq!(out.value, 0.0);
        let hypo = GeneratorSet::from_tuples(&[(0.0, &[1.0, 1.0]), (-1.0, &[0.0, 0.0])]).unwrap();
        let hyper = GeneratorSet::from_tuples(&[
            (0.0, &[0.0, 0.0]),
            (1.0, &[-2.0, -1.0]),
            (2.0, &[-1.0, -2.0]),
        ])
        .unwrap();
        assert!(hull_eq(out.cd.hypo(), &hypo));
        assert!(hull_eq(out.cd.hyper(), &hyper));
        assert!(out.cd.is_normalized());
        assert!((directional_derivative(&out.cd, &[1.0, 0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_of_two_leaves() {
        let mut b = ExprBuilder::new(1);
        let x = b.var(0);
        let nx = b.neg(x);
        let m = b.max(vec![x, nx]);
        let e = b.build(m).unwrap();
        let out = evaluate(&e, &[1.0]).unwrap();
        assert_eq!(out.value, 1.0);
        assert_eq!(
            out.cd.hypo(),
            &GeneratorSet::from_tuples(&[(0.0, &[1.0]), (-2.0, &[-1.0])]).unwrap()
        );
        assert_eq!(out.cd.hyper(), &GeneratorSet::zero(1));
    }

    #[test]
    fn product_of_variable_with_itself() {
        let mut b = ExprBuilder::new(1);
        let x = b.var(0);
        let p = b.product(x, x);
        let e = b.build(p).unwrap();
        let out = evaluate(&e, &[2.0]).unwrap();
        assert_eq!(out.value, 4.0);
        assert_eq!(out.cd.hypo(), &GeneratorSet::from_tuples(&[(0.0, &[4.0])]).unwrap());
        assert_eq!(out.cd.hyper(), &GeneratorSet::zero(1));
    }

    #[test]
    fn reciprocal_at_zero_reports_node() {
        let mut b = ExprBuilder::new(1);
        let x = b.var(0);
        let r = b.reciprocal(x);
        let e = b.build(r).unwrap();
        assert_eq!(
            evaluate(&e, &[0.0]).unwrap_err(),
            Error::Domain {
                node: 1,
                reason: "reciprocal of zero".into()
            }
        );
        let out = evaluate(&e, &[2.0]).unwrap();
        assert_eq!(out.value, 0.5);
        assert_eq!(out.cd.hypo().pairs()[0].v, vec![-0.25]);
    }

    #[test]
    fn negative_coefficient_moves_hypo_into_hyper() {
        // (-1) * |x| via a product with a constant
        let mut b = ExprBuilder::new(1);
        let x = b.var(0);
        let nx = b.neg(x);
        let abs = b.max(vec![x, nx]);
        let c = b.constant(-1.0);
        let p = b.product(c, abs);
        let e = b.build(p).unwrap();
        let out = evaluate(&e, &[1.0]).unwrap();
        assert_eq!(out.cd.hypo(), &GeneratorSet::zero(1));
        assert_eq!(
            out.cd.hyper(),
            &GeneratorSet::from_tuples(&[(0.0, &[-1.0]), (2.0, &[1.0])]).unwrap()
        );
    }

    #[test]
    fn square_norm_error_is_alpha_dx_sq() {
        let mut b = ExprBuilder::new(2);
        let x0 = b.var(0);
        let x1 = b.var(1);
        let s = b.smooth_multi(SmoothMultiFn::SumSquares, vec![x0, x1]);
        let e = b.build(s).unwrap();
        let dx = vec![0.3, -0.4];
        for alpha in [1.0, 0.5, 0.1] {
            let p = ApproximationProbe::new(vec![0.7, 0.2], dx.clone(), alpha, 1.0).unwrap();
            let eps = approximation_error(&e, &p).unwrap();
            assert!((eps - alpha * 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn paper_example_error_along_first_axis() {
        let e = paper_example();
        for alpha in [0.4, 0.1, 0.01] {
            let p = ApproximationProbe::new(vec![0.0, 0.0], vec![1.0, 0.0], alpha, 1.0).unwrap();
            let eps = approximation_error(&e, &p).unwrap();
            assert!((eps - alpha * alpha).abs() < 1e-14, "alpha = {alpha}: {eps}");
        }
    }

    #[test]
    fn affine_norm_matches_abs_in_one_dimension() {
        let mut b = ExprBuilder::new(1);
        let n = b.affine_norm(vec![vec![1.0]], vec![0.0]);
        let e = b.build(n).unwrap();
        let out = evaluate(&e, &[1.0]).unwrap();
        assert_eq!(
            out.cd.hypo(),
            &GeneratorSet::from_tuples(&[(0.0, &[1.0]), (-2.0, &[-1.0])]).unwrap()
        );
        let at0 = evaluate(&e, &[0.0]).unwrap();
        assert_eq!(
            at0.cd.hypo(),
            &GeneratorSet::from_tuples(&[(0.0, &[1.0]), (0.0, &[-1.0])]).unwrap()
        );
    }

    #[test]
    fn directional_derivative_examples() {
        let abs0 = Codifferential::new(
            GeneratorSet::from_tuples(&[(0.0, &[1.0]), (0.0, &[-1.0])]).unwrap(),
            GeneratorSet::zero(1),
        )
        .unwrap();
        assert_eq!(directional_derivative(&abs0, &[1.0]), 1.0);
        assert_eq!(directional_derivative(&abs0, &[-1.0]), 1.0);
        assert_eq!(directional_derivative(&abs0, &[0.0]), 0.0);
        assert!(OFFSET_TOL > 0.0);
    }

    #[test]
    fn cap_flag_is_set_for_large_sums_of_min() {
        // sum of 13 two-piece min functions: 2^13 hyper generators
        let mut b = ExprBuilder::new(13);
        let mut mins = vec![];
        for i in 0..13 {
            let mut g1 = vec![0.0; 13];
            g1[i] = 1.0;
            let mut g2 = vec![0.0; 13];
            g2[i] = -1.0;
            let p = b.affine(0.0, g1);
            let q = b.affine(0.0, g2);
            mins.push(b.min(vec![p, q]));
        }
        let root = b.add(mins);
        let e = b.build(root).unwrap();
        let out = evaluate(&e, &[0.0; 13]).unwrap();
        assert!(out.cap_exceeded);
        assert_eq!(out.cd.hyper().len(), 1 << 13);
    }
}
