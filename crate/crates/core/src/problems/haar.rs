use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{cube_box, KnownMinimum, MinimumSource, Problem};
use crate::calculus::{evaluate, ExprBuilder, ExprTree, Expression, SmoothMultiFn};
use crate::codiff::{GeneratorSet, OffsetPair};
use crate::error::{Error, Result};
use crate::linalg;
use crate::subsolvers::{min_norm_point, SubsolverConfig};

/// Clause-by-clause check of the Haar-point definition for a max-function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarCertificate {
    /// Indices of the active pieces.
    pub active: Vec<usize>,
    /// Gradients of the active pieces at the point.
    pub gradients: Vec<Vec<f64>>,
    /// Solution of `sum a_i grad_i = 0, sum a_i = 1` when clauses 2 and 3 hold.
    pub multipliers: Option<Vec<f64>>,
    /// `0` lies in the hull of the active gradients.
    pub stationary: bool,
    /// Exactly `d + 1` active pieces.
    pub count_ok: bool,
    pub affinely_independent: bool,
    pub positive_multipliers: bool,
}

impl HaarCertificate {
    pub fn is_valid(&self) -> bool {
        self.stationary && self.count_ok && self.affinely_independent && self.positive_multipliers
    }
}

/// Pieces `<c_i, x> + kappa_i |x|^2`.
pub fn haar_instance_with_curvatures(c: &[Vec<f64>], kappa: &[f64], name: &str) -> Result<Problem> {
    let d = c.first().map(Vec::len).ok_or_else(|| Error::InvalidParameter("no pieces".into()))?;
    if c.len() != kappa.len() || c.iter().any(|ci| ci.len() != d) {
        return Err(Error::InvalidParameter("one curvature per piece of common dimension".into()));
    }
    let mut b = ExprBuilder::new(d);
    let vars: Vec<_> = (0..d).map(|i| b.var(i)).collect();
    let sq = b.smooth_multi(SmoothMultiFn::SumSquares, vars);
    let pieces = c
        .iter()
        .zip(kappa)
        .map(|(ci, k)| {
            let l = b.affine(0.0, ci.clone());
            b.sum(vec![1.0, *k], vec![l, sq])
        })
        .collect();
    let root = b.max(pieces);
    Ok(Problem {
        name: name.into(),
        expr: b.build(root)?,
        known_minimum: Some(KnownMinimum {
            x: vec![0.0; d],
            f: 0.0,
            source: MinimumSource::Analytic,
        }),
        default_box: cube_box(d, -1.0, 1.0),
        feasible_set: None,
        bounded_below: true,
    })
}

fn haar_directions(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => vec![vec![2.0, 0.0], vec![-1.0, 2.0], vec![-1.0, -2.0]],
        _ => {
            let mut c: Vec<Vec<f64>> = (0..d)
                .map(|i| {
                    let mut e = vec![0.0; d];
                    e[i] = d as f64;
                    e
                })
                .collect();
            c.push(vec![-1.0; d]);
            c
        }
    }
}

/// `max_i <c_i, x> + |x|^2` with a Haar point at the origin, together with
/// its certificate.
pub fn haar_instance(d: usize) -> Result<(Problem, HaarCertificate)> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let c = haar_directions(d);
    let p = haar_instance_with_curvatures(&c, &vec![1.0; d + 1], &format!("haar_{d}"))?;
    let cert = check_haar(&p, &vec![0.0; d], 1e-10)?;
    Ok((p, cert))
}

/// `max(x + x^2, -x + 2x^2)`.
pub fn haar_d1() -> Problem {
    haar_instance_with_curvatures(&haar_directions(1), &[1.0, 2.0], "haar_d1").expect("valid instance")
}

/// Three pieces in `R^2` with curvatures 1, 2, 3.
pub fn haar_d2() -> Problem {
    haar_instance_with_curvatures(&haar_directions(2), &[1.0, 2.0, 3.0], "haar_d2").expect("valid instance")
}

/// Value and gradient of a smooth sub-expression.
fn smooth_piece(dim: usize, tree: &ExprTree, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let e = Expression::from_tree(dim, tree)?;
    let out = evaluate(&e, x)?;
    let (hypo, hyper) = (out.cd.hypo(), out.cd.hyper());
    if hypo.len() != 1 || hyper.len() != 1 {
        return Err(Error::InvalidExpression("max piece is not smooth".into()));
    }
    Ok((out.value, linalg::add(&hypo.pairs()[0].v, &hyper.pairs()[0].v)))
}

/// Checks the four Haar clauses at `x_star` for a problem whose root is a
/// max of smooth pieces. Pieces within `tol` of the max count as active.
pub fn check_haar(problem: &Problem, x_star: &[f64], tol: f64) -> Result<HaarCertificate> {
    let d = problem.dim();
    if x_star.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x_star.len(),
        });
    }
    let ExprTree::Max { children } = problem.expr.to_tree() else {
        return Err(Error::InvalidExpression("root is not a max".into()));
    };
    let pieces: Vec<(f64, Vec<f64>)> = children
        .iter()
        .map(|t| smooth_piece(d, t, x_star))
        .collect::<Result<_>>()?;
    let fmax = pieces.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let active: Vec<usize> = (0..pieces.len()).filter(|&i| pieces[i].0 >= fmax - tol).collect();
    let gradients: Vec<Vec<f64>> = active.iter().map(|&i| pieces[i].1.clone()).collect();

    let hull = GeneratorSet::new(gradients.iter().map(|g| OffsetPair::new(0.0, g.clone())).collect())?;
    let stationary = min_norm_point(&hull, &SubsolverConfig::default()).point.norm_sq().sqrt() <= tol;
    let count_ok = active.len() == d + 1;

    let mut cert = HaarCertificate {
        active,
        gradients,
        multipliers: None,
        stationary,
        count_ok,
        affinely_independent: false,
        positive_multipliers: false,
    };
    if !count_ok {
        return Ok(cert);
    }
    let g0 = &cert.gradients[0];
    let diffs = DMatrix::from_fn(d, d, |r, c| cert.gradients[c + 1][r] - g0[r]);
    let sv = diffs.singular_values();
    let scale = sv.max().max(1.0);
    cert.affinely_independent = sv.min() > 1e-12 * scale;
    if !cert.affinely_independent {
        return Ok(cert);
    }
    let m = DMatrix::from_fn(d + 1, d + 1, |r, c| if r < d { cert.gradients[c][r] } else { 1.0 });
    let mut rhs = DVector::zeros(d + 1);
    rhs[d] = 1.0;
    if let Some(a) = linalg::solve_square(m, &rhs) {
        cert.positive_multipliers = a.iter().all(|t| *t > tol);
        cert.multipliers = Some(a.iter().copied().collect());
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_certified() {
        for d in 1..=4 {
            let (p, cert) = haar_instance(d).unwrap();
            assert!(cert.is_valid(), "d={d}: {cert:?}");
            assert_eq!(p.expr.value(&vec![0.0; d]).unwrap(), 0.0);
        }
        let (_, c1) = haar_instance(1).unwrap();
        let m = c1.multipliers.unwrap();
        assert!((m[0] - 0.5).abs() < 1e-12 && (m[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn d2_multipliers_solve_the_linear_system() {
        let (_, c) = haar_instance(2).unwrap();
        let m = c.multipliers.unwrap();
        // hand solution: 2a1 - a2 - a3 = 0, 2a2 - 2a3 = 0, sum = 1
        assert!((m[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((m[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((m[2] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn clause_two_failures() {
        let (p, _) = haar_instance(1).unwrap();
        let c = check_haar(&p, &[0.1], 1e-10).unwrap();
        assert_eq!(c.active.len(), 1);
        assert!(!c.count_ok && !c.is_valid());
        assert!(c.multipliers.is_none());

        let mut b = ExprBuilder::new(1);
        let x = b.var(0);
        let sq = b.smooth(crate::calculus::SmoothFn::Square, x);
        let m = b.max(vec![sq]);
        let mut q = p.clone();
        q.expr = b.build(m).unwrap();
        let c = check_haar(&q, &[0.0], 1e-10).unwrap();
        assert!(c.stationary && !c.count_ok);
    }

    #[test]
    fn registered_variants_share_the_certificate() {
        for p in [haar_d1(), haar_d2()] {
            let c = check_haar(&p, &vec![0.0; p.dim()], 1e-10).unwrap();
            assert!(c.is_valid(), "{}", p.name);
        }
    }

    #[test]
    fn non_max_root_is_rejected() {
        let mut p = haar_d1();
        let mut b = ExprBuilder::new(1);
        let x = b.var(0);
        p.expr = b.build(x).unwrap();
        assert!(check_haar(&p, &[0.0], 1e-10).is_err());
    }
}
