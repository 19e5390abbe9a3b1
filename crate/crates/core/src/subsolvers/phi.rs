//! The regularized min-max subproblem
//!
//! ```text
//! minimize  phi(h) = max_i (a_i + <v_i, h>) + 0.5 |h|^2   over h in A - x
//! ```
//!
//! solved through its concave dual over the simplex. For weights `lambda`
//! the inner minimizer is `h(lambda) = Proj_{A-x}(-sum_i lambda_i v_i)` and
//! the dual gradient is `a_i + <v_i, h(lambda)>`. The dual is maximized by
//! away-step Frank–Wolfe; the primal-dual gap `max_i grad_i - <lambda, grad>`
//! is the stopping test. Between Frank–Wolfe steps the weights are polished
//! by solving the dual exactly on the current support with the current
//! active-bound pattern frozen.

use nalgebra::{DMatrix, DVector};

use super::{FeasibleSet, SimplexWeights, SubsolverConfig};
use crate::codiff::GeneratorSet;
use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance of the `x in A` precondition.
pub const FEASIBILITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct PhiSolution {
    pub h: Vec<f64>,
    pub weights: SimplexWeights,
    /// `phi(h)`.
    pub phi: f64,
    /// Primal-dual gap at the returned weights.
    pub gap: f64,
    pub converged: bool,
    pub iterations: usize,
}

struct Dual<'a> {
    a: Vec<f64>,
    v: Vec<&'a [f64]>,
    set: &'a FeasibleSet,
    x: &'a [f64],
    dim: usize,
}

struct DualPoint {
    h: Vec<f64>,
    /// Unprojected `-V lambda`.
    p: Vec<f64>,
    /// Coordinates changed by the projection.
    clamped: Vec<bool>,
    grad: Vec<f64>,
    dual: f64,
    primal: f64,
    gap: f64,
}

impl<'a> Dual<'a> {
    fn at(&self, lambda: &[f64]) -> DualPoint {
        let mut p = vec![0.0; self.dim];
        for (l, v) in lambda.iter().zip(&self.v) {
            if *l != 0.0 {
                linalg::axpy(-l, v, &mut p);
            }
        }
        let moved = linalg::add(self.x, &p);
        let proj = self.set.project(&moved);
        let clamped = proj.iter().zip(&moved).map(|(a, b)| a != b).collect();
        let h = linalg::sub(&proj, self.x);
        let grad: Vec<f64> = self
            .a
            .iter()
            .zip(&self.v)
            .map(|(a, v)| a + linalg::dot(v, &h))
            .collect();
        let hh = 0.5 * linalg::norm_sq(&h);
        let lg = linalg::dot(lambda, &grad);
        let gmax = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        DualPoint {
            h,
            p,
            clamped,
            dual: lg + hh,
            primal: gmax + hh,
            gap: gmax - lg,
            grad,
        }
    }

    /// Derivative of the dual along `dir` at `lambda + t dir`.
    fn slope(&self, lambda: &[f64], dir: &[f64], t: f64) -> f64 {
        let trial: Vec<f64> = lambda.iter().zip(dir).map(|(l, d)| l + t * d).collect();
        linalg::dot(&self.at(&trial).grad, dir)
    }

    /// Exact maximizer of the concave dual on `[0, tmax]` along `dir`; the
    /// slope is monotone, so a safeguarded secant search suffices.
    fn line_search(&self, lambda: &[f64], dir: &[f64], tmax: f64) -> f64 {
        let s0 = self.slope(lambda, dir, 0.0);
        if s0 <= 0.0 {
            return 0.0;
        }
        let s1 = self.slope(lambda, dir, tmax);
        if s1 >= 0.0 {
            return tmax;
        }
        let (mut lo, mut hi, mut slo, mut shi) = (0.0, tmax, s0, s1);
        let mut side = 0i8;
        for _ in 0..100 {
            let t = (lo * shi - hi * slo) / (shi - slo);
            let t = if t > lo && t < hi { t } else { 0.5 * (lo + hi) };
            let st = self.slope(lambda, dir, t);
            if st == 0.0 || hi - lo <= 1e-16 * tmax {
                return t;
            }
            if st > 0.0 {
                lo = t;
                slo = st;
                if side == 1 {
                    shi *= 0.5;
                }
                side = 1;
            } else {
                hi = t;
                shi = st;
                if side == -1 {
                    slo *= 0.5;
                }
                side = -1;
            }
        }
        0.5 * (lo + hi)
    }

    /// Free coordinates and frozen values of `h` for the current projection,
    /// or `None` when the pattern is not affine (active ball constraint).
    fn pattern(&self, pt: &DualPoint) -> Option<(Vec<usize>, Vec<(usize, f64)>)> {
        match self.set {
            FeasibleSet::WholeSpace => Some(((0..self.dim).collect(), vec![])),
            FeasibleSet::Ball { center, radius } => {
                let off = linalg::sub(&linalg::add(self.x, &pt.p), center);
                (linalg::norm(&off) < *radius).then(|| ((0..self.dim).collect(), vec![]))
            }
            FeasibleSet::Box { .. } => {
                let mut free = vec![];
                let mut fixed = vec![];
                for i in 0..self.dim {
                    if !pt.clamped[i] {
                        free.push(i);
                    } else {
                        fixed.push((i, pt.h[i]));
                    }
                }
                Some((free, fixed))
            }
        }
    }

    /// Exact dual maximizer over the affine hull of the support under the
    /// frozen bound pattern.
    fn support_solve(&self, lambda: &[f64], pt: &DualPoint) -> Option<Vec<f64>> {
        let (free, fixed) = self.pattern(pt)?;
        let support: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > 0.0).collect();
        let k = support.len();
        if k == 1 {
            return None;
        }
        // maximize sum mu_i at_i - 0.5 |W mu|^2 subject to sum mu_i = 1
        let mut kkt = DMatrix::<f64>::zeros(k + 1, k + 1);
        let mut rhs = DVector::<f64>::zeros(k + 1);
        for (r, &i) in support.iter().enumerate() {
            let vi = self.v[i];
            rhs[r] = self.a[i] + fixed.iter().map(|(c, hc)| vi[*c] * hc).sum::<f64>();
            for (c, &j) in support.iter().enumerate() {
                let vj = self.v[j];
                kkt[(r, c)] = free.iter().map(|&f| vi[f] * vj[f]).sum();
            }
            kkt[(r, k)] = 1.0;
            kkt[(k, r)] = 1.0;
        }
        rhs[k] = 1.0;
        let sol = linalg::solve_symmetric(&kkt, &rhs)?;
        let mut mu = vec![0.0; lambda.len()];
        for (r, &i) in support.iter().enumerate() {
            mu[i] = sol[r];
        }
        Some(mu)
    }
}

fn normalize_weights(lambda: &mut [f64]) {
    for l in lambda.iter_mut() {
        if *l < 1e-300 {
            *l = 0.0;
        }
    }
    let s: f64 = lambda.iter().sum();
    lambda.iter_mut().for_each(|l| *l /= s);
}

/// Minimizes `phi` over `h in A - x` for generators already shifted by `z`.
pub fn solve_phi_subproblem(
    g: &GeneratorSet,
    a_set: &FeasibleSet,
    x: &[f64],
    cfg: &SubsolverConfig,
) -> Result<PhiSolution> {
    let dim = g.dim();
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    a_set.check_dim(dim)?;
    let resid = a_set.residual(x);
    if resid > FEASIBILITY_TOL {
        return Err(Error::Precondition(format!(
            "point lies outside the feasible set (distance {resid:e})"
        )));
    }

    let dual = Dual {
        a: g.iter().map(|p| p.a).collect(),
        v: g.iter().map(|p| p.v.as_slice()).collect(),
        set: a_set,
        x,
        dim,
    };
    let n = dual.a.len();
    let max_iter = cfg.max_iter_for(n, dim);

    // start from the vertex with the largest dual value
    let mut lambda = vec![0.0; n];
    let mut start = 0;
    let mut start_val = f64::NEG_INFINITY;
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let d = dual.at(&e).dual;
        if d > start_val {
            start_val = d;
            start = i;
        }
    }
    lambda[start] = 1.0;

    let mut pt = dual.at(&lambda);
    let mut best = (pt.primal, lambda.clone(), pt.h.clone(), pt.gap);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        if pt.primal < best.0 {
            best = (pt.primal, lambda.clone(), pt.h.clone(), pt.gap);
        }
        if pt.gap <= cfg.tol {
            converged = true;
            best = (pt.primal, lambda.clone(), pt.h.clone(), pt.gap);
            break;
        }
        iterations += 1;

        let lg = linalg::dot(&lambda, &pt.grad);
        let mut fw = 0;
        for i in 1..n {
            if pt.grad[i] > pt.grad[fw] {
                fw = i;
            }
        }
        let mut aw = usize::MAX;
        for i in 0..n {
            if lambda[i] > 0.0 && (aw == usize::MAX || pt.grad[i] < pt.grad[aw]) {
                aw = i;
            }
        }
        let g_fw = pt.grad[fw] - lg;
        let g_aw = lg - pt.grad[aw];
        let (dir, tmax) = if g_fw >= g_aw || lambda[aw] >= 1.0 {
            let mut d: Vec<f64> = lambda.iter().map(|l| -l).collect();
            d[fw] += 1.0;
            (d, 1.0)
        } else {
            let mut d = lambda.clone();
            d[aw] -= 1.0;
            (d, lambda[aw] / (1.0 - lambda[aw]))
        };
        let t = dual.line_search(&lambda, &dir, tmax);
        for (l, d) in lambda.iter_mut().zip(&dir) {
            *l += t * d;
        }
        if g_fw < g_aw && t == tmax {
            lambda[aw] = 0.0;
        }
        normalize_weights(&mut lambda);
        pt = dual.at(&lambda);

        for _ in 0..3 {
            let Some(mu) = dual.support_solve(&lambda, &pt) else {
                break;
            };
            let dir: Vec<f64> = mu.iter().zip(&lambda).map(|(m, l)| m - l).collect();
            let mut reach = 1.0f64;
            for (l, d) in lambda.iter().zip(&dir) {
                if *d < 0.0 {
                    reach = reach.min(l / -d);
                }
            }
            let t = dual.line_search(&lambda, &dir, reach);
            if t <= 0.0 {
                break;
            }
            let mut trial: Vec<f64> = lambda.iter().zip(&dir).map(|(l, d)| (l + t * d).max(0.0)).collect();
            normalize_weights(&mut trial);
            let tp = dual.at(&trial);
            if tp.dual < pt.dual {
                break;
            }
            lambda = trial;
            pt = tp;
        }
    }
    if pt.primal < best.0 {
        best = (pt.primal, lambda.clone(), pt.h.clone(), pt.gap);
    }

    let (mut phi, weights, mut h, gap) = best;
    let phi0 = dual.a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if phi > phi0 {
        h = vec![0.0; dim];
        phi = phi0;
    }
    Ok(PhiSolution {
        h,
        weights: SimplexWeights::from_raw(weights),
        phi,
        gap,
        converged: converged || gap <= cfg.tol,
        iterations,
    })
}
