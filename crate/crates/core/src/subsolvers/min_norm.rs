//! Nearest point to the origin of the hull of a generator set.
//!
//! Mitchell–Demyanov–Malozemov iteration on the simplex weights. After each
//! step the weights are polished by exact minimization over the affine hull
//! of the current support (Wolfe's minor cycle), which keeps the iteration
//! monotone and makes it terminate exactly on small sets.

use nalgebra::{DMatrix, DVector};

use super::{SimplexWeights, SubsolverConfig};
use crate::codiff::{GeneratorSet, OffsetPair};

/// Result of [`min_norm_point`].
#[derive(Clone, Debug, PartialEq)]
pub struct MinNormResult {
    /// `u = sum_i lambda_i g_i`.
    pub point: OffsetPair,
    pub weights: SimplexWeights,
    /// Wolfe gap `|u|^2 - min_j <g_j, u>` at the returned point.
    pub gap: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl MinNormResult {
    pub fn norm_sq(&self) -> f64 {
        self.point.norm_sq()
    }
}

fn flatten(p: &OffsetPair) -> Vec<f64> {
    let mut z = Vec::with_capacity(1 + p.v.len());
    z.push(p.a);
    z.extend_from_slice(&p.v);
    z
}

fn combination(z: &[Vec<f64>], lambda: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; z[0].len()];
    for (zi, li) in z.iter().zip(lambda) {
        if *li != 0.0 {
            for (uk, zk) in u.iter_mut().zip(zi) {
                *uk += li * zk;
            }
        }
    }
    u
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lowest index attaining the minimum.
fn argmin(vals: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in vals {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best
}

/// Weights minimizing `|sum mu_i z_i|` over the affine hull of `support`.
fn affine_min_norm(z: &[Vec<f64>], support: &[usize]) -> Option<Vec<f64>> {
    let k = support.len();
    if k == 1 {
        return Some(vec![1.0]);
    }
    let dim = z[0].len();
    let base = &z[support[0]];
    let mut y = DMatrix::<f64>::zeros(dim, k - 1);
    for (c, &j) in support[1..].iter().enumerate() {
        for r in 0..dim {
            y[(r, c)] = z[j][r] - base[r];
        }
    }
    let rhs = DVector::from_iterator(dim, base.iter().map(|t| -t));
    let svd = y.svd(true, true);
    let smax = svd.singular_values.max();
    let beta = svd.solve(&rhs, 1e-12 * smax.max(1e-300)).ok()?;
    let mut mu = Vec::with_capacity(k);
    mu.push(1.0 - beta.sum());
    mu.extend(beta.iter());
    mu.iter().all(|t| t.is_finite()).then_some(mu)
}

/// Runs minor cycles from feasible weights; never increases `|u|`.
fn polish(z: &[Vec<f64>], lambda: &mut [f64]) {
    for _ in 0..z[0].len() + 2 {
        let support: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > 0.0).collect();
        let Some(mu) = affine_min_norm(z, &support) else {
            return;
        };
        let before = dot(&combination(z, lambda), &combination(z, lambda));
        if mu.iter().all(|&t| t >= 0.0) {
            let mut trial = vec![0.0; lambda.len()];
            for (&j, m) in support.iter().zip(&mu) {
                trial[j] = *m;
            }
            let u = combination(z, &trial);
            if dot(&u, &u) <= before {
                lambda.copy_from_slice(&trial);
            }
            return;
        }
        // Move toward mu until the first weight reaches zero.
        let mut theta = 1.0;
        let mut drop = support[0];
        for (&j, m) in support.iter().zip(&mu) {
            if *m < 0.0 {
                let t = lambda[j] / (lambda[j] - m);
                if t < theta {
                    theta = t;
                    drop = j;
                }
            }
        }
        let mut trial = lambda.to_vec();
        for (&j, m) in support.iter().zip(&mu) {
            trial[j] = (1.0 - theta) * lambda[j] + theta * m;
            if trial[j] < 0.0 {
                trial[j] = 0.0;
            }
        }
        trial[drop] = 0.0;
        let s: f64 = trial.iter().sum();
        trial.iter_mut().for_each(|t| *t /= s);
        let u = combination(z, &trial);
        if dot(&u, &u) > before {
            return;
        }
        lambda.copy_from_slice(&trial);
    }
}

/// Minimum-norm point of `conv(g)`.
///
/// On success every generator satisfies `<g_j - u, u> >= -cfg.tol`. When the
/// iteration budget runs out the best iterate is returned with
/// `converged = false`.
pub fn min_norm_point(g: &GeneratorSet, cfg: &SubsolverConfig) -> MinNormResult {
    let z: Vec<Vec<f64>> = g.iter().map(flatten).collect();
    let n = z.len();
    let max_iter = cfg.max_iter_for(n, g.dim());

    let norms: Vec<f64> = z.iter().map(|zi| dot(zi, zi)).collect();
    let (j0, _) = argmin(norms.iter().copied().enumerate()).expect("nonempty");
    let mut lambda = vec![0.0; n];
    lambda[j0] = 1.0;

    let mut converged = false;
    let mut iterations = 0;
    let mut u = z[j0].clone();
    let mut gap = f64::INFINITY;
    let mut stalls = 0;

    while iterations < max_iter {
        let uu = dot(&u, &u);
        let dots: Vec<f64> = z.iter().map(|zi| dot(zi, &u)).collect();
        let (jmin, dmin) = argmin(dots.iter().copied().enumerate()).unwrap();
        gap = uu - dmin;
        if gap <= cfg.tol {
            converged = true;
            break;
        }
        iterations += 1;

        // MDM step: shift weight from the worst support vertex to the best.
        let (jmax, _) = argmin((0..n).filter(|&i| lambda[i] > 0.0).map(|i| (i, -dots[i]))).unwrap();
        let d: Vec<f64> = z[jmin].iter().zip(&z[jmax]).map(|(a, b)| a - b).collect();
        let dd = dot(&d, &d);
        if dd > 0.0 {
            let cap = lambda[jmax];
            let t = ((dots[jmax] - dmin) / dd).min(cap);
            lambda[jmin] += t;
            lambda[jmax] = if t == cap { 0.0 } else { cap - t };
        }
        polish(&z, &mut lambda);
        let s: f64 = lambda.iter().sum();
        lambda.iter_mut().for_each(|t| *t /= s);

        let next = combination(&z, &lambda);
        if dot(&next, &next) >= uu {
            stalls += 1;
            if stalls > 3 {
                u = next;
                let dots: Vec<f64> = z.iter().map(|zi| dot(zi, &u)).collect();
                gap = dot(&u, &u) - dots.iter().copied().fold(f64::INFINITY, f64::min);
                converged = gap <= cfg.tol;
                break;
            }
        } else {
            stalls = 0;
        }
        u = next;
    }
    if !converged && iterations >= max_iter {
        let dots: Vec<f64> = z.iter().map(|zi| dot(zi, &u)).collect();
        gap = dot(&u, &u) - dots.iter().copied().fold(f64::INFINITY, f64::min);
        converged = gap <= cfg.tol;
    }

    MinNormResult {
        point: OffsetPair::new(u[0], u[1..].to_vec()),
        weights: SimplexWeights::from_raw(lambda),
        gap,
        converged,
        iterations,
    }
}
