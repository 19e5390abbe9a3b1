//! Brute-force references used by the check suites.

use rand::Rng;

use crate::calculus::{ExprBuilder, Expression, NodeId, SmoothFn, SmoothMultiFn};
use crate::codiff::{GeneratorSet, OffsetPair};
use crate::error::Result;
use crate::linalg;
use crate::subsolvers::FeasibleSet;

const GRID_SMOOTH: [SmoothFn; 7] = [
    SmoothFn::Sin,
    SmoothFn::Cos,
    SmoothFn::Tanh,
    SmoothFn::Atan,
    SmoothFn::Square,
    SmoothFn::Cube,
    SmoothFn::Exp,
];

/// Random expression of depth at most `max_depth` in `R^dim` (leaves have
/// depth 0). Only total operations are drawn; reciprocals wrap `1.5 + u^2`.
pub fn random_expression<R: Rng>(rng: &mut R, dim: usize, max_depth: usize) -> Expression {
    let mut b = ExprBuilder::new(dim);
    let root = grow(rng, &mut b, dim, max_depth);
    b.build(root).expect("generated expressions are well formed")
}

/// Random expression using only affine leaves under Max, Min and Sum.
pub fn random_piecewise_affine<R: Rng>(rng: &mut R, dim: usize, max_depth: usize) -> Expression {
    let mut b = ExprBuilder::new(dim);
    let root = grow_pa(rng, &mut b, dim, max_depth);
    b.build(root).expect("generated expressions are well formed")
}

fn leaf<R: Rng>(rng: &mut R, b: &mut ExprBuilder, dim: usize) -> NodeId {
    if rng.gen_bool(0.4) {
        b.var(rng.gen_range(0..dim))
    } else {
        let g = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        b.affine(rng.gen_range(-1.0..1.0), g)
    }
}

fn children<R: Rng>(rng: &mut R, b: &mut ExprBuilder, dim: usize, depth: usize, pa: bool) -> Vec<NodeId> {
    let n = rng.gen_range(2..=3);
    (0..n)
        .map(|_| if pa { grow_pa(rng, b, dim, depth) } else { grow(rng, b, dim, depth) })
        .collect()
}

fn grow<R: Rng>(rng: &mut R, b: &mut ExprBuilder, dim: usize, depth: usize) -> NodeId {
    if depth == 0 || rng.gen_bool(0.25) {
        return leaf(rng, b, dim);
    }
    let next = depth - 1;
    match rng.gen_range(0..9) {
        0 => {
            let f = GRID_SMOOTH[rng.gen_range(0..GRID_SMOOTH.len())];
            let c = grow(rng, b, dim, next);
            b.smooth(f, c)
        }
        1 => {
            let c = children(rng, b, dim, next, false);
            b.smooth_multi(SmoothMultiFn::SumSquares, c)
        }
        2 | 3 => {
            let c = children(rng, b, dim, next, false);
            b.max(c)
        }
        4 | 5 => {
            let c = children(rng, b, dim, next, false);
            b.min(c)
        }
        6 => {
            let c = children(rng, b, dim, next, false);
            let w = c.iter().map(|_| rng.gen_range(-2.0..2.0)).collect();
            b.sum(w, c)
        }
        7 if depth >= 2 && rng.gen_bool(0.5) => {
            let u = grow(rng, b, dim, depth - 2);
            let den = b.smooth_multi(
                SmoothMultiFn::Quadratic {
                    q: vec![vec![2.0]],
                    c: vec![0.0],
                    k: 1.5,
                },
                vec![u],
            );
            b.reciprocal(den)
        }
        7 => {
            let l = grow(rng, b, dim, next);
            let r = grow(rng, b, dim, next);
            b.product(l, r)
        }
        _ => {
            let rows = rng.gen_range(1..=dim.max(2));
            let a = (0..rows)
                .map(|_| (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect())
                .collect();
            let off = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
            b.affine_norm(a, off)
        }
    }
}

fn grow_pa<R: Rng>(rng: &mut R, b: &mut ExprBuilder, dim: usize, depth: usize) -> NodeId {
    if depth == 0 || rng.gen_bool(0.2) {
        return leaf(rng, b, dim);
    }
    let c = children(rng, b, dim, depth - 1, true);
    match rng.gen_range(0..3) {
        0 => b.max(c),
        1 => b.min(c),
        _ => {
            let w = c.iter().map(|_| rng.gen_range(-2.0..2.0)).collect();
            b.sum(w, c)
        }
    }
}

/// Forward difference `(f(x + alpha h) - f(x)) / alpha`.
pub fn fd_slope(expr: &Expression, x: &[f64], h: &[f64], alpha: f64) -> Result<f64> {
    let moved = linalg::add(x, &linalg::scaled(alpha, h));
    Ok((expr.value(&moved)? - expr.value(x)?) / alpha)
}

/// Coarse-to-fine search over `[lo, hi]^k` for a function that is convex
/// in its argument. Each level samples `(2 m + 1)^k` points around the
/// incumbent and halves the span.
fn refine_search<F: FnMut(&[f64]) -> f64>(lo: &[f64], hi: &[f64], m: usize, levels: usize, mut f: F) -> (Vec<f64>, f64) {
    let k = lo.len();
    let mut center: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let mut half: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (h - l)).collect();
    let mut best = (center.clone(), f(&center));
    let side = 2 * m + 1;
    let mut p = vec![0.0; k];
    for _ in 0..levels {
        for code in 0..side.pow(k as u32) {
            let mut c = code;
            for i in 0..k {
                let j = (c % side) as f64 - m as f64;
                c /= side;
                p[i] = (center[i] + half[i] * j / m as f64).clamp(lo[i], hi[i]);
            }
            let v = f(&p);
            if v < best.1 {
                best = (p.clone(), v);
            }
        }
        center.clone_from(&best.0);
        half.iter_mut().for_each(|h| *h *= 0.5);
    }
    best
}

/// Minimum-norm point of `co g` by searching the simplex weights.
pub fn grid_min_norm(g: &GeneratorSet) -> (OffsetPair, f64) {
    let pts = g.pairs();
    let n = pts.len();
    let combine = |free: &[f64]| -> Option<OffsetPair> {
        let rest = 1.0 - free.iter().sum::<f64>();
        if rest < -1e-15 {
            return None;
        }
        let mut u = pts[n - 1].scaled(rest.max(0.0));
        for (p, l) in pts.iter().zip(free) {
            u = u.plus(&p.scaled(*l));
        }
        Some(u)
    };
    if n == 1 {
        let u = pts[0].clone();
        let v = u.norm_sq();
        return (u, v);
    }
    let (w, v) = refine_search(&vec![0.0; n - 1], &vec![1.0; n - 1], 12, 60, |free| {
        combine(free).map_or(f64::INFINITY, |u| u.norm_sq())
    });
    (combine(&w).expect("incumbent is feasible"), v)
}

/// `max_i (a_i + <v_i, h>) + |h|^2 / 2`.
pub fn phi_value(g: &GeneratorSet, h: &[f64]) -> f64 {
    g.max_affine(h) + 0.5 * linalg::norm_sq(h)
}

/// Minimizer of `phi` over `h in A - x`. The grid runs over the simplex
/// weights of the dual, which is smooth and concave; for weights `l` the
/// inner minimizer is `h(l) = P_A(x - sum l_i v_i) - x`.
pub fn grid_phi(g: &GeneratorSet, a_set: &FeasibleSet, x: &[f64]) -> (Vec<f64>, f64) {
    let pts = g.pairs();
    let n = pts.len();
    let weights = |free: &[f64]| -> Option<Vec<f64>> {
        let rest = 1.0 - free.iter().sum::<f64>();
        if rest < -1e-15 {
            return None;
        }
        let mut w = free.to_vec();
        w.push(rest.max(0.0));
        Some(w)
    };
    let inner = |w: &[f64]| -> (Vec<f64>, f64) {
        let mut s = vec![0.0; x.len()];
        let mut lin = 0.0;
        for (p, l) in pts.iter().zip(w) {
            linalg::axpy(*l, &p.v, &mut s);
            lin += l * p.a;
        }
        let h = linalg::sub(&a_set.project(&linalg::sub(x, &s)), x);
        let dual = lin + linalg::dot(&s, &h) + 0.5 * linalg::norm_sq(&h);
        (h, dual)
    };
    let w = if n == 1 {
        vec![1.0]
    } else {
        let (free, _) = refine_search(&vec![0.0; n - 1], &vec![1.0; n - 1], 12, 60, |free| {
            weights(free).map_or(f64::INFINITY, |w| -inner(&w).1)
        });
        weights(&free).expect("incumbent is feasible")
    };
    let (h, _) = inner(&w);
    let v = phi_value(g, &h);
    (h, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_min_norm_segment() {
        let g = GeneratorSet::from_tuples(&[(1.0, &[1.0]), (-1.0, &[-1.0])]).unwrap();
        let (u, v) = grid_min_norm(&g);
        assert!(v < 1e-10 && u.norm_sq() < 1e-10);
    }

    #[test]
    fn grid_phi_on_abs_plus_square() {
        // |x| + x^2 at x = 1: generators (0, 3), (-2, 1)
        let g = GeneratorSet::from_tuples(&[(0.0, &[3.0]), (-2.0, &[1.0])]).unwrap();
        let (h, v) = grid_phi(&g, &FeasibleSet::WholeSpace, &[1.0]);
        assert!((h[0] + 1.0).abs() < 1e-6, "{h:?}");
        assert!((v + 2.5).abs() < 1e-9);
    }

    #[test]
    fn generated_expressions_respect_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let e = random_expression(&mut rng, 3, 4);
            assert!(e.to_tree().depth() <= 4);
            assert!(e.value(&[0.3, -0.2, 0.1]).unwrap().is_finite());
            let p = random_piecewise_affine(&mut rng, 2, 4);
            assert!(p.to_tree().is_piecewise_affine());
        }
    }
}
