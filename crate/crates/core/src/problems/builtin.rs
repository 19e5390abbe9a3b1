use super::{cube_box, KnownMinimum, MinimumSource, Problem};
use crate::calculus::{ExprBuilder, SmoothFn, SmoothMultiFn};
use crate::subsolvers::FeasibleSet;

/// `max{x1+x2, x1^2+x2^2-1} + min{x1^3+x2^3, -2x1-x2+1, -x1-2x2+2}`.
pub fn paper_example_2d() -> Problem {
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
    Problem {
        name: "paper_example_2d".into(),
        expr: b.build(root).expect("valid expression"),
        known_minimum: None,
        default_box: cube_box(2, -2.0, 2.0),
        feasible_set: None,
        bounded_below: false,
    }
}

pub fn abs_x() -> Problem {
    let mut b = ExprBuilder::new(1);
    let x = b.var(0);
    let nx = b.neg(x);
    let m = b.max(vec![x, nx]);
    Problem {
        name: "abs_x".into(),
        expr: b.build(m).expect("valid expression"),
        known_minimum: Some(KnownMinimum {
            x: vec![0.0],
            f: 0.0,
            source: MinimumSource::Analytic,
        }),
        default_box: cube_box(1, -5.0, 5.0),
        feasible_set: None,
        bounded_below: true,
    }
}

/// `(x1-1)^2 + 3(x2+0.5)^2 + 0.25`.
pub fn smooth_quadratic() -> Problem {
    let mut b = ExprBuilder::new(2);
    // 0.5 x^T diag(2, 6) x + (-2, 3) x + (1 + 0.75 + 0.25)
    let q = b.quadratic(vec![vec![2.0, 0.0], vec![0.0, 6.0]], vec![-2.0, 3.0], 2.0);
    Problem {
        name: "smooth_quadratic".into(),
        expr: b.build(q).expect("valid expression"),
        known_minimum: Some(KnownMinimum {
            x: vec![1.0, -0.5],
            f: 0.25,
            source: MinimumSource::Analytic,
        }),
        default_box: cube_box(2, -3.0, 3.0),
        feasible_set: None,
        bounded_below: true,
    }
}

/// `|x - (2,0)|^2` on `[-1,1]^2`.
pub fn box_quadratic() -> Problem {
    let mut b = ExprBuilder::new(2);
    let u = b.affine(-2.0, vec![1.0, 0.0]);
    let w = b.var(1);
    let s = b.smooth_multi(SmoothMultiFn::SumSquares, vec![u, w]);
    Problem {
        name: "box_quadratic".into(),
        expr: b.build(s).expect("valid expression"),
        known_minimum: Some(KnownMinimum {
            x: vec![1.0, 0.0],
            f: 1.0,
            source: MinimumSource::Analytic,
        }),
        default_box: cube_box(2, -1.0, 1.0),
        feasible_set: Some(FeasibleSet::cube(2, 1.0).expect("valid box")),
        bounded_below: true,
    }
}

/// `min{0.1(x-1)^2 + 0.5, (x-3)^2}`: local minimum 0.5 at 1, global 0 at 3.
pub fn two_minima_1d() -> Problem {
    let mut b = ExprBuilder::new(1);
    let shallow = b.quadratic(vec![vec![0.2]], vec![-0.2], 0.6);
    let deep = b.quadratic(vec![vec![2.0]], vec![-6.0], 9.0);
    let m = b.min(vec![shallow, deep]);
    Problem {
        name: "two_minima_1d".into(),
        expr: b.build(m).expect("valid expression"),
        known_minimum: Some(KnownMinimum {
            x: vec![3.0],
            f: 0.0,
            source: MinimumSource::Analytic,
        }),
        default_box: cube_box(1, 0.0, 4.0),
        feasible_set: None,
        bounded_below: true,
    }
}
