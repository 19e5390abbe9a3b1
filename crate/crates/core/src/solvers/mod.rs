//! Codifferential descent and its quadratic regularization.
//!
//! Each iteration truncates the codifferential at `x_n`, computes one search
//! direction per hyper generator `z`, searches along every direction and
//! keeps the lowest value (lowest index on ties). MCD uses the min-norm
//! point of `co hypo_nu + z`; QR-MCD solves the regularized min-max
//! subproblem over the feasible set instead.

mod config;
mod line_search;
mod mcd;
mod stationarity;
mod trace;

pub use config::{LineSearch, McdConfig, Schedule, ALPHA_STAR_CAP};
pub use line_search::{line_search_armijo, line_search_scan, ArmijoResult, ScanResult, ARMIJO_K_MAX};
pub use mcd::{mcd_solve, qrmcd_solve};
pub use stationarity::{
    is_inf_stationary, omega, omega2, omega2_from_codifferential, omega_from_codifferential, StationarityReport,
};
pub use trace::{CandidateRecord, IterationRecord, SolverKind, Termination, Trace, TraceRow, CSV_HEADER};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{ExprBuilder, Expression, SmoothFn, SmoothMultiFn};
    use crate::subsolvers::FeasibleSet;

    fn abs_expr() -> Expression {
        let mut b = ExprBuilder::new(1);
        let x = b.var(0);
        let nx = b.neg(x);
        let m = b.max(vec![x, nx]);
        b.build(m).unwrap()
    }

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

    fn sum_squares(d: usize, shift: &[f64]) -> Expression {
        let mut b = ExprBuilder::new(d);
        let kids: Vec<_> = (0..d)
            .map(|i| {
                let mut g = vec![0.0; d];
                g[i] = 1.0;
                b.affine(-shift[i], g)
            })
            .collect();
        let s = b.smooth_multi(SmoothMultiFn::SumSquares, kids);
        b.build(s).unwrap()
    }

    /// `max(x + x^2, -x + x^2)`
    fn abs_plus_square() -> Expression {
        let mut b = ExprBuilder::new(1);
        let x = b.var(0);
        let sq = b.smooth(SmoothFn::Square, x);
        let p = b.add(vec![x, sq]);
        let nx = b.neg(x);
        let q = b.add(vec![nx, sq]);
        let m = b.max(vec![p, q]);
        b.build(m).unwrap()
    }

    fn full() -> McdConfig {
        McdConfig::default()
    }

    #[test]
    fn abs_converges_in_two_iterations() {
        let t = mcd_solve(&abs_expr(), &[3.0], &full()).unwrap();
        assert_eq!(t.termination, Termination::StationaryWithinTol);
        assert!(t.iterations() <= 2);
        assert!(t.final_x()[0].abs() < 1e-8);
        assert!(t.final_f().abs() < 1e-8);
    }

    #[test]
    fn paper_example_first_candidates() {
        let cfg = McdConfig::paper_example();
        let t = mcd_solve(&paper_example(), &[0.0, 0.0], &McdConfig { max_iter: 1, ..cfg }).unwrap();
        let first = &t.records[0];
        assert_eq!(first.n_candidates, 2);
        let find = |a: f64, v: [f64; 2]| {
            first
                .candidates
                .iter()
                .find(|c| c.z == crate::codiff::OffsetPair::new(a, v.to_vec()))
                .unwrap()
        };
        let c0 = find(0.0, [0.0, 0.0]);
        assert!(linalg_close(&c0.direction, &[-1.0, -1.0]));
        let c1 = find(1.0, [-2.0, -1.0]);
        assert!(linalg_close(&c1.direction, &[1.0, 0.0]));
        assert!((first.omega - 2.0).abs() < 1e-12);
        assert!(t.records[1].f < t.records[0].f);
    }

    fn linalg_close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-10)
    }

    #[test]
    fn qr_abs_plus_square_one_step() {
        let t = qrmcd_solve(&abs_plus_square(), &[1.0], &FeasibleSet::WholeSpace, &full()).unwrap();
        let c = &t.records[0].candidates[0];
        assert!((c.direction[0] + 1.0).abs() < 1e-10);
        assert!((c.subproblem_value + 2.5).abs() < 1e-10);
        assert!(t.records[1].x[0].abs() < 1e-8, "{:?}", t.records[1].x);
        assert_eq!(t.termination, Termination::StationaryWithinTol);
    }

    #[test]
    fn qr_smooth_quadratic_half_step() {
        let t = qrmcd_solve(&sum_squares(2, &[0.0, 0.0]), &[1.0, 1.0], &FeasibleSet::WholeSpace, &full()).unwrap();
        let r = &t.records[0];
        assert!(linalg_close(r.direction.as_ref().unwrap(), &[-2.0, -2.0]));
        assert!((r.step.unwrap() - 0.5).abs() < 1e-8);
        assert!(t.final_x().iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn qr_box_quadratic() {
        let a = FeasibleSet::cube(2, 1.0).unwrap();
        let t = qrmcd_solve(&sum_squares(2, &[2.0, 0.0]), &[0.0, 0.0], &a, &full()).unwrap();
        assert_eq!(t.termination, Termination::StationaryWithinTol);
        assert!(linalg_close(t.final_x(), &[1.0, 0.0]));
        assert!(t.records.iter().all(|r| a.residual(&r.x) <= 1e-10));
    }

    #[test]
    fn qr_rejects_infeasible_start() {
        let a = FeasibleSet::cube(2, 1.0).unwrap();
        let r = qrmcd_solve(&sum_squares(2, &[0.0, 0.0]), &[2.0, 0.0], &a, &full());
        assert!(matches!(r, Err(crate::Error::Precondition(_))));
    }

    #[test]
    fn armijo_variant_descends() {
        let cfg = McdConfig {
            line_search: LineSearch::Armijo { sigma: 0.1, gamma: 0.5 },
            ..full()
        };
        let t = mcd_solve(&abs_expr(), &[3.0], &cfg).unwrap();
        assert_eq!(t.termination, Termination::StationaryWithinTol);
        for w in t.records.windows(2) {
            assert!(w[1].f <= w[0].f);
        }
    }

    #[test]
    fn omega_examples() {
        let cfg = full();
        let inf = f64::INFINITY;
        assert!(omega(&sum_squares(2, &[0.0, 0.0]), &[0.0, 0.0], inf, &cfg).unwrap().omega < 1e-20);
        let r = omega(&abs_expr(), &[1.0], inf, &cfg).unwrap();
        assert!((r.omega - 0.5).abs() < 1e-12);
        assert!(!r.is_stationary);
        let r = omega(&paper_example(), &[0.0, 0.0], 0.5, &cfg).unwrap();
        assert!((r.omega - 2.0).abs() < 1e-12);
        assert_eq!(r.worst_z, crate::codiff::OffsetPair::zero(2));
    }

    #[test]
    fn omega2_examples() {
        let cfg = full();
        let inf = f64::INFINITY;
        let w = FeasibleSet::WholeSpace;
        assert!(omega2(&sum_squares(2, &[0.0, 0.0]), &[0.0, 0.0], &w, inf, &cfg).unwrap().omega < 1e-20);
        let b = FeasibleSet::cube(2, 1.0).unwrap();
        let r = omega2(&sum_squares(2, &[2.0, 0.0]), &[1.0, 0.0], &b, inf, &cfg).unwrap();
        assert!(r.omega < 1e-20 && r.is_stationary);
        let r = omega2(&abs_plus_square(), &[1.0], &w, inf, &cfg).unwrap();
        assert!((r.omega - 1.0).abs() < 1e-10);
        assert!(omega2(&sum_squares(2, &[0.0, 0.0]), &[3.0, 0.0], &b, inf, &cfg).is_err());
    }

    #[test]
    fn inf_stationarity_examples() {
        let inf = f64::INFINITY;
        assert!(is_inf_stationary(&abs_expr(), &[0.0], 1e-10, inf).unwrap());
        assert!(!is_inf_stationary(&abs_expr(), &[1.0], 1e-10, inf).unwrap());
        assert!(!is_inf_stationary(&paper_example(), &[0.0, 0.0], 1e-10, 0.5).unwrap());
    }

    #[test]
    fn max_iter_keeps_final_omega() {
        let cfg = McdConfig { max_iter: 1, ..full() };
        let t = mcd_solve(&sum_squares(1, &[0.3]), &[5.0], &McdConfig { stop_tol: 1e-30, ..cfg }).unwrap();
        assert!(t.records.len() <= 2);
        assert!(t.last().step.is_none());
        assert!(t.last().omega.is_finite());
    }
}
