//! Convex subproblems of the descent methods: the min-norm point of a hull
//! and the regularized min-max step over a convex feasible set.

mod feasible;
mod min_norm;
mod phi;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use feasible::FeasibleSet;
pub use min_norm::{min_norm_point, MinNormResult};
pub use phi::{solve_phi_subproblem, PhiSolution, FEASIBILITY_TOL};

/// Convex weights: nonnegative, summing to one within `1e-10`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexWeights {
    lambda: Vec<f64>,
}

impl SimplexWeights {
    pub const SUM_TOL: f64 = 1e-10;

    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidParameter("weights must not be empty".into()));
        }
        if lambda.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        let s: f64 = lambda.iter().sum();
        if (s - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidParameter(format!("weights sum to {s}, not 1")));
        }
        Ok(SimplexWeights { lambda })
    }

    pub(crate) fn from_raw(lambda: Vec<f64>) -> Self {
        debug_assert!(Self::new(lambda.clone()).is_ok(), "{lambda:?}");
        SimplexWeights { lambda }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambda
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
}

/// Accuracy controls shared by both subproblem solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsolverConfig {
    /// Stopping tolerance on the Wolfe gap or the primal-dual gap.
    pub tol: f64,
    /// Iteration budget; `None` means `10 * (n + d)^2` for `n` generators.
    pub max_iter: Option<usize>,
}

impl Default for SubsolverConfig {
    fn default() -> Self {
        SubsolverConfig {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

impl SubsolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("subsolver tol must be positive".into()));
        }
        if self.max_iter == Some(0) {
            return Err(Error::InvalidParameter("subsolver max_iter must be >= 1".into()));
        }
        Ok(())
    }

    pub fn max_iter_for(&self, n: usize, d: usize) -> usize {
        self.max_iter.unwrap_or(10 * (n + d) * (n + d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codiff::{GeneratorSet, OffsetPair};

    fn gs(pairs: &[(f64, &[f64])]) -> GeneratorSet {
        GeneratorSet::from_tuples(pairs).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn min_norm_examples() {
        let cfg = SubsolverConfig::default();
        let r = min_norm_point(&gs(&[(1.0, &[-1.0, 0.0])]), &cfg);
        assert_eq!(r.point, OffsetPair::new(1.0, vec![-1.0, 0.0]));
        assert_eq!(r.weights.as_slice(), &[1.0]);
        assert!(r.converged);

        let r = min_norm_point(&gs(&[(0.0, &[1.0, 0.0]), (0.0, &[-1.0, 0.0])]), &cfg);
        assert!(r.point.norm_sq() < 1e-20);
        assert!(close(r.weights.as_slice(), &[0.5, 0.5], 1e-12));

        let r = min_norm_point(&gs(&[(0.0, &[2.0, 0.0]), (0.0, &[0.0, 2.0])]), &cfg);
        assert!((r.point.a).abs() < 1e-12);
        assert!(close(&r.point.v, &[1.0, 1.0], 1e-12));
    }

    #[test]
    fn min_norm_of_abs_at_one() {
        let r = min_norm_point(&gs(&[(0.0, &[1.0]), (-2.0, &[-1.0])]), &SubsolverConfig::default());
        assert!((r.point.a + 0.5).abs() < 1e-12);
        assert!((r.point.v[0] - 0.5).abs() < 1e-12);
        assert!((r.norm_sq() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn min_norm_budget_exhaustion_is_flagged() {
        let g = gs(&[
            (0.3, &[1.0, 0.2]),
            (-0.4, &[-0.7, 0.9]),
            (0.1, &[0.2, -1.1]),
            (0.5, &[-0.9, -0.3]),
        ]);
        let cfg = SubsolverConfig {
            tol: 1e-10,
            max_iter: Some(1),
        };
        let r = min_norm_point(&g, &cfg);
        assert_eq!(r.iterations, 1);
        let full = min_norm_point(&g, &SubsolverConfig::default());
        assert!(full.converged);
        assert!(r.norm_sq() >= full.norm_sq() - 1e-12);
    }

    #[test]
    fn phi_examples() {
        let cfg = SubsolverConfig::default();
        let w = FeasibleSet::WholeSpace;

        let s = solve_phi_subproblem(&gs(&[(0.0, &[1.0, -2.0])]), &w, &[0.0, 0.0], &cfg).unwrap();
        assert!(close(&s.h, &[-1.0, 2.0], 1e-12));
        assert!((s.phi + 2.5).abs() < 1e-12);

        let s = solve_phi_subproblem(&gs(&[(0.0, &[1.0, 0.0]), (0.0, &[-1.0, 0.0])]), &w, &[0.0, 0.0], &cfg)
            .unwrap();
        assert!(close(&s.h, &[0.0, 0.0], 1e-12));
        assert!(s.phi.abs() < 1e-12);

        let b = FeasibleSet::cube(2, 1.0).unwrap();
        let s = solve_phi_subproblem(&gs(&[(0.0, &[2.0, 0.0])]), &b, &[0.0, 0.0], &cfg).unwrap();
        assert!(close(&s.h, &[-1.0, 0.0], 1e-12));
        assert!((s.phi + 1.5).abs() < 1e-12);

        let s = solve_phi_subproblem(&gs(&[(0.0, &[3.0]), (-2.0, &[1.0])]), &w, &[1.0], &cfg).unwrap();
        assert!((s.h[0] + 1.0).abs() < 1e-10, "{s:?}");
        assert!((s.phi + 2.5).abs() < 1e-10);
        assert!(s.converged);
    }

    #[test]
    fn phi_rejects_infeasible_point() {
        let b = FeasibleSet::cube(1, 1.0).unwrap();
        let r = solve_phi_subproblem(&gs(&[(0.0, &[1.0])]), &b, &[2.0], &SubsolverConfig::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn weights_validation() {
        assert!(SimplexWeights::new(vec![0.5, 0.5]).is_ok());
        assert!(SimplexWeights::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexWeights::new(vec![-0.1, 1.1]).is_err());
        assert!(SimplexWeights::new(vec![]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SubsolverConfig::default().validate().is_ok());
        assert!(SubsolverConfig { tol: 0.0, max_iter: None }.validate().is_err());
        assert!(SubsolverConfig { tol: 1e-3, max_iter: Some(0) }.validate().is_err());
        assert_eq!(SubsolverConfig::default().max_iter_for(2, 3), 250);
    }
}
