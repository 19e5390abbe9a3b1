use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum FeasibleSetRepr {
    WholeSpace,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

/// Closed convex constraint set with an exact Euclidean projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeasibleSetRepr", into = "FeasibleSetRepr")]
pub enum FeasibleSet {
    WholeSpace,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl TryFrom<FeasibleSetRepr> for FeasibleSet {
    type Error = Error;

    fn try_from(r: FeasibleSetRepr) -> Result<Self> {
        match r {
            FeasibleSetRepr::WholeSpace => Ok(FeasibleSet::WholeSpace),
            FeasibleSetRepr::Box { lower, upper } => FeasibleSet::new_box(lower, upper),
            FeasibleSetRepr::Ball { center, radius } => FeasibleSet::new_ball(center, radius),
        }
    }
}

impl From<FeasibleSet> for FeasibleSetRepr {
    fn from(s: FeasibleSet) -> Self {
        match s {
            FeasibleSet::WholeSpace => FeasibleSetRepr::WholeSpace,
            FeasibleSet::Box { lower, upper } => FeasibleSetRepr::Box { lower, upper },
            FeasibleSet::Ball { center, radius } => FeasibleSetRepr::Ball { center, radius },
        }
    }
}

impl FeasibleSet {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || l.is_nan() || u.is_nan()) {
            return Err(Error::InvalidParameter("box needs lower <= upper".into()));
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    /// `[-r, r]^dim`
    pub fn cube(dim: usize, r: f64) -> Result<Self> {
        Self::new_box(vec![-r; dim], vec![r; dim])
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter("ball radius must be positive".into()));
        }
        if !linalg::all_finite(&center) {
            return Err(Error::NonFinite("ball center"));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    /// Ambient dimension, `None` for the whole space.
    pub fn dim(&self) -> Option<usize> {
        match self {
            FeasibleSet::WholeSpace => None,
            FeasibleSet::Box { lower, .. } => Some(lower.len()),
            FeasibleSet::Ball { center, .. } => Some(center.len()),
        }
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        match self.dim() {
            Some(k) if k != d => Err(Error::DimensionMismatch { expected: k, got: d }),
            _ => Ok(()),
        }
    }

    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        match self {
            FeasibleSet::WholeSpace => p.to_vec(),
            FeasibleSet::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(x, (l, u))| x.max(*l).min(*u))
                .collect(),
            FeasibleSet::Ball { center, radius } => {
                let off = linalg::sub(p, center);
                let n = linalg::norm(&off);
                if n <= *radius {
                    p.to_vec()
                } else {
                    let mut q = center.clone();
                    linalg::axpy(radius / n, &off, &mut q);
                    q
                }
            }
        }
    }

    /// Distance from `x` to its projection.
    pub fn residual(&self, x: &[f64]) -> f64 {
        linalg::dist(x, &self.project(x))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.residual(x) <= tol
    }

    /// Largest `t >= 0` with `x + t h` in the set (`+inf` when unbounded).
    /// Assumes `x` belongs to the set.
    pub fn max_step(&self, x: &[f64], h: &[f64]) -> f64 {
        match self {
            FeasibleSet::WholeSpace => f64::INFINITY,
            FeasibleSet::Box { lower, upper } => {
                let mut t = f64::INFINITY;
                for i in 0..x.len() {
                    if h[i] > 0.0 {
                        t = t.min(((upper[i] - x[i]) / h[i]).max(0.0));
                    } else if h[i] < 0.0 {
                        t = t.min(((lower[i] - x[i]) / h[i]).max(0.0));
                    }
                }
                t
            }
            FeasibleSet::Ball { center, radius } => {
                let hh = linalg::norm_sq(h);
                if hh == 0.0 {
                    return f64::INFINITY;
                }
                let off = linalg::sub(x, center);
                let b = linalg::dot(&off, h);
                let c = linalg::norm_sq(&off) - radius * radius;
                let disc = (b * b - hh * c).max(0.0);
                ((-b + disc.sqrt()) / hh).max(0.0)
            }
        }
    }
}
