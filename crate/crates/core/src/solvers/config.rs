use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_ext::{ext_f64, ExtF64};
use crate::subsolvers::SubsolverConfig;

/// Finite stand-in for `alpha_* = +inf`.
pub const ALPHA_STAR_CAP: f64 = 1e6;

/// Per-iteration truncation level (`nu_n` or `mu_n`).
#[derive(Clone, Debug, PartialEq)]
pub enum Schedule {
    Constant(f64),
    /// `max(start * factor^n, floor)`
    Geometric { start: f64, factor: f64, floor: f64 },
    /// Explicit values; the last one repeats.
    Sequence(Vec<f64>),
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Constant(f64::INFINITY)
    }
}

impl Schedule {
    pub fn at(&self, n: usize) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::Geometric { start, factor, floor } => {
                (start * factor.powi(n.min(i32::MAX as usize) as i32)).max(*floor)
            }
            Schedule::Sequence(vals) => vals[n.min(vals.len() - 1)],
        }
    }

    /// Limit inferior of the schedule.
    pub fn liminf(&self) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::Geometric { start, factor, floor } => {
                if *factor >= 1.0 {
                    *start
                } else {
                    *floor
                }
            }
            Schedule::Sequence(vals) => *vals.last().unwrap(),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = |v: f64| !v.is_nan() && v >= 0.0;
        let good = match self {
            Schedule::Constant(v) => ok(*v),
            Schedule::Geometric { start, factor, floor } => {
                ok(*start) && ok(*floor) && *factor > 0.0 && factor.is_finite()
            }
            Schedule::Sequence(vals) => !vals.is_empty() && vals.iter().all(|v| ok(*v)),
        };
        if good {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid {name} schedule {self:?}")))
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometricRepr {
    #[serde(with = "ext_f64")]
    start: f64,
    factor: f64,
    #[serde(with = "ext_f64", default)]
    floor: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ScheduleRepr {
    Constant(ExtF64),
    Geometric { geometric: GeometricRepr },
    Sequence { sequence: Vec<ExtF64> },
}

impl Serialize for Schedule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            Schedule::Constant(v) => ScheduleRepr::Constant(ExtF64(*v)),
            Schedule::Geometric { start, factor, floor } => ScheduleRepr::Geometric {
                geometric: GeometricRepr {
                    start: *start,
                    factor: *factor,
                    floor: *floor,
                },
            },
            Schedule::Sequence(v) => ScheduleRepr::Sequence {
                sequence: v.iter().map(|t| ExtF64(*t)).collect(),
            },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Schedule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match ScheduleRepr::deserialize(d)? {
            ScheduleRepr::Constant(v) => Schedule::Constant(v.0),
            ScheduleRepr::Geometric { geometric: g } => Schedule::Geometric {
                start: g.start,
                factor: g.factor,
                floor: g.floor,
            },
            ScheduleRepr::Sequence { sequence } => {
                Schedule::Sequence(sequence.into_iter().map(|t| t.0).collect())
            }
        })
    }
}

/// Step-size rule for step (c).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LineSearch {
    /// Uniform grid on `[0, alpha_*]` followed by golden-section refinement.
    ExactScan { grid_points: usize, refine_iters: usize },
    /// `alpha = max gamma^k` with sufficient decrease; candidates with a
    /// nonzero hyper offset fall back to the exact scan.
    Armijo { sigma: f64, gamma: f64 },
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch::ExactScan {
            grid_points: 64,
            refine_iters: 40,
        }
    }
}

/// Configuration shared by MCD and QR-MCD.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McdConfig {
    pub nu: Schedule,
    pub mu: Schedule,
    #[serde(with = "ext_f64")]
    pub alpha_star: f64,
    pub max_iter: usize,
    pub stop_tol: f64,
    pub line_search: LineSearch,
    /// Fallback scan used by the Armijo rule for positive-offset candidates.
    pub scan_grid_points: usize,
    pub scan_refine_iters: usize,
    pub subsolver: SubsolverConfig,
}

impl Default for McdConfig {
    fn default() -> Self {
        McdConfig {
            nu: Schedule::default(),
            mu: Schedule::default(),
            alpha_star: 10.0,
            max_iter: 10_000,
            stop_tol: 1e-8,
            line_search: LineSearch::default(),
            scan_grid_points: 64,
            scan_refine_iters: 40,
            subsolver: SubsolverConfig::default(),
        }
    }
}

impl McdConfig {
    /// Truncation levels used in the worked example of the method.
    pub fn paper_example() -> Self {
        McdConfig {
            nu: Schedule::Constant(0.5),
            mu: Schedule::Constant(1.0),
            ..Default::default()
        }
    }

    pub fn with_truncation(mut self, nu: f64, mu: f64) -> Self {
        self.nu = Schedule::Constant(nu);
        self.mu = Schedule::Constant(mu);
        self
    }

    /// `alpha_*` with `+inf` (or anything larger) replaced by the cap.
    pub fn effective_alpha_star(&self) -> f64 {
        self.alpha_star.min(ALPHA_STAR_CAP)
    }

    /// Checks constructor constraints; returns (and logs) warnings for
    /// schedules whose limit inferior is zero.
    pub fn validate(&self) -> Result<Vec<String>> {
        self.nu.validate("nu")?;
        self.mu.validate("mu")?;
        if !(self.alpha_star > 0.0) {
            return Err(Error::InvalidParameter("alpha_star must be positive".into()));
        }
        if !(self.stop_tol > 0.0) {
            return Err(Error::InvalidParameter("stop_tol must be positive".into()));
        }
        match &self.line_search {
            LineSearch::ExactScan {
                grid_points,
                refine_iters: _,
            } if *grid_points < 8 => {
                return Err(Error::InvalidParameter("grid_points must be >= 8".into()));
            }
            LineSearch::Armijo { sigma, gamma }
                if !(*sigma > 0.0 && *sigma < 1.0 && *gamma > 0.0 && *gamma < 1.0) =>
            {
                return Err(Error::InvalidParameter("sigma and gamma must lie in (0, 1)".into()));
            }
            _ => {}
        }
        if self.scan_grid_points < 8 {
            return Err(Error::InvalidParameter("scan_grid_points must be >= 8".into()));
        }
        self.subsolver.validate()?;

        let mut warnings = vec![];
        for (name, s) in [("nu", &self.nu), ("mu", &self.mu)] {
            if s.liminf() <= 0.0 {
                let msg = format!(
                    "{name} schedule has liminf 0; global convergence guarantees need a positive limit"
                );
                warn!("{msg}");
                warnings.push(msg);
            }
        }
        Ok(warnings)
    }
}
