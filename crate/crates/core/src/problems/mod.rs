//! Benchmark problems and Haar-point certificates.

mod builtin;
mod clustering;
mod haar;
mod max_plus_min;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::calculus::Expression;
use crate::error::{Error, Result};
use crate::solvers::{is_inf_stationary, omega2, McdConfig};
use crate::subsolvers::FeasibleSet;

pub use builtin::{abs_x, box_quadratic, paper_example_2d, smooth_quadratic, two_minima_1d};
pub use clustering::{clustering_instance, clustering_small, load_points_csv, parse_points_csv};
pub use haar::{check_haar, haar_d1, haar_d2, haar_instance, haar_instance_with_curvatures, HaarCertificate};
pub use max_plus_min::{build_max_plus_min, resolve_pieces, MaxPlusMinSpec, PieceSpec, QuadraticPiece};

/// How a known minimum was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimumSource {
    Analytic,
    /// Long solver runs from several starts.
    Numerical,
    /// Exhaustive search over a finite structure.
    Enumeration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnownMinimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub source: MinimumSource,
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub expr: Expression,
    pub known_minimum: Option<KnownMinimum>,
    /// Box used for random starts and grid oracles.
    pub default_box: FeasibleSet,
    /// Set on which the problem is posed; `None` means all of `R^d`.
    pub feasible_set: Option<FeasibleSet>,
    /// `false` when `f` is unbounded below on `R^d`.
    pub bounded_below: bool,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.expr.dim()
    }

    /// Set used by QR-MCD: the feasible set, or the default box for problems
    /// unbounded below, or the whole space.
    pub fn qr_set(&self) -> FeasibleSet {
        match (&self.feasible_set, self.bounded_below) {
            (Some(a), _) => a.clone(),
            (None, false) => self.default_box.clone(),
            (None, true) => FeasibleSet::WholeSpace,
        }
    }

    /// Uniform sample from the default box.
    pub fn random_start(&self, rng: &mut impl Rng) -> Vec<f64> {
        match &self.default_box {
            FeasibleSet::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| rng.gen_range(*l..=*u)).collect(),
            _ => unreachable!("default boxes are boxes"),
        }
    }

    pub fn seeded_start(&self, seed: u64) -> Vec<f64> {
        self.random_start(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Whether the known minimum passes the first-order test at `tol`.
    pub fn verify_known_minimum(&self, tol: f64) -> Result<bool> {
        let Some(km) = &self.known_minimum else {
            return Ok(true);
        };
        match &self.feasible_set {
            None => is_inf_stationary(&self.expr, &km.x, tol, f64::INFINITY),
            Some(a) => {
                let cfg = McdConfig {
                    stop_tol: tol,
                    ..Default::default()
                };
                Ok(omega2(&self.expr, &km.x, a, f64::INFINITY, &cfg)?.is_stationary)
            }
        }
    }
}

pub(crate) fn cube_box(dim: usize, lo: f64, hi: f64) -> FeasibleSet {
    FeasibleSet::new_box(vec![lo; dim], vec![hi; dim]).expect("valid box")
}

/// Problems constructible without parameters.
pub const REGISTERED: [&str; 9] = [
    "paper_example_2d",
    "abs_x",
    "smooth_quadratic",
    "box_quadratic",
    "two_minima_1d",
    "clustering_small",
    "max_plus_min",
    "haar_d1",
    "haar_d2",
];

/// Parametric constructors available through [`problem_by_name`].
pub const PARAMETRIC: [(&str, &str); 3] = [
    ("max_plus_min", "{\"seed\": u64} linear-rate preset instance"),
    ("haar", "{\"d\": usize} Haar instance with unit curvature on every piece"),
    ("clustering", "{\"k\": usize, \"points\": [[..]] | \"csv\": path}"),
];

/// Name and one-line description of every registered problem.
pub fn list_problems() -> Vec<(&'static str, &'static str)> {
    REGISTERED
        .iter()
        .map(|n| {
            let d = match *n {
                "paper_example_2d" => "worked example in R^2; unbounded below, QR-MCD uses the box [-2,2]^2",
                "abs_x" => "|x| in R",
                "smooth_quadratic" => "(x1-1)^2 + 3(x2+0.5)^2 + 0.25",
                "box_quadratic" => "|x-(2,0)|^2 on the box [-1,1]^2",
                "two_minima_1d" => "min{0.1(x-1)^2+0.5, (x-3)^2}: shallow local and deep global minimum",
                "clustering_small" => "2-means on the points {0,1,9,10}",
                "max_plus_min" => "seeded max-plus-min instance, d=2, curvature in [1,4]",
                "haar_d1" => "max(x+x^2, -x+2x^2): Haar point at 0",
                "haar_d2" => "max of three pieces in R^2 with distinct curvatures: Haar point at 0",
                _ => "",
            };
            (*n, d)
        })
        .collect()
}

fn param<T: serde::de::DeserializeOwned>(params: &Value, key: &str) -> Result<Option<T>> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| Error::InvalidParameter(format!("parameter {key}: {e}"))),
    }
}

/// Looks up a problem by name; `params` may be `null` or an object.
pub fn problem_by_name(name: &str, params: &Value) -> Result<Problem> {
    if !(params.is_null() || params.is_object()) {
        return Err(Error::InvalidParameter("problem parameters must be an object".into()));
    }
    match name {
        "paper_example_2d" => Ok(paper_example_2d()),
        "abs_x" => Ok(abs_x()),
        "smooth_quadratic" => Ok(smooth_quadratic()),
        "box_quadratic" => Ok(box_quadratic()),
        "two_minima_1d" => Ok(two_minima_1d()),
        "clustering_small" => Ok(clustering_small()),
        "max_plus_min" => {
            let seed = param(params, "seed")?.unwrap_or(0u64);
            build_max_plus_min(&MaxPlusMinSpec::linear_preset(), seed)
        }
        "haar_d1" => Ok(haar::haar_d1()),
        "haar_d2" => Ok(haar::haar_d2()),
        "haar" => {
            let d: usize = param(params, "d")?.unwrap_or(2);
            Ok(haar_instance(d)?.0)
        }
        "clustering" => {
            let k: usize = param(params, "k")?.ok_or_else(|| Error::InvalidParameter("clustering needs k".into()))?;
            let points: Vec<Vec<f64>> = match (param(params, "points")?, param::<String>(params, "csv")?) {
                (Some(p), None) => p,
                (None, Some(path)) => load_points_csv(path)?,
                _ => {
                    return Err(Error::InvalidParameter(
                        "clustering needs exactly one of points or csv".into(),
                    ))
                }
            };
            clustering_instance(&points, k)
        }
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}
