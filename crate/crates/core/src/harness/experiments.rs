//! Fixed experiment protocols shared by the check suites and the benches.

use serde_json::Value;

use super::rate::{absolute_noise_floor, rate_fit_above, RateReport};
use crate::error::Result;
use crate::problems::{build_max_plus_min, problem_by_name, two_minima_1d, MaxPlusMinSpec, Problem, REGISTERED};
use crate::solvers::{mcd_solve, qrmcd_solve, LineSearch, McdConfig, Schedule, SolverKind, Trace};
use crate::subsolvers::FeasibleSet;

/// Seeds of the random starts and random instances.
pub const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

pub fn registered_problems() -> Vec<Problem> {
    REGISTERED
        .iter()
        .map(|n| problem_by_name(n, &Value::Null).expect("registered problems build"))
        .collect()
}

/// One run of the global-convergence protocol.
#[derive(Clone, Debug)]
pub struct ConvergenceRun {
    pub problem: String,
    pub solver: SolverKind,
    pub seed: u64,
    pub trace: Trace,
}

/// MCD (skipped for problems unbounded below) and QR-MCD on
/// [`Problem::qr_set`] from seeded starts, default settings.
pub fn convergence_runs(problem: &Problem, seeds: &[u64]) -> Result<Vec<ConvergenceRun>> {
    let cfg = McdConfig::default();
    let mut out = vec![];
    for &seed in seeds {
        let x0 = problem.seeded_start(seed);
        if problem.bounded_below {
            out.push(ConvergenceRun {
                problem: problem.name.clone(),
                solver: SolverKind::Mcd,
                seed,
                trace: mcd_solve(&problem.expr, &x0, &cfg)?,
            });
        }
        out.push(ConvergenceRun {
            problem: problem.name.clone(),
            solver: SolverKind::QrMcd,
            seed,
            trace: qrmcd_solve(&problem.expr, &x0, &problem.qr_set(), &cfg)?,
        });
    }
    Ok(out)
}

/// Largest increase `f_{n+1} - f_n` along a trace (`<= 0` when monotone).
pub fn max_increase(t: &Trace) -> f64 {
    t.f_values().windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

/// Settings of the linear-rate experiment: exact scan, `alpha_* = 10`,
/// `nu = mu = +inf`, and a stopping tolerance below what double precision
/// resolves so the trace runs into the noise floor.
pub fn linear_rate_config() -> McdConfig {
    McdConfig {
        stop_tol: 1e-20,
        max_iter: 2000,
        ..Default::default()
    }
}

/// QR-MCD on the seeded max-plus-min preset from the seeded start. Rate
/// experiments fit above [`absolute_noise_floor`].
pub fn linear_rate_run(seed: u64) -> Result<(Problem, Trace, RateReport)> {
    let p = build_max_plus_min(&MaxPlusMinSpec::linear_preset(), seed)?;
    let f_star = p.known_minimum.as_ref().expect("strongly convex preset").f;
    let t = qrmcd_solve(&p.expr, &p.seeded_start(seed), &FeasibleSet::WholeSpace, &linear_rate_config())?;
    let r = rate_fit_above(&t, f_star, absolute_noise_floor(f_star));
    Ok((p, t, r))
}

/// Settings of the quadratic-rate experiment: Armijo steps with
/// `sigma = 0.1`, `gamma = 0.5`; the run ends on a line-search stall or a
/// zero measure.
pub fn quadratic_rate_config() -> McdConfig {
    McdConfig {
        line_search: LineSearch::Armijo { sigma: 0.1, gamma: 0.5 },
        stop_tol: 1e-30,
        max_iter: 200,
        ..Default::default()
    }
}

pub fn quadratic_rate_run(problem: &Problem, seed: u64) -> Result<(Trace, RateReport)> {
    let f_star = problem.known_minimum.as_ref().map_or(0.0, |k| k.f);
    let t = qrmcd_solve(&problem.expr, &problem.seeded_start(seed), &FeasibleSet::WholeSpace, &quadratic_rate_config())?;
    let r = rate_fit_above(&t, f_star, absolute_noise_floor(f_star));
    Ok((t, r))
}

/// Passes when at least one start produced a fit and every fit has
/// `p_hat >= 1.8`.
pub fn quadratic_verdict(reports: &[RateReport]) -> bool {
    let fitted: Vec<&RateReport> = reports.iter().filter(|r| r.p_hat.is_finite()).collect();
    !fitted.is_empty() && fitted.iter().all(|r| r.p_hat >= 1.8)
}

/// MCD on `two_minima_1d` from `x0 = 0.5` with `nu = +inf` and the given
/// `mu`.
pub fn jump_over_run(mu: f64) -> Result<Trace> {
    let p = two_minima_1d();
    let cfg = McdConfig {
        mu: Schedule::Constant(mu),
        ..Default::default()
    };
    mcd_solve(&p.expr, &[0.5], &cfg)
}

/// CSV rows with the timing column removed.
pub fn csv_without_time(t: &Trace) -> Result<Vec<String>> {
    let text = t.to_csv_string()?;
    Ok(text
        .lines()
        .map(|l| {
            let mut cols: Vec<&str> = l.split(',').collect();
            cols.pop();
            cols.join(",")
        })
        .collect())
}
