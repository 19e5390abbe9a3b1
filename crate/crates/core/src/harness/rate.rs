use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::solvers::Trace;

/// Records required before a fit is attempted.
pub const MIN_RECORDS: usize = 8;
/// Points required in the fitting window.
pub const MIN_WINDOW: usize = 5;
pub const MAX_WINDOW: usize = 10;
pub const BOOTSTRAP_RESAMPLES: usize = 200;
const BOOTSTRAP_SEED: u64 = 0x7a7e;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Linear,
    Superlinear,
    Quadratic,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// Geometric mean of `e_{n+1} / e_n` over the window.
    pub c_hat: f64,
    /// 95% bootstrap percentile interval for `c_hat`.
    pub c_interval: (f64, f64),
    /// Least-squares slope of `log e_{n+1}` against `log e_n`.
    pub p_hat: f64,
    /// Record indices of the window, in order.
    pub window: Vec<usize>,
    pub verdict: Verdict,
    /// Reason for an inconclusive verdict.
    pub note: Option<String>,
}

impl RateReport {
    fn inconclusive(note: impl Into<String>, window: Vec<usize>) -> Self {
        RateReport {
            c_hat: f64::NAN,
            c_interval: (f64::NAN, f64::NAN),
            p_hat: f64::NAN,
            window,
            verdict: Verdict::Inconclusive,
            note: Some(note.into()),
        }
    }
}

/// `10 * eps * |f*|`: errors at or below this are rounding noise.
pub fn noise_floor(f_star: f64) -> f64 {
    10.0 * f64::EPSILON * f_star.abs()
}

/// `10 * eps * max(|f*|, 1)`. Solver iterates carry absolute rounding
/// error, so with `f* = 0` the relative floor admits noise records.
pub fn absolute_noise_floor(f_star: f64) -> f64 {
    10.0 * f64::EPSILON * f_star.abs().max(1.0)
}

pub fn classify(c_hat: f64, p_hat: f64) -> Verdict {
    if p_hat >= 1.8 {
        Verdict::Quadratic
    } else if c_hat <= 0.98 && (0.8..=1.3).contains(&p_hat) {
        Verdict::Linear
    } else if p_hat > 1.3 && p_hat < 1.8 {
        Verdict::Superlinear
    } else {
        Verdict::Inconclusive
    }
}

fn slope(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn geo_mean(logs: &[f64]) -> f64 {
    (logs.iter().sum::<f64>() / logs.len() as f64).exp()
}

/// Fits the rate of `f_n -> f_star` over the tail window, with records at
/// or below [`noise_floor`] excluded.
pub fn rate_fit_values(f: &[f64], f_star: f64) -> RateReport {
    rate_fit_values_above(f, f_star, noise_floor(f_star))
}

/// [`rate_fit_values`] with an explicit noise floor.
pub fn rate_fit_values_above(f: &[f64], f_star: f64, floor: f64) -> RateReport {
    if f.len() < MIN_RECORDS {
        return RateReport::inconclusive(format!("{} records, need {MIN_RECORDS}", f.len()), vec![]);
    }
    let clean: Vec<usize> = (0..f.len())
        .filter(|&i| {
            let e = f[i] - f_star;
            e.is_finite() && e > floor && e > 0.0
        })
        .collect();
    // longest run of consecutive clean records ending at the last clean one
    let mut run = clean.len();
    while run > 1 && clean[run - 1] - clean[run - 2] == 1 {
        run -= 1;
    }
    let tail = &clean[run.saturating_sub(1)..];
    let window: Vec<usize> = tail[tail.len().saturating_sub(MAX_WINDOW)..].to_vec();
    if window.len() < MIN_WINDOW {
        return RateReport::inconclusive(
            format!("{} clean records in the tail window, need {MIN_WINDOW}", window.len()),
            window,
        );
    }
    let logs: Vec<f64> = window.iter().map(|&i| (f[i] - f_star).ln()).collect();
    let pairs: Vec<(f64, f64)> = logs.windows(2).map(|w| (w[0], w[1])).collect();
    let log_ratios: Vec<f64> = pairs.iter().map(|(a, b)| b - a).collect();
    let c_hat = geo_mean(&log_ratios);
    let p_hat = slope(&pairs);
    if !p_hat.is_finite() {
        return RateReport::inconclusive("degenerate window", window);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    let mut boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let sample: Vec<f64> = (0..log_ratios.len())
                .map(|_| log_ratios[rng.gen_range(0..log_ratios.len())])
                .collect();
            geo_mean(&sample)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let q = |p: f64| boot[((p * (boot.len() - 1) as f64).round()) as usize];

    RateReport {
        c_hat,
        c_interval: (q(0.025), q(0.975)),
        p_hat,
        window,
        verdict: classify(c_hat, p_hat),
        note: None,
    }
}

pub fn rate_fit(trace: &Trace, f_star: f64) -> RateReport {
    rate_fit_values(&trace.f_values(), f_star)
}

pub fn rate_fit_above(trace: &Trace, f_star: f64, floor: f64) -> RateReport {
    rate_fit_values_above(&trace.f_values(), f_star, floor)
}
