use std::time::Instant;

use log::debug;

use super::line_search::{line_search_armijo, line_search_scan};
use super::stationarity::is_zero_offset;
use super::trace::{CandidateRecord, IterationRecord, SolverKind, Termination, Trace};
use super::{LineSearch, McdConfig};
use crate::calculus::{evaluate, Expression};
use crate::codiff::{truncate_hyper, truncate_hypo, Codifferential, OffsetPair};
use crate::error::{Error, Result};
use crate::linalg;
use crate::subsolvers::{min_norm_point, solve_phi_subproblem, FeasibleSet, FEASIBILITY_TOL};

struct Candidate {
    z_index: usize,
    z: OffsetPair,
    direction: Vec<f64>,
    measure: f64,
    subproblem_value: f64,
}

struct Trial {
    alpha: f64,
    value: f64,
    point: Vec<f64>,
}

enum Variant<'a> {
    Mcd,
    Qr(&'a FeasibleSet),
}

impl Variant<'_> {
    fn kind(&self) -> SolverKind {
        match self {
            Variant::Mcd => SolverKind::Mcd,
            Variant::Qr(_) => SolverKind::QrMcd,
        }
    }

    /// Search directions for every `z` in the truncated hyper set.
    fn candidates(&self, cd: &Codifferential, x: &[f64], nu: f64, mu: f64, cfg: &McdConfig) -> Result<Vec<Candidate>> {
        let hypo = truncate_hypo(cd, nu);
        let hyper = truncate_hyper(cd, mu);
        let mut out = Vec::with_capacity(hyper.len());
        for (z_index, z) in hyper.iter().enumerate() {
            let shifted = hypo.translate(z);
            let c = match self {
                Variant::Mcd => {
                    let r = min_norm_point(&shifted, &cfg.subsolver);
                    let n = r.norm_sq();
                    Candidate {
                        z_index,
                        z: z.clone(),
                        direction: linalg::scaled(-1.0, &r.point.v),
                        measure: n,
                        subproblem_value: n,
                    }
                }
                Variant::Qr(a_set) => {
                    let s = solve_phi_subproblem(&shifted, a_set, x, &cfg.subsolver)?;
                    Candidate {
                        z_index,
                        z: z.clone(),
                        measure: linalg::norm_sq(&s.h),
                        direction: s.h,
                        subproblem_value: s.phi,
                    }
                }
            };
            out.push(c);
        }
        Ok(out)
    }

    fn point(&self, x: &[f64], d: &[f64], alpha: f64) -> Vec<f64> {
        let mut p = x.to_vec();
        linalg::axpy(alpha, d, &mut p);
        match self {
            Variant::Mcd => p,
            Variant::Qr(a_set) => a_set.project(&p),
        }
    }

    fn search(&self, expr: &Expression, x: &[f64], f0: f64, c: &Candidate, cfg: &McdConfig) -> Trial {
        let stay = Trial {
            alpha: 0.0,
            value: f0,
            point: x.to_vec(),
        };
        if c.direction.iter().all(|t| *t == 0.0) {
            return stay;
        }
        let fval = |alpha: f64| expr.value(&self.point(x, &c.direction, alpha)).unwrap_or(f64::NAN);
        let upper = match self {
            Variant::Mcd => cfg.effective_alpha_star(),
            Variant::Qr(a_set) => cfg.effective_alpha_star().min(a_set.max_step(x, &c.direction)),
        };
        let found = match cfg.line_search {
            LineSearch::Armijo { sigma, gamma } if is_zero_offset(&c.z) => {
                let norm_sq = match self {
                    Variant::Mcd => c.measure,
                    Variant::Qr(_) => -c.subproblem_value,
                };
                let r = line_search_armijo(fval, f0, norm_sq, sigma, gamma);
                (!r.stalled).then_some((r.alpha, r.value))
            }
            LineSearch::ExactScan {
                grid_points,
                refine_iters,
            } => scan(fval, upper, grid_points, refine_iters),
            LineSearch::Armijo { .. } => scan(fval, upper, cfg.scan_grid_points, cfg.scan_refine_iters),
        };
        match found {
            Some((alpha, value)) if alpha > 0.0 => Trial {
                alpha,
                value,
                point: self.point(x, &c.direction, alpha),
            },
            _ => stay,
        }
    }
}

fn scan(fval: impl FnMut(f64) -> f64, upper: f64, grid: usize, refine: usize) -> Option<(f64, f64)> {
    if !(upper > 0.0) {
        return None;
    }
    line_search_scan(fval, upper, grid, refine).ok().map(|r| (r.alpha, r.value))
}

fn run(expr: &Expression, x0: &[f64], variant: Variant, cfg: &McdConfig) -> Result<Trace> {
    cfg.validate()?;
    if x0.len() != expr.dim() {
        return Err(Error::DimensionMismatch {
            expected: expr.dim(),
            got: x0.len(),
        });
    }
    if !linalg::all_finite(x0) {
        return Err(Error::NonFinite("x0"));
    }
    if let Variant::Qr(a_set) = variant {
        a_set.check_dim(expr.dim())?;
        let r = a_set.residual(x0);
        if r > FEASIBILITY_TOL {
            return Err(Error::Precondition(format!(
                "x0 lies outside the feasible set (distance {r:e})"
            )));
        }
    }

    let start = Instant::now();
    let mut x = x0.to_vec();
    let mut records = vec![];
    let termination = loop {
        let n = records.len();
        let (nu, mu) = (cfg.nu.at(n), cfg.mu.at(n));
        let out = evaluate(expr, &x)?;
        let f0 = out.value;
        let cands = variant.candidates(&out.cd, &x, nu, mu, cfg)?;
        let omega = cands
            .iter()
            .filter(|c| is_zero_offset(&c.z))
            .map(|c| c.measure)
            .fold(0.0, f64::max);

        let mut rec = IterationRecord {
            iter: n,
            x: x.clone(),
            f: f0,
            omega,
            n_candidates: cands.len(),
            chosen_z_index: None,
            chosen_z: None,
            direction: None,
            step: None,
            time_ms: 0.0,
            candidates: vec![],
        };
        let finish = |mut rec: IterationRecord, cands: Vec<Candidate>, trials: Option<Vec<Trial>>| {
            rec.candidates = cands
                .into_iter()
                .enumerate()
                .map(|(i, c)| CandidateRecord {
                    z_index: c.z_index,
                    z: c.z,
                    direction: c.direction,
                    measure: c.measure,
                    subproblem_value: c.subproblem_value,
                    alpha: trials.as_ref().map(|t| t[i].alpha),
                    value: trials.as_ref().map(|t| t[i].value),
                })
                .collect();
            rec.time_ms = start.elapsed().as_secs_f64() * 1e3;
            rec
        };

        if omega <= cfg.stop_tol {
            records.push(finish(rec, cands, None));
            break Termination::StationaryWithinTol;
        }
        if n >= cfg.max_iter {
            records.push(finish(rec, cands, None));
            break Termination::MaxIter;
        }

        let trials: Vec<Trial> = cands.iter().map(|c| variant.search(expr, &x, f0, c, cfg)).collect();
        let mut best: Option<usize> = None;
        for (i, t) in trials.iter().enumerate() {
            if t.value < f0 && best.is_none_or(|b| t.value < trials[b].value) {
                best = Some(i);
            }
        }
        let Some(b) = best else {
            debug!("iteration {n}: no candidate decreases f (omega = {omega:e})");
            records.push(finish(rec, cands, Some(trials)));
            break Termination::LineSearchStall;
        };
        rec.chosen_z_index = Some(cands[b].z_index);
        rec.chosen_z = Some(cands[b].z.clone());
        rec.direction = Some(cands[b].direction.clone());
        rec.step = Some(trials[b].alpha);
        x = trials[b].point.clone();
        records.push(finish(rec, cands, Some(trials)));
    };
    Ok(Trace {
        solver: variant.kind(),
        records,
        termination,
    })
}

/// Method of codifferential descent from `x0`.
pub fn mcd_solve(expr: &Expression, x0: &[f64], cfg: &McdConfig) -> Result<Trace> {
    run(expr, x0, Variant::Mcd, cfg)
}

/// Quadratically regularized MCD on the convex set `a_set`; `x0` must lie in
/// `a_set`.
pub fn qrmcd_solve(expr: &Expression, x0: &[f64], a_set: &FeasibleSet, cfg: &McdConfig) -> Result<Trace> {
    run(expr, x0, Variant::Qr(a_set), cfg)
}
