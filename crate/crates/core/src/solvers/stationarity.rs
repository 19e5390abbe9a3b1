use serde::{Deserialize, Serialize};

use super::McdConfig;
use crate::calculus::{evaluate, Expression};
use crate::codiff::{truncate_hypo, Codifferential, OffsetPair, OFFSET_TOL};
use crate::error::{Error, Result};
use crate::subsolvers::{min_norm_point, solve_phi_subproblem, FeasibleSet, SubsolverConfig};

/// Value of an inf-stationarity measure and the hyper generator attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub omega: f64,
    pub worst_z: OffsetPair,
    /// Index of `worst_z` in the hyper set.
    pub worst_index: usize,
    pub is_stationary: bool,
}

pub(crate) fn is_zero_offset(z: &OffsetPair) -> bool {
    z.a.abs() <= OFFSET_TOL
}

fn report(values: impl Iterator<Item = (usize, OffsetPair, f64)>, tol: f64) -> Result<StationarityReport> {
    let mut best: Option<(usize, OffsetPair, f64)> = None;
    for (i, z, w) in values {
        if best.as_ref().is_none_or(|b| w > b.2) {
            best = Some((i, z, w));
        }
    }
    let (worst_index, worst_z, omega) =
        best.ok_or_else(|| Error::InvalidExpression("hyper set has no zero-offset generator".into()))?;
    let omega = omega.max(0.0);
    Ok(StationarityReport {
        omega,
        worst_z,
        worst_index,
        is_stationary: omega <= tol,
    })
}

/// `omega(x, nu)` from a codifferential already computed at `x`.
pub fn omega_from_codifferential(
    cd: &Codifferential,
    nu: f64,
    sub: &SubsolverConfig,
    tol: f64,
) -> Result<StationarityReport> {
    let hypo = truncate_hypo(cd, nu);
    report(
        cd.hyper()
            .iter()
            .enumerate()
            .filter(|(_, z)| is_zero_offset(z))
            .map(|(i, z)| (i, z.clone(), min_norm_point(&hypo.translate(z), sub).norm_sq())),
        tol,
    )
}

/// `sup_z min { |u|^2 : u in co hypo_nu + z }` over zero-offset hyper pairs.
pub fn omega(expr: &Expression, x: &[f64], nu: f64, cfg: &McdConfig) -> Result<StationarityReport> {
    let out = evaluate(expr, x)?;
    omega_from_codifferential(&out.cd, nu, &cfg.subsolver, cfg.stop_tol)
}

/// `omega_2(x, nu)` from a codifferential already computed at `x`.
pub fn omega2_from_codifferential(
    cd: &Codifferential,
    x: &[f64],
    a_set: &FeasibleSet,
    nu: f64,
    sub: &SubsolverConfig,
    tol: f64,
) -> Result<StationarityReport> {
    let hypo = truncate_hypo(cd, nu);
    let mut vals = vec![];
    for (i, z) in cd.hyper().iter().enumerate() {
        if is_zero_offset(z) {
            let s = solve_phi_subproblem(&hypo.translate(z), a_set, x, sub)?;
            vals.push((i, z.clone(), crate::linalg::norm_sq(&s.h)));
        }
    }
    report(vals.into_iter(), tol)
}

/// `sup_z |h(z, x, nu)|^2` over zero-offset hyper pairs.
pub fn omega2(
    expr: &Expression,
    x: &[f64],
    a_set: &FeasibleSet,
    nu: f64,
    cfg: &McdConfig,
) -> Result<StationarityReport> {
    a_set.check_dim(expr.dim())?;
    let out = evaluate(expr, x)?;
    omega2_from_codifferential(&out.cd, x, a_set, nu, &cfg.subsolver, cfg.stop_tol)
}

/// `omega(x, nu) <= tol`.
pub fn is_inf_stationary(expr: &Expression, x: &[f64], tol: f64, nu: f64) -> Result<bool> {
    let out = evaluate(expr, x)?;
    Ok(omega_from_codifferential(&out.cd, nu, &SubsolverConfig::default(), tol)?.is_stationary)
}
