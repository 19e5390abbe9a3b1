use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::experiments::{self as ex, SEEDS};
use super::oracles;
use super::rate::Verdict;
use super::run::{run, RunConfig, SolverChoice, Start};
use crate::calculus::{approximation_error_from, directional_derivative, evaluate, ExprBuilder};
use crate::codiff::{truncate_hyper, truncate_hypo, GeneratorSet, OffsetPair};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problems::{haar_d1, haar_d2, paper_example_2d};
use crate::solvers::{is_inf_stationary, mcd_solve, McdConfig, Termination};
use crate::subsolvers::{min_norm_point, solve_phi_subproblem, FeasibleSet, SubsolverConfig};

pub const SUITES: [&str; 9] = [
    "paper-example",
    "calculus",
    "subsolvers",
    "descent",
    "convergence",
    "rates",
    "jump-over",
    "independence",
    "determinism",
];

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }
}

struct Checks(Vec<CheckResult>);

impl Checks {
    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.0.push(CheckResult {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }
}

/// Runs one named suite, or every suite for `"all"`.
pub fn check(suite: &str) -> Result<Vec<SuiteReport>> {
    if suite == "all" {
        return SUITES.iter().map(|s| run_suite(s)).collect();
    }
    Ok(vec![run_suite(suite)?])
}

fn run_suite(suite: &str) -> Result<SuiteReport> {
    let mut c = Checks(vec![]);
    match suite {
        "paper-example" => paper_example(&mut c)?,
        "calculus" => calculus(&mut c)?,
        "subsolvers" => subsolvers(&mut c)?,
        "descent" => descent(&mut c)?,
        "convergence" => convergence(&mut c)?,
        "rates" => rates(&mut c)?,
        "jump-over" => jump_over(&mut c)?,
        "independence" => independence(&mut c)?,
        "determinism" => determinism(&mut c)?,
        other => return Err(Error::UnknownSuite(other.into())),
    }
    Ok(SuiteReport {
        suite: suite.into(),
        checks: c.0,
    })
}

/// Largest support-function gap between two hulls over sampled directions.
fn support_gap(a: &GeneratorSet, b: &GeneratorSet, rng: &mut ChaCha8Rng) -> f64 {
    let d = a.dim();
    (0..200)
        .map(|_| {
            let da: f64 = rng.gen_range(-1.0..1.0);
            let dv: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (a.support(da, &dv) - b.support(da, &dv)).abs()
        })
        .fold(0.0, f64::max)
}

fn paper_example(c: &mut Checks) -> Result<()> {
    let p = paper_example_2d();
    let out = evaluate(&p.expr, &[0.0, 0.0])?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let hypo = GeneratorSet::from_tuples(&[(0.0, &[1.0, 1.0]), (-1.0, &[0.0, 0.0])])?;
    let hyper = GeneratorSet::from_tuples(&[(0.0, &[0.0, 0.0]), (1.0, &[-2.0, -1.0]), (2.0, &[-1.0, -2.0])])?;
    let g1 = support_gap(out.cd.hypo(), &hypo, &mut rng);
    let g2 = support_gap(out.cd.hyper(), &hyper, &mut rng);
    c.push("hypodifferential hull", g1 <= 1e-10, format!("support gap {g1:.2e}"));
    c.push("hyperdifferential hull", g2 <= 1e-10, format!("support gap {g2:.2e}"));

    let th = truncate_hypo(&out.cd, 0.5);
    let tu = truncate_hyper(&out.cd, 1.0);
    let ok = th == GeneratorSet::from_tuples(&[(0.0, &[1.0, 1.0])])?
        && tu.len() == 2
        && tu.contains_approx(&OffsetPair::new(0.0, vec![0.0, 0.0]), 0.0)
        && tu.contains_approx(&OffsetPair::new(1.0, vec![-2.0, -1.0]), 0.0);
    c.push("truncation at nu=0.5, mu=1", ok, format!("hypo {th:?}, hyper {tu:?}"));

    let z = OffsetPair::new(1.0, vec![-2.0, -1.0]);
    let u = min_norm_point(&th.translate(&z), &SubsolverConfig::default()).point;
    let err = linalg::dist(&u.v, &[-1.0, 0.0]);
    c.push("min-norm point for z=(1,(-2,-1))", err <= 1e-10, format!("v = {:?}", u.v));

    let dd = directional_derivative(&out.cd, &[1.0, 0.0]);
    c.push("directional derivative along (1,0)", (dd - 1.0).abs() <= 1e-10, format!("{dd}"));

    let cfg = McdConfig {
        max_iter: 1,
        ..McdConfig::paper_example()
    };
    let t = mcd_solve(&p.expr, &[0.0, 0.0], &cfg)?;
    let cands = &t.records[0].candidates;
    let ok = cands.len() == 2
        && linalg::dist(&cands[0].direction, &[-1.0, -1.0]) <= 1e-10
        && linalg::dist(&cands[1].direction, &[1.0, 0.0]) <= 1e-10;
    let dirs: Vec<&Vec<f64>> = cands.iter().map(|k| &k.direction).collect();
    c.push("iteration-0 candidate directions", ok, format!("{dirs:?}"));
    Ok(())
}

/// `|eps(alpha/2)| <= 0.75 |eps(alpha)| + tol` on consecutive halvings.
/// When the range `2^-3..2^-10` contains a violation (a kink crossed by the
/// probe), the sequence is extended to `2^-16` and the last three halvings
/// decide.
pub fn eps_decay_ok(eps: &[f64], alphas: &[f64], f_scale: f64) -> bool {
    let tol = |a: f64| 1e-12 + 16.0 * f64::EPSILON * (1.0 + f_scale) / a;
    let good = |i: usize| eps[i + 1].abs() <= 0.75 * eps[i].abs() + tol(alphas[i + 1]);
    if (0..7).all(good) {
        return true;
    }
    let n = eps.len();
    n >= 4 && (n - 4..n - 1).all(good)
}

pub const EPS_ALPHAS: usize = 14;

fn calculus(c: &mut Checks) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut fd_bad, mut decay_bad, mut norm_bad) = (0, 0, 0);
    let n = 200;
    let alphas: Vec<f64> = (3..3 + EPS_ALPHAS as i32).map(|j| 0.5f64.powi(j)).collect();
    for _ in 0..n {
        let d = rng.gen_range(1..=3);
        let e = oracles::random_expression(&mut rng, d, 4);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let out = evaluate(&e, &x)?;
        norm_bad += usize::from(!out.cd.is_normalized());
        let dd = directional_derivative(&out.cd, &h);
        let res: Vec<f64> = [1e-2, 1e-4]
            .iter()
            .map(|a| oracles::fd_slope(&e, &x, &h, *a).map(|s| (s - dd).abs()))
            .collect::<Result<_>>()?;
        let curvature = (res[0] / 1e-2).max(1.0);
        fd_bad += usize::from(res[1] > 1e-2 * (1.0 + linalg::norm_sq(&h)) * curvature);
        let eps: Vec<f64> = alphas
            .iter()
            .map(|a| approximation_error_from(&e, &out, &x, *a, &h))
            .collect::<Result<_>>()?;
        decay_bad += usize::from(!eps_decay_ok(&eps, &alphas, out.value.abs()));
    }
    c.push("finite-difference consistency", fd_bad == 0, format!("{fd_bad}/{n} failures"));
    c.push("approximation error decay", decay_bad == 0, format!("{decay_bad}/{n} failures"));
    c.push("normalized output", norm_bad == 0, format!("{norm_bad}/{n} failures"));

    let mut pa_worst: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.gen_range(1..=3);
        let e = oracles::random_piecewise_affine(&mut rng, d, 4);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let h: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let out = evaluate(&e, &x)?;
        for a in [1.0, 0.25, 1e-3] {
            let r = approximation_error_from(&e, &out, &x, a, &h)? * a;
            pa_worst = pa_worst.max(r.abs() / (1.0 + out.value.abs()));
        }
    }
    c.push("piecewise-affine exactness", pa_worst <= 1e-12, format!("worst scaled residual {pa_worst:.2e}"));
    Ok(())
}

pub fn random_generator_set<R: Rng>(rng: &mut R) -> GeneratorSet {
    let d = rng.gen_range(1..=3);
    let n = rng.gen_range(1..=4);
    let pairs = (0..n)
        .map(|_| OffsetPair::new(rng.gen_range(-1.0..1.0), (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()))
        .collect();
    GeneratorSet::new(pairs).expect("nonempty")
}

pub fn random_feasible_set<R: Rng>(rng: &mut R, x: &[f64]) -> FeasibleSet {
    let d = x.len();
    match rng.gen_range(0..3) {
        0 => FeasibleSet::WholeSpace,
        1 => {
            let lo = x.iter().map(|t| t - rng.gen_range(0.0..1.0)).collect();
            let hi = x.iter().map(|t| t + rng.gen_range(0.0..1.0)).collect();
            FeasibleSet::new_box(lo, hi).expect("ordered bounds")
        }
        _ => {
            let r = rng.gen_range(0.2..1.5);
            let off: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = rng.gen_range(0.0..r) / linalg::norm(&off).max(1e-12);
            let center = linalg::sub(x, &linalg::scaled(s, &off));
            FeasibleSet::new_ball(center, r).expect("positive radius")
        }
    }
}

fn subsolvers(c: &mut Checks) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sub = SubsolverConfig::default();
    let n = 100;
    let (mut mn_arg, mut mn_val, mut phi_arg, mut phi_val): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        let g = random_generator_set(&mut rng);
        let r = min_norm_point(&g, &sub);
        let (u, v) = oracles::grid_min_norm(&g);
        mn_arg = mn_arg.max(r.point.dist(&u));
        mn_val = mn_val.max((r.norm_sq() - v).abs());

        let x: Vec<f64> = (0..g.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = random_feasible_set(&mut rng, &x);
        let s = solve_phi_subproblem(&g, &a, &x, &sub)?;
        let (h, v) = oracles::grid_phi(&g, &a, &x);
        phi_arg = phi_arg.max(linalg::dist(&s.h, &h));
        phi_val = phi_val.max((s.phi - v).abs());
    }
    c.push("min-norm point argument", mn_arg <= 1e-3, format!("worst {mn_arg:.2e}"));
    c.push("min-norm point value", mn_val <= 1e-4, format!("worst {mn_val:.2e}"));
    c.push("phi subproblem argument", phi_arg <= 1e-3, format!("worst {phi_arg:.2e}"));
    c.push("phi subproblem value", phi_val <= 1e-4, format!("worst {phi_val:.2e}"));
    Ok(())
}

pub const DESCENT_STEP: f64 = 1e-6;

/// Worst `slope + |(a, v)|^2` over zero-offset candidates at sampled
/// nonstationary points, with the number of candidates checked.
pub fn descent_margin(points: usize, seed: u64) -> Result<(f64, usize)> {
    let problems = ex::registered_problems();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = McdConfig {
        max_iter: 1,
        ..Default::default()
    };
    let (mut worst, mut count, mut sampled) = (f64::NEG_INFINITY, 0, 0);
    while sampled < points {
        let p = &problems[rng.gen_range(0..problems.len())];
        let x = p.random_start(&mut rng);
        let t = mcd_solve(&p.expr, &x, &cfg)?;
        let rec = &t.records[0];
        if rec.omega <= 1e-6 {
            continue;
        }
        sampled += 1;
        for cand in rec.candidates.iter().filter(|k| k.z.a.abs() <= crate::codiff::OFFSET_TOL) {
            // step of length 1e-6 in x; directions are not normalized
            let alpha = DESCENT_STEP / linalg::norm(&cand.direction).max(1.0);
            let slope = oracles::fd_slope(&p.expr, &x, &cand.direction, alpha)?;
            worst = worst.max(slope + cand.measure);
            count += 1;
        }
    }
    Ok((worst, count))
}

fn descent(c: &mut Checks) -> Result<()> {
    let (worst, count) = descent_margin(50, 4)?;
    c.push(
        "zero-offset candidates descend",
        worst <= 1e-3,
        format!("{count} candidates, worst slope + |(a,v)|^2 = {worst:.2e}"),
    );
    Ok(())
}

fn convergence(c: &mut Checks) -> Result<()> {
    for p in ex::registered_problems() {
        let runs = ex::convergence_runs(&p, &SEEDS)?;
        let bad: Vec<String> = runs
            .iter()
            .filter(|r| {
                !(r.trace.termination == Termination::StationaryWithinTol
                    && r.trace.final_omega() <= 1e-8
                    && ex::max_increase(&r.trace) <= 0.0)
            })
            .map(|r| format!("{:?} seed {} {:?}", r.solver, r.seed, r.trace.termination))
            .collect();
        c.push(&p.name, bad.is_empty(), format!("{} runs; failures {bad:?}", runs.len()));
    }
    Ok(())
}

fn rates(c: &mut Checks) -> Result<()> {
    for seed in SEEDS {
        let (_, _, r) = ex::linear_rate_run(seed)?;
        let ok = r.verdict == Verdict::Linear && r.c_hat <= 0.98;
        c.push(
            &format!("linear rate, max-plus-min seed {seed}"),
            ok,
            format!("{:?} c_hat {:.3} p_hat {:.2}", r.verdict, r.c_hat, r.p_hat),
        );
    }
    for p in [haar_d1(), haar_d2()] {
        let reports: Vec<_> = SEEDS
            .iter()
            .map(|s| ex::quadratic_rate_run(&p, *s).map(|x| x.1))
            .collect::<Result<_>>()?;
        let ps: Vec<String> = reports
            .iter()
            .map(|r| if r.p_hat.is_finite() { format!("{:.2}", r.p_hat) } else { "short".into() })
            .collect();
        c.push(&format!("quadratic rate, {}", p.name), ex::quadratic_verdict(&reports), format!("p_hat {ps:?}"));
    }
    Ok(())
}

fn jump_over(c: &mut Checks) -> Result<()> {
    let deep = ex::jump_over_run(f64::INFINITY)?;
    let shallow = ex::jump_over_run(0.0)?;
    c.push("mu=+inf reaches the global minimum", deep.final_f().abs() <= 1e-6, format!("f = {:.3e}", deep.final_f()));
    c.push(
        "mu=0 stops at the shallow minimum",
        (shallow.final_f() - 0.5).abs() <= 1e-3,
        format!("f = {:.6}", shallow.final_f()),
    );
    Ok(())
}

/// Points among `xs` where `|x|` as `max(x,-x)` and as `|1*x + 0|` get
/// different inf-stationarity verdicts.
pub fn abs_disagreements(xs: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut b = ExprBuilder::new(1);
    let x = b.var(0);
    let nx = b.neg(x);
    let m = b.max(vec![x, nx]);
    let as_max = b.build(m)?;
    let mut b = ExprBuilder::new(1);
    let n = b.affine_norm(vec![vec![1.0]], vec![0.0]);
    let as_norm = b.build(n)?;
    let mut out = vec![];
    for &t in xs {
        if is_inf_stationary(&as_max, &[t], tol, f64::INFINITY)? != is_inf_stationary(&as_norm, &[t], tol, f64::INFINITY)? {
            out.push(t);
        }
    }
    Ok(out)
}

fn independence(c: &mut Checks) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut xs: Vec<f64> = (0..99).map(|_| rng.gen_range(-2.0..2.0)).collect();
    xs.push(0.0);
    let bad = abs_disagreements(&xs, 1e-8)?;
    c.push("|x| verdicts agree", bad.is_empty(), format!("{} points, disagreements {bad:?}", xs.len()));
    Ok(())
}

fn determinism(c: &mut Checks) -> Result<()> {
    for (problem, solver) in [("max_plus_min", SolverChoice::Qrmcd), ("clustering_small", SolverChoice::Mcd)] {
        let mut cfg = RunConfig::new(problem, solver);
        cfg.start = Start::Seed(7);
        let a = ex::csv_without_time(&run(&cfg)?)?;
        let b = ex::csv_without_time(&run(&cfg)?)?;
        c.push(&format!("{problem} repeated run"), a == b, format!("{} rows", a.len()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite() {
        assert!(matches!(check("nope"), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn decay_rule() {
        let alphas: Vec<f64> = (3..3 + EPS_ALPHAS as i32).map(|j| 0.5f64.powi(j)).collect();
        let halving: Vec<f64> = alphas.clone();
        assert!(eps_decay_ok(&halving, &alphas, 0.0));
        let flat = vec![0.1; EPS_ALPHAS];
        assert!(!eps_decay_ok(&flat, &alphas, 0.0));
        let mut kink = halving.clone();
        kink[6] = 10.0 * kink[5];
        assert!(eps_decay_ok(&kink, &alphas, 0.0));
    }

    #[test]
    fn paper_example_suite_passes() {
        let r = check("paper-example").unwrap();
        assert_eq!(r[0].failed(), 0, "{:?}", r[0].checks);
    }
}
