use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::problems::problem_by_name;
use crate::solvers::{mcd_solve, qrmcd_solve, McdConfig, Termination, Trace};
use crate::subsolvers::FeasibleSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Mcd,
    Qrmcd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    X0(Vec<f64>),
    /// Uniform sample from the problem's default box.
    Seed(u64),
}

/// One solver run. In JSON every field sits at the top level:
/// `problem`, `params`, `solver`, `feasible_set`, `x0` or `seed`, `csv`,
/// `json`, plus any [`McdConfig`] field.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub params: Value,
    pub solver: SolverChoice,
    /// QR-MCD only; defaults to [`crate::Problem::qr_set`].
    pub feasible_set: Option<FeasibleSet>,
    pub start: Start,
    pub solver_config: McdConfig,
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

fn take<T: serde::de::DeserializeOwned>(m: &mut Map<String, Value>, key: &str) -> Result<Option<T>> {
    match m.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v).map(Some).map_err(|e| Error::Parse(format!("{key}: {e}"))),
    }
}

impl RunConfig {
    pub fn new(problem: &str, solver: SolverChoice) -> Self {
        RunConfig {
            problem: problem.into(),
            params: Value::Null,
            solver,
            feasible_set: None,
            start: Start::Seed(0),
            solver_config: McdConfig::default(),
            csv: None,
            json: None,
        }
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let Value::Object(mut m) = v else {
            return Err(Error::Parse("run config must be a JSON object".into()));
        };
        let problem: String = take(&mut m, "problem")?.ok_or_else(|| Error::Parse("missing `problem`".into()))?;
        let solver = take(&mut m, "solver")?.ok_or_else(|| Error::Parse("missing `solver`".into()))?;
        let params = m.remove("params").unwrap_or(Value::Null);
        let feasible_set = take(&mut m, "feasible_set")?;
        let x0: Option<Vec<f64>> = take(&mut m, "x0")?;
        let seed: Option<u64> = take(&mut m, "seed")?;
        let start = match (x0, seed) {
            (Some(_), Some(_)) => return Err(Error::Parse("give either `x0` or `seed`, not both".into())),
            (Some(x), None) => Start::X0(x),
            (None, s) => Start::Seed(s.unwrap_or(0)),
        };
        let csv = take(&mut m, "csv")?;
        let json = take(&mut m, "json")?;
        let solver_config: McdConfig =
            serde_json::from_value(Value::Object(m)).map_err(|e| Error::Parse(format!("solver settings: {e}")))?;
        let cfg = RunConfig {
            problem,
            params,
            solver,
            feasible_set,
            start,
            solver_config,
            csv,
            json,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_value(&self) -> Value {
        let mut m = match serde_json::to_value(&self.solver_config) {
            Ok(Value::Object(m)) => m,
            _ => unreachable!("McdConfig serializes to an object"),
        };
        let mut put = |k: &str, v: Value| {
            m.insert(k.into(), v);
        };
        put("problem", Value::String(self.problem.clone()));
        if !self.params.is_null() {
            put("params", self.params.clone());
        }
        put("solver", serde_json::to_value(self.solver).expect("enum"));
        if let Some(a) = &self.feasible_set {
            put("feasible_set", serde_json::to_value(a).expect("feasible set"));
        }
        match &self.start {
            Start::X0(x) => put("x0", serde_json::to_value(x).expect("vector")),
            Start::Seed(s) => put("seed", Value::from(*s)),
        }
        if let Some(p) = &self.csv {
            put("csv", Value::String(p.display().to_string()));
        }
        if let Some(p) = &self.json {
            put("json", Value::String(p.display().to_string()));
        }
        Value::Object(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver_config.validate()?;
        if self.solver == SolverChoice::Mcd && self.feasible_set.is_some() {
            return Err(Error::InvalidParameter("feasible_set applies to qrmcd only".into()));
        }
        Ok(())
    }
}

/// Process exit status for a finished run.
pub fn exit_code(t: Termination) -> i32 {
    match t {
        Termination::StationaryWithinTol => 0,
        Termination::MaxIter => 2,
        Termination::LineSearchStall => 3,
    }
}

/// Solves the configured problem; writes the trace files named in the
/// config.
pub fn run(cfg: &RunConfig) -> Result<Trace> {
    cfg.validate()?;
    let problem = problem_by_name(&cfg.problem, &cfg.params)?;
    let x0 = match &cfg.start {
        Start::X0(x) => x.clone(),
        Start::Seed(s) => problem.seeded_start(*s),
    };
    let trace = match cfg.solver {
        SolverChoice::Mcd => mcd_solve(&problem.expr, &x0, &cfg.solver_config)?,
        SolverChoice::Qrmcd => {
            let a = cfg.feasible_set.clone().unwrap_or_else(|| problem.qr_set());
            qrmcd_solve(&problem.expr, &x0, &a, &cfg.solver_config)?
        }
    };
    if let Some(p) = &cfg.csv {
        trace.save_csv(p)?;
    }
    if let Some(p) = &cfg.json {
        trace.save_json(p)?;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_config_round_trip() {
        let cfg = RunConfig::from_json(
            r#"{"problem": "paper_example_2d", "solver": "mcd", "nu": 0.5, "mu": 1, "x0": [0, 0]}"#,
        )
        .unwrap();
        assert_eq!(cfg.solver_config, McdConfig::paper_example());
        assert_eq!(cfg.start, Start::X0(vec![0.0, 0.0]));
        assert_eq!(RunConfig::from_value(cfg.to_value()).unwrap(), cfg);
    }

    #[test]
    fn bad_configs() {
        for s in [
            "[]",
            r#"{"solver": "mcd"}"#,
            r#"{"problem": "abs_x", "solver": "newton"}"#,
            r#"{"problem": "abs_x", "solver": "mcd", "bogus": 1}"#,
            r#"{"problem": "abs_x", "solver": "mcd", "x0": [1], "seed": 2}"#,
            r#"{"problem": "abs_x", "solver": "mcd", "stop_tol": -1}"#,
            r#"{"problem": "abs_x", "solver": "mcd", "feasible_set": {"type": "whole_space"}}"#,
        ] {
            assert!(RunConfig::from_json(s).is_err(), "{s}");
        }
    }

    #[test]
    fn abs_run_is_stationary() {
        let mut cfg = RunConfig::new("abs_x", SolverChoice::Mcd);
        cfg.start = Start::X0(vec![3.0]);
        let t = run(&cfg).unwrap();
        assert_eq!(exit_code(t.termination), 0);
        assert!(t.final_f() <= 1e-8);
    }

    #[test]
    fn unknown_problem_is_an_error() {
        assert!(run(&RunConfig::new("nope", SolverChoice::Mcd)).is_err());
    }
}
