use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codiff::OffsetPair;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Mcd,
    QrMcd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    StationaryWithinTol,
    MaxIter,
    LineSearchStall,
}

/// One hyper generator `z` examined at an iterate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    /// Index of `z` in the truncated hyper set.
    pub z_index: usize,
    pub z: OffsetPair,
    /// Search direction: `-v` for MCD, `h` for QR-MCD.
    pub direction: Vec<f64>,
    /// `|u|^2` of the min-norm point (MCD) or `|h|^2` (QR-MCD).
    #[serde(with = "crate::serde_ext::ext_f64")]
    pub measure: f64,
    /// Subproblem value: `|u|^2` (MCD) or `phi(h)` (QR-MCD).
    #[serde(with = "crate::serde_ext::ext_f64")]
    pub subproblem_value: f64,
    /// Step found along `direction`; absent on the final record.
    #[serde(with = "crate::serde_ext::opt_ext_f64")]
    pub alpha: Option<f64>,
    /// `f` at the trial point; absent on the final record.
    #[serde(with = "crate::serde_ext::opt_ext_f64")]
    pub value: Option<f64>,
}

/// State at `x_n` and the step taken from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub x: Vec<f64>,
    #[serde(with = "crate::serde_ext::ext_f64")]
    pub f: f64,
    /// `omega(x_n, nu_n)` for MCD, `omega_2` for QR-MCD.
    #[serde(with = "crate::serde_ext::ext_f64")]
    pub omega: f64,
    pub n_candidates: usize,
    pub chosen_z_index: Option<usize>,
    pub chosen_z: Option<OffsetPair>,
    pub direction: Option<Vec<f64>>,
    #[serde(with = "crate::serde_ext::opt_ext_f64")]
    pub step: Option<f64>,
    /// Milliseconds since the solver started.
    #[serde(with = "crate::serde_ext::ext_f64")]
    pub time_ms: f64,
    pub candidates: Vec<CandidateRecord>,
}

/// Row of the CSV export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub f: f64,
    pub omega: f64,
    pub step: Option<f64>,
    pub n_candidates: usize,
    pub chosen_z_index: Option<usize>,
    pub time_ms: f64,
}

pub const CSV_HEADER: [&str; 7] = [
    "iter",
    "f",
    "omega",
    "step",
    "n_candidates",
    "chosen_z_index",
    "time_ms",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub solver: SolverKind,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

impl Trace {
    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("traces are nonempty")
    }

    pub fn final_x(&self) -> &[f64] {
        &self.last().x
    }

    pub fn final_f(&self) -> f64 {
        self.last().f
    }

    pub fn final_omega(&self) -> f64 {
        self.last().omega
    }

    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn f_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.f).collect()
    }

    pub fn rows(&self) -> Vec<TraceRow> {
        self.records
            .iter()
            .map(|r| TraceRow {
                iter: r.iter,
                f: r.f,
                omega: r.omega,
                step: r.step,
                n_candidates: r.n_candidates,
                chosen_z_index: r.chosen_z_index,
                time_ms: r.time_ms,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for row in self.rows() {
            wtr.serialize(row)?;
        }
        if self.records.is_empty() {
            wtr.write_record(CSV_HEADER)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = vec![];
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Vec<TraceRow>> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if header != CSV_HEADER {
            return Err(Error::Parse(format!("unexpected trace header {header:?}")));
        }
        rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Trace> {
        let t: Trace = serde_json::from_str(s)?;
        if t.records.is_empty() {
            return Err(Error::Parse("trace has no records".into()));
        }
        Ok(t)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trace {
        let rec = |iter: usize, f: f64, step: Option<f64>, z: Option<usize>| IterationRecord {
            iter,
            x: vec![f],
            f,
            omega: f * f,
            n_candidates: 1,
            chosen_z_index: z,
            chosen_z: z.map(|_| OffsetPair::zero(1)),
            direction: z.map(|_| vec![-1.0]),
            step,
            time_ms: 0.25,
            candidates: vec![],
        };
        Trace {
            solver: SolverKind::Mcd,
            records: vec![rec(0, 3.0, Some(3.0), Some(0)), rec(1, 0.0, None, None)],
            termination: Termination::StationaryWithinTol,
        }
    }

    #[test]
    fn csv_layout() {
        let s = sample().to_csv_string().unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("iter,f,omega,step,n_candidates,chosen_z_index,time_ms"));
        assert_eq!(lines.next(), Some("0,3.0,9.0,3.0,1,0,0.25"));
        assert_eq!(lines.next(), Some("1,0.0,0.0,,1,,0.25"));
        let rows = Trace::read_csv(s.as_bytes()).unwrap();
        assert_eq!(rows, sample().rows());
    }

    #[test]
    fn json_round_trip() {
        let t = sample();
        let back = Trace::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        assert!(Trace::from_json(r#"{"solver":"mcd","records":[],"termination":"MaxIter"}"#).is_err());
    }

    #[test]
    fn non_finite_values_round_trip() {
        let mut t = sample();
        t.records[0].omega = f64::INFINITY;
        t.records[1].f = f64::NEG_INFINITY;
        let back = Trace::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        let rows = Trace::read_csv(t.to_csv_string().unwrap().as_bytes()).unwrap();
        assert_eq!(rows[0].omega, f64::INFINITY);
    }
}
