use std::io::Read;
use std::path::Path;

use super::{KnownMinimum, MinimumSource, Problem};
use crate::calculus::{ExprBuilder, SmoothMultiFn};
use crate::error::{Error, Result};
use crate::subsolvers::FeasibleSet;

/// Largest `k^n` searched when enumerating assignments.
const ENUMERATION_LIMIT: usize = 1 << 16;

/// `F(c_1..c_k) = sum_p min_j |c_j - a_p|^2`; center `j` occupies
/// coordinates `j*m .. (j+1)*m`.
pub fn clustering_instance(points: &[Vec<f64>], k: usize) -> Result<Problem> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let m = points.first().map(Vec::len).ok_or_else(|| Error::InvalidParameter("no points".into()))?;
    if m == 0 || points.iter().any(|p| p.len() != m || p.iter().any(|t| !t.is_finite())) {
        return Err(Error::InvalidParameter("points must be finite with a common positive dimension".into()));
    }
    let d = k * m;
    let mut b = ExprBuilder::new(d);
    let mut terms = vec![];
    for p in points {
        let dists: Vec<_> = (0..k)
            .map(|j| {
                let diffs = (0..m)
                    .map(|i| {
                        let mut g = vec![0.0; d];
                        g[j * m + i] = 1.0;
                        b.affine(-p[i], g)
                    })
                    .collect();
                b.smooth_multi(SmoothMultiFn::SumSquares, diffs)
            })
            .collect();
        terms.push(if k == 1 { dists[0] } else { b.min(dists) });
    }
    let root = if terms.len() == 1 { terms[0] } else { b.add(terms) };

    let mut lower = vec![f64::INFINITY; m];
    let mut upper = vec![f64::NEG_INFINITY; m];
    for p in points {
        for i in 0..m {
            lower[i] = lower[i].min(p[i]);
            upper[i] = upper[i].max(p[i]);
        }
    }
    for i in 0..m {
        if lower[i] == upper[i] {
            lower[i] -= 1.0;
            upper[i] += 1.0;
        }
    }
    Ok(Problem {
        name: format!("clustering[n={},k={k}]", points.len()),
        expr: b.build(root)?,
        known_minimum: enumerate_minimum(points, k),
        default_box: FeasibleSet::new_box(lower.repeat(k), upper.repeat(k))?,
        feasible_set: None,
        bounded_below: true,
    })
}

/// Best assignment of points to nonempty clusters, centers at the means.
fn enumerate_minimum(points: &[Vec<f64>], k: usize) -> Option<KnownMinimum> {
    let n = points.len();
    let m = points[0].len();
    let total = (k as u128).checked_pow(n as u32)?;
    if total > ENUMERATION_LIMIT as u128 || k > n {
        return None;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut assign = vec![0usize; n];
    for code in 0..total as usize {
        let mut c = code;
        for a in assign.iter_mut() {
            *a = c % k;
            c /= k;
        }
        let mut sums = vec![0.0; k * m];
        let mut counts = vec![0usize; k];
        for (p, &j) in points.iter().zip(&assign) {
            counts[j] += 1;
            for i in 0..m {
                sums[j * m + i] += p[i];
            }
        }
        if counts.contains(&0) {
            continue;
        }
        for j in 0..k {
            for i in 0..m {
                sums[j * m + i] /= counts[j] as f64;
            }
        }
        let cost: f64 = points
            .iter()
            .map(|p| {
                (0..k)
                    .map(|j| (0..m).map(|i| (sums[j * m + i] - p[i]).powi(2)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        if best.as_ref().is_none_or(|b| cost < b.0) {
            best = Some((cost, sums));
        }
    }
    best.map(|(f, x)| KnownMinimum {
        x,
        f,
        source: MinimumSource::Enumeration,
    })
}

/// 2-means on `{0, 1, 9, 10}`.
pub fn clustering_small() -> Problem {
    let pts: Vec<Vec<f64>> = [0.0, 1.0, 9.0, 10.0].iter().map(|v| vec![*v]).collect();
    let mut p = clustering_instance(&pts, 2).expect("valid instance");
    p.name = "clustering_small".into();
    p
}

/// One point per row, comma separated, no header. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_points_csv<R: Read>(r: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r);
    let mut out: Vec<Vec<f64>> = vec![];
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = out.first() {
            if first.len() != row.len() {
                return Err(Error::Parse("rows have different lengths".into()));
            }
        }
        out.push(row);
    }
    if out.is_empty() {
        return Err(Error::Parse("no points".into()));
    }
    Ok(out)
}

pub fn load_points_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    parse_points_csv(std::fs::File::open(path)?)
}
