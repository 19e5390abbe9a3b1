use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cube_box, KnownMinimum, MinimumSource, Problem};
use crate::calculus::{ExprBuilder, NodeId};
use crate::error::{Error, Result};
use crate::solvers::{qrmcd_solve, McdConfig};
use crate::subsolvers::FeasibleSet;

/// `constant + <linear, x> + 0.5 x^T hessian x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticPiece {
    pub constant: f64,
    pub linear: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
}

impl QuadraticPiece {
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.constant + crate::linalg::dot(&self.linear, x);
        for (i, row) in self.hessian.iter().enumerate() {
            v += 0.5 * x[i] * crate::linalg::dot(row, x);
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceSpec {
    Explicit(QuadraticPiece),
    /// Hessian `R diag(eig) R^T` with `eig` uniform in the curvature bounds
    /// and `R` a random rotation; linear part uniform in `[-2,2]^d`,
    /// constant uniform in `[-1,1]`.
    Random,
}

/// `f = sum_k max_i g_ki + sum_l min_j u_lj` with quadratic pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxPlusMinSpec {
    pub dim: usize,
    pub max_groups: Vec<Vec<PieceSpec>>,
    pub min_groups: Vec<Vec<PieceSpec>>,
    /// Eigenvalue bounds `(m, M)` for random pieces.
    pub curvature: (f64, f64),
}

impl MaxPlusMinSpec {
    /// `d = 2`, one max group and one min group of two random pieces each,
    /// curvature in `[1, 4]`.
    pub fn linear_preset() -> Self {
        MaxPlusMinSpec {
            dim: 2,
            max_groups: vec![vec![PieceSpec::Random, PieceSpec::Random]],
            min_groups: vec![vec![PieceSpec::Random, PieceSpec::Random]],
            curvature: (1.0, 4.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.dim == 0 {
            return bad("dimension must be >= 1");
        }
        if self.max_groups.is_empty() && self.min_groups.is_empty() {
            return bad("at least one group is required");
        }
        if self.max_groups.iter().chain(&self.min_groups).any(Vec::is_empty) {
            return bad("groups must be nonempty");
        }
        let (m, mm) = self.curvature;
        if !(m.is_finite() && mm.is_finite() && m <= mm) {
            return bad("curvature bounds need m <= M");
        }
        for p in self.max_groups.iter().chain(&self.min_groups).flatten() {
            if let PieceSpec::Explicit(q) = p {
                if q.linear.len() != self.dim
                    || q.hessian.len() != self.dim
                    || q.hessian.iter().any(|r| r.len() != self.dim)
                {
                    return bad("explicit piece has the wrong dimension");
                }
            }
        }
        Ok(())
    }
}

fn random_rotation(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| {
        // Box-Muller
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    });
    g.qr().q()
}

fn random_piece(d: usize, (m, mm): (f64, f64), rng: &mut ChaCha8Rng) -> QuadraticPiece {
    let r = random_rotation(d, rng);
    let eig = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |_, _| rng.gen_range(m..=mm)));
    let q = &r * eig * r.transpose();
    let q = (&q + q.transpose()) * 0.5;
    QuadraticPiece {
        constant: rng.gen_range(-1.0..=1.0),
        linear: (0..d).map(|_| rng.gen_range(-2.0..=2.0)).collect(),
        hessian: (0..d).map(|i| (0..d).map(|j| q[(i, j)]).collect()).collect(),
    }
}

/// Resolved pieces of an instance, in spec order.
pub fn resolve_pieces(spec: &MaxPlusMinSpec, seed: u64) -> (Vec<Vec<QuadraticPiece>>, Vec<Vec<QuadraticPiece>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut resolve = |groups: &[Vec<PieceSpec>]| -> Vec<Vec<QuadraticPiece>> {
        groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|p| match p {
                        PieceSpec::Explicit(q) => q.clone(),
                        PieceSpec::Random => random_piece(spec.dim, spec.curvature, &mut rng),
                    })
                    .collect()
            })
            .collect()
    };
    let max = resolve(&spec.max_groups);
    let min = resolve(&spec.min_groups);
    (max, min)
}

const MULTISTARTS: u64 = 8;

/// Builds the instance and fills `known_minimum` with the best end point of
/// several long QR-MCD runs.
pub fn build_max_plus_min(spec: &MaxPlusMinSpec, seed: u64) -> Result<Problem> {
    spec.validate()?;
    let (max_groups, min_groups) = resolve_pieces(spec, seed);
    let d = spec.dim;
    let mut b = ExprBuilder::new(d);
    let push = |b: &mut ExprBuilder, q: &QuadraticPiece| -> NodeId {
        b.quadratic(q.hessian.clone(), q.linear.clone(), q.constant)
    };
    let mut terms = vec![];
    for g in &max_groups {
        let kids: Vec<_> = g.iter().map(|q| push(&mut b, q)).collect();
        terms.push(if kids.len() == 1 { kids[0] } else { b.max(kids) });
    }
    for g in &min_groups {
        let kids: Vec<_> = g.iter().map(|q| push(&mut b, q)).collect();
        terms.push(if kids.len() == 1 { kids[0] } else { b.min(kids) });
    }
    let root = if terms.len() == 1 { terms[0] } else { b.add(terms) };
    let mut problem = Problem {
        name: format!("max_plus_min[seed={seed}]"),
        expr: b.build(root)?,
        known_minimum: None,
        default_box: cube_box(d, -3.0, 3.0),
        feasible_set: None,
        bounded_below: spec.curvature.0 > 0.0,
    };
    if problem.bounded_below {
        problem.known_minimum = Some(numerical_minimum(&problem, seed)?);
    }
    Ok(problem)
}

fn numerical_minimum(problem: &Problem, seed: u64) -> Result<KnownMinimum> {
    let cfg = McdConfig {
        stop_tol: 1e-26,
        max_iter: 500,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_5eed);
    let mut best: Option<KnownMinimum> = None;
    for _ in 0..MULTISTARTS {
        let x0 = problem.random_start(&mut rng);
        let t = qrmcd_solve(&problem.expr, &x0, &FeasibleSet::WholeSpace, &cfg)?;
        if best.as_ref().is_none_or(|b| t.final_f() < b.f) {
            best = Some(KnownMinimum {
                x: t.final_x().to_vec(),
                f: t.final_f(),
                source: MinimumSource::Numerical,
            });
        }
    }
    Ok(best.expect("at least one start"))
}
