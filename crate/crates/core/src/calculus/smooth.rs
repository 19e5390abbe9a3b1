//! Smooth building blocks with exact derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar functions `R -> R` applied to one child node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothFn {
    Sin,
    Cos,
    Exp,
    Sinh,
    Cosh,
    Tanh,
    Atan,
    Square,
    Cube,
    /// Natural log; defined for positive arguments only.
    Log,
    /// Square root; defined for positive arguments only.
    Sqrt,
}

impl SmoothFn {
    pub const ALL: [SmoothFn; 11] = [
        SmoothFn::Sin,
        SmoothFn::Cos,
        SmoothFn::Exp,
        SmoothFn::Sinh,
        SmoothFn::Cosh,
        SmoothFn::Tanh,
        SmoothFn::Atan,
        SmoothFn::Square,
        SmoothFn::Cube,
        SmoothFn::Log,
        SmoothFn::Sqrt,
    ];

    pub fn in_domain(self, y: f64) -> bool {
        match self {
            SmoothFn::Log | SmoothFn::Sqrt => y > 0.0,
            _ => true,
        }
    }

    pub fn value(self, y: f64) -> f64 {
        match self {
            SmoothFn::Sin => y.sin(),
            SmoothFn::Cos => y.cos(),
            SmoothFn::Exp => y.exp(),
            SmoothFn::Sinh => y.sinh(),
            SmoothFn::Cosh => y.cosh(),
            SmoothFn::Tanh => y.tanh(),
            SmoothFn::Atan => y.atan(),
            SmoothFn::Square => y * y,
            SmoothFn::Cube => y * y * y,
            SmoothFn::Log => y.ln(),
            SmoothFn::Sqrt => y.sqrt(),
        }
    }

    pub fn derivative(self, y: f64) -> f64 {
        match self {
            SmoothFn::Sin => y.cos(),
            SmoothFn::Cos => -y.sin(),
            SmoothFn::Exp => y.exp(),
            SmoothFn::Sinh => y.cosh(),
            SmoothFn::Cosh => y.sinh(),
            SmoothFn::Tanh => {
                let t = y.tanh();
                1.0 - t * t
            }
            SmoothFn::Atan => 1.0 / (1.0 + y * y),
            SmoothFn::Square => 2.0 * y,
            SmoothFn::Cube => 3.0 * y * y,
            SmoothFn::Log => 1.0 / y,
            SmoothFn::Sqrt => 0.5 / y.sqrt(),
        }
    }
}

/// Smooth maps `G: R^m -> R` applied to `m` child nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SmoothMultiFn {
    /// `sum_i y_i^2`
    SumSquares,
    /// `prod_i y_i`
    Product,
    /// `k + <c, y> + 0.5 y^T Q y` with symmetric `Q`.
    Quadratic { q: Vec<Vec<f64>>, c: Vec<f64>, k: f64 },
}

impl SmoothMultiFn {
    /// Checks that the map accepts `m` arguments.
    pub fn check_arity(&self, m: usize) -> Result<()> {
        if m == 0 {
            return Err(Error::InvalidExpression("SmoothMulti needs at least one child".into()));
        }
        if let SmoothMultiFn::Quadratic { q, c, .. } = self {
            if c.len() != m || q.len() != m || q.iter().any(|row| row.len() != m) {
                return Err(Error::InvalidExpression(format!(
                    "quadratic map expects {} arguments with an {}x{} matrix",
                    c.len(),
                    c.len(),
                    c.len()
                )));
            }
        }
        Ok(())
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            SmoothMultiFn::SumSquares => y.iter().map(|t| t * t).sum(),
            SmoothMultiFn::Product => y.iter().product(),
            SmoothMultiFn::Quadratic { q, c, k } => {
                let mut quad = 0.0;
                for (i, row) in q.iter().enumerate() {
                    quad += y[i] * row.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
                }
                k + c.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() + 0.5 * quad
            }
        }
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        match self {
            SmoothMultiFn::SumSquares => y.iter().map(|t| 2.0 * t).collect(),
            SmoothMultiFn::Product => (0..y.len())
                .map(|i| {
                    y.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, t)| *t)
                        .product()
                })
                .collect(),
            SmoothMultiFn::Quadratic { q, c, .. } => q
                .iter()
                .zip(c)
                .map(|(row, ci)| ci + row.iter().zip(y).map(|(a, b)| a * b).sum::<f64>())
                .collect(),
        }
    }
}
