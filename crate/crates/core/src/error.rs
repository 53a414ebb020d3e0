// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::density::DensityMatrix;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The unscaled value does not fit in an f64; use the factorial-scaled form.
    #[error("H_{{{m},{n}}} magnitude e^{log_magnitude:.1} exceeds f64 range; use hermite2_scaled")]
    ScalingRequired { m: usize, n: usize, log_magnitude: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("index {index} outside truncated space of dimension {n_cut}")]
    Dimension { index: usize, n_cut: usize },

    /// The loss-quanta sum was cut before its tail dropped below tolerance.
    #[error("l-sum truncated: estimated tail {tail:e} exceeds tolerance {tol:e}")]
    Truncation { tail: f64, tol: f64 },

    #[error("series did not converge by order {order}: partial sum {partial:e}, tail estimate {tail:e}")]
    Series { partial: f64, tail: f64, order: usize },

    #[error("quadrature did not converge with {nodes} nodes per axis: error estimate {estimate:e}")]
    Quadrature { estimate: f64, nodes: usize },

    #[error("RK4 step-halving check failed: max difference {max_diff:e} exceeds {tol:e}")]
    Integrator {
        max_diff: f64,
        tol: f64,
        coarse: Box<DensityMatrix>,
        fine: Box<DensityMatrix>,
    },

    #[error("at grid point alpha = {re}{im:+}i: {source}")]
    GridPoint {
        re: f64,
        im: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a numerical procedure to reach its tolerance, as
    /// opposed to invalid input.
    pub fn is_convergence(&self) -> bool {
        match self {
            Error::Truncation { .. } | Error::Series { .. } | Error::Quadrature { .. } | Error::Integrator { .. } => {
                true
            }
            Error::GridPoint { source, .. } => source.is_convergence(),
            _ => false,
        }
    }
}
