use thiserror::Error;

use crate::minimizer::MinimizeResult;

pub type Result<T> = std::result::Result<T, HsError>;

#[derive(Debug, Error)]
pub enum HsError {
    /// A parameter lies outside the domain where the operation is defined.
    #[error("{module}: parameter out of domain: {msg}")]
    Domain { module: &'static str, msg: String },

    /// An integral (or a Beta factor of a closed form) diverges.
    #[error("{module}: divergent integral: {msg}")]
    Divergent { module: &'static str, msg: String },

    /// Evaluation at a pole of the function.
    #[error("{module}: singular point: {msg}")]
    Singularity { module: &'static str, msg: String },

    /// Adaptive quadrature exhausted its budget.
    #[error("quadrature: no convergence ({msg}); partial value {partial:e} +/- {error_estimate:e} after {evaluations} evaluations")]
    QuadratureNotConverged {
        msg: String,
        partial: f64,
        error_estimate: f64,
        evaluations: usize,
    },

    /// The gradient flow hit `max_iters` before reaching its tolerance.
    #[error("minimizer: no convergence after {} iterations (last energy {})", .0.iterations, .0.energy)]
    MinimizerNotConverged(Box<MinimizeResult>),

    /// Log-log regression could not be carried out or is inconclusive.
    #[error("asymptotics: {0}")]
    Fit(String),

    /// A grid is too small or a region falls outside of it.
    #[error("cylinder_grid: {0}")]
    Grid(String),

    /// Internal relation violated (e.g. non-positive minimal energy).
    #[error("{module}: inconsistent state: {msg}")]
    Consistency { module: &'static str, msg: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(String),
}

impl HsError {
    pub(crate) fn domain(module: &'static str, msg: impl Into<String>) -> Self {
        HsError::Domain {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn divergent(module: &'static str, msg: impl Into<String>) -> Self {
        HsError::Divergent {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn singular(module: &'static str, msg: impl Into<String>) -> Self {
        HsError::Singularity {
            module,
            msg: msg.into(),
        }
    }

    /// True for errors caused by non-convergence of an iterative method.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            HsError::QuadratureNotConverged { .. } | HsError::MinimizerNotConverged(_)
        )
    }
}
