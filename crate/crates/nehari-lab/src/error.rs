//! Error types shared by the solver stack.

use thiserror::Error;

/// Errors produced by discrete calculus, solvers and report builders.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    /// Two fields (or a field and a domain) do not live on the same grid.
    #[error("fields live on different domains")]
    DomainMismatch,

    /// The operation needs a nonzero field.
    #[error("operation requires a nonzero field")]
    ZeroField,

    /// A parameter fails its validity constraints.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The frequency sits at or below the bottom of the Dirichlet spectrum,
    /// where the constrained minimization degenerates.
    #[error("frequency {lambda} is at or below -lambda_omega = {}", -lambda_omega)]
    BelowSpectrum { lambda: f64, lambda_omega: f64 },

    /// An iteration hit its cap without meeting the residual target.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The iterate's gradient norm blew past the configured cutoff; the
    /// constrained infimum appears unbounded below in this regime.
    #[error(
        "gradient norm {gradient_norm_sq:.3e} exceeded divergence threshold {threshold:.3e}"
    )]
    Divergence {
        gradient_norm_sq: f64,
        threshold: f64,
    },
}

impl SolverError {
    /// Short machine-readable tag used in per-sample sweep flags and CSV.
    pub fn flag(&self) -> &'static str {
        match self {
            SolverError::DomainMismatch => "domain-mismatch",
            SolverError::ZeroField => "zero-field",
            SolverError::InvalidParameter(_) => "invalid-parameter",
            SolverError::BelowSpectrum { .. } => "below-spectrum",
            SolverError::NonConvergence { .. } => "non-convergence",
            SolverError::Divergence { .. } => "divergence",
        }
    }
}
