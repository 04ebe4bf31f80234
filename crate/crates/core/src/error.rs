use thiserror::Error;

/// Errors produced by the plate, aerodynamic and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("linear solver failed to converge: residual {residual:.3e} after {iterations} iterations (tol {tol:.1e})")]
    SolverFailure {
        residual: f64,
        iterations: usize,
        tol: f64,
    },

    #[error("history buffer does not cover [{needed_from:.6}, {t:.6}] (earliest stored {have_from:.6})")]
    HistoryUnderflow {
        t: f64,
        needed_from: f64,
        have_from: f64,
    },

    #[error("degenerate flow speed U = 1: delay horizon is unbounded")]
    DegenerateSpeed,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("Newton iteration did not converge: residual {residual:.3e} after {iterations} iterations")]
    Nonconvergence { residual: f64, iterations: usize },

    #[error("Jacobian is numerically singular (near a bifurcation point)")]
    NearBifurcation,

    #[error("solution diverged (non-finite values) at step {step}, t = {t:.6}")]
    Divergence { step: usize, t: f64 },

    #[error("per-frequency iteration failed at frequency index {index} (|beta| = {beta:.3e}): residual {residual:.3e}")]
    FrequencyResolution {
        index: usize,
        beta: f64,
        residual: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
