//! Error taxonomy shared by all pipeline stages.

use thiserror::Error;

/// Everything that can go wrong between a vector field evaluation and a
/// finished sweep row.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Evaluation outside the model's domain (e.g. the excluded fixed point),
    /// or an argument outside a function's domain (negative dB input,
    /// degenerate orbit, zero-norm mode vector).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid model parameters or an unknown parameter/preset name.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// The adaptive integrator drove the step size below the representable
    /// limit (stiffness or blow-up). Carries the last valid state.
    #[error("step size underflow at t = {t} (|h| = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64, state: Vec<f64> },

    /// The state left the finite range during integration.
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64, state: Vec<f64> },

    /// Step budget exhausted before reaching the end of the span.
    #[error("maximum step count exceeded at t = {t}")]
    MaxSteps { t: f64 },

    /// No Poincaré section crossings were found: the orbit decayed to a fixed
    /// point or left the basin.
    #[error("no oscillation detected: {0}")]
    NoOscillation(String),

    /// Newton iteration on the period map failed to reach tolerance.
    #[error("shooting did not converge after {iterations} iterations (best residual {best_residual:.3e})")]
    NewtonDivergence { best_residual: f64, iterations: usize },

    /// Singular or near-singular linear system (non-hyperbolic cycle,
    /// ill-conditioned fundamental matrix, ...).
    #[error("ill-conditioned system: {what} (cond ~ {cond:.3e})")]
    IllConditioned { what: String, cond: f64 },

    /// Monodromy eigenvalues too close to resolve distinct modes.
    #[error("degenerate Floquet spectrum: {0}")]
    DegenerateSpectrum(String),

    /// No Floquet multiplier near unity: the solution is not a limit cycle.
    #[error("non-oscillatory spectrum: {0}")]
    NonOscillatory(String),

    /// Not enough data for a statistic (e.g. Pearson correlation on < 3 rows).
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Parameter search could not produce any successful evaluation.
    #[error("search failed: {0}")]
    SearchFailed(String),

    /// Per-point wall clock budget exhausted.
    #[error("evaluation timed out")]
    Timeout,

    /// Run was cancelled (signal).
    #[error("cancelled")]
    Cancelled,
}

impl Error {
    /// Short machine-readable category, used for sweep row status codes and
    /// CLI exit classification.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidParam(_) => "invalid_param",
            Error::StepSizeUnderflow { .. } => "step_underflow",
            Error::NonFinite { .. } => "non_finite",
            Error::MaxSteps { .. } => "max_steps",
            Error::NoOscillation(_) => "no_oscillation",
            Error::NewtonDivergence { .. } => "newton_divergence",
            Error::IllConditioned { .. } => "ill_conditioned",
            Error::DegenerateSpectrum(_) => "degenerate_spectrum",
            Error::NonOscillatory(_) => "non_oscillatory",
            Error::InsufficientData(_) => "insufficient_data",
            Error::SearchFailed(_) => "search_failed",
            Error::Timeout => "timeout",
            Error::Cancelled => "cancelled",
        }
    }
}
