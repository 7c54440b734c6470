//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Variants carry enough context
//! to act on the failure (the offending name and the valid alternatives, the
//! final residual of a diverged solve, …) without needing a backtrace.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A method name did not match any built-in scheme.
    #[error("unknown method '{name}'; valid names: {valid}")]
    UnknownMethod { name: String, valid: String },

    /// An iterative solve hit its iteration cap before reaching tolerance.
    #[error("solver failed to converge after {iterations} iterations (relative residual {residual:.3e}, tolerance {tol:.3e})")]
    SolveDiverged {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    /// Root finding for quadrature nodes did not converge.
    #[error("root finding for {what} did not converge after {iterations} iterations")]
    RootFinding { what: String, iterations: usize },

    /// A one-step amplification evaluation hit a pole of the implicit part
    /// (singular stage factor 1 - a_im[i][i]*lambda).
    #[error("amplification factor has a pole at stage {stage} (|1 - a_im*lambda| = {magnitude:.3e})")]
    AmplificationPole { stage: usize, magnitude: f64 },

    /// The least-squares order fit was too noisy to trust.
    #[error("consistency order indeterminate: fit residual {residual:.3e} exceeds {limit:.3e}")]
    IndeterminateOrder { residual: f64, limit: f64 },

    /// BDF2 was asked to change its step size mid-run.
    #[error("BDF2 requires a fixed step size: got dt = {got:.17e} after starting with dt = {expected:.17e}")]
    StepSizeChanged { expected: f64, got: f64 },

    /// Two fields that must share a grid have different sizes.
    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    /// A bisection bracket did not contain the sought transition.
    #[error("bracket [{lo:.6e}, {hi:.6e}] does not bracket the transition: {reason}")]
    BracketFailed { lo: f64, hi: f64, reason: String },

    /// Invalid run configuration (file syntax, key values, divisibility…).
    #[error("configuration error: {0}")]
    Config(String),

    /// A precondition of an operation was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Filesystem/O errors from the run drivers.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
