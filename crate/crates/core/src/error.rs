use thiserror::Error;

/// Errors raised by targets, kernels, integrators, samplers and the experiment runner.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("matrix is not skew-symmetric (max |J + J^T| = {0:e})")]
    NotSkewSymmetric(f64),

    /// The fixed-point iteration did not reach tolerance; usually the step
    /// size (or the drift intensity times the step size) is too large.
    #[error("Picard iteration did not converge after {iterations} iterations (residual {residual:e})")]
    PicardDiverged { iterations: usize, residual: f64 },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("target `{0}` provides no Hessian")]
    MissingHessian(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("chain aborted at step {step} (seed {seed}, stream {stream}): {source}")]
    ChainAborted {
        step: usize,
        seed: u64,
        stream: u64,
        source: Box<Error>,
    },

    /// An error tagged with the sweep point (sampler and step size) it came from.
    #[error("{point}: {source}")]
    AtPoint { point: String, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;
