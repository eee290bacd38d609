use thiserror::Error;

/// Failure modes of the propagator pipeline and the numerical oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The endpoint inversion needs an off-diagonal transfer-matrix entry that
    /// is numerically zero; the kernel is a distribution rather than a Gaussian.
    #[error("degenerate transfer map: {entry} = {value:e} is below {threshold:e}")]
    DegenerateMap {
        entry: &'static str,
        value: f64,
        threshold: f64,
    },

    /// The requested time reaches or passes a caustic of the flow.
    #[error("caustic: {0}")]
    Caustic(String),

    #[error("kernel is degenerate (delta distribution times a phase); use its delta phase instead")]
    DegenerateKernel,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("grid too small: boundary amplitude {amplitude:e} exceeds {limit:e}")]
    GridTooSmall { amplitude: f64, limit: f64 },

    #[error("step count {steps} violates the stability guard; use at least {minimum} steps")]
    StepCount { steps: usize, minimum: usize },

    #[error("representation mismatch: kernel is {kernel}, state is {state}")]
    RepresentationMismatch { kernel: &'static str, state: &'static str },

    #[error("kernel under-resolved on grid: phase step {phase_step:.3} rad exceeds {limit:.3} rad")]
    UnderResolved { phase_step: f64, limit: f64 },

    #[error("quadrature failed to converge: estimated error {estimate:e} on [{lower}, {upper}]")]
    Quadrature { lower: f64, upper: f64, estimate: f64 },

    #[error("internal consistency violated: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
