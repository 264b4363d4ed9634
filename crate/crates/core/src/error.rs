use thiserror::Error;

/// Errors raised by the correlator, state, scan and ED layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "quadrature did not reach tolerance after {subdivisions} subdivisions \
         (estimated error {error_estimate:.3e}, target {target:.3e})"
    )]
    QuadratureFailure {
        subdivisions: usize,
        error_estimate: f64,
        target: f64,
    },

    #[error("separation n = {n} must be at least 1")]
    InvalidDistance { n: usize },

    #[error("separation n = {n} exceeds the Toeplitz cap of {cap}")]
    DistanceTooLarge { n: usize, cap: usize },

    #[error("two-site state is not positive: eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("not a density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("derivative step {step} is not smaller than the grid spacing {spacing}")]
    StepTooLarge { step: f64, spacing: f64 },

    #[error("finite-difference stencil at lambda = {lambda} with step {step} leaves lambda >= 0")]
    StencilOutOfDomain { lambda: f64, step: f64 },

    #[error("lambda window [{lo}, {hi}] must contain 1 strictly inside and span several steps")]
    WindowTooNarrow { lo: f64, hi: f64 },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("at gamma={gamma}, lambda={lambda}, kT={kt}, n={n}: {source}")]
    AtPoint {
        gamma: f64,
        lambda: f64,
        kt: f64,
        n: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of the numerics, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::QuadratureFailure { .. } | Error::NotPositive { .. } => true,
            Error::AtPoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
