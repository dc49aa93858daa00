use thiserror::Error;

/// Errors raised by the distribution kernels and checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter record violates its domain invariant.
    #[error("invalid parameter: {0}")]
    Domain(String),

    /// The log of a leading term or the number of required terms is out of range.
    #[error("overflow guard: {0}")]
    Overflow(String),

    /// A series could not be certified convergent.
    #[error("divergent series: {0}")]
    Divergence(String),

    /// The ν-power sum of a pmf could not be certified finite on its window.
    #[error("COM-type transform does not exist: {0}")]
    Existence(String),

    #[error("tail too heavy for inversion sampling: tail bound {0:e} exceeds 1e-9")]
    TailTooHeavy(f64),

    #[error("conditioning event has zero probability: {0}")]
    ZeroProbability(String),

    #[error("right-side-positive condition violated: {0}")]
    RspViolation(String),

    #[error("infinite Fisher information: {0}")]
    InfiniteInformation(String),

    #[error("window mass {0} is below the required 1 - 1e-9")]
    WindowMass(f64),

    #[error("zero mass at the origin; P(X=0) must be positive (it may have underflowed in the window)")]
    ZeroMassAtOrigin,

    #[error("pseudo compound Poisson parameters have no sampling representation: {0}")]
    PseudoParameters(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable name, used in CLI error output.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Overflow(_) => "overflow",
            Error::Divergence(_) => "divergence",
            Error::Existence(_) => "existence",
            Error::TailTooHeavy(_) => "tail-too-heavy",
            Error::ZeroProbability(_) => "zero-probability",
            Error::RspViolation(_) => "rsp-violation",
            Error::InfiniteInformation(_) => "infinite-information",
            Error::WindowMass(_) => "window-mass",
            Error::ZeroMassAtOrigin => "zero-mass-at-origin",
            Error::PseudoParameters(_) => "pseudo-parameters",
            Error::Precondition(_) => "precondition",
            Error::Parse(_) => "parse",
        }
    }

    /// Errors caused by bad user input rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Parse(_) | Error::Precondition(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
