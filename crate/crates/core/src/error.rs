use thiserror::Error;

/// Errors shared by all toolkit operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A system description is unusable (non-positive gravity or depth,
    /// growth exponent not above 1, empty dispersion table, ...).
    #[error("invalid system configuration: {0}")]
    Config(String),

    /// Inputs that must agree in parity or length do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Sobolev index outside the range on which the transform is an
    /// isomorphism for the given growth exponent.
    #[error(
        "sobolev index r = {r} outside admissible range ({lo}, {hi}) for growth exponent alpha = {alpha}"
    )]
    SobolevRange {
        r: f64,
        lo: f64,
        hi: f64,
        alpha: f64,
    },

    /// A stated hypothesis of a diagnostic does not hold for the inputs.
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),

    /// Not enough modes or samples to evaluate a diagnostic.
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    /// The control profile violates the lower/upper bound condition.
    #[error("control profile rejected: {0}")]
    ControlProfile(String),

    /// Gain synthesis failed, usually because the moment system is
    /// numerically singular.
    #[error("gain synthesis failed: {0}")]
    Synthesis(String),

    /// A linear solve or factorization hit a singular matrix.
    #[error("singular system: {0}")]
    Singular(String),

    /// Generic numerical failure (eigensolver breakdown, invariant check
    /// exceeded tolerance, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The requested refinement only supports the unit control profile.
    #[error("unsupported normalization: {0}")]
    UnsupportedNormalization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
