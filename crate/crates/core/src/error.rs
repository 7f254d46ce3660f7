use thiserror::Error;

/// Errors raised by the numerical kernel and the physics layers built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix dimension {0} exceeds the supported maximum of 4")]
    DimensionTooLarge(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("parameters sit at an exceptional point (|eta| = {eta:e}); biorthogonal states diverge")]
    AtExceptionalPoint { eta: f64 },

    #[error("parameters lie in the PT-broken phase (eta^2 = {eta_squared}); the perturbative theory needs eta > 0")]
    BrokenPhase { eta_squared: f64 },

    #[error("perturbative theory requires identical resonant qubits")]
    NotIdenticalResonant,

    #[error("EP clustering is threshold sensitive: orders {orders:?} across the probed thresholds")]
    AmbiguousCluster { orders: Vec<usize> },

    #[error("branch shows no variation above {tolerance:e}")]
    InsufficientVariation { tolerance: f64 },

    #[error("amplitude moduli spread {spread:e} exceeds tolerance {tolerance:e}")]
    AmplitudesNotEqual { spread: f64, tolerance: f64 },

    #[error("state vector is zero")]
    ZeroState,

    #[error("not a density matrix: {0}")]
    NotADensityMatrix(String),

    #[error("step-doubling check failed: concurrence changed by {change:e} when halving dt = {dt}")]
    StepSizeTooLarge { dt: f64, change: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
