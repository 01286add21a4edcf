use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid resolution {0}: need at least 2 points")]
    InvalidResolution(usize),

    #[error("cone angle {0} outside (0, 2π)")]
    ConeAngle(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed mesh file at line {line}: {msg}")]
    MalformedMesh { line: usize, msg: String },

    #[error("metric validation failed: {0}")]
    InvalidMetric(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("empty domain")]
    EmptyDomain,

    #[error("measures live on different spaces ({0} vs {1} points)")]
    SpaceMismatch(usize, usize),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("infeasible potentials: constraint violated by {0:e}")]
    InfeasiblePotentials(f64),

    #[error("potential is not optimal: duality gap {0:e}")]
    NotOptimal(f64),

    #[error("interpolation parameter s = {0} outside [0, 1]")]
    SOutOfRange(f64),

    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("time {t} outside admissible range [{min}, {max}]")]
    TimeOutOfRange { t: f64, min: f64, max: f64 },

    #[error("heat kernel built at time {kernel} but soft transform needs t/2 = {needed}")]
    TimeMismatch { kernel: f64, needed: f64 },

    #[error("neighbor graph is disconnected: {0}")]
    Disconnected(String),

    #[error("empty second-order law")]
    EmptyLaw,

    #[error("measure is not a barycenter: variance {got} exceeds optimum {optimum} by more than {tol:e}")]
    NotBarycenter { got: f64, optimum: f64, tol: f64 },

    #[error("balance did not converge in {iterations} iterations (last residual {residual:e}, worst gap {gap:e})")]
    BalanceNonConvergence {
        iterations: usize,
        residual: f64,
        gap: f64,
        trace: Vec<(f64, f64)>,
    },

    #[error("t = {t} outside [0, {max}]")]
    ModulusDomain { t: f64, max: f64 },

    #[error("normalization missing: E_rho(phi) = {0:e}")]
    Normalization(f64),

    #[error("gradient stencil undefined on space '{0}'")]
    NoStencil(String),

    #[error("degenerate perturbation: zero distance at scale {0}")]
    DegeneratePerturbation(f64),

    #[error("net cardinality {cardinality} exceeds cap {cap}")]
    NetCap { cardinality: f64, cap: usize },

    #[error("runtime cap of {0:?} exceeded")]
    RuntimeCap(std::time::Duration),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
