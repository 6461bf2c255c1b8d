use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("density {0} outside [0, 1]")]
    DensityOutOfRange(f64),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),

    #[error("time step {dt} exceeds the CFL limit {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("position {x} outside domain [{min}, {max}]")]
    OutOfDomain { x: f64, min: f64, max: f64 },

    #[error("probe ordering violated: x[{left}] = {x_left} >= x[{right}] = {x_right}")]
    OrderingViolation {
        left: usize,
        right: usize,
        x_left: f64,
        x_right: f64,
    },

    #[error("invalid probe fleet: {0}")]
    InvalidFleet(String),

    #[error("segment index {index} outside 1..={max}")]
    SegmentIndex { index: usize, max: usize },

    #[error("quadrature did not converge at x = {x}, t = {t} (estimated error {estimate})")]
    QuadratureNonConvergence { x: f64, t: f64, estimate: f64 },

    #[error("inconsistent segment layout: {0}")]
    Stitch(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("invalid certificate query: {0}")]
    InvalidQuery(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
