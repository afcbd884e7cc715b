use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("set is empty")]
    EmptySet,
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("radius {radius} is below grid resolution (must exceed {min})")]
    BelowResolution { radius: f64, min: f64 },
    #[error("time step {dt} violates the CFL bound: dt * cmax = {reach} exceeds spacing {spacing}")]
    Cfl { dt: f64, reach: f64, spacing: f64 },
    #[error("lower bound {lo} exceeds upper bound {hi}")]
    InvertedBounds { lo: f64, hi: f64 },
    #[error("solution reached the grid boundary at t = {time}")]
    SupportOverflow { time: f64 },
    #[error("set is not a tubular neighbourhood at radius {radius}")]
    NotTubular { radius: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("malformed raster: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
