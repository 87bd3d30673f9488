use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("geometry does not fit the grid box: {0}")]
    GeometryOutOfBounds(String),
    #[error("interior of the domain is not 4-connected ({components} components)")]
    DisconnectedDomain { components: usize },
    #[error("field and region live on different grids")]
    GridMismatch,
    #[error("coincident points")]
    CoincidentPoints,
    #[error("point ({x}, {y}) lies outside the closed domain")]
    PointOutsideDomain { x: f64, y: f64 },
    #[error("no closed-form Green function for this domain kind")]
    AnalyticUnavailable,
    #[error("source must lie at least 2h inside the domain")]
    SourceTooCloseToBoundary,
    #[error("solver did not converge after {sweeps} sweeps (residual {residual:e})")]
    NonConvergence { sweeps: usize, residual: f64 },
    #[error("measure support is closer than 2h to the domain boundary")]
    SupportTouchesBoundary,
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("solution reaches the {side} margin strip of the grid box")]
    BoxTooSmall { side: &'static str },
    #[error("star center is not a member of the region")]
    CenterOutsideRegion,
    #[error("probe ({x}, {y}) is inside or within 3h of the ball")]
    ProbeInsideBall { x: f64, y: f64 },
    #[error("probe ({x}, {y}) is within 3h of the domain boundary or the ball center")]
    ProbeTooCloseToBoundary { x: f64, y: f64 },
    #[error("balls are not comparable: {0}")]
    IncomparableInputs(String),
    #[error("domain is not starshaped with respect to the center ({violations} violating nodes)")]
    DomainNotStarshaped { violations: usize },
    #[error("operation requires a {expected} domain")]
    WrongDomainKind { expected: &'static str },
    #[error("interface between the two phases is empty")]
    EmptyInterface,
    #[error("grid margin around the positive phase is too small: {0}")]
    MarginTooSmall(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
