use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric degenerate at ({x:.6}, {y:.6}, {z:.6})")]
    MetricDegenerate { x: f64, y: f64, z: f64 },

    #[error("degenerate chart: {0}")]
    DegenerateChart(String),

    #[error("graph breakdown: chart gradient {gradient:.3e} exceeds {limit}")]
    GraphBreakdown { gradient: f64, limit: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular jacobian at pivot {pivot}")]
    SingularJacobian { pivot: usize },

    #[error("continuation stalled at t = {last_t}")]
    ContinuationStalled { last_t: f64 },

    #[error("target not reached (residual {residual:.3e})")]
    TargetNotReached { residual: f64 },

    #[error("points are collinear")]
    CollinearPoints,

    #[error("no descent direction")]
    NoDescent,

    #[error("immersion degenerate at node {node}")]
    ImmersionDegenerate { node: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("counterexample not certified at these parameters: {quantity}")]
    NotCertified { quantity: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
