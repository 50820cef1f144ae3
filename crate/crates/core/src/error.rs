use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("points are antipodal; the connecting great-circle arc is undefined")]
    AntipodalPair,

    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),

    #[error("screen point ({x:.3}, {y:.3}) lies outside the projected domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("graph is disconnected")]
    DisconnectedGraph,

    #[error("node {to} is unreachable from node {from}")]
    Unreachable { from: usize, to: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("specification infeasible: {0}")]
    SpecInfeasible(String),

    #[error("inconsistent scene: {0}")]
    InconsistentScene(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that come from the problem domain rather than from I/O
    /// or malformed input files.
    pub fn is_domain(&self) -> bool {
        !matches!(self, Error::Json(_) | Error::Io(_) | Error::InvalidArgument(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
