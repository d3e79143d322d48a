use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sequence is not convex at k = {index} (laplacian {laplacian:e})")]
    NotConvex { index: usize, laplacian: f64 },

    #[error(
        "Dykstra iteration did not converge after {cycles} cycles (last change {last_change:e})"
    )]
    NonConvergence { cycles: usize, last_change: f64 },

    #[error("active-set solver exceeded {iterations} iterations")]
    SolverStalled { iterations: usize },

    #[error(
        "no grid up to length {grid_len} produced a valid Fenchel certificate \
         (min residual {min_residual:e}, max knot gap {max_knot_gap:e})"
    )]
    CertificateFailure {
        grid_len: usize,
        min_residual: f64,
        max_knot_gap: f64,
    },

    #[error("problem of length {len} exceeds the oracle limit of {max}")]
    DimensionTooLarge { len: usize, max: usize },

    #[error("no active set satisfies the KKT conditions")]
    OracleNoCandidate,

    #[error("{0} is not an interior knot")]
    NotAnInteriorKnot(usize),

    #[error("unknown pmf id `{0}`")]
    UnknownPmf(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("draw {index}: {source}")]
    Draw {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
