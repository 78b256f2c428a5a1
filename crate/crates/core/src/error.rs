use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv schema error: {0}")]
    Schema(String),

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("input file is empty")]
    EmptyFile,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("subject {subject} (group {group}, component {component}) has {found} distinct time points, need at least {needed}")]
    TooFewPoints {
        group: String,
        subject: String,
        component: usize,
        found: usize,
        needed: usize,
    },

    #[error("component index {component} out of range 1..={p}")]
    ComponentOutOfRange { component: usize, p: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("group {group} has {n} curves; at least {needed} required")]
    SampleSize { group: String, n: usize, needed: usize },

    #[error("invalid hypothesis: {0}")]
    InvalidHypothesis(String),

    #[error("pooled error matrix is singular at t = {t}")]
    Singular { t: f64 },

    #[error("degenerate cumulants (K2 = {k2}, K3 = {k3}); data effectively noiseless")]
    DegenerateCumulant { k2: f64, k3: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("problem too large for dense reference computation ({dim} > {max})")]
    TooLarge { dim: usize, max: usize },

    #[error("replication {rep}: {source}")]
    Replication {
        rep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
