use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: u64, msg: String },

    #[error("duplicate paper id {id:?} ({path}:{line})")]
    DuplicatePaperId { id: String, path: PathBuf, line: u64 },

    #[error(
        "malformed-line ratio {ratio:.4} exceeds limit {limit} in {path}: \
         {count} of {total} lines bad, first offenders at lines {lines:?}"
    )]
    MalformedRatio {
        path: PathBuf,
        ratio: f64,
        limit: f64,
        count: u64,
        total: u64,
        lines: Vec<u64>,
    },

    #[error("invalid ontology: {0}")]
    Ontology(String),

    #[error("unknown field id {0}")]
    UnknownField(u64),

    #[error("invalid counts |X|={sx} |Y|={sy} |X\u{2229}Y|={sxy} |G|={g}: {reason}")]
    InvalidCounts {
        sx: u64,
        sy: u64,
        sxy: u64,
        g: u64,
        reason: &'static str,
    },

    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),

    #[error("infeasible generator parameters: {0}")]
    InfeasibleParams(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
