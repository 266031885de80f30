use thiserror::Error;

/// Errors produced by the planning library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {message}")]
    Json { offset: usize, message: String },

    #[error("unsupported network file version {0} (expected 1)")]
    UnsupportedVersion(u32),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid crawl record: {0}")]
    InvalidRecord(String),

    #[error("seed not found: {0}")]
    SeedNotFound(String),

    #[error("unknown node id: {0}")]
    UnknownNode(String),

    #[error("unknown {dimension} bucket label: {label}")]
    UnknownBucket { dimension: &'static str, label: String },

    #[error("empty network")]
    EmptyNetwork,

    #[error("node {0} has no reach information")]
    MissingReach(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible: requested m={requested} exceeds {feasible} feasible sites")]
    Infeasible { requested: usize, feasible: usize },

    #[error("enumeration too large: {0}")]
    GuardExceeded(String),

    #[error("overlap cache does not match network (cache {cached}, network {actual})")]
    CacheMismatch { cached: String, actual: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Builds a [`Error::Json`] carrying the byte offset of a serde_json failure.
    pub(crate) fn from_json(err: serde_json::Error, input: &[u8]) -> Self {
        Error::Json {
            offset: byte_offset(input, err.line(), err.column()),
            message: err.to_string(),
        }
    }
}

// serde_json reports 1-based line and column; column counts bytes.
fn byte_offset(input: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut current = 1;
    let mut start = 0;
    for (i, b) in input.iter().enumerate() {
        if current == line {
            break;
        }
        if *b == b'\n' {
            current += 1;
            start = i + 1;
        }
    }
    (start + column.saturating_sub(1)).min(input.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_counts_previous_lines() {
        let input = b"{\n  \"a\": x\n}";
        let err = serde_json::from_slice::<serde_json::Value>(input).unwrap_err();
        match Error::from_json(err, input) {
            Error::Json { offset, .. } => assert_eq!(input[offset], b'x'),
            other => panic!("unexpected {other:?}"),
        }
    }
}
