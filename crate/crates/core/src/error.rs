use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("degenerate triangle {index} (zero area)")]
    DegenerateTriangle { index: usize },

    #[error("degenerate tetrahedron {index} (zero volume)")]
    DegenerateTet { index: usize },

    #[error("mesh is not watertight: edge ({a}, {b}) has {count} incident faces")]
    NonManifoldEdge { a: u32, b: u32, count: usize },

    #[error("inconsistent orientation at edge ({a}, {b})")]
    Orientation { a: u32, b: u32 },

    #[error("index {index} out of range ({len} vertices) in element {element}")]
    IndexOutOfRange {
        element: usize,
        index: usize,
        len: usize,
    },

    #[error("degenerate point configuration for rigid alignment")]
    DegenerateAlignment,

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}
