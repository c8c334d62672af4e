use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated an operation's preconditions.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A construction invariant failed at runtime. Seeing this means the
    /// region function does not keep same-region differences short.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("cover construction exhausted its sample budget; achieved radius {achieved:.6} rad, requested {requested:.6} rad")]
    CoverBudget { achieved: f64, requested: f64 },

    #[error("oracle refuses {n} terms (cap is {cap}); 2^(n-1) sign patterns would be enumerated")]
    OracleCap { n: usize, cap: usize },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
