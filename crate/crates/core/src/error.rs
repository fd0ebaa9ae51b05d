use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violated an invariant of a domain type.
    #[error("invalid {what}: {reason}")]
    Invalid { what: String, reason: String },

    /// An input file row failed validation.
    #[error("{file}:{row}: {reason}")]
    Ingest {
        file: PathBuf,
        row: usize,
        reason: String,
    },

    #[error("zone {0} is not attached to the search graph")]
    DetachedOrigin(usize),

    #[error("negative travel cost {0}")]
    NegativeCost(f64),

    #[error("total origin weight is zero")]
    ZeroWeight,

    #[error("reference profile set is empty")]
    EmptyReferences,

    #[error("k = {k} exceeds the number of distinct series ({distinct})")]
    TooManyClusters { k: usize, distinct: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(what: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what: what.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn ingest(file: impl Into<PathBuf>, row: usize, reason: impl Into<String>) -> Self {
        Error::Ingest {
            file: file.into(),
            row,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
