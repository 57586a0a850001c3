use std::path::PathBuf;

use thiserror::Error;

use crate::model::{DeviceId, OwnerId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}, line {line}: {message}")]
    Parse {
        context: String,
        line: u64,
        message: String,
    },

    #[error("{context}: missing field `{field}`")]
    MissingField { context: String, field: String },

    #[error("unsupported schema_version {found} in {context} (expected {expected})")]
    SchemaVersion {
        context: String,
        found: u32,
        expected: u32,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("device table rejected: {0}")]
    InvalidTable(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph has no edges")]
    EdgelessGraph,

    #[error("distance {distance} exceeds d_max {d_max}")]
    DistanceExceedsMax { distance: f64, d_max: f64 },

    #[error("device {device} has owner {owner} which is not in the owner graph")]
    UnknownOwner { device: DeviceId, owner: OwnerId },

    #[error("community is not a subset of the graph nodes (device {0} missing)")]
    NotASubset(DeviceId),

    #[error("partition and device table disagree: {0}")]
    NodeSetMismatch(String),

    #[error("index has no CLOR communities")]
    NoCommunities,

    #[error("requester {0} is not a known owner")]
    UnknownRequester(OwnerId),

    #[error("request text is empty")]
    EmptyText,

    #[error("unknown application (best score {best:.3} below minimum)")]
    UnknownApplication {
        best: f64,
        scores: Vec<(String, f64)>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
