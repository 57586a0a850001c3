use serde::{Deserialize, Serialize};
use siot_core::discovery::{discover_with, DiscoverOptions, DiscoveryResult};
use siot_core::model::{OwnerId, Position, RequestMetadata, TrustLevel};
use siot_core::nlp::parse_request;

use crate::archive::IndexArchive;

/// Body of `POST /discover`, and the arguments of `siot query`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    pub text: String,
    pub requester_id: OwnerId,
    pub position: Position,
    pub trust: TrustLevel,
    #[serde(default)]
    pub sor_filter: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum QueryError {
    #[error("bad request: {message}")]
    BadRequest { message: String },
    #[error("unknown application (best score {best})")]
    UnknownApplication { best: f64, scores: Vec<(String, f64)> },
    #[error("unknown requester {requester_id}")]
    UnknownRequester { requester_id: OwnerId },
    #[error("{message}")]
    Internal { message: String },
}

impl From<siot_core::Error> for QueryError {
    fn from(e: siot_core::Error) -> Self {
        use siot_core::Error as E;
        match e {
            E::UnknownApplication { best, scores } => QueryError::UnknownApplication { best, scores },
            E::UnknownRequester(requester_id) => QueryError::UnknownRequester { requester_id },
            E::EmptyText | E::InvalidParameter(_) => QueryError::BadRequest { message: e.to_string() },
            other => QueryError::Internal {
                message: other.to_string(),
            },
        }
    }
}

/// Parses the request text and runs discovery against the archive's index.
pub fn answer(archive: &IndexArchive, request: &QueryRequest) -> Result<DiscoveryResult, QueryError> {
    let metadata = RequestMetadata::new(request.requester_id, request.position, request.trust)?;
    let parsed = parse_request(&request.text, &metadata, &archive.config.keywords)?;
    let options = DiscoverOptions {
        sor_filter: request.sor_filter,
    };
    Ok(discover_with(&archive.index, &parsed, &metadata, options)?)
}
