//! Build pipeline, persistence, CLI and HTTP front end for the discovery
//! engine in `siot-core`.

pub mod archive;
pub mod cli;
pub mod generate;
pub mod pipeline;
pub mod query;
pub mod server;
pub mod stats;

pub use archive::{ArchiveError, IndexArchive, ARCHIVE_SCHEMA_VERSION};
pub use pipeline::{build, BuildParams, OwnerSource, SorSource};
pub use query::{answer, QueryError, QueryRequest};
