//! Social-IoT service discovery.
//!
//! Builds co-location (CLOR), ownership/friendship (SFOR) and social-object
//! (SOR) graphs over a device catalog, partitions them into communities, and
//! answers natural-language crowdsourcing requests with the devices that are
//! close to the target, trusted by the requester and able to serve the
//! requested application.

pub mod community;
pub mod config;
pub mod discovery;
pub mod error;
pub mod graph;
pub mod ingest;
pub(crate) mod io;
pub mod model;
pub mod nlp;
pub mod relations;

pub use error::{Error, Result};
