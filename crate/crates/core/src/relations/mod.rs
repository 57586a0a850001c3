//! Builders for the three device relation graphs.

mod clor;
mod sfor;
mod sor;

pub use clor::{build_clor, clor_weight, DEFAULT_CLOR_THRESHOLD, UNIT_SQUARE_DIAGONAL};
pub use sfor::{build_sfor, sfor_weight, DEFAULT_MAX_HOPS};
pub use sor::{build_sor, SorRule};
