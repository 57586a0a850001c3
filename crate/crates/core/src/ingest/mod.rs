//! Catalog and trace loaders plus seeded generators for synthetic cities.

mod catalog;
mod generators;
mod synthetic;
mod trace;

pub use catalog::{load_devices, parse_devices, restrict_to_area, write_devices, BoundingBox, CatalogFormat};
pub use generators::{generate_watts_strogatz, gnm_random_graph};
pub use synthetic::{
    generate_synthetic_city, DecoyKind, SpatialCluster, SyntheticCity, SyntheticCityParams,
};
pub use trace::{load_contact_trace, parse_contact_trace, render_contact_trace};
