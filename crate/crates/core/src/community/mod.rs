//! Community detection over relation graphs: modularity, Louvain
//! partitions, significance-filtered overlapping covers and the graph
//! statistics reported alongside them.

mod louvain;
mod metrics;
mod modularity;
mod overlap;
mod partition;

pub use louvain::{louvain, louvain_run, LouvainConfig, LouvainRun};
pub use metrics::{
    avg_clustering_coefficient, community_histogram, degree_concentration, degree_distribution, Communities,
    Histogram, OTHERS_LABEL,
};
pub use modularity::modularity;
pub use overlap::{
    cleanup_community, community_significance, detect_overlapping, hypergeometric_tail, OverlapConfig,
};
pub use partition::{Cover, CoverCommunity, Partition};
