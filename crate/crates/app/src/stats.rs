use std::path::Path;

use serde::{Deserialize, Serialize};
use siot_core::community::{
    avg_clustering_coefficient, community_histogram, degree_concentration, degree_distribution, modularity,
    Communities, Cover, Histogram, Partition,
};
use siot_core::graph::{OwnerGraph, RelationKind, SocialGraph};
use siot_core::ingest::gnm_random_graph;

use crate::archive::IndexArchive;

/// Fraction of highest-degree nodes used for the hub-share statistic.
pub const TOP_DEGREE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationStats {
    pub relation: RelationKind,
    pub nodes: usize,
    pub edges: usize,
    pub communities: usize,
    /// Louvain partitions only.
    pub modularity: Option<f64>,
    pub histogram: Histogram,
    pub degree_distribution: Histogram,
    pub avg_clustering: f64,
    /// Share of all degree held by the top 5% of nodes.
    pub top_degree_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwnerNetworkStats {
    pub owners: usize,
    pub edges: usize,
    pub avg_clustering: f64,
    /// Same node and edge counts, uniformly random edges.
    pub random_baseline_clustering: f64,
}

impl OwnerNetworkStats {
    pub fn compute(owners: &OwnerGraph, seed: u64) -> siot_core::Result<Self> {
        let graph = owners.as_social_graph();
        let baseline = gnm_random_graph(graph.node_count(), graph.edge_count(), seed)?.as_social_graph();
        Ok(OwnerNetworkStats {
            owners: graph.node_count(),
            edges: graph.edge_count(),
            avg_clustering: avg_clustering_coefficient(&graph),
            random_baseline_clustering: avg_clustering_coefficient(&baseline),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub clor: RelationStats,
    pub sfor: RelationStats,
    pub sor: RelationStats,
    pub sfor_homeless: usize,
    pub sfor_overlaps: usize,
    pub owner_network: OwnerNetworkStats,
    /// Trace rows naming devices outside the catalogue (or outside the area).
    pub dropped_contacts: usize,
}

impl BuildStats {
    pub fn relation(&self, kind: RelationKind) -> &RelationStats {
        match kind {
            RelationKind::Clor => &self.clor,
            RelationKind::Sfor => &self.sfor,
            RelationKind::Sor => &self.sor,
        }
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in [&self.clor, &self.sfor, &self.sor] {
            let q = r.modularity.map_or_else(|| "-".to_string(), |q| format!("{q:.4}"));
            out.push_str(&format!(
                "{:<4} nodes {:>6}  edges {:>8}  communities {:>5}  Q {}\n",
                r.relation.as_str(),
                r.nodes,
                r.edges,
                r.communities,
                q
            ));
        }
        out.push_str(&format!(
            "SFOR overlapping nodes {}, homeless {}\n",
            self.sfor_overlaps, self.sfor_homeless
        ));
        let o = &self.owner_network;
        out.push_str(&format!(
            "owner network {} owners, {} edges, clustering {:.3} (random {:.3})\n",
            o.owners, o.edges, o.avg_clustering, o.random_baseline_clustering
        ));
        if self.dropped_contacts > 0 {
            out.push_str(&format!("dropped {} contacts outside the catalogue\n", self.dropped_contacts));
        }
        out
    }
}

/// Either detector's output.
pub trait Detected: Communities {
    fn count(&self) -> usize;
    fn modularity_on(&self, graph: &SocialGraph) -> siot_core::Result<Option<f64>>;
}

impl Detected for Partition {
    fn count(&self) -> usize {
        self.n_communities()
    }

    fn modularity_on(&self, graph: &SocialGraph) -> siot_core::Result<Option<f64>> {
        if graph.edge_count() == 0 {
            return Ok(None);
        }
        modularity(graph, self).map(Some)
    }
}

impl Detected for Cover {
    fn count(&self) -> usize {
        self.communities.len()
    }

    fn modularity_on(&self, _: &SocialGraph) -> siot_core::Result<Option<f64>> {
        Ok(None)
    }
}

pub fn relation_stats(graph: &SocialGraph, found: &impl Detected, others_threshold: usize) -> siot_core::Result<RelationStats> {
    Ok(RelationStats {
        relation: graph.kind(),
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        communities: found.count(),
        modularity: found.modularity_on(graph)?,
        histogram: community_histogram(found, others_threshold),
        degree_distribution: degree_distribution(graph),
        avg_clustering: avg_clustering_coefficient(graph),
        top_degree_share: degree_concentration(graph, TOP_DEGREE_FRACTION),
    })
}

pub fn histogram_file(kind: RelationKind) -> String {
    format!("{}_communities.csv", kind.as_str().to_ascii_lowercase())
}

pub fn degree_file(kind: RelationKind) -> String {
    format!("{}_degrees.csv", kind.as_str().to_ascii_lowercase())
}

/// Writes per-relation histograms, degree distributions and a summary table.
pub fn write_stats(archive: &IndexArchive, dir: &Path) -> std::io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let stats = &archive.stats;
    for kind in RelationKind::ALL {
        let r = stats.relation(kind);
        let name = histogram_file(kind);
        std::fs::write(dir.join(&name), r.histogram.to_delimited("community"))?;
        written.push(name);
        let name = degree_file(kind);
        std::fs::write(dir.join(&name), r.degree_distribution.to_delimited("degree"))?;
        written.push(name);
    }

    let mut summary = String::from(
        "# schema_version: 1\nrelation,nodes,edges,communities,modularity,avg_clustering,top_degree_share\n",
    );
    for kind in RelationKind::ALL {
        let r = stats.relation(kind);
        summary.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            kind.as_str(),
            r.nodes,
            r.edges,
            r.communities,
            r.modularity.map_or_else(String::new, |q| q.to_string()),
            r.avg_clustering,
            r.top_degree_share
        ));
    }
    let o = &stats.owner_network;
    summary.push_str(&format!(
        "OWNERS,{},{},,,{},\nOWNERS_RANDOM,{},{},,,{},\n",
        o.owners, o.edges, o.avg_clustering, o.owners, o.edges, o.random_baseline_clustering
    ));
    std::fs::write(dir.join("summary.csv"), summary)?;
    written.push("summary.csv".into());
    Ok(written)
}
