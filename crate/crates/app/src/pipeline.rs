use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use siot_core::community::{
    detect_overlapping, louvain, Cover, LouvainConfig, OverlapConfig, Partition,
};
use siot_core::config::DiscoveryConfig;
use siot_core::discovery::build_index;
use siot_core::graph::{OwnerGraph, RelationKind, SocialGraph};
use siot_core::ingest::{generate_watts_strogatz, restrict_to_area, BoundingBox};
use siot_core::model::{ContactEvent, DeviceId, DeviceRecord};
use siot_core::relations::{build_clor, build_sfor, build_sor, SorRule, DEFAULT_CLOR_THRESHOLD, DEFAULT_MAX_HOPS};

use crate::archive::{sha256_hex, IndexArchive, ARCHIVE_SCHEMA_VERSION};
use crate::stats::{relation_stats, BuildStats, OwnerNetworkStats};

pub enum OwnerSource {
    Graph(OwnerGraph),
    /// Owners `0..n` linked by a seeded Watts–Strogatz graph.
    WattsStrogatz { n: usize, k: usize, p: f64 },
}

pub enum SorSource {
    Trace(Vec<ContactEvent>),
    Edges(SocialGraph),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildParams {
    pub seed: u64,
    pub clor_threshold: f64,
    pub max_hops: u32,
    pub sor_rule: SorRule,
    pub louvain: LouvainConfig,
    pub overlap: OverlapConfig,
    /// Communities smaller than this are pooled in histograms.
    pub others_threshold: usize,
    pub area: Option<BoundingBox>,
    pub watts_strogatz: Option<(usize, usize, f64)>,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams {
            seed: 0,
            clor_threshold: DEFAULT_CLOR_THRESHOLD,
            max_hops: DEFAULT_MAX_HOPS,
            sor_rule: SorRule::default(),
            louvain: LouvainConfig::default(),
            overlap: OverlapConfig::default(),
            others_threshold: 4,
            area: None,
            watts_strogatz: None,
        }
    }
}

impl BuildParams {
    /// Propagates the master seed into every seeded stage.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.louvain.seed = seed;
        self.overlap.seed = seed;
        self
    }
}

fn partition_or_singletons(graph: &SocialGraph, config: &LouvainConfig) -> siot_core::Result<Partition> {
    if graph.edge_count() == 0 {
        Ok(Partition::singletons(graph))
    } else {
        louvain(graph, config)
    }
}

/// Builds the three relation graphs, detects communities and assembles the archive.
pub fn build(
    devices: Vec<DeviceRecord>,
    owners: OwnerSource,
    sor: SorSource,
    config: DiscoveryConfig,
    mut params: BuildParams,
    digests: BTreeMap<String, String>,
) -> anyhow::Result<IndexArchive> {
    config.validate()?;
    params.louvain.validate()?;
    params.overlap.validate()?;
    let devices = match &params.area {
        Some(area) => restrict_to_area(&devices, area),
        None => devices,
    };
    let ids: BTreeSet<DeviceId> = devices.iter().map(|d| d.device_id).collect();

    let owners = match owners {
        OwnerSource::Graph(g) => g,
        OwnerSource::WattsStrogatz { n, k, p } => {
            params.watts_strogatz = Some((n, k, p));
            generate_watts_strogatz(n, k, p, params.seed)?
        }
    };

    let mut dropped_contacts = 0;
    let sor_graph = match sor {
        SorSource::Trace(trace) => {
            let total = trace.len();
            let kept: Vec<ContactEvent> = trace
                .into_iter()
                .filter(|c| ids.contains(&c.device_a) && ids.contains(&c.device_b))
                .collect();
            dropped_contacts = total - kept.len();
            build_sor(&kept, &params.sor_rule)?
        }
        SorSource::Edges(graph) => {
            anyhow::ensure!(
                graph.kind() == RelationKind::Sor,
                "SOR edge list is labelled {}",
                graph.kind()
            );
            graph.induced(&ids)
        }
    };
    let clor_graph = build_clor(&devices, params.clor_threshold)?;
    let sfor_graph = build_sfor(&devices, &owners, params.max_hops)?;

    // the three detections are independent
    let (clor, sfor, sor) = std::thread::scope(|s| {
        let clor = s.spawn(|| partition_or_singletons(&clor_graph, &params.louvain));
        let sfor = s.spawn(|| {
            if sfor_graph.edge_count() == 0 {
                Ok(Cover::empty(RelationKind::Sfor, params.overlap.significance_threshold, sfor_graph.nodes()))
            } else {
                detect_overlapping(&sfor_graph, &params.overlap)
            }
        });
        let sor = s.spawn(|| partition_or_singletons(&sor_graph, &params.louvain));
        (
            clor.join().expect("CLOR detection panicked"),
            sfor.join().expect("SFOR detection panicked"),
            sor.join().expect("SOR detection panicked"),
        )
    });
    let (clor, sfor, sor) = (clor?, sfor?, sor?);

    let stats = BuildStats {
        clor: relation_stats(&clor_graph, &clor, params.others_threshold)?,
        sfor: relation_stats(&sfor_graph, &sfor, params.others_threshold)?,
        sor: relation_stats(&sor_graph, &sor, params.others_threshold)?,
        sfor_homeless: sfor.homeless.len(),
        sfor_overlaps: sfor.overlaps().len(),
        owner_network: OwnerNetworkStats::compute(&owners, params.seed)?,
        dropped_contacts,
    };

    let mut digests = digests;
    let config_json = serde_json::to_string(&config)?;
    digests.insert("config".into(), sha256_hex(config_json.as_bytes()));

    let index = build_index(&devices, clor, sfor_graph, sfor, sor, config.capabilities.clone())?;
    Ok(IndexArchive {
        schema_version: ARCHIVE_SCHEMA_VERSION,
        created_at: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        params,
        digests,
        config,
        index,
        stats,
    })
}
