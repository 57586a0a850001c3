use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::community::{modularity, Partition};
use crate::error::{Error, Result};
use crate::graph::SocialGraph;

/// Gains closer than this are treated as equal and resolved by community id.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LouvainConfig {
    pub seed: u64,
    pub min_modularity_gain: f64,
    pub max_passes: usize,
    /// Visit nodes in a seeded random order instead of ascending id.
    pub shuffle: bool,
}

impl Default for LouvainConfig {
    fn default() -> Self {
        LouvainConfig {
            seed: 0,
            min_modularity_gain: 1e-7,
            max_passes: 100,
            shuffle: false,
        }
    }
}

impl LouvainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_modularity_gain > 0.0 && self.min_modularity_gain.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "min_modularity_gain must be positive, got {}",
                self.min_modularity_gain
            )));
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidParameter("max_passes must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LouvainRun {
    pub partition: Partition,
    pub modularity: f64,
    /// Modularity of the singleton start followed by the value after each pass.
    pub pass_modularity: Vec<f64>,
}

pub fn louvain(graph: &SocialGraph, config: &LouvainConfig) -> Result<Partition> {
    louvain_run(graph, config).map(|run| run.partition)
}

/// Weighted multigraph of one aggregation level.
struct Level {
    /// Neighbor lists without self-loops.
    adj: Vec<Vec<(usize, f64)>>,
    /// Weighted degree, self-loops counted twice.
    degree: Vec<f64>,
    /// Internal weight folded into each node by aggregation.
    self_loop: Vec<f64>,
}

impl Level {
    fn from_graph(graph: &SocialGraph) -> Self {
        let adj = graph.adjacency();
        let degree = adj.iter().map(|n| n.iter().map(|&(_, w)| w).sum()).collect();
        let n = adj.len();
        Level {
            adj,
            degree,
            self_loop: vec![0.0; n],
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Collapses each community into one node.
    fn aggregate(&self, community: &[usize], n_communities: usize) -> Level {
        let mut self_loop = vec![0.0; n_communities];
        let mut degree = vec![0.0; n_communities];
        let mut merged: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n_communities];
        for u in 0..self.len() {
            let cu = community[u];
            self_loop[cu] += self.self_loop[u];
            degree[cu] += self.degree[u];
            for &(v, w) in &self.adj[u] {
                let cv = community[v];
                if cu == cv {
                    // each internal edge is seen from both ends
                    self_loop[cu] += w / 2.0;
                } else {
                    *merged[cu].entry(cv).or_insert(0.0) += w;
                }
            }
        }
        Level {
            adj: merged.into_iter().map(|m| m.into_iter().collect()).collect(),
            degree,
            self_loop,
        }
    }
}

/// Louvain optimisation, also reporting the modularity after every pass.
pub fn louvain_run(graph: &SocialGraph, config: &LouvainConfig) -> Result<LouvainRun> {
    config.validate()?;
    if graph.edge_count() == 0 {
        return Err(Error::EdgelessGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut level = Level::from_graph(graph);
    let two_m: f64 = level.degree.iter().sum();
    // membership of each original node in the current level's nodes
    let mut assignment: Vec<usize> = (0..graph.node_count()).collect();

    let mut pass_modularity = vec![modularity(graph, &Partition::singletons(graph))?];
    for _ in 0..config.max_passes {
        let (community, moved) = local_moves(&level, two_m, config, &mut rng);
        if !moved {
            break;
        }
        let (community, n_communities) = compact(&community);
        for a in &mut assignment {
            *a = community[*a];
        }
        level = level.aggregate(&community, n_communities);
        let partition = to_partition(graph, &assignment)?;
        pass_modularity.push(modularity(graph, &partition)?);
    }

    let partition = to_partition(graph, &assignment)?;
    let q = modularity(graph, &partition)?;
    Ok(LouvainRun {
        partition,
        modularity: q,
        pass_modularity,
    })
}

fn to_partition(graph: &SocialGraph, assignment: &[usize]) -> Result<Partition> {
    Partition::new(
        graph.kind(),
        graph.nodes().to_vec(),
        assignment.iter().map(|&a| a as u32).collect(),
    )
}

/// Renumbers community labels to 0..k in order of first appearance.
fn compact(community: &[usize]) -> (Vec<usize>, usize) {
    let mut remap = vec![usize::MAX; community.len()];
    let mut next = 0;
    let out = community
        .iter()
        .map(|&c| {
            if remap[c] == usize::MAX {
                remap[c] = next;
                next += 1;
            }
            remap[c]
        })
        .collect();
    (out, next)
}

/// Phase one: repeatedly move single nodes to the neighboring community
/// with the best modularity gain until no move gains enough.
fn local_moves(level: &Level, two_m: f64, config: &LouvainConfig, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
    let n = level.len();
    let mut community: Vec<usize> = (0..n).collect();
    let mut total: Vec<f64> = level.degree.clone();
    let mut order: Vec<usize> = (0..n).collect();
    if config.shuffle {
        order.shuffle(rng);
    }
    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut moved_any = false;

    loop {
        let mut moved = false;
        for &u in &order {
            let k_u = level.degree[u];
            let own = community[u];
            for &(v, w) in &level.adj[u] {
                let c = community[v];
                if link[c] == 0.0 {
                    touched.push(c);
                }
                link[c] += w;
            }
            total[own] -= k_u;
            // ΔQ of inserting the isolated node u into community c
            let gain = |c: usize, link: &[f64]| 2.0 * (link[c] - total[c] * k_u / two_m) / two_m;
            let stay = gain(own, &link);
            let mut best = own;
            let mut best_gain = stay;
            for &c in &touched {
                if c == own {
                    continue;
                }
                let g = gain(c, &link);
                if g > best_gain + TIE_TOLERANCE || ((g - best_gain).abs() <= TIE_TOLERANCE && c < best && best != own) {
                    best = c;
                    best_gain = g;
                }
            }
            if best != own && best_gain - stay < config.min_modularity_gain {
                best = own;
            }
            total[best] += k_u;
            if best != own {
                community[u] = best;
                moved = true;
            }
            for &c in &touched {
                link[c] = 0.0;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    (community, moved_any)
}
