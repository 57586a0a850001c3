use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{RelationKind, SocialGraph};
use crate::model::DeviceId;

/// Non-overlapping assignment of every graph node to one community.
///
/// Community ids are contiguous from 0 and numbered in order of first
/// appearance along the (sorted) node list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    relation: RelationKind,
    nodes: Vec<DeviceId>,
    labels: Vec<u32>,
}

impl Partition {
    /// Accepts arbitrary labels and renumbers them canonically.
    pub fn new(relation: RelationKind, nodes: Vec<DeviceId>, labels: Vec<u32>) -> Result<Self> {
        if nodes.len() != labels.len() {
            return Err(Error::NodeSetMismatch(format!(
                "{} nodes but {} labels",
                nodes.len(),
                labels.len()
            )));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::NodeSetMismatch("partition nodes must be sorted and unique".into()));
        }
        let mut partition = Partition { relation, nodes, labels };
        partition.canonicalize();
        Ok(partition)
    }

    pub fn from_groups(relation: RelationKind, groups: &[Vec<DeviceId>]) -> Result<Self> {
        let mut pairs: Vec<(DeviceId, u32)> = groups
            .iter()
            .enumerate()
            .flat_map(|(c, g)| g.iter().map(move |&d| (d, c as u32)))
            .collect();
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::NodeSetMismatch("a node appears in two groups".into()));
        }
        let (nodes, labels) = pairs.into_iter().unzip();
        Partition::new(relation, nodes, labels)
    }

    pub fn singletons(graph: &SocialGraph) -> Self {
        let n = graph.node_count() as u32;
        Partition {
            relation: graph.kind(),
            nodes: graph.nodes().to_vec(),
            labels: (0..n).collect(),
        }
    }

    pub fn single_block(graph: &SocialGraph) -> Self {
        Partition {
            relation: graph.kind(),
            nodes: graph.nodes().to_vec(),
            labels: vec![0; graph.node_count()],
        }
    }

    fn canonicalize(&mut self) {
        let mut remap = std::collections::HashMap::new();
        for label in &mut self.labels {
            let next = remap.len() as u32;
            *label = *remap.entry(*label).or_insert(next);
        }
    }

    pub fn relation(&self) -> RelationKind {
        self.relation
    }

    pub fn nodes(&self) -> &[DeviceId] {
        &self.nodes
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn n_communities(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m as usize + 1)
    }

    pub fn community_of(&self, id: DeviceId) -> Option<u32> {
        self.nodes.binary_search(&id).ok().map(|i| self.labels[i])
    }

    pub fn communities(&self) -> Vec<Vec<DeviceId>> {
        let mut groups = vec![Vec::new(); self.n_communities()];
        for (&node, &label) in self.nodes.iter().zip(&self.labels) {
            groups[label as usize].push(node);
        }
        groups
    }

    pub fn members(&self, community: u32) -> Vec<DeviceId> {
        self.nodes
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == community)
            .map(|(&n, _)| n)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_communities()];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// True when the partition is defined on exactly the graph's nodes.
    pub fn covers(&self, graph: &SocialGraph) -> bool {
        self.nodes == graph.nodes()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCommunity {
    pub members: Vec<DeviceId>,
    /// Corrected significance score the community passed.
    pub significance: f64,
}

/// Overlapping communities; nodes may belong to several or to none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub relation: RelationKind,
    pub threshold: f64,
    pub communities: Vec<CoverCommunity>,
    pub homeless: Vec<DeviceId>,
}

impl Cover {
    pub fn empty(relation: RelationKind, threshold: f64, nodes: &[DeviceId]) -> Self {
        Cover {
            relation,
            threshold,
            communities: Vec::new(),
            homeless: nodes.to_vec(),
        }
    }

    /// Every node that belongs to at least one community.
    pub fn covered(&self) -> BTreeSet<DeviceId> {
        self.communities.iter().flat_map(|c| c.members.iter().copied()).collect()
    }

    /// Indices of the communities containing `id`.
    pub fn memberships(&self, id: DeviceId) -> Vec<usize> {
        self.communities
            .iter()
            .enumerate()
            .filter(|(_, c)| c.members.binary_search(&id).is_ok())
            .map(|(i, _)| i)
            .collect()
    }

    /// Nodes that sit in more than one community.
    pub fn overlaps(&self) -> BTreeSet<DeviceId> {
        let mut seen = BTreeSet::new();
        let mut multi = BTreeSet::new();
        for c in &self.communities {
            for &m in &c.members {
                if !seen.insert(m) {
                    multi.insert(m);
                }
            }
        }
        multi
    }
}
