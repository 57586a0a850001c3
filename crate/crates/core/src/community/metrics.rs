use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::community::{Cover, Partition};
use crate::graph::SocialGraph;

pub const OTHERS_LABEL: &str = "Others";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<(String, usize)>,
    pub others: Option<usize>,
}

impl Histogram {
    /// Bins followed by the Others bucket, if any.
    pub fn entries(&self) -> Vec<(String, usize)> {
        let mut out = self.bins.clone();
        if let Some(n) = self.others {
            out.push((OTHERS_LABEL.to_string(), n));
        }
        out
    }

    pub fn total(&self) -> usize {
        self.bins.iter().map(|(_, n)| n).sum::<usize>() + self.others.unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty() && self.others.is_none()
    }

    pub fn to_delimited(&self, label_header: &str) -> String {
        crate::io::render_delimited(
            &[],
            &[label_header, "count"],
            self.entries().into_iter().map(|(l, n)| vec![l, n.to_string()]),
        )
    }
}

/// Anything with labelled community sizes.
pub trait Communities {
    fn labelled_sizes(&self) -> Vec<(String, usize)>;
}

impl Communities for Partition {
    fn labelled_sizes(&self) -> Vec<(String, usize)> {
        self.sizes().into_iter().enumerate().map(|(i, n)| (format!("c{i}"), n)).collect()
    }
}

impl Communities for Cover {
    fn labelled_sizes(&self) -> Vec<(String, usize)> {
        self.communities
            .iter()
            .enumerate()
            .map(|(i, c)| (format!("c{i}"), c.members.len()))
            .collect()
    }
}

/// Community sizes in descending order; sizes below `others_threshold` are pooled.
pub fn community_histogram(communities: &impl Communities, others_threshold: usize) -> Histogram {
    let mut sizes = communities.labelled_sizes();
    // stable: equal sizes keep id order
    sizes.sort_by(|a, b| b.1.cmp(&a.1));
    let (bins, small): (Vec<_>, Vec<_>) = sizes.into_iter().partition(|(_, n)| *n >= others_threshold);
    let others = (!small.is_empty()).then(|| small.iter().map(|(_, n)| n).sum());
    Histogram { bins, others }
}

/// Node count per degree, ascending degree.
pub fn degree_distribution(graph: &SocialGraph) -> Histogram {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for d in graph.degrees() {
        *counts.entry(d).or_default() += 1;
    }
    Histogram {
        bins: counts.into_iter().map(|(d, n)| (d.to_string(), n)).collect(),
        others: None,
    }
}

/// Mean local clustering coefficient over all nodes, ignoring weights;
/// nodes of degree below two contribute zero.
pub fn avg_clustering_coefficient(graph: &SocialGraph) -> f64 {
    let n = graph.node_count();
    if n == 0 {
        return 0.0;
    }
    let adj: Vec<Vec<usize>> = graph
        .adjacency()
        .into_iter()
        .map(|l| l.into_iter().map(|(v, _)| v).collect())
        .collect();
    let mut mark = vec![false; n];
    let mut sum = 0.0;
    for (u, neigh) in adj.iter().enumerate() {
        let k = neigh.len();
        if k < 2 {
            continue;
        }
        for &v in neigh {
            mark[v] = true;
        }
        let mut links = 0usize;
        for &v in neigh {
            links += adj[v].iter().filter(|&&w| w != u && mark[w]).count();
        }
        for &v in neigh {
            mark[v] = false;
        }
        // each triangle edge counted from both ends
        sum += links as f64 / (k * (k - 1)) as f64;
    }
    sum / n as f64
}

/// Share of all edge endpoints held by the top `fraction` of nodes by degree.
pub fn degree_concentration(graph: &SocialGraph, fraction: f64) -> f64 {
    let mut degrees = graph.degrees();
    let total: usize = degrees.iter().sum();
    if total == 0 {
        return 0.0;
    }
    degrees.sort_unstable_by(|a, b| b.cmp(a));
    let top = ((fraction.clamp(0.0, 1.0) * degrees.len() as f64).ceil() as usize).min(degrees.len());
    degrees[..top].iter().sum::<usize>() as f64 / total as f64
}
