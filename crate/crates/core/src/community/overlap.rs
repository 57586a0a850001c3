use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::community::{louvain, Cover, CoverCommunity, LouvainConfig};
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::model::DeviceId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OverlapConfig {
    pub seed: u64,
    /// Corrected score a member must stay below (p*).
    pub significance_threshold: f64,
    /// Seeded Louvain restarts proposing seed clusters.
    pub n_trials: usize,
    /// Admit/expel rounds per cleanup.
    pub max_iterations: usize,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        OverlapConfig {
            seed: 0,
            significance_threshold: 0.1,
            n_trials: 50,
            max_iterations: 30,
        }
    }
}

impl OverlapConfig {
    pub fn validate(&self) -> Result<()> {
        let p = self.significance_threshold;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "significance_threshold must lie in (0, 1), got {p}"
            )));
        }
        if self.n_trials == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "n_trials and max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

const SMALL_FACTORIALS: usize = 256;

fn ln_factorial(k: u64) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = vec![0.0; SMALL_FACTORIALS];
        for i in 1..SMALL_FACTORIALS {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    });
    if (k as usize) < SMALL_FACTORIALS {
        return table[k as usize];
    }
    // Stirling series; the truncation error is far below f64 resolution here
    let x = k as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `P(X >= at_least)` for `X ~ Hypergeometric(population, successes, draws)`.
pub fn hypergeometric_tail(population: u64, successes: u64, draws: u64, at_least: u64) -> f64 {
    assert!(successes <= population && draws <= population);
    let lo = (draws + successes).saturating_sub(population);
    let hi = successes.min(draws);
    if at_least <= lo {
        return 1.0;
    }
    if at_least > hi {
        return 0.0;
    }
    let (n, k, d) = (population as f64, successes as f64, draws as f64);
    let ln_pmf = |x: u64| {
        ln_choose(successes, x) + ln_choose(population - successes, draws - x) - ln_choose(population, draws)
    };
    let mode = ((d + 1.0) * (k + 1.0) / (n + 2.0)).floor() as u64;
    if at_least > mode {
        // upper terms decrease away from the mode
        let mut term = ln_pmf(at_least).exp();
        let mut sum = 0.0;
        let mut x = at_least;
        loop {
            sum += term;
            if x == hi || term < sum * 1e-17 {
                break;
            }
            let xf = x as f64;
            term *= (k - xf) * (d - xf) / ((xf + 1.0) * (n - k - d + xf + 1.0));
            x += 1;
        }
        sum.min(1.0)
    } else {
        let mut x = at_least - 1;
        let mut term = ln_pmf(x).exp();
        let mut sum = 0.0;
        loop {
            sum += term;
            if x == lo || term < sum * 1e-17 {
                break;
            }
            let xf = x as f64;
            term *= xf * (n - k - d + xf) / ((k - xf + 1.0) * (d - xf + 1.0));
            x -= 1;
        }
        (1.0 - sum).clamp(0.0, 1.0)
    }
}

/// Probability that the best of `pool` independent uniform scores is at most `r`.
fn order_statistic(r: f64, pool: usize) -> f64 {
    if r >= 1.0 {
        return 1.0;
    }
    (-(pool as f64 * (-r).ln_1p()).exp_m1()).clamp(0.0, 1.0)
}

/// Unweighted configuration-model view of a graph.
struct Null {
    adj: Vec<Vec<usize>>,
    degree: Vec<u64>,
    stubs: u64,
}

impl Null {
    fn new(graph: &SocialGraph) -> Self {
        let adj: Vec<Vec<usize>> = graph
            .adjacency()
            .into_iter()
            .map(|n| n.into_iter().map(|(v, _)| v).collect())
            .collect();
        let degree: Vec<u64> = adj.iter().map(|n| n.len() as u64).collect();
        let stubs = degree.iter().sum();
        Null { adj, degree, stubs }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }
}

/// Incrementally maintained cluster statistics.
struct Cluster<'a> {
    null: &'a Null,
    inside: Vec<bool>,
    size: usize,
    /// neighbors inside the cluster, per node
    links: Vec<u64>,
    internal_edges: u64,
    total_degree: u64,
}

impl<'a> Cluster<'a> {
    fn new(null: &'a Null, members: &[usize]) -> Self {
        let mut c = Cluster {
            null,
            inside: vec![false; null.len()],
            size: 0,
            links: vec![0; null.len()],
            internal_edges: 0,
            total_degree: 0,
        };
        for &m in members {
            c.add(m);
        }
        c
    }

    fn add(&mut self, i: usize) {
        if self.inside[i] {
            return;
        }
        self.inside[i] = true;
        self.size += 1;
        self.internal_edges += self.links[i];
        self.total_degree += self.null.degree[i];
        for &v in &self.null.adj[i] {
            self.links[v] += 1;
        }
    }

    fn remove(&mut self, i: usize) {
        if !self.inside[i] {
            return;
        }
        self.inside[i] = false;
        self.size -= 1;
        self.internal_edges -= self.links[i];
        self.total_degree -= self.null.degree[i];
        for &v in &self.null.adj[i] {
            self.links[v] -= 1;
        }
    }

    /// Corrected score of node `i` against the cluster without `i`.
    fn score(&self, i: usize) -> f64 {
        let k_i = self.null.degree[i];
        let k_in = self.links[i];
        let (mut e_in, mut total, mut size) = (self.internal_edges, self.total_degree, self.size);
        if self.inside[i] {
            e_in -= k_in;
            total -= k_i;
            size -= 1;
        }
        let k_out = total - 2 * e_in;
        // i's own stubs stay in the population, so an isolated clique still
        // scores as significant
        let population = self.null.stubs - 2 * e_in;
        let r = hypergeometric_tail(population, k_out, k_i.min(population), k_in);
        order_statistic(r, self.null.len() - size)
    }

    fn members(&self) -> Vec<usize> {
        (0..self.null.len()).filter(|&i| self.inside[i]).collect()
    }

    /// Worst member score; 1 for fewer than two members.
    fn significance(&self) -> f64 {
        if self.size < 2 {
            return 1.0;
        }
        self.members().into_iter().map(|i| self.score(i)).fold(0.0, f64::max)
    }

    /// Drops failing members in batches until all pass.
    fn expel(&mut self, threshold: f64) {
        loop {
            let failing: Vec<usize> = self
                .members()
                .into_iter()
                .filter(|&i| self.score(i) >= threshold)
                .collect();
            if failing.is_empty() {
                return;
            }
            for i in failing {
                self.remove(i);
            }
        }
    }

    /// Admits every significant outside neighbor; returns how many.
    fn admit(&mut self, threshold: f64) -> usize {
        let candidates: Vec<usize> = (0..self.null.len())
            .filter(|&j| !self.inside[j] && self.links[j] > 0 && self.score(j) < threshold)
            .collect();
        for &j in &candidates {
            self.add(j);
        }
        candidates.len()
    }
}

/// Runs the admit/expel loop from `seed`; `None` when the cluster empties.
fn cleanup(null: &Null, seed: &[usize], config: &OverlapConfig) -> Option<Vec<usize>> {
    let threshold = config.significance_threshold;
    let mut cluster = Cluster::new(null, seed);
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for _ in 0..config.max_iterations {
        cluster.expel(threshold);
        if cluster.size < 2 {
            return None;
        }
        if !seen.insert(cluster.members()) || cluster.admit(threshold) == 0 {
            break;
        }
    }
    cluster.expel(threshold);
    (cluster.size >= 2).then(|| cluster.members())
}

fn indices_of(graph: &SocialGraph, community: &[DeviceId]) -> Result<Vec<usize>> {
    community
        .iter()
        .map(|&d| graph.index_of(d).ok_or(Error::NotASubset(d)))
        .collect()
}

/// Worst corrected membership score over the community's members.
pub fn community_significance(graph: &SocialGraph, community: &[DeviceId]) -> Result<f64> {
    if community.is_empty() {
        return Err(Error::InvalidParameter("community must not be empty".into()));
    }
    let idx = indices_of(graph, community)?;
    let null = Null::new(graph);
    Ok(Cluster::new(&null, &idx).significance())
}

/// Cleans a single seed cluster; exposed so covers can be re-checked for stability.
pub fn cleanup_community(
    graph: &SocialGraph,
    seed: &[DeviceId],
    config: &OverlapConfig,
) -> Result<Option<Vec<DeviceId>>> {
    config.validate()?;
    let idx = indices_of(graph, seed)?;
    let null = Null::new(graph);
    Ok(cleanup(&null, &idx, config).map(|m| m.into_iter().map(|i| graph.nodes()[i]).collect()))
}

/// Significance-filtered overlapping communities seeded from Louvain runs.
pub fn detect_overlapping(graph: &SocialGraph, config: &OverlapConfig) -> Result<Cover> {
    config.validate()?;
    if graph.edge_count() == 0 {
        return Err(Error::EdgelessGraph);
    }
    let null = Null::new(graph);
    let mut tried: HashSet<Vec<usize>> = HashSet::new();
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    for trial in 0..config.n_trials {
        let louvain_config = LouvainConfig {
            seed: config.seed.wrapping_add(trial as u64),
            shuffle: trial > 0,
            ..LouvainConfig::default()
        };
        let partition = louvain(graph, &louvain_config)?;
        for group in partition.communities() {
            let seed = indices_of(graph, &group)?;
            if !tried.insert(seed.clone()) {
                continue;
            }
            if let Some(members) = cleanup(&null, &seed, config) {
                found.insert(members);
            }
        }
    }

    // a cluster contained in another adds nothing
    let all: Vec<Vec<usize>> = found.into_iter().collect();
    let mut kept: Vec<Vec<usize>> = all
        .iter()
        .filter(|c| {
            !all.iter().any(|o| o.len() > c.len() && is_sorted_subset(c, o))
        })
        .cloned()
        .collect();
    kept.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));

    let nodes = graph.nodes();
    let mut covered = vec![false; nodes.len()];
    let communities = kept
        .into_iter()
        .map(|members| {
            for &m in &members {
                covered[m] = true;
            }
            let significance = Cluster::new(&null, &members).significance();
            CoverCommunity {
                members: members.into_iter().map(|i| nodes[i]).collect(),
                significance,
            }
        })
        .collect();
    let homeless = (0..nodes.len()).filter(|&i| !covered[i]).map(|i| nodes[i]).collect();
    Ok(Cover {
        relation: graph.kind(),
        threshold: config.significance_threshold,
        communities,
        homeless,
    })
}

fn is_sorted_subset(small: &[usize], big: &[usize]) -> bool {
    small.iter().all(|x| big.binary_search(x).is_ok())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_edges() {
        assert_eq!(hypergeometric_tail(10, 5, 5, 0), 1.0);
        assert_eq!(hypergeometric_tail(10, 5, 5, 6), 0.0);
        assert!((hypergeometric_tail(10, 5, 5, 5) - 1.0 / 252.0).abs() < 1e-15);
        // forced draws
        assert_eq!(hypergeometric_tail(5, 5, 5, 5), 1.0);
    }

    #[test]
    fn ln_factorial_is_continuous_at_table_edge() {
        let exact: f64 = (1..=300u64).map(|i| (i as f64).ln()).sum();
        assert!((ln_factorial(300) - exact).abs() < 1e-9);
        let below: f64 = (1..=255u64).map(|i| (i as f64).ln()).sum();
        assert!((ln_factorial(255) - below).abs() < 1e-9);
    }

    #[test]
    fn correction_bounds() {
        assert_eq!(order_statistic(1.0, 5), 1.0);
        assert_eq!(order_statistic(0.0, 5), 0.0);
        assert!((order_statistic(0.1, 2) - 0.19).abs() < 1e-12);
        assert!((order_statistic(1e-20, 10) - 1e-19).abs() < 1e-30);
    }

    #[test]
    fn rejects_bad_threshold() {
        for p in [0.0, 1.0, -0.5, f64::NAN] {
            let cfg = OverlapConfig {
                significance_threshold: p,
                ..Default::default()
            };
            assert!(cfg.validate().is_err());
        }
    }
}
