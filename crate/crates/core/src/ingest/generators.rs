use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::OwnerGraph;
use crate::model::OwnerId;

/// Watts–Strogatz small-world graph over owners `0..n`.
///
/// Builds a ring lattice where each node links to its `k/2` nearest
/// neighbours on each side, then visits every lattice edge `(u, u+j)` and,
/// with probability `p`, moves its far endpoint to a uniformly chosen node
/// that is neither `u` nor already adjacent to `u`.
pub fn generate_watts_strogatz(n: usize, k: usize, p: f64, seed: u64) -> Result<OwnerGraph> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::InvalidParameter(format!("k must be an even integer >= 2, got {k}")));
    }
    if n <= k {
        return Err(Error::InvalidParameter(format!("need n > k, got n={n}, k={k}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("rewiring probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let half = k / 2;
    for j in 1..=half {
        for u in 0..n {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for j in 1..=half {
        for u in 0..n {
            if rng.random::<f64>() >= p {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let v = (u + j) % n;
            let mut w = rng.random_range(0..n);
            while w == u || adj[u].contains(&w) {
                w = rng.random_range(0..n);
            }
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let edges = adj
        .iter()
        .enumerate()
        .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
        .map(|(u, v)| (OwnerId(u as u32), OwnerId(v as u32)));
    OwnerGraph::new((0..n as u32).map(OwnerId), edges)
}

/// Uniform random graph with exactly `m` edges on `n` nodes.
pub fn gnm_random_graph(n: usize, m: usize, seed: u64) -> Result<OwnerGraph> {
    let max_edges = n * n.saturating_sub(1) / 2;
    if m > max_edges {
        return Err(Error::InvalidParameter(format!("{m} edges do not fit on {n} nodes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = BTreeSet::new();
    while edges.len() < m {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    OwnerGraph::new(
        (0..n as u32).map(OwnerId),
        edges.into_iter().map(|(a, b)| (OwnerId(a as u32), OwnerId(b as u32))),
    )
}
