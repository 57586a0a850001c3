use crate::community::Partition;
use crate::error::{Error, Result};
use crate::graph::SocialGraph;

/// Weighted Newman–Girvan modularity
/// `Q = (1/2m) Σ_ij [A_ij - k_i k_j / 2m] δ(c_i, c_j)`.
pub fn modularity(graph: &SocialGraph, partition: &Partition) -> Result<f64> {
    if !partition.covers(graph) {
        return Err(Error::NodeSetMismatch(
            "partition is not defined on exactly the graph's nodes".into(),
        ));
    }
    let m = graph.total_weight();
    if graph.edge_count() == 0 || m <= 0.0 {
        return Err(Error::EdgelessGraph);
    }
    let labels = partition.labels();
    let k = partition.n_communities();
    let mut internal = vec![0.0; k];
    let mut total = vec![0.0; k];
    for e in graph.edges() {
        let (i, j) = (graph.index_of(e.a).unwrap(), graph.index_of(e.b).unwrap());
        let (ci, cj) = (labels[i] as usize, labels[j] as usize);
        total[ci] += e.weight;
        total[cj] += e.weight;
        if ci == cj {
            internal[ci] += e.weight;
        }
    }
    let two_m = 2.0 * m;
    Ok(internal
        .iter()
        .zip(&total)
        .map(|(&inside, &tot)| inside / m - (tot / two_m).powi(2))
        .sum())
}
