//! Device relation graphs and the owner friendship graph.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{parse_delimited, read_delimited, render_delimited, write_text};
use crate::model::{DeviceId, OwnerId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RelationKind {
    /// Co-location / co-work.
    Clor,
    /// Social friendship and ownership.
    Sfor,
    /// Social object (repeated meetings).
    Sor,
}

impl RelationKind {
    pub const ALL: [RelationKind; 3] = [RelationKind::Clor, RelationKind::Sfor, RelationKind::Sor];

    pub fn as_str(&self) -> &'static str {
        match self {
            RelationKind::Clor => "CLOR",
            RelationKind::Sfor => "SFOR",
            RelationKind::Sor => "SOR",
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CLOR" => Ok(RelationKind::Clor),
            "SFOR" => Ok(RelationKind::Sfor),
            "SOR" => Ok(RelationKind::Sor),
            other => Err(Error::InvalidParameter(format!("unknown relation kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: DeviceId,
    pub b: DeviceId,
    pub weight: f64,
}

impl Edge {
    pub fn new(a: DeviceId, b: DeviceId, weight: f64) -> Self {
        Edge { a, b, weight }
    }
}

/// Undirected weighted graph for one relation kind.
///
/// Nodes are kept sorted; each unordered pair is stored once with `a < b`,
/// edges sorted by `(a, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialGraph {
    kind: RelationKind,
    nodes: Vec<DeviceId>,
    edges: Vec<Edge>,
}

impl SocialGraph {
    /// Normalizes node and edge order, then checks every invariant.
    pub fn new(kind: RelationKind, nodes: impl IntoIterator<Item = DeviceId>, edges: Vec<Edge>) -> Result<Self> {
        let mut nodes: Vec<DeviceId> = nodes.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup();
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|e| {
                if e.a <= e.b {
                    e
                } else {
                    Edge { a: e.b, b: e.a, weight: e.weight }
                }
            })
            .collect();
        edges.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
        let graph = SocialGraph { kind, nodes, edges };
        graph.validate()?;
        Ok(graph)
    }

    /// Checks symmetry (single storage per pair), absence of self-loops,
    /// weights in (0, 1] and endpoint membership.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGraph("node list not strictly sorted".into()));
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.a == e.b {
                return Err(Error::InvalidGraph(format!("self-loop on device {}", e.a)));
            }
            if e.a > e.b {
                return Err(Error::InvalidGraph(format!("edge ({}, {}) not normalized", e.a, e.b)));
            }
            if !(e.weight > 0.0 && e.weight <= 1.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) has weight {} outside (0, 1]",
                    e.a, e.b, e.weight
                )));
            }
            if i > 0 {
                let prev = &self.edges[i - 1];
                if (prev.a, prev.b) >= (e.a, e.b) {
                    return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", e.a, e.b)));
                }
            }
            for end in [e.a, e.b] {
                if self.index_of(end).is_none() {
                    return Err(Error::InvalidGraph(format!("edge endpoint {end} not in node set")));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> RelationKind {
        self.kind
    }

    pub fn nodes(&self) -> &[DeviceId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn index_of(&self, id: DeviceId) -> Option<usize> {
        self.nodes.binary_search(&id).ok()
    }

    pub fn contains(&self, id: DeviceId) -> bool {
        self.index_of(id).is_some()
    }

    pub fn weight(&self, a: DeviceId, b: DeviceId) -> Option<f64> {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.a, e.b).cmp(&key))
            .ok()
            .map(|i| self.edges[i].weight)
    }

    /// Index-based adjacency lists, neighbors in ascending index order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            let (i, j) = (self.index_of(e.a).unwrap(), self.index_of(e.b).unwrap());
            adj[i].push((j, e.weight));
            adj[j].push((i, e.weight));
        }
        for list in &mut adj {
            list.sort_by_key(|&(j, _)| j);
        }
        adj
    }

    /// Unweighted degree of every node, aligned with [`SocialGraph::nodes`].
    pub fn degrees(&self) -> Vec<usize> {
        let mut degree = vec![0; self.nodes.len()];
        for e in &self.edges {
            degree[self.index_of(e.a).unwrap()] += 1;
            degree[self.index_of(e.b).unwrap()] += 1;
        }
        degree
    }

    /// Same topology with every weight multiplied by `factor`, skipping the
    /// (0, 1] check. Used to probe scale invariance.
    pub fn scaled(&self, factor: f64) -> SocialGraph {
        SocialGraph {
            kind: self.kind,
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge { weight: e.weight * factor, ..*e })
                .collect(),
        }
    }

    pub fn to_edge_list(&self) -> String {
        render_delimited(
            &[
                ("relation_kind", self.kind.to_string()),
                ("nodes", self.nodes.len().to_string()),
            ],
            &["i", "j", "weight"],
            self.edges
                .iter()
                .map(|e| vec![e.a.to_string(), e.b.to_string(), e.weight.to_string()]),
        )
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_edge_list())
    }

    /// Parses an edge list. The node set is the edge endpoints; callers may
    /// widen it with [`SocialGraph::with_nodes`].
    pub fn from_edge_list(text: &str, context: &str) -> Result<Self> {
        let table = parse_delimited(text, context)?;
        let kind: RelationKind = table
            .meta
            .get("relation_kind")
            .ok_or_else(|| Error::MissingField {
                context: context.to_string(),
                field: "relation_kind".into(),
            })?
            .parse()?;
        let (ci, cj) = (table.column("i")?, table.column("j")?);
        let cw = table.optional_column("weight");
        let mut nodes = BTreeSet::new();
        let mut edges = Vec::with_capacity(table.rows.len());
        for (line, row) in &table.rows {
            let a = DeviceId(table.field(*line, row, ci, "i")?);
            let b = DeviceId(table.field(*line, row, cj, "j")?);
            let weight = match cw {
                Some(c) => table.field(*line, row, c, "weight")?,
                None => 1.0,
            };
            if a == b {
                return Err(table.parse_error(*line, format!("self-loop on {a}")));
            }
            nodes.insert(a);
            nodes.insert(b);
            edges.push(Edge { a, b, weight });
        }
        SocialGraph::new(kind, nodes, edges).map_err(|e| Error::Parse {
            context: context.to_string(),
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn load_edge_list(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_edge_list(&text, &path.display().to_string())
    }

    pub fn with_nodes(mut self, extra: impl IntoIterator<Item = DeviceId>) -> Self {
        self.nodes.extend(extra);
        self.nodes.sort_unstable();
        self.nodes.dedup();
        self
    }

    /// Subgraph induced by `keep`.
    pub fn induced(&self, keep: &BTreeSet<DeviceId>) -> SocialGraph {
        SocialGraph {
            kind: self.kind,
            nodes: self.nodes.iter().copied().filter(|n| keep.contains(n)).collect(),
            edges: self
                .edges
                .iter()
                .copied()
                .filter(|e| keep.contains(&e.a) && keep.contains(&e.b))
                .collect(),
        }
    }
}

/// Undirected, unweighted friendship graph between owners.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnerGraph {
    nodes: Vec<OwnerId>,
    edges: Vec<(OwnerId, OwnerId)>,
}

impl OwnerGraph {
    pub fn new(nodes: impl IntoIterator<Item = OwnerId>, edges: impl IntoIterator<Item = (OwnerId, OwnerId)>) -> Result<Self> {
        let mut node_set: BTreeSet<OwnerId> = nodes.into_iter().collect();
        let mut edge_set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("owner self-loop on {a}")));
            }
            node_set.insert(a);
            node_set.insert(b);
            edge_set.insert(if a < b { (a, b) } else { (b, a) });
        }
        Ok(OwnerGraph {
            nodes: node_set.into_iter().collect(),
            edges: edge_set.into_iter().collect(),
        })
    }

    pub fn nodes(&self) -> &[OwnerId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(OwnerId, OwnerId)] {
        &self.edges
    }

    pub fn contains(&self, owner: OwnerId) -> bool {
        self.nodes.binary_search(&owner).is_ok()
    }

    pub fn adjacency(&self) -> HashMap<OwnerId, Vec<OwnerId>> {
        let mut adj: HashMap<OwnerId, Vec<OwnerId>> = self.nodes.iter().map(|&n| (n, Vec::new())).collect();
        for &(a, b) in &self.edges {
            adj.get_mut(&a).unwrap().push(b);
            adj.get_mut(&b).unwrap().push(a);
        }
        adj
    }

    /// Hop distances from `source` to every owner within `max_hops`.
    pub fn distances_from(
        &self,
        adjacency: &HashMap<OwnerId, Vec<OwnerId>>,
        source: OwnerId,
        max_hops: u32,
    ) -> HashMap<OwnerId, u32> {
        let mut dist = HashMap::from([(source, 0u32)]);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            if d == max_hops {
                continue;
            }
            for &v in adjacency.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
                if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(v) {
                    slot.insert(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// The same friendships as a device-style graph with unit weights, node
    /// ids reinterpreted as device ids. Lets the graph metrics run on owners.
    pub fn as_social_graph(&self) -> SocialGraph {
        SocialGraph {
            kind: RelationKind::Sfor,
            nodes: self.nodes.iter().map(|o| DeviceId(o.0)).collect(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b)| Edge {
                    a: DeviceId(a.0),
                    b: DeviceId(b.0),
                    weight: 1.0,
                })
                .collect(),
        }
    }

    pub fn to_edge_list(&self) -> String {
        render_delimited(
            &[("owners", self.nodes.len().to_string())],
            &["owner_a", "owner_b"],
            self.edges.iter().map(|(a, b)| vec![a.to_string(), b.to_string()]),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let table = read_delimited(path)?;
        let (ca, cb) = (table.column("owner_a")?, table.column("owner_b")?);
        let mut edges = Vec::with_capacity(table.rows.len());
        for (line, row) in &table.rows {
            let a = OwnerId(table.field(*line, row, ca, "owner_a")?);
            let b = OwnerId(table.field(*line, row, cb, "owner_b")?);
            if a == b {
                return Err(table.parse_error(*line, format!("owner self-loop on {a}")));
            }
            edges.push((a, b));
        }
        OwnerGraph::new([], edges)
    }

    pub fn with_nodes(mut self, extra: impl IntoIterator<Item = OwnerId>) -> Self {
        self.nodes.extend(extra);
        self.nodes.sort_unstable();
        self.nodes.dedup();
        self
    }
}
