//! Undirected simple graphs over numeric node IDs.
//!
//! [`SocialGraph`] is the substrate shared by every stage: the synthetic
//! world, crawl harvests after cleaning, and the metrics engine. It is
//! immutable once built. Nodes are stored in ascending ID order and each
//! adjacency list holds neighbor *indices* in ascending order, so index order
//! and ID order coincide and membership checks are a binary search.

mod edgelist;
mod graphml;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use thiserror::Error;

pub use edgelist::{read_edge_list, read_edge_list_from, write_edge_list, write_edge_list_to, EdgeListError, EdgeListRead};
pub use graphml::{export_graphml, import_graphml, read_graphml, write_graphml, GraphmlError};

/// Node identifier. Wide enough for raw 32-bit IDs and 48-bit digests alike.
pub type NodeId = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

/// An undirected edge in canonical form (`u < v`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeRecord {
    pub u: NodeId,
    pub v: NodeId,
}

impl fmt::Display for EdgeRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.u, self.v)
    }
}

/// Orders the endpoints of an undirected edge. Self-loops are rejected.
pub fn canonicalize_edge(u: NodeId, v: NodeId) -> Result<EdgeRecord, GraphError> {
    match u.cmp(&v) {
        std::cmp::Ordering::Less => Ok(EdgeRecord { u, v }),
        std::cmp::Ordering::Greater => Ok(EdgeRecord { u: v, v: u }),
        std::cmp::Ordering::Equal => Err(GraphError::SelfLoop(u)),
    }
}

/// A structural defect found by [`SocialGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    SelfLoop(NodeId),
    Asymmetric { from: NodeId, to: NodeId },
    ParallelEdge { from: NodeId, to: NodeId },
    UnsortedAdjacency(NodeId),
    EdgeCountMismatch { stored: usize, counted: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop(v) => write!(f, "self-loop on {v}"),
            Violation::Asymmetric { from, to } => {
                write!(f, "{to} is listed by {from} but {from} is missing from {to}'s list")
            }
            Violation::ParallelEdge { from, to } => write!(f, "{from} lists {to} more than once"),
            Violation::UnsortedAdjacency(v) => write!(f, "adjacency of {v} is not sorted"),
            Violation::EdgeCountMismatch { stored, counted } => {
                write!(f, "edge count {stored} but adjacency sums to {counted} half-edges")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SocialGraph {
    ids: Vec<NodeId>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    edge_count: usize,
}

impl SocialGraph {
    pub fn empty() -> Self {
        SocialGraph { ids: Vec::new(), offsets: vec![0], targets: Vec::new(), edge_count: 0 }
    }

    /// Builds a graph from canonical or non-canonical edges plus optional
    /// isolated nodes. Duplicate edges are collapsed.
    pub fn from_edges<N, E>(nodes: N, edges: E) -> Result<Self, GraphError>
    where
        N: IntoIterator<Item = NodeId>,
        E: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut b = GraphBuilder::new();
        for n in nodes {
            b.add_node(n);
        }
        for (u, v) in edges {
            b.add_edge(u, v)?;
        }
        Ok(b.build())
    }

    /// Assembles a graph from explicit adjacency lists without enforcing the
    /// simple-graph invariants. Used for loading foreign data that must be
    /// checked with [`SocialGraph::validate`] before use.
    pub fn from_adjacency_unchecked(adjacency: &BTreeMap<NodeId, Vec<NodeId>>) -> Result<Self, GraphError> {
        let ids: Vec<NodeId> = adjacency.keys().copied().collect();
        let mut offsets = Vec::with_capacity(ids.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for list in adjacency.values() {
            for w in list {
                let ix = ids.binary_search(w).map_err(|_| GraphError::UnknownNode(*w))?;
                targets.push(ix as u32);
            }
            offsets.push(targets.len());
        }
        let edge_count = targets.len() / 2;
        Ok(SocialGraph { ids, offsets, targets, edge_count })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// All node IDs, ascending.
    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn id(&self, ix: usize) -> NodeId {
        self.ids[ix]
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index_of(id).is_some()
    }

    pub fn degree(&self, ix: usize) -> usize {
        self.offsets[ix + 1] - self.offsets[ix]
    }

    pub fn degree_of(&self, id: NodeId) -> Option<usize> {
        self.index_of(id).map(|ix| self.degree(ix))
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.offsets.windows(2).map(|w| w[1] - w[0])
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().max().unwrap_or(0)
    }

    /// Neighbor indices of node `ix`, ascending.
    pub fn neighbors(&self, ix: usize) -> &[u32] {
        &self.targets[self.offsets[ix]..self.offsets[ix + 1]]
    }

    /// Neighbor IDs of node `ix`, ascending.
    pub fn neighbor_ids(&self, ix: usize) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        self.neighbors(ix).iter().map(move |&w| self.ids[w as usize])
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        match (self.index_of(u), self.index_of(v)) {
            (Some(a), Some(b)) => self.neighbors(a).binary_search(&(b as u32)).is_ok(),
            _ => false,
        }
    }

    /// Canonical edges in ascending `(u, v)` order.
    pub fn edges(&self) -> impl Iterator<Item = EdgeRecord> + '_ {
        (0..self.ids.len()).flat_map(move |a| {
            let u = self.ids[a];
            self.neighbors(a)
                .iter()
                .filter(move |&&b| b as usize > a)
                .map(move |&b| EdgeRecord { u, v: self.ids[b as usize] })
        })
    }

    /// Checks the simple-graph invariants and returns every violation found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for a in 0..self.ids.len() {
            let id = self.ids[a];
            let nbrs = self.neighbors(a);
            if nbrs.windows(2).any(|w| w[0] > w[1]) {
                out.push(Violation::UnsortedAdjacency(id));
            }
            let mut sorted = nbrs.to_vec();
            sorted.sort_unstable();
            for w in sorted.windows(2) {
                if w[0] == w[1] {
                    out.push(Violation::ParallelEdge { from: id, to: self.ids[w[0] as usize] });
                }
            }
            for &b in nbrs {
                let b = b as usize;
                if b == a {
                    out.push(Violation::SelfLoop(id));
                } else if !self.neighbors(b).contains(&(a as u32)) {
                    out.push(Violation::Asymmetric { from: id, to: self.ids[b] });
                }
            }
        }
        let counted = self.targets.len();
        if counted != 2 * self.edge_count {
            out.push(Violation::EdgeCountMismatch { stored: self.edge_count, counted });
        }
        out
    }

    /// Induced subgraph on the given node indices.
    pub fn induced_subgraph(&self, members: &[usize]) -> SocialGraph {
        let mut keep = vec![false; self.ids.len()];
        for &m in members {
            keep[m] = true;
        }
        let mut b = GraphBuilder::new();
        for &a in members {
            b.add_node(self.ids[a]);
            for &w in self.neighbors(a) {
                let w = w as usize;
                if keep[w] && w > a {
                    b.push_canonical(EdgeRecord { u: self.ids[a], v: self.ids[w] });
                }
            }
        }
        b.build()
    }

    /// Indices of all nodes within `radius` hops of `center`, in BFS order.
    pub fn ball(&self, center: usize, radius: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.ids.len()];
        let mut order = vec![center];
        let mut queue = VecDeque::from([center]);
        dist[center] = 0;
        while let Some(a) = queue.pop_front() {
            if dist[a] == radius {
                continue;
            }
            for &w in self.neighbors(a) {
                let w = w as usize;
                if dist[w] == usize::MAX {
                    dist[w] = dist[a] + 1;
                    order.push(w);
                    queue.push_back(w);
                }
            }
        }
        order
    }

    /// Returns an isomorphic copy with every ID passed through `f`.
    /// `f` must be injective.
    pub fn relabel(&self, mut f: impl FnMut(NodeId) -> NodeId) -> SocialGraph {
        let mut b = GraphBuilder::new();
        for &id in &self.ids {
            b.add_node(f(id));
        }
        for e in self.edges() {
            let (u, v) = (f(e.u), f(e.v));
            b.add_edge(u, v).expect("relabeling must be injective");
        }
        b.build()
    }
}

/// Accumulates nodes and edges, then freezes them into a [`SocialGraph`].
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    nodes: Vec<NodeId>,
    edges: Vec<EdgeRecord>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(nodes: usize, edges: usize) -> Self {
        GraphBuilder { nodes: Vec::with_capacity(nodes), edges: Vec::with_capacity(edges) }
    }

    pub fn add_node(&mut self, id: NodeId) {
        self.nodes.push(id);
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<(), GraphError> {
        let e = canonicalize_edge(u, v)?;
        self.edges.push(e);
        Ok(())
    }

    pub fn push_canonical(&mut self, e: EdgeRecord) {
        debug_assert!(e.u < e.v);
        self.edges.push(e);
    }

    pub fn build(self) -> SocialGraph {
        self.build_counting_duplicates().0
    }

    /// Builds the graph and reports how many edge insertions were repeats.
    pub fn build_counting_duplicates(mut self) -> (SocialGraph, usize) {
        self.edges.sort_unstable();
        let before = self.edges.len();
        self.edges.dedup();
        let duplicates = before - self.edges.len();

        let mut ids = self.nodes;
        ids.reserve(self.edges.len() * 2);
        for e in &self.edges {
            ids.push(e.u);
            ids.push(e.v);
        }
        ids.sort_unstable();
        ids.dedup();

        let ix = |id: NodeId| ids.binary_search(&id).expect("endpoint registered") as u32;
        let mut degree = vec![0usize; ids.len()];
        let pairs: Vec<(u32, u32)> = self.edges.iter().map(|e| (ix(e.u), ix(e.v))).collect();
        for &(a, b) in &pairs {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(ids.len() + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..ids.len()].to_vec();
        let mut targets = vec![0u32; 2 * pairs.len()];
        // Edges are sorted by (u, v), so each list fills in ascending order.
        for &(a, b) in &pairs {
            targets[cursor[a as usize]] = b;
            cursor[a as usize] += 1;
            targets[cursor[b as usize]] = a;
            cursor[b as usize] += 1;
        }
        let edge_count = pairs.len();
        (SocialGraph { ids, offsets, targets, edge_count }, duplicates)
    }
}
