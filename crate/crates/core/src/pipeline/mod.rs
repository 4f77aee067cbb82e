//! Anonymization, de-duplication and export of raw crawls.
//!
//! [`clean`] maps every raw ID through [`aphash48`] over its decimal string,
//! collapses repeated and reversed observations through a hash set in
//! expected linear time, and keeps visited and private users as nodes even
//! when they have no observed edges. Only anonymized IDs leave this stage.

mod hash;

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use thiserror::Error;

pub use hash::{aphash48, anonymize_numeric, AnonId, ANON_BITS, ANON_MASK, APHASH48_SEED};

use crate::crawler::{CrawlError, Outcome, RawCrawl};
use crate::graph::{
    read_graphml, write_edge_list, write_graphml, EdgeRecord, GraphBuilder, GraphmlError, NodeId, SocialGraph, Violation,
};
use crate::kv;

pub const CLEAN_EDGES_FILE: &str = "edges.tsv";
pub const CLEAN_GRAPHML_FILE: &str = "graph.graphml";
pub const CLEAN_VISITED_FILE: &str = "visited.tsv";
pub const CLEAN_PRIVATE_FILE: &str = "private.tsv";
pub const CLEAN_REPORT_FILE: &str = "report";
pub const HASH_NAME: &str = "aphash48";
pub const HASH_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("raw crawl: {0}")]
    Raw(#[from] CrawlError),
    #[error("pipeline I/O: {0}")]
    Io(#[from] io::Error),
    #[error("GraphML: {0}")]
    Graphml(#[from] GraphmlError),
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("node {0} not in graph")]
    NotFound(NodeId),
    #[error("integrity check failed: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Integrity(Vec<Violation>),
}

/// How raw IDs become graph IDs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdNormalizer {
    /// 48-bit digest of the decimal ID string.
    Aphash48,
    /// IDs are already anonymized; keep them (used to re-clean clean output).
    Passthrough,
}

impl IdNormalizer {
    fn apply(self, raw: NodeId) -> NodeId {
        match self {
            IdNormalizer::Aphash48 => anonymize_numeric(raw).value(),
            IdNormalizer::Passthrough => raw,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IdNormalizer::Aphash48 => HASH_NAME,
            IdNormalizer::Passthrough => "passthrough",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanGraph {
    pub graph: SocialGraph,
    pub observations: usize,
    pub duplicate_edges_removed: usize,
    /// Distinct raw-ID pairs observed to share a digest.
    pub collisions_detected: usize,
    /// Observations whose endpoints were equal after normalization.
    pub self_loops_dropped: usize,
    /// Visited users and the friend count the service returned, ascending.
    pub visited: Vec<(NodeId, usize)>,
    /// Users whose friend list was refused, ascending.
    pub private: Vec<NodeId>,
    pub hash: String,
    pub hash_version: String,
}

/// Raw observations plus the users a crawl touched.
#[derive(Debug, Clone, Default)]
pub struct CleanInput {
    pub observations: Vec<(NodeId, NodeId)>,
    pub visited: Vec<(NodeId, usize)>,
    pub private: Vec<NodeId>,
}

impl CleanInput {
    pub fn from_raw(raw: &RawCrawl) -> Self {
        let mut input = CleanInput { observations: raw.observations.clone(), ..Default::default() };
        for v in &raw.visits {
            match v.outcome {
                Outcome::Visited => input.visited.push((v.id, v.degree)),
                Outcome::Private => input.private.push(v.id),
                Outcome::NotFound | Outcome::Error => {}
            }
        }
        input
    }

    /// Treats a graph's canonical edges as observations of unknown users.
    pub fn from_graph(g: &SocialGraph) -> Self {
        CleanInput { observations: g.edges().map(|e| (e.u, e.v)).collect(), ..Default::default() }
    }
}

struct Normalizer {
    mode: IdNormalizer,
    seen: HashMap<NodeId, NodeId>,
    collisions: HashSet<(NodeId, NodeId)>,
}

impl Normalizer {
    fn map(&mut self, raw: NodeId) -> NodeId {
        let anon = self.mode.apply(raw);
        match self.seen.entry(anon) {
            Entry::Vacant(e) => {
                e.insert(raw);
            }
            Entry::Occupied(e) => {
                let first = *e.get();
                if first != raw && self.collisions.insert((first.min(raw), first.max(raw))) {
                    warn!("hash collision: two raw IDs share digest {anon:012x}");
                }
            }
        }
        anon
    }
}

pub fn clean(raw: &RawCrawl) -> CleanGraph {
    clean_input(&CleanInput::from_raw(raw), IdNormalizer::Aphash48)
}

pub fn clean_input(input: &CleanInput, mode: IdNormalizer) -> CleanGraph {
    let mut norm = Normalizer { mode, seen: HashMap::new(), collisions: HashSet::new() };
    let mut edges: HashSet<(NodeId, NodeId)> = HashSet::with_capacity(input.observations.len());
    let mut self_loops = 0usize;
    for &(u, v) in &input.observations {
        let (a, b) = (norm.map(u), norm.map(v));
        if a == b {
            self_loops += 1;
            continue;
        }
        edges.insert((a.min(b), a.max(b)));
    }

    let mut visited: BTreeMap<NodeId, usize> = BTreeMap::new();
    // A user probed twice keeps the larger observed degree, so the result
    // does not depend on record order.
    for &(id, degree) in &input.visited {
        let d = visited.entry(norm.map(id)).or_insert(degree);
        *d = (*d).max(degree);
    }
    let mut private: Vec<NodeId> = input.private.iter().map(|&id| norm.map(id)).collect();
    private.sort_unstable();
    private.dedup();

    let mut b = GraphBuilder::with_capacity(visited.len() + private.len(), edges.len());
    for &id in visited.keys().chain(&private) {
        b.add_node(id);
    }
    let unique = edges.len();
    for (u, v) in edges {
        b.push_canonical(EdgeRecord { u, v });
    }
    CleanGraph {
        graph: b.build(),
        observations: input.observations.len(),
        duplicate_edges_removed: input.observations.len() - self_loops - unique,
        collisions_detected: norm.collisions.len(),
        self_loops_dropped: self_loops,
        visited: visited.into_iter().collect(),
        private,
        hash: mode.name().to_string(),
        hash_version: HASH_VERSION.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrityReport {
    pub nodes: usize,
    pub edges: usize,
    pub isolated: usize,
    /// Share of raw observations that collapsed onto an already-seen edge.
    pub duplicate_fraction: f64,
    pub collisions: usize,
}

impl IntegrityReport {
    pub fn to_kv(&self) -> Vec<(String, String)> {
        vec![
            ("nodes".into(), self.nodes.to_string()),
            ("edges".into(), self.edges.to_string()),
            ("isolated_nodes".into(), self.isolated.to_string()),
            ("duplicate_fraction".into(), self.duplicate_fraction.to_string()),
            ("collisions_detected".into(), self.collisions.to_string()),
        ]
    }
}

pub fn integrity_check(c: &CleanGraph) -> Result<IntegrityReport, PipelineError> {
    let violations = c.graph.validate();
    if !violations.is_empty() {
        return Err(PipelineError::Integrity(violations));
    }
    let g = &c.graph;
    Ok(IntegrityReport {
        nodes: g.node_count(),
        edges: g.edge_count(),
        isolated: (0..g.node_count()).filter(|&i| g.degree(i) == 0).count(),
        duplicate_fraction: if c.observations == 0 {
            0.0
        } else {
            c.duplicate_edges_removed as f64 / c.observations as f64
        },
        collisions: c.collisions_detected,
    })
}

/// Induced subgraph on every node within `radius` hops of `center`.
pub fn extract_ego_network(g: &SocialGraph, center: NodeId, radius: u32) -> Result<SocialGraph, PipelineError> {
    let ix = g.index_of(center).ok_or(PipelineError::NotFound(center))?;
    Ok(g.induced_subgraph(&g.ball(ix, radius as usize)))
}

impl CleanGraph {
    /// Observed degrees of visited users, in ascending ID order.
    pub fn visited_degrees(&self) -> Vec<usize> {
        self.visited.iter().map(|&(_, d)| d).collect()
    }

    pub fn to_kv(&self) -> Vec<(String, String)> {
        vec![
            ("hash".into(), self.hash.clone()),
            ("hash_version".into(), self.hash_version.clone()),
            ("nodes".into(), self.graph.node_count().to_string()),
            ("edges".into(), self.graph.edge_count().to_string()),
            ("observations".into(), self.observations.to_string()),
            ("duplicate_edges_removed".into(), self.duplicate_edges_removed.to_string()),
            ("collisions_detected".into(), self.collisions_detected.to_string()),
            ("self_loops_dropped".into(), self.self_loops_dropped.to_string()),
            ("visited_users".into(), self.visited.len().to_string()),
            ("private_users".into(), self.private.len().to_string()),
        ]
    }

    /// Writes the edge list, GraphML (which also keeps isolated users),
    /// visited and private user lists, and the key/value report.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), PipelineError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        write_edge_list(&self.graph, dir.join(CLEAN_EDGES_FILE))?;
        write_graphml(&self.graph, dir.join(CLEAN_GRAPHML_FILE))?;
        let mut w = BufWriter::new(File::create(dir.join(CLEAN_VISITED_FILE))?);
        for (id, d) in &self.visited {
            writeln!(w, "{id}\t{d}")?;
        }
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join(CLEAN_PRIVATE_FILE))?);
        for id in &self.private {
            writeln!(w, "{id}")?;
        }
        w.flush()?;
        let mut report = self.to_kv();
        if let Ok(integrity) = integrity_check(self) {
            report.extend(integrity.to_kv().into_iter().filter(|(k, _)| k == "isolated_nodes" || k == "duplicate_fraction"));
        }
        kv::write_file(dir.join(CLEAN_REPORT_FILE), &report)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let dir = dir.as_ref();
        let graph = read_graphml(dir.join(CLEAN_GRAPHML_FILE))?;
        let report_path = dir.join(CLEAN_REPORT_FILE);
        let report = kv::read_file(&report_path)?;
        let num = |k: &str| -> Result<usize, PipelineError> {
            report.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| PipelineError::Parse {
                file: report_path.display().to_string(),
                line: 0,
                message: format!("missing or invalid {k}"),
            })
        };
        let visited = read_columns(&dir.join(CLEAN_VISITED_FILE), 2)?
            .into_iter()
            .map(|r| (r[0], r[1] as usize))
            .collect();
        let private = read_columns(&dir.join(CLEAN_PRIVATE_FILE), 1)?.into_iter().map(|r| r[0]).collect();
        Ok(CleanGraph {
            graph,
            observations: num("observations")?,
            duplicate_edges_removed: num("duplicate_edges_removed")?,
            collisions_detected: num("collisions_detected")?,
            self_loops_dropped: num("self_loops_dropped")?,
            visited,
            private,
            hash: report.get("hash").cloned().unwrap_or_default(),
            hash_version: report.get("hash_version").cloned().unwrap_or_default(),
        })
    }
}

fn read_columns(path: &Path, width: usize) -> Result<Vec<Vec<u64>>, PipelineError> {
    let file = path.display().to_string();
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let row: Option<Vec<u64>> = line.split('\t').map(|t| t.parse().ok()).collect();
        match row {
            Some(r) if r.len() == width => rows.push(r),
            _ => {
                return Err(PipelineError::Parse {
                    file: file.clone(),
                    line: n + 1,
                    message: format!("expected {width} decimal fields"),
                })
            }
        }
    }
    Ok(rows)
}

/// Strictly loads a raw crawl directory, cleans it and writes the result.
pub fn clean_dir(raw_dir: impl AsRef<Path>, out_dir: impl AsRef<Path>) -> Result<CleanGraph, PipelineError> {
    let raw = RawCrawl::load_strict(raw_dir)?;
    let clean = clean(&raw);
    integrity_check(&clean)?;
    clean.save(out_dir)?;
    Ok(clean)
}
