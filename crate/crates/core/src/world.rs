//! Ground-truth synthetic social networks.
//!
//! A world is an erased configuration-model graph with power-law target
//! degrees, whose nodes carry IDs drawn without replacement from a sparse
//! `2^id_space_bits` ID space and a friend-list privacy flag. The PRNG is
//! ChaCha8 seeded through `SeedableRng::seed_from_u64(rng_seed)`; worlds are
//! reproducible within this implementation only.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{read_edge_list, write_edge_list, EdgeListError, GraphBuilder, NodeId, SocialGraph};
use crate::kv;

pub const WORLD_CONFIG_FILE: &str = "world.conf";
pub const WORLD_EDGES_FILE: &str = "edges.tsv";
pub const WORLD_MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid world config: {0}")]
    Config(String),
    #[error("id {0} is not assigned to any user")]
    NotFound(NodeId),
    #[error("world I/O: {0}")]
    Io(#[from] io::Error),
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("world edge list: {0}")]
    EdgeList(#[from] EdgeListError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub n_users: usize,
    pub gamma: f64,
    pub min_degree: usize,
    pub max_degree: usize,
    pub id_space_bits: u32,
    pub density_exponent: u32,
    pub privacy_fraction: f64,
    pub rng_seed: u64,
}

/// Smallest ID width whose space is at least `n_users * 2^density_exponent`.
pub fn id_bits_for(n_users: usize, density_exponent: u32) -> u32 {
    let n = n_users.max(1) as u64;
    (64 - (n - 1).leading_zeros()) + density_exponent
}

impl WorldConfig {
    /// Desk-scale defaults: `gamma = 2.5`, degrees in `[5, 500]`, density
    /// exponent 3, privacy fraction 0.266, and an ID space sized so roughly
    /// one probe in eight hits a user.
    pub fn new(n_users: usize) -> Self {
        WorldConfig {
            n_users,
            gamma: 2.5,
            min_degree: 5,
            max_degree: 500.min(n_users.saturating_sub(1)).max(1),
            id_space_bits: id_bits_for(n_users, 3),
            density_exponent: 3,
            privacy_fraction: 0.266,
            rng_seed: 1,
        }
    }

    pub fn id_space_size(&self) -> u64 {
        1u64 << self.id_space_bits
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: String| Err(WorldError::Config(m));
        if self.n_users == 0 {
            return bad("n_users must be positive".into());
        }
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be a finite real > 1, got {}", self.gamma));
        }
        if self.min_degree == 0 || self.min_degree > self.max_degree {
            return bad(format!("need 1 <= min_degree <= max_degree, got [{}, {}]", self.min_degree, self.max_degree));
        }
        if self.max_degree >= self.n_users {
            return bad(format!("max_degree {} must be below n_users {}", self.max_degree, self.n_users));
        }
        if self.id_space_bits == 0 || self.id_space_bits > 63 {
            return bad(format!("id_space_bits must be in 1..=63, got {}", self.id_space_bits));
        }
        if (self.n_users as u64) > self.id_space_size() {
            return bad(format!("{} users do not fit a {}-bit ID space", self.n_users, self.id_space_bits));
        }
        if !(0.0..=1.0).contains(&self.privacy_fraction) {
            return bad(format!("privacy_fraction must be in [0, 1], got {}", self.privacy_fraction));
        }
        Ok(())
    }

    /// Expected degree under the truncated power law, before erasure.
    pub fn target_mean_degree(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for k in self.min_degree..=self.max_degree {
            let w = (k as f64).powf(-self.gamma);
            num += k as f64 * w;
            den += w;
        }
        num / den
    }

    pub fn to_kv(&self) -> Vec<(String, String)> {
        vec![
            ("n_users".into(), self.n_users.to_string()),
            ("gamma".into(), self.gamma.to_string()),
            ("min_degree".into(), self.min_degree.to_string()),
            ("max_degree".into(), self.max_degree.to_string()),
            ("id_space_bits".into(), self.id_space_bits.to_string()),
            ("density_exponent".into(), self.density_exponent.to_string()),
            ("privacy_fraction".into(), self.privacy_fraction.to_string()),
            ("rng_seed".into(), self.rng_seed.to_string()),
        ]
    }

    pub fn from_kv(map: &BTreeMap<String, String>) -> Result<Self, WorldError> {
        fn get<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T, WorldError> {
            let raw = map.get(key).ok_or_else(|| WorldError::Config(format!("missing key {key}")))?;
            raw.parse().map_err(|_| WorldError::Config(format!("bad value for {key}: {raw:?}")))
        }
        Ok(WorldConfig {
            n_users: get(map, "n_users")?,
            gamma: get(map, "gamma")?,
            min_degree: get(map, "min_degree")?,
            max_degree: get(map, "max_degree")?,
            id_space_bits: get(map, "id_space_bits")?,
            density_exponent: get(map, "density_exponent")?,
            privacy_fraction: get(map, "privacy_fraction")?,
            rng_seed: get(map, "rng_seed")?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    config: WorldConfig,
    /// Full, uncapped friendships over assigned IDs.
    graph: SocialGraph,
    /// Generation index -> assigned ID.
    id_of: Vec<NodeId>,
    /// Indexed like `graph`.
    private: Vec<bool>,
    /// Target degrees drawn before stub matching, by generation index.
    /// Empty for worlds loaded from disk.
    target_degrees: Vec<usize>,
    stubs_lost: usize,
}

impl fmt::Display for SyntheticWorld {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "world: {} users, {} friendships, {} private, {}-bit ID space",
            self.graph.node_count(),
            self.graph.edge_count(),
            self.private_count(),
            self.config.id_space_bits
        )
    }
}

pub fn generate_world(cfg: &WorldConfig) -> Result<SyntheticWorld, WorldError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let n = cfg.n_users;

    let weights: Vec<f64> = (cfg.min_degree..=cfg.max_degree).map(|k| (k as f64).powf(-cfg.gamma)).collect();
    let law = WeightedIndex::new(&weights).map_err(|e| WorldError::Config(e.to_string()))?;
    let mut degrees: Vec<usize> = (0..n).map(|_| cfg.min_degree + law.sample(&mut rng)).collect();
    if degrees.iter().sum::<usize>() % 2 == 1 {
        let pick = rng.random_range(0..n);
        degrees[pick] += 1;
    }

    let total: usize = degrees.iter().sum();
    let mut stubs = Vec::with_capacity(total);
    for (v, &d) in degrees.iter().enumerate() {
        stubs.extend(std::iter::repeat_n(v, d));
    }
    stubs.shuffle(&mut rng);

    let ids: Vec<NodeId> = {
        let mut picked: Vec<NodeId> =
            index::sample(&mut rng, cfg.id_space_size() as usize, n).into_iter().map(|i| i as NodeId).collect();
        picked.shuffle(&mut rng);
        picked
    };

    let mut b = GraphBuilder::with_capacity(n, total / 2);
    for &id in &ids {
        b.add_node(id);
    }
    let mut self_loops = 0usize;
    for pair in stubs.chunks_exact(2) {
        if pair[0] == pair[1] {
            self_loops += 1;
        } else {
            b.add_edge(ids[pair[0]], ids[pair[1]]).expect("distinct endpoints");
        }
    }
    let (graph, parallel) = b.build_counting_duplicates();
    let stubs_lost = 2 * (self_loops + parallel);
    let loss = stubs_lost as f64 / total.max(1) as f64;
    if (cfg.max_degree as f64) > ((n * cfg.min_degree) as f64).sqrt() {
        warn!(
            "max_degree {} exceeds sqrt(n_users * min_degree); erased configuration model lost {:.2}% of stubs",
            cfg.max_degree,
            100.0 * loss
        );
    } else if loss >= 0.05 {
        warn!("erased configuration model lost {:.2}% of stubs", 100.0 * loss);
    }

    // Exactly round(p * n) private users, chosen uniformly.
    let n_private = (cfg.privacy_fraction * n as f64).round() as usize;
    let mut private = vec![false; n];
    for g in index::sample(&mut rng, n, n_private) {
        let ix = graph.index_of(ids[g]).expect("assigned id present");
        private[ix] = true;
    }

    Ok(SyntheticWorld { config: cfg.clone(), graph, id_of: ids, private, target_degrees: degrees, stubs_lost })
}

impl SyntheticWorld {
    /// Wraps a hand-built graph as a world. Generation order is ascending ID
    /// order; `private_ids` not present in the graph are ignored.
    pub fn from_graph(graph: SocialGraph, private_ids: &[NodeId]) -> Self {
        let n = graph.node_count();
        let mut config = WorldConfig::new(n.max(2));
        config.n_users = n;
        let max_id = graph.ids().last().copied().unwrap_or(0);
        config.id_space_bits = config.id_space_bits.max(64 - max_id.leading_zeros()).min(63);
        let mut private = vec![false; n];
        for &id in private_ids {
            if let Some(ix) = graph.index_of(id) {
                private[ix] = true;
            }
        }
        let id_of = graph.ids().to_vec();
        SyntheticWorld { config, graph, id_of, private, target_degrees: Vec::new(), stubs_lost: 0 }
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn graph(&self) -> &SocialGraph {
        &self.graph
    }

    pub fn id_of(&self, generation_index: usize) -> NodeId {
        self.id_of[generation_index]
    }

    pub fn assigned_ids(&self) -> &[NodeId] {
        &self.id_of
    }

    pub fn target_degrees(&self) -> &[usize] {
        &self.target_degrees
    }

    pub fn stubs_lost(&self) -> usize {
        self.stubs_lost
    }

    pub fn private_count(&self) -> usize {
        self.private.iter().filter(|&&p| p).count()
    }

    pub fn is_id_assigned(&self, id: NodeId) -> bool {
        self.graph.contains(id)
    }

    pub fn ground_truth_degree(&self, id: NodeId) -> Result<usize, WorldError> {
        self.graph.degree_of(id).ok_or(WorldError::NotFound(id))
    }

    pub fn privacy_of(&self, id: NodeId) -> Result<bool, WorldError> {
        self.graph.index_of(id).map(|ix| self.private[ix]).ok_or(WorldError::NotFound(id))
    }

    /// Privacy flag by graph index.
    pub fn is_private_index(&self, ix: usize) -> bool {
        self.private[ix]
    }

    /// First user in generation order that has at least one friend.
    pub fn default_seed_user(&self) -> NodeId {
        self.id_of
            .iter()
            .copied()
            .find(|&id| self.graph.degree_of(id).unwrap_or(0) > 0)
            .unwrap_or(self.id_of[0])
    }

    /// Writes `world.conf`, `edges.tsv` and `manifest.tsv` under `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), WorldError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        kv::write_file(dir.join(WORLD_CONFIG_FILE), &self.config.to_kv())?;
        write_edge_list(&self.graph, dir.join(WORLD_EDGES_FILE))?;
        let mut w = BufWriter::new(File::create(dir.join(WORLD_MANIFEST_FILE))?);
        for (gen_ix, &id) in self.id_of.iter().enumerate() {
            let ix = self.graph.index_of(id).expect("assigned id present");
            writeln!(w, "{gen_ix}\t{id}\t{}", u8::from(self.private[ix]))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, WorldError> {
        let dir = dir.as_ref();
        let cfg_path = dir.join(WORLD_CONFIG_FILE);
        let config = WorldConfig::from_kv(&kv::read_file(&cfg_path)?)?;
        let edges = read_edge_list(dir.join(WORLD_EDGES_FILE))?.graph;

        let manifest = dir.join(WORLD_MANIFEST_FILE);
        let file = manifest.display().to_string();
        let mut rows: Vec<(usize, NodeId, bool)> = Vec::new();
        for (n, line) in BufReader::new(File::open(&manifest)?).lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let perr = |message: String| WorldError::Parse { file: file.clone(), line: n + 1, message };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(perr(format!("expected 3 fields, got {}", f.len())));
            }
            let gen_ix = f[0].parse().map_err(|_| perr(format!("bad index {:?}", f[0])))?;
            let id = f[1].parse().map_err(|_| perr(format!("bad id {:?}", f[1])))?;
            let private = match f[2] {
                "0" => false,
                "1" => true,
                other => return Err(perr(format!("bad private flag {other:?}"))),
            };
            rows.push((gen_ix, id, private));
        }
        rows.sort_by_key(|r| r.0);
        if rows.iter().enumerate().any(|(i, r)| r.0 != i) {
            return Err(WorldError::Parse { file, line: 0, message: "manifest indices are not 0..n".into() });
        }

        let mut b = GraphBuilder::with_capacity(rows.len(), edges.edge_count());
        for r in &rows {
            b.add_node(r.1);
        }
        for e in edges.edges() {
            b.push_canonical(e);
        }
        let graph = b.build();
        if graph.node_count() != rows.len() {
            return Err(WorldError::Parse {
                file,
                line: 0,
                message: "edge list mentions ids missing from the manifest, or manifest ids repeat".into(),
            });
        }
        let mut private = vec![false; rows.len()];
        for r in &rows {
            private[graph.index_of(r.1).expect("manifest id present")] = r.2;
        }
        Ok(SyntheticWorld {
            config,
            graph,
            id_of: rows.into_iter().map(|r| r.1).collect(),
            private,
            target_degrees: Vec::new(),
            stubs_lost: 0,
        })
    }
}
