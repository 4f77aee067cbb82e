//! End-to-end BFS-versus-uniform experiments.
//!
//! [`run_experiment`] generates a world, serves it on loopback, crawls it
//! with both crawlers, cleans and analyzes both samples and the ground
//! truth, and writes a verdict summary plus a SHA-256 manifest of every
//! output file.
//!
//! Output layout under `out_dir`:
//!
//! ```text
//! experiment.conf        effective configuration
//! world/                 ground truth
//! raw_bfs/ raw_uni/      resumable crawl directories
//! clean_bfs/ clean_uni/  anonymized samples
//! analysis_{truth,bfs,uni}/  report + plot CSVs
//! summary, comparison.csv, manifest.tsv
//! ```

mod compare;
mod manifest;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use log::{info, warn};

pub use compare::{
    compare_reports, ComparisonSummary, Verdict, DEGREE_BIAS_Z, FRAGMENTATION_MARGIN, HIT_RATE_SIGMAS, PRIVACY_THRESHOLD,
    VERDICT_NAMES,
};
pub use manifest::{build_manifest, diff_manifests, read_manifest, sha256_file, write_manifest, Drift, ManifestEntry, MANIFEST_FILE};

use crate::crawler::{bfs_crawl, uniform_crawl, BfsConfig, CrawlLimits, UniConfig};
use crate::kv;
use crate::metrics::{full_report, MetricsParams, SpectralOptions};
use crate::pipeline::{clean, integrity_check, CleanGraph};
use crate::service::{self, Credential, ServiceConfig, UNCAPPED};
use crate::world::{generate_world, SyntheticWorld, WorldConfig, WORLD_CONFIG_FILE};

pub const EXPERIMENT_CONFIG_FILE: &str = "experiment.conf";
pub const SUMMARY_FILE: &str = "summary";
pub const COMPARISON_FILE: &str = "comparison.csv";
const CRAWLER_USER: &str = "crawler";
const CRAWLER_PASSWORD: &str = "crawler";

/// A failed experiment stage. Outputs written before the failure are kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarnessError {
    pub stage: &'static str,
    pub message: String,
}

impl HarnessError {
    pub fn new(stage: &'static str, message: impl Into<String>) -> Self {
        HarnessError { stage, message: message.into() }
    }
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {}: {}", self.stage, self.message)
    }
}

impl std::error::Error for HarnessError {}

fn at<T, E: fmt::Display>(stage: &'static str, r: Result<T, E>) -> Result<T, HarnessError> {
    r.map_err(|e| HarnessError::new(stage, e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniSettings {
    pub queues: usize,
    pub queue_len: usize,
    pub seed: u64,
    pub max_duration: Option<Duration>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    /// Credentials are filled in by the harness once the world exists.
    pub service: ServiceConfig,
    pub bfs_limits: CrawlLimits,
    pub uni: UniSettings,
    pub q: f64,
    pub spectral_k: usize,
    pub spectral_tol: f64,
    pub spectral_max_iter: usize,
    pub hop_sample_sources: usize,
    pub exact_hop_threshold: usize,
    pub metrics_seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    /// The desk configuration: 10^5 users, cap 40, 8 uniform queues of 4096.
    fn default() -> Self {
        let mut service = ServiceConfig::new(Vec::new());
        service.friend_cap = 40;
        ExperimentConfig {
            world: WorldConfig::new(100_000),
            service,
            bfs_limits: CrawlLimits::default(),
            uni: UniSettings { queues: 8, queue_len: 4096, seed: 1, max_duration: None },
            q: 0.9,
            spectral_k: 20,
            spectral_tol: 1e-8,
            spectral_max_iter: 5000,
            hop_sample_sources: 256,
            exact_hop_threshold: 5000,
            metrics_seed: 1,
            out_dir: PathBuf::from("experiment"),
        }
    }
}

fn opt_to_string<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn secs(d: Option<Duration>) -> String {
    opt_to_string(d.map(|d| d.as_secs_f64()))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        at("config", self.world.validate())?;
        let mut svc = self.service.clone();
        svc.credentials = vec![Credential::new("check", "check", 0)];
        at("config", svc.validate())?;
        at("config", self.bfs_limits.validate())?;
        if self.uni.queues == 0 {
            return Err(HarnessError::new("config", "uni_queues must be at least 1"));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(HarnessError::new("config", format!("q must be in (0, 1], got {}", self.q)));
        }
        if self.spectral_k == 0 || self.spectral_max_iter == 0 || !(self.spectral_tol > 0.0) {
            return Err(HarnessError::new("config", "spectral_k, spectral_max_iter and spectral_tol must be positive"));
        }
        Ok(())
    }

    pub fn to_kv(&self) -> Vec<(String, String)> {
        let w = &self.world;
        let cap = (self.service.friend_cap != UNCAPPED).then_some(self.service.friend_cap);
        [
            ("n_users", w.n_users.to_string()),
            ("gamma", w.gamma.to_string()),
            ("min_degree", w.min_degree.to_string()),
            ("max_degree", w.max_degree.to_string()),
            ("id_space_bits", w.id_space_bits.to_string()),
            ("density_exponent", w.density_exponent.to_string()),
            ("privacy_fraction", w.privacy_fraction.to_string()),
            ("world_seed", w.rng_seed.to_string()),
            ("friend_cap", opt_to_string(cap)),
            ("rate_limit", self.service.rate_limit.to_string()),
            ("listen", self.service.listen_address.clone()),
            ("bfs_max_depth", opt_to_string(self.bfs_limits.max_depth)),
            ("bfs_max_seconds", secs(self.bfs_limits.max_duration)),
            ("bfs_max_visited", opt_to_string(self.bfs_limits.max_visited)),
            ("uni_queues", self.uni.queues.to_string()),
            ("uni_queue_len", self.uni.queue_len.to_string()),
            ("uni_seed", self.uni.seed.to_string()),
            ("uni_max_seconds", secs(self.uni.max_duration)),
            ("q", self.q.to_string()),
            ("spectral_k", self.spectral_k.to_string()),
            ("spectral_tol", self.spectral_tol.to_string()),
            ("spectral_max_iter", self.spectral_max_iter.to_string()),
            ("hop_sample_sources", self.hop_sample_sources.to_string()),
            ("exact_hop_threshold", self.exact_hop_threshold.to_string()),
            ("metrics_seed", self.metrics_seed.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Applies `key=value` settings on top of `self`. When `n_users` or
    /// `density_exponent` change without `id_space_bits`/`max_degree`, those
    /// are re-derived from the new values.
    pub fn apply(&mut self, settings: &BTreeMap<String, String>) -> Result<(), HarnessError> {
        fn parse<T: std::str::FromStr>(k: &str, v: &str) -> Result<T, HarnessError> {
            v.trim().parse().map_err(|_| HarnessError::new("config", format!("invalid value for {k}: {v:?}")))
        }
        fn parse_opt<T: std::str::FromStr>(k: &str, v: &str) -> Result<Option<T>, HarnessError> {
            if v.trim() == "none" {
                Ok(None)
            } else {
                parse(k, v).map(Some)
            }
        }
        let dur = |k: &str, v: &str| -> Result<Option<Duration>, HarnessError> {
            let s: Option<f64> = parse_opt(k, v)?;
            match s {
                Some(x) if !(x >= 0.0 && x.is_finite()) => Err(HarnessError::new("config", format!("invalid {k}: {v}"))),
                other => Ok(other.map(Duration::from_secs_f64)),
            }
        };
        if let Some(n) = settings.get("n_users") {
            let n: usize = parse("n_users", n)?;
            let fresh = WorldConfig::new(n.max(2));
            self.world.n_users = n;
            self.world.max_degree = fresh.max_degree;
            self.world.id_space_bits = crate::world::id_bits_for(n, self.world.density_exponent);
        }
        if let Some(d) = settings.get("density_exponent") {
            self.world.density_exponent = parse("density_exponent", d)?;
            self.world.id_space_bits = crate::world::id_bits_for(self.world.n_users, self.world.density_exponent);
        }
        for (k, v) in settings {
            let (k, v) = (k.as_str(), v.as_str());
            match k {
                "n_users" | "density_exponent" => {}
                "gamma" => self.world.gamma = parse(k, v)?,
                "min_degree" => self.world.min_degree = parse(k, v)?,
                "max_degree" => self.world.max_degree = parse(k, v)?,
                "id_space_bits" => self.world.id_space_bits = parse(k, v)?,
                "privacy_fraction" => self.world.privacy_fraction = parse(k, v)?,
                "world_seed" => self.world.rng_seed = parse(k, v)?,
                "friend_cap" => self.service.friend_cap = parse_opt(k, v)?.unwrap_or(UNCAPPED),
                "rate_limit" => self.service.rate_limit = parse(k, v)?,
                "listen" => self.service.listen_address = v.to_string(),
                "bfs_max_depth" => self.bfs_limits.max_depth = parse_opt(k, v)?,
                "bfs_max_seconds" => self.bfs_limits.max_duration = dur(k, v)?,
                "bfs_max_visited" => self.bfs_limits.max_visited = parse_opt(k, v)?,
                "uni_queues" => self.uni.queues = parse(k, v)?,
                "uni_queue_len" => self.uni.queue_len = parse(k, v)?,
                "uni_seed" => self.uni.seed = parse(k, v)?,
                "uni_max_seconds" => self.uni.max_duration = dur(k, v)?,
                "q" => self.q = parse(k, v)?,
                "spectral_k" => self.spectral_k = parse(k, v)?,
                "spectral_tol" => self.spectral_tol = parse(k, v)?,
                "spectral_max_iter" => self.spectral_max_iter = parse(k, v)?,
                "hop_sample_sources" => self.hop_sample_sources = parse(k, v)?,
                "exact_hop_threshold" => self.exact_hop_threshold = parse(k, v)?,
                "metrics_seed" => self.metrics_seed = parse(k, v)?,
                "out_dir" => self.out_dir = PathBuf::from(v),
                other => return Err(HarnessError::new("config", format!("unknown key {other:?}"))),
            }
        }
        Ok(())
    }

    pub fn from_kv(settings: &BTreeMap<String, String>) -> Result<Self, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply(settings)?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        Self::from_kv(&at("config", kv::read_file(path))?)
    }

    /// Metrics parameters for a sample taken under this configuration.
    pub fn metrics_params(&self, degree_cap: Option<usize>, id_space_bits: Option<u32>) -> MetricsParams {
        MetricsParams {
            q: self.q,
            spectral: SpectralOptions {
                k: self.spectral_k,
                tol: self.spectral_tol,
                max_iter: self.spectral_max_iter,
                seed: self.metrics_seed,
            },
            exact_hop_threshold: self.exact_hop_threshold,
            hop_sample_sources: self.hop_sample_sources,
            rng_seed: self.metrics_seed,
            degree_cap,
            id_space_bits,
        }
    }

    fn cap(&self) -> Option<usize> {
        (self.service.friend_cap != UNCAPPED).then_some(self.service.friend_cap)
    }
}

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub summary: ComparisonSummary,
    pub clean_bfs: CleanGraph,
    pub clean_uni: CleanGraph,
    pub manifest: Vec<ManifestEntry>,
    /// Difference from the manifest a previous run left in `out_dir`.
    pub drift: Option<Drift>,
    pub elapsed: Duration,
}

fn load_or_generate(cfg: &WorldConfig, dir: &Path) -> Result<SyntheticWorld, HarnessError> {
    if dir.join(WORLD_CONFIG_FILE).exists() {
        let world = at("synth", SyntheticWorld::load(dir))?;
        if world.config() != cfg {
            return Err(HarnessError::new(
                "synth",
                format!("{} holds a world with a different configuration", dir.display()),
            ));
        }
        info!("reusing world in {}", dir.display());
        return Ok(world);
    }
    let world = at("synth", generate_world(cfg))?;
    at("synth", world.save(dir))?;
    Ok(world)
}

/// Runs the whole process. Re-running into the same `out_dir` reuses the
/// world and resumes unfinished crawls.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    cfg.validate()?;
    let started = Instant::now();
    let out = &cfg.out_dir;
    at("setup", std::fs::create_dir_all(out))?;
    let previous = at("setup", read_manifest(out))?;
    at("setup", kv::write_file(out.join(EXPERIMENT_CONFIG_FILE), &cfg.to_kv()))?;

    let world = Arc::new(load_or_generate(&cfg.world, &out.join("world"))?);
    info!("{world}");

    let mut svc = cfg.service.clone();
    svc.credentials = vec![Credential::new(CRAWLER_USER, CRAWLER_PASSWORD, world.default_seed_user())];
    let handle = at("serve", service::spawn(world.clone(), svc))?;
    let endpoint = handle.endpoint();

    let t = Instant::now();
    let bfs = at(
        "crawl-bfs",
        bfs_crawl(&BfsConfig {
            endpoint: endpoint.clone(),
            username: CRAWLER_USER.into(),
            password: CRAWLER_PASSWORD.into(),
            limits: cfg.bfs_limits.clone(),
            out_dir: Some(out.join("raw_bfs")),
        }),
    )?;
    info!("BFS crawl: {} requests in {:?}", bfs.visits.len(), t.elapsed());
    let t = Instant::now();
    let uni = at(
        "crawl-uni",
        uniform_crawl(&UniConfig {
            endpoint,
            username: CRAWLER_USER.into(),
            password: CRAWLER_PASSWORD.into(),
            id_space_bits: cfg.world.id_space_bits,
            queues: cfg.uni.queues,
            queue_len: cfg.uni.queue_len,
            rng_seed: cfg.uni.seed,
            max_duration: cfg.uni.max_duration,
            out_dir: Some(out.join("raw_uni")),
        }),
    )?;
    info!("uniform crawl: {} probes in {:?}", uni.visits.len(), t.elapsed());
    at("serve", handle.shutdown())?;

    let clean_bfs = clean(&bfs);
    let clean_uni = clean(&uni);
    for (name, c) in [("clean_bfs", &clean_bfs), ("clean_uni", &clean_uni)] {
        at("clean", integrity_check(c))?;
        at("clean", c.save(out.join(name)))?;
    }

    let t = Instant::now();
    let truth = at("analyze", full_report(world.graph(), &cfg.metrics_params(None, None)))?;
    info!("ground-truth analysis in {:?}", t.elapsed());
    at("analyze", truth.write_dir(out.join("analysis_truth")))?;
    let bfs_a = at("analyze", full_report(&clean_bfs.graph, &cfg.metrics_params(cfg.cap(), None)))?
        .with_visited(&clean_bfs.visited_degrees())
        .with_crawl(bfs.stats());
    at("analyze", bfs_a.write_dir(out.join("analysis_bfs")))?;
    let uni_a = at("analyze", full_report(&clean_uni.graph, &cfg.metrics_params(cfg.cap(), Some(cfg.world.id_space_bits))))?
        .with_visited(&clean_uni.visited_degrees())
        .with_crawl(uni.stats());
    at("analyze", uni_a.write_dir(out.join("analysis_uni")))?;

    let summary = compare_reports(&bfs_a.report, &uni_a.report, &truth.report)?.relabel("bfs", "uni");
    at("summary", kv::write_file(out.join(SUMMARY_FILE), &summary.to_kv()))?;
    at("summary", std::fs::write(out.join(COMPARISON_FILE), summary.table_csv()))?;

    let manifest = at("manifest", build_manifest(out))?;
    at("manifest", write_manifest(out, &manifest))?;
    let drift = previous.map(|old| diff_manifests(&old, &manifest));
    if let Some(d) = &drift {
        if !d.is_empty() {
            warn!("outputs drifted from the previous run: {} changed, {} added, {} removed", d.changed.len(), d.added.len(), d.removed.len());
        }
    }
    Ok(ExperimentOutcome { summary, clean_bfs, clean_uni, manifest, drift, elapsed: started.elapsed() })
}
