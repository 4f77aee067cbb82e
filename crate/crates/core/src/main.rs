use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::error;

use osnlab::crawler::{bfs_crawl, uniform_crawl, BfsConfig, CrawlLimits, UniConfig};
use osnlab::graph::{read_edge_list, read_graphml, write_graphml, SocialGraph};
use osnlab::harness::{run_experiment, ExperimentConfig};
use osnlab::metrics::{full_report, MetricsParams, SpectralOptions};
use osnlab::pipeline::{clean_dir, extract_ego_network, integrity_check, CleanGraph};
use osnlab::service::{self, Credential, ServiceConfig, UNCAPPED};
use osnlab::world::{generate_world, id_bits_for, SyntheticWorld, WorldConfig};

#[derive(Parser)]
#[command(name = "osnlab", version, about = "Social network crawling and sampling lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world.
    Synth(SynthArgs),
    /// Serve a world over HTTP until interrupted.
    Serve(ServeArgs),
    /// Crawl a running service.
    #[command(subcommand)]
    Crawl(CrawlCommand),
    /// Anonymize and de-duplicate a raw crawl.
    Clean {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract an ego network as GraphML.
    Ego {
        /// GraphML file, edge list, or clean-sample directory.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        center: u64,
        #[arg(long, default_value_t = 2)]
        radius: u32,
        #[arg(long)]
        graphml: PathBuf,
    },
    /// Compute the metrics report and plot CSVs for a graph.
    Analyze(AnalyzeArgs),
    /// Run the full BFS-versus-uniform experiment.
    Experiment {
        /// key=value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one configuration key (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    users: usize,
    #[arg(long, default_value_t = 2.5)]
    gamma: f64,
    #[arg(long, default_value_t = 0.266)]
    privacy: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    min_degree: usize,
    /// Defaults to min(500, users - 1).
    #[arg(long)]
    max_degree: Option<usize>,
    #[arg(long, default_value_t = 3)]
    density_exponent: u32,
    /// Defaults to the smallest width giving the requested density.
    #[arg(long)]
    id_bits: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    world: PathBuf,
    /// Friend-list cap, or "none".
    #[arg(long, default_value = "400")]
    cap: String,
    /// Requests per second per session; 0 disables limiting.
    #[arg(long, default_value_t = 0.0)]
    rate: f64,
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: String,
    #[arg(long, default_value = "crawler")]
    user: String,
    #[arg(long = "pass", default_value = "crawler")]
    password: String,
    /// User the credential logs in as; defaults to the world's seed user.
    #[arg(long)]
    seed_user: Option<u64>,
}

#[derive(Subcommand)]
enum CrawlCommand {
    /// Breadth-first crawl from the logged-in user.
    Bfs {
        #[arg(long)]
        endpoint: String,
        #[arg(long)]
        user: String,
        #[arg(long = "pass")]
        password: String,
        /// Maximum BFS depth, or "none".
        #[arg(long, default_value = "3")]
        depth: String,
        #[arg(long)]
        max_minutes: Option<f64>,
        #[arg(long)]
        max_visited: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Uniform rejection crawl over the ID space.
    Uni {
        #[arg(long)]
        endpoint: String,
        #[arg(long, default_value = "crawler")]
        user: String,
        #[arg(long = "pass", default_value = "crawler")]
        password: String,
        #[arg(long, default_value_t = 8)]
        queues: usize,
        #[arg(long, default_value_t = 65536)]
        queue_len: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Width of the probed ID space.
        #[arg(long, default_value_t = 32)]
        id_bits: u32,
        #[arg(long)]
        max_minutes: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    /// GraphML file, edge list, or clean-sample directory.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    q: f64,
    #[arg(long, default_value_t = 20)]
    spectral_k: usize,
    #[arg(long, default_value_t = 1e-10)]
    spectral_tol: f64,
    /// Maximum adjacency-operator applications.
    #[arg(long, default_value_t = 5000)]
    spectral_max_iter: usize,
    #[arg(long, default_value_t = 256)]
    hop_sources: usize,
    #[arg(long, default_value_t = 5000)]
    exact_hop_threshold: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Friend cap the sample was taken under.
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn minutes(m: Option<f64>) -> Result<Option<Duration>> {
    match m {
        Some(x) if !(x >= 0.0 && x.is_finite()) => bail!("minutes must be a non-negative number"),
        other => Ok(other.map(|x| Duration::from_secs_f64(x * 60.0))),
    }
}

fn optional<T: std::str::FromStr>(s: &str, what: &str) -> Result<Option<T>> {
    if s == "none" {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| anyhow::anyhow!("invalid {what}: {s:?}"))
}

/// Loads a graph (and visited degrees, for clean-sample directories).
fn load_graph(path: &Path) -> Result<(SocialGraph, Option<Vec<usize>>)> {
    if path.is_dir() {
        let c = CleanGraph::load(path).with_context(|| format!("loading clean sample {}", path.display()))?;
        let visited = (!c.visited.is_empty()).then(|| c.visited_degrees());
        return Ok((c.graph, visited));
    }
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let g = if ext.eq_ignore_ascii_case("graphml") || ext.eq_ignore_ascii_case("xml") {
        read_graphml(path).with_context(|| format!("reading {}", path.display()))?
    } else {
        read_edge_list(path).with_context(|| format!("reading {}", path.display()))?.graph
    };
    let violations = g.validate();
    if !violations.is_empty() {
        bail!("{} failed integrity checks: {}", path.display(), violations[0]);
    }
    Ok((g, None))
}

fn print_kv(kv: &[(String, String)]) {
    for (k, v) in kv {
        println!("{k}={v}");
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => {
            let mut cfg = WorldConfig::new(a.users);
            cfg.gamma = a.gamma;
            cfg.privacy_fraction = a.privacy;
            cfg.rng_seed = a.seed;
            cfg.min_degree = a.min_degree;
            if let Some(m) = a.max_degree {
                cfg.max_degree = m;
            }
            cfg.density_exponent = a.density_exponent;
            cfg.id_space_bits = a.id_bits.unwrap_or_else(|| id_bits_for(a.users, a.density_exponent));
            let world = generate_world(&cfg)?;
            world.save(&a.out)?;
            println!("{world}");
        }
        Command::Serve(a) => {
            let world = SyntheticWorld::load(&a.world).with_context(|| format!("loading world {}", a.world.display()))?;
            let seed = a.seed_user.unwrap_or_else(|| world.default_seed_user());
            if !world.is_id_assigned(seed) {
                bail!("seed user {seed} does not exist");
            }
            let mut cfg = ServiceConfig::new(vec![Credential::new(&a.user, &a.password, seed)]);
            cfg.friend_cap = optional(&a.cap, "cap")?.unwrap_or(UNCAPPED);
            cfg.rate_limit = a.rate;
            cfg.listen_address = a.listen;
            println!("{world}; login {} logs in as {seed}", a.user);
            service::serve_blocking(Arc::new(world), cfg)?;
        }
        Command::Crawl(CrawlCommand::Bfs { endpoint, user, password, depth, max_minutes, max_visited, out }) => {
            let limits = CrawlLimits { max_depth: optional(&depth, "depth")?, max_duration: minutes(max_minutes)?, max_visited };
            let crawl = bfs_crawl(&BfsConfig { endpoint, username: user, password, limits, out_dir: Some(out) })?;
            print_kv(&crawl.stats().to_kv());
        }
        Command::Crawl(CrawlCommand::Uni { endpoint, user, password, queues, queue_len, seed, id_bits, max_minutes, out }) => {
            let crawl = uniform_crawl(&UniConfig {
                endpoint,
                username: user,
                password,
                id_space_bits: id_bits,
                queues,
                queue_len,
                rng_seed: seed,
                max_duration: minutes(max_minutes)?,
                out_dir: Some(out),
            })?;
            print_kv(&crawl.stats().to_kv());
        }
        Command::Clean { raw, out } => {
            let c = clean_dir(&raw, &out)?;
            let mut kv = c.to_kv();
            kv.extend(integrity_check(&c)?.to_kv().into_iter().filter(|(k, _)| k == "isolated_nodes" || k == "duplicate_fraction"));
            print_kv(&kv);
        }
        Command::Ego { graph, center, radius, graphml } => {
            let (g, _) = load_graph(&graph)?;
            let ego = extract_ego_network(&g, center, radius)?;
            write_graphml(&ego, &graphml)?;
            println!("ego network of {center} (radius {radius}): {} nodes, {} edges", ego.node_count(), ego.edge_count());
        }
        Command::Analyze(a) => {
            let (g, visited) = load_graph(&a.graph)?;
            let params = MetricsParams {
                q: a.q,
                spectral: SpectralOptions { k: a.spectral_k, tol: a.spectral_tol, max_iter: a.spectral_max_iter, seed: a.seed },
                exact_hop_threshold: a.exact_hop_threshold,
                hop_sample_sources: a.hop_sources,
                rng_seed: a.seed,
                degree_cap: a.cap,
                id_space_bits: None,
            };
            let mut analysis = full_report(&g, &params)?;
            if let Some(v) = visited {
                analysis = analysis.with_visited(&v);
            }
            analysis.write_dir(&a.out)?;
            print_kv(&analysis.report.to_kv());
        }
        Command::Experiment { config, set, out } => {
            let mut cfg = match &config {
                Some(p) => ExperimentConfig::from_file(p)?,
                None => ExperimentConfig::default(),
            };
            let mut overrides = BTreeMap::new();
            for s in &set {
                let (k, v) = s.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got {s:?}"))?;
                overrides.insert(k.trim().to_string(), v.trim().to_string());
            }
            cfg.apply(&overrides)?;
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            let outcome = run_experiment(&cfg)?;
            for v in &outcome.summary.verdicts {
                println!(
                    "{}.{}: statistic={} threshold={} positive={}{}",
                    v.sample,
                    v.name,
                    v.statistic,
                    v.threshold,
                    v.positive,
                    if v.applicable { "" } else { " (n/a)" }
                );
            }
            if let Some(d) = &outcome.drift {
                println!("drift: {} changed, {} added, {} removed", d.changed.len(), d.added.len(), d.removed.len());
            }
            println!("outputs in {} ({:.1}s)", cfg.out_dir.display(), outcome.elapsed.as_secs_f64());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
