use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::client::{FetchOutcome, OsnClient};
use super::raw::{CrawlMode, Outcome, RawCrawl, Recorder, VisitRecord};
use super::CrawlError;
use crate::graph::NodeId;

/// `len` IDs drawn uniformly with replacement from `[0, 2^id_space_bits)`.
pub fn generate_uniform_queue(len: usize, id_space_bits: u32, rng_seed: u64) -> Vec<NodeId> {
    queue_on_stream(len, id_space_bits, rng_seed, 0)
}

fn queue_on_stream(len: usize, id_space_bits: u32, rng_seed: u64, stream: u64) -> Vec<NodeId> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(stream);
    let space = 1u64 << id_space_bits;
    (0..len).map(|_| rng.random_range(0..space)).collect()
}

/// `queues` independent queues of `queue_len` IDs, each drawn from its own
/// ChaCha stream; queue 0 equals [`generate_uniform_queue`].
pub fn uniform_queues(queues: usize, queue_len: usize, id_space_bits: u32, rng_seed: u64) -> Vec<Vec<NodeId>> {
    (0..queues).map(|a| queue_on_stream(queue_len, id_space_bits, rng_seed, a as u64)).collect()
}

#[derive(Debug, Clone)]
pub struct UniConfig {
    pub endpoint: String,
    pub username: String,
    pub password: String,
    pub id_space_bits: u32,
    /// One crawling agent (and login session) per queue.
    pub queues: usize,
    pub queue_len: usize,
    pub rng_seed: u64,
    pub max_duration: Option<Duration>,
    pub out_dir: Option<PathBuf>,
}

impl UniConfig {
    pub fn validate(&self) -> Result<(), CrawlError> {
        if self.id_space_bits == 0 || self.id_space_bits > 63 {
            return Err(CrawlError::Config(format!("id_space_bits must be in 1..=63, got {}", self.id_space_bits)));
        }
        if self.queues == 0 {
            return Err(CrawlError::Config("queues must be at least 1".into()));
        }
        Ok(())
    }
}

/// Uniform rejection crawl: each agent logs in separately and probes its own
/// queue of random IDs.
pub fn uniform_crawl(cfg: &UniConfig) -> Result<RawCrawl, CrawlError> {
    cfg.validate()?;
    let deadline = cfg.max_duration.map(|d| Instant::now() + d);
    let queues = uniform_queues(cfg.queues, cfg.queue_len, cfg.id_space_bits, cfg.rng_seed);

    let mut meta = BTreeMap::new();
    meta.insert("id_space_bits".to_string(), cfg.id_space_bits.to_string());
    meta.insert("queues".to_string(), cfg.queues.to_string());
    meta.insert("queue_len".to_string(), cfg.queue_len.to_string());
    meta.insert("rng_seed".to_string(), cfg.rng_seed.to_string());
    let rec = match &cfg.out_dir {
        Some(dir) => Recorder::open(dir, CrawlMode::Uniform, meta)?,
        None => Recorder::in_memory(CrawlMode::Uniform, meta),
    };
    let mut progress = vec![0usize; cfg.queues];
    for v in &rec.crawl().visits {
        let a = v.agent as usize;
        if a >= cfg.queues || queues[a].get(progress[a]) != Some(&v.id) {
            return Err(CrawlError::Corrupt(format!("recorded probe of {} does not match agent {a}'s queue", v.id)));
        }
        progress[a] += 1;
    }
    if rec.resumed() > 0 {
        info!("resuming uniform crawl after {} recorded probes", rec.resumed());
    }
    let (base_throttled, base_retries) = (rec.crawl().throttled, rec.crawl().retries);

    let rec = Mutex::new(rec);
    let stop = AtomicBool::new(false);
    let results: Vec<Result<(u64, u64, bool), CrawlError>> = std::thread::scope(|s| {
        let handles: Vec<_> = queues
            .iter()
            .enumerate()
            .map(|(a, queue)| {
                let (rec, stop, start) = (&rec, &stop, progress[a]);
                s.spawn(move || -> Result<(u64, u64, bool), CrawlError> {
                    let client = OsnClient::login(&cfg.endpoint, &cfg.username, &cfg.password)?;
                    let mut timed_out = false;
                    for &id in &queue[start..] {
                        if stop.load(Ordering::Relaxed) {
                            break;
                        }
                        if deadline.is_some_and(|d| Instant::now() >= d) {
                            timed_out = true;
                            break;
                        }
                        let outcome = match client.friends(Some(id), deadline) {
                            Ok(o) => o,
                            Err(CrawlError::Deadline) => {
                                timed_out = true;
                                break;
                            }
                            Err(e) => {
                                stop.store(true, Ordering::Relaxed);
                                return Err(e);
                            }
                        };
                        let mut record =
                            VisitRecord { id, outcome: Outcome::Error, degree: 0, truncated: false, depth: None, agent: a as u32 };
                        let friends = match outcome {
                            FetchOutcome::Friends(list) => {
                                record.outcome = Outcome::Visited;
                                record.degree = list.friends.len();
                                record.truncated = list.truncated;
                                list.friends
                            }
                            FetchOutcome::Private => {
                                record.outcome = Outcome::Private;
                                Vec::new()
                            }
                            FetchOutcome::NotFound => {
                                record.outcome = Outcome::NotFound;
                                Vec::new()
                            }
                            FetchOutcome::Failed(e) => {
                                warn!("agent {a}: probe of {id} failed: {e}");
                                Vec::new()
                            }
                        };
                        if let Err(e) = rec.lock().expect("recorder poisoned").commit(record, &friends) {
                            stop.store(true, Ordering::Relaxed);
                            return Err(e);
                        }
                    }
                    Ok((client.throttled(), client.retries(), timed_out))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("crawl agent panicked")).collect()
    });

    let mut rec = rec.into_inner().expect("recorder poisoned");
    let (mut throttled, mut retries, mut timed_out) = (0, 0, false);
    for r in results {
        let (t, r, d) = r?;
        throttled += t;
        retries += r;
        timed_out |= d;
    }
    let total: usize = queues.iter().map(Vec::len).sum();
    let crawl = rec.crawl_mut();
    crawl.queue.enqueued = total as u64;
    crawl.queue.dequeued = crawl.visits.len() as u64;
    crawl.throttled = base_throttled + throttled;
    crawl.retries = base_retries + retries;
    crawl.stop_reason = if timed_out { "max_duration" } else { "exhausted" }.to_string();
    info!("uniform crawl stopped ({}) after {} of {total} probes", crawl.stop_reason, crawl.visits.len());
    rec.finish()
}
