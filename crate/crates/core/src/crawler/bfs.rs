use std::collections::{BTreeMap, HashSet, VecDeque};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use log::info;

use super::client::{FetchOutcome, OsnClient};
use super::raw::{CrawlMode, Outcome, RawCrawl, Recorder, VisitRecord};
use super::CrawlError;
use crate::graph::NodeId;

/// Stopping rules for a breadth-first crawl.
///
/// Nodes are visited at depths `0..max_depth`; friends found at depth
/// `max_depth` are recorded as observations but never requested. The time
/// budget applies to each run separately, including resumed runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CrawlLimits {
    pub max_depth: Option<u32>,
    pub max_duration: Option<Duration>,
    /// Successful visits after which the crawl stops.
    pub max_visited: Option<usize>,
}

impl Default for CrawlLimits {
    fn default() -> Self {
        CrawlLimits { max_depth: Some(3), max_duration: None, max_visited: None }
    }
}

impl CrawlLimits {
    pub fn validate(&self) -> Result<(), CrawlError> {
        if self.max_depth == Some(0) {
            return Err(CrawlError::Config("max_depth must be at least 1".into()));
        }
        if self.max_visited == Some(0) {
            return Err(CrawlError::Config("max_visited must be at least 1".into()));
        }
        if self.max_depth.is_none() && self.max_duration.is_none() && self.max_visited.is_none() {
            return Err(CrawlError::Config("at least one of max_depth, max_duration, max_visited must be set".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BfsConfig {
    pub endpoint: String,
    pub username: String,
    pub password: String,
    pub limits: CrawlLimits,
    /// Crawl directory; an existing one is resumed.
    pub out_dir: Option<PathBuf>,
}

struct Frontier {
    queue: VecDeque<(NodeId, u32)>,
    seen: HashSet<NodeId>,
    max_depth: Option<u32>,
}

impl Frontier {
    fn new(seed: NodeId, max_depth: Option<u32>) -> Self {
        Frontier { queue: VecDeque::from([(seed, 0)]), seen: HashSet::from([seed]), max_depth }
    }

    /// Marks friends of a node at `depth` as discovered and queues those
    /// within the depth limit. Returns the number queued.
    fn expand(&mut self, friends: impl IntoIterator<Item = NodeId>, depth: u32) -> u64 {
        let mut queued = 0;
        for f in friends {
            if self.seen.insert(f) && self.max_depth.is_none_or(|m| depth + 1 < m) {
                self.queue.push_back((f, depth + 1));
                queued += 1;
            }
        }
        queued
    }
}

/// Rebuilds the frontier by replaying recorded visits in order.
fn replay(crawl: &RawCrawl, seed: NodeId, max_depth: Option<u32>) -> Result<(Frontier, u64, u64), CrawlError> {
    let mut frontier = Frontier::new(seed, max_depth);
    let (mut enqueued, mut dequeued) = (1u64, 0u64);
    for (rec, block) in crawl.friend_lists() {
        let Some((id, depth)) = frontier.queue.pop_front() else {
            return Err(CrawlError::Corrupt(format!("recorded visit of {} beyond the end of the BFS queue", rec.id)));
        };
        if id != rec.id {
            return Err(CrawlError::Corrupt(format!("replay expected a visit of {id}, log has {}", rec.id)));
        }
        dequeued += 1;
        enqueued += frontier.expand(block.iter().map(|&(_, f)| f), depth);
    }
    Ok((frontier, enqueued, dequeued))
}

/// Breadth-first crawl from the logged-in user.
pub fn bfs_crawl(cfg: &BfsConfig) -> Result<RawCrawl, CrawlError> {
    cfg.limits.validate()?;
    let started = Instant::now();
    let deadline = cfg.limits.max_duration.map(|d| started + d);
    let client = OsnClient::login(&cfg.endpoint, &cfg.username, &cfg.password)?;
    let seed = client.self_id();

    let mut meta = BTreeMap::new();
    meta.insert("seed".to_string(), seed.to_string());
    meta.insert("max_depth".to_string(), cfg.limits.max_depth.map_or("none".into(), |d| d.to_string()));
    let mut rec = match &cfg.out_dir {
        Some(dir) => Recorder::open(dir, CrawlMode::Bfs, meta)?,
        None => Recorder::in_memory(CrawlMode::Bfs, meta),
    };
    let (mut frontier, mut enqueued, mut dequeued) = replay(rec.crawl(), seed, cfg.limits.max_depth)?;
    if rec.resumed() > 0 {
        info!("resuming BFS after {} recorded visits, {} queued", rec.resumed(), frontier.queue.len());
    }
    let mut visited = rec.crawl().visits.iter().filter(|v| v.outcome == Outcome::Visited).count();
    let base_throttled = rec.crawl().throttled;
    let base_retries = rec.crawl().retries;

    let stop_reason = loop {
        if cfg.limits.max_visited.is_some_and(|m| visited >= m) {
            break "max_visited";
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break "max_duration";
        }
        let Some(&(id, depth)) = frontier.queue.front() else {
            break "exhausted";
        };
        let outcome = match client.friends(Some(id), deadline) {
            Ok(o) => o,
            Err(CrawlError::Deadline) => break "max_duration",
            Err(e) => return Err(e),
        };
        frontier.queue.pop_front();
        dequeued += 1;
        let mut record = VisitRecord { id, outcome: Outcome::Error, degree: 0, truncated: false, depth: Some(depth), agent: 0 };
        let friends = match outcome {
            FetchOutcome::Friends(list) => {
                record.outcome = Outcome::Visited;
                record.degree = list.friends.len();
                record.truncated = list.truncated;
                visited += 1;
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
            FetchOutcome::Failed(_) => Vec::new(),
        };
        rec.commit(record, &friends)?;
        enqueued += frontier.expand(friends.iter().copied(), depth);
    };

    let crawl = rec.crawl_mut();
    crawl.queue.enqueued = enqueued;
    crawl.queue.dequeued = dequeued;
    crawl.throttled = base_throttled + client.throttled();
    crawl.retries = base_retries + client.retries();
    crawl.stop_reason = stop_reason.to_string();
    info!(
        "BFS stopped ({stop_reason}) after {} requests, {visited} visited, {} queued",
        crawl.visits.len(),
        frontier.queue.len()
    );
    rec.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits_validation() {
        assert!(CrawlLimits::default().validate().is_ok());
        let none = CrawlLimits { max_depth: None, max_duration: None, max_visited: None };
        assert!(none.validate().is_err());
        assert!(CrawlLimits { max_depth: Some(0), ..Default::default() }.validate().is_err());
        assert!(CrawlLimits { max_depth: None, max_visited: Some(5), max_duration: None }.validate().is_ok());
    }

    #[test]
    fn frontier_depth_cutoff() {
        let mut f = Frontier::new(1, Some(2));
        let (id, d) = f.queue.pop_front().unwrap();
        assert_eq!(f.expand([2, 3], d), 2);
        let (id2, d2) = f.queue.pop_front().unwrap();
        assert_eq!((id, id2, d2), (1, 2, 1));
        // depth-2 friends are discovered but not queued
        assert_eq!(f.expand([1, 4], d2), 0);
        assert!(f.seen.contains(&4));
        assert_eq!(f.queue.len(), 1);
    }
}
