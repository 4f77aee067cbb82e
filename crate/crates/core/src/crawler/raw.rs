//! Raw crawl records and their crash-safe on-disk form.
//!
//! A crawl directory holds three files:
//!
//! * `visits.tsv`: `id, outcome, degree, truncated, depth, agent` per
//!   attempted request, in commit order. Depth is `-` for uniform crawls.
//! * `observations.tsv`: `visited_id, friend_id` per returned friend, grouped
//!   by visit in the same order as `visits.tsv`.
//! * `meta`: crawl parameters and, once finished, summary counters.
//!
//! Each visit writes its observations before its visit line, and flushes both.
//! On resume a torn trailing line is discarded, observations beyond the last
//! committed visit are dropped, and both files are truncated to the
//! consistent prefix.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;

use super::CrawlError;
use crate::graph::NodeId;
use crate::kv;

pub const VISITS_FILE: &str = "visits.tsv";
pub const OBSERVATIONS_FILE: &str = "observations.tsv";
pub const META_FILE: &str = "meta";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Visited,
    NotFound,
    Private,
    Error,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Visited => "visited",
            Outcome::NotFound => "not_found",
            Outcome::Private => "private",
            Outcome::Error => "error",
        })
    }
}

impl FromStr for Outcome {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "visited" => Outcome::Visited,
            "not_found" => Outcome::NotFound,
            "private" => Outcome::Private,
            "error" => Outcome::Error,
            other => return Err(format!("unknown outcome {other:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrawlMode {
    Bfs,
    Uniform,
}

impl fmt::Display for CrawlMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CrawlMode::Bfs => "bfs",
            CrawlMode::Uniform => "uni",
        })
    }
}

impl FromStr for CrawlMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bfs" => Ok(CrawlMode::Bfs),
            "uni" => Ok(CrawlMode::Uniform),
            other => Err(format!("unknown crawl mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitRecord {
    pub id: NodeId,
    pub outcome: Outcome,
    /// Number of friends returned (0 unless visited).
    pub degree: usize,
    pub truncated: bool,
    /// BFS depth of the node; `None` for uniform probes.
    pub depth: Option<u32>,
    pub agent: u32,
}

impl VisitRecord {
    fn to_line(&self) -> String {
        let depth = self.depth.map_or_else(|| "-".to_string(), |d| d.to_string());
        format!("{}\t{}\t{}\t{}\t{}\t{}\n", self.id, self.outcome, self.degree, u8::from(self.truncated), depth, self.agent)
    }

    fn parse(line: &str) -> Result<Self, String> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(format!("expected 6 fields, got {}", f.len()));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| format!("bad number {s:?}"));
        let outcome: Outcome = f[1].parse()?;
        let degree = num(f[2])? as usize;
        if outcome != Outcome::Visited && degree != 0 {
            return Err(format!("{outcome} record with degree {degree}"));
        }
        Ok(VisitRecord {
            id: num(f[0])?,
            outcome,
            degree,
            truncated: match f[3] {
                "0" => false,
                "1" => true,
                other => return Err(format!("bad truncated flag {other:?}")),
            },
            depth: match f[4] {
                "-" => None,
                d => Some(num(d)? as u32),
            },
            agent: num(f[5])? as u32,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueueStats {
    pub enqueued: u64,
    pub dequeued: u64,
}

/// Counters summarizing a crawl.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CrawlStats {
    pub mode: String,
    pub attempts: u64,
    pub visited: u64,
    pub unique_visited: u64,
    pub private: u64,
    pub not_found: u64,
    pub errors: u64,
    pub truncated: u64,
    pub observations: u64,
    pub enqueued: u64,
    pub dequeued: u64,
    pub throttled: u64,
    pub retries: u64,
    pub stop_reason: String,
}

impl CrawlStats {
    /// Share of probes that hit an existing user (visited or private).
    pub fn hit_rate(&self) -> Option<f64> {
        (self.attempts > 0).then(|| (self.visited + self.private) as f64 / self.attempts as f64)
    }

    pub fn to_kv(&self) -> Vec<(String, String)> {
        let mut kv = vec![("mode".to_string(), self.mode.clone())];
        for (k, v) in [
            ("attempts", self.attempts),
            ("visited", self.visited),
            ("unique_visited", self.unique_visited),
            ("private", self.private),
            ("not_found", self.not_found),
            ("errors", self.errors),
            ("truncated", self.truncated),
            ("observations", self.observations),
            ("enqueued", self.enqueued),
            ("dequeued", self.dequeued),
            ("throttled", self.throttled),
            ("retries", self.retries),
        ] {
            kv.push((k.to_string(), v.to_string()));
        }
        kv.push(("stop_reason".to_string(), self.stop_reason.clone()));
        kv
    }

    pub fn from_kv(map: &BTreeMap<String, String>) -> Result<Self, String> {
        let num = |k: &str| -> Result<u64, String> {
            map.get(k).ok_or_else(|| format!("missing {k}"))?.parse().map_err(|_| format!("bad {k}"))
        };
        Ok(CrawlStats {
            mode: map.get("mode").cloned().unwrap_or_default(),
            attempts: num("attempts")?,
            visited: num("visited")?,
            unique_visited: num("unique_visited")?,
            private: num("private")?,
            not_found: num("not_found")?,
            errors: num("errors")?,
            truncated: num("truncated")?,
            observations: num("observations")?,
            enqueued: num("enqueued")?,
            dequeued: num("dequeued")?,
            throttled: num("throttled")?,
            retries: num("retries")?,
            stop_reason: map.get("stop_reason").cloned().unwrap_or_default(),
        })
    }
}

/// Everything a crawl collected, in commit order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCrawl {
    pub mode: CrawlMode,
    pub visits: Vec<VisitRecord>,
    /// `(visited_id, friend_id)` pairs, grouped by visit.
    pub observations: Vec<(NodeId, NodeId)>,
    pub queue: QueueStats,
    pub throttled: u64,
    pub retries: u64,
    pub stop_reason: String,
    pub meta: BTreeMap<String, String>,
}

impl RawCrawl {
    pub fn new(mode: CrawlMode) -> Self {
        RawCrawl {
            mode,
            visits: Vec::new(),
            observations: Vec::new(),
            queue: QueueStats::default(),
            throttled: 0,
            retries: 0,
            stop_reason: String::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn stats(&self) -> CrawlStats {
        let mut s = CrawlStats {
            mode: self.mode.to_string(),
            attempts: self.visits.len() as u64,
            observations: self.observations.len() as u64,
            enqueued: self.queue.enqueued,
            dequeued: self.queue.dequeued,
            throttled: self.throttled,
            retries: self.retries,
            stop_reason: self.stop_reason.clone(),
            ..CrawlStats::default()
        };
        let mut unique = HashSet::new();
        for v in &self.visits {
            match v.outcome {
                Outcome::Visited => {
                    s.visited += 1;
                    unique.insert(v.id);
                }
                Outcome::Private => s.private += 1,
                Outcome::NotFound => s.not_found += 1,
                Outcome::Error => s.errors += 1,
            }
            s.truncated += u64::from(v.truncated);
        }
        s.unique_visited = unique.len() as u64;
        s
    }

    /// Friends returned for each visit, in visit order (empty slices for
    /// non-visited outcomes).
    pub fn friend_lists(&self) -> impl Iterator<Item = (&VisitRecord, &[(NodeId, NodeId)])> {
        let mut at = 0usize;
        self.visits.iter().map(move |v| {
            let block = &self.observations[at..at + v.degree];
            at += v.degree;
            (v, block)
        })
    }

    /// Internal consistency: observation blocks line up with visits.
    pub fn check(&self) -> Result<(), String> {
        let expected: usize = self.visits.iter().map(|v| v.degree).sum();
        if expected != self.observations.len() {
            return Err(format!("{} observations for visits declaring {expected}", self.observations.len()));
        }
        for (v, block) in self.friend_lists() {
            if v.outcome != Outcome::Visited && v.degree != 0 {
                return Err(format!("{} record for {} carries friends", v.outcome, v.id));
            }
            if let Some((u, _)) = block.iter().find(|(u, _)| *u != v.id) {
                return Err(format!("observation from {u} inside block of {}", v.id));
            }
        }
        if self.queue.dequeued > self.queue.enqueued {
            return Err("dequeued more than enqueued".into());
        }
        Ok(())
    }

    /// Writes the crawl as a complete crawl directory.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), CrawlError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut obs = BufWriter::new(File::create(dir.join(OBSERVATIONS_FILE))?);
        for (u, v) in &self.observations {
            writeln!(obs, "{u}\t{v}")?;
        }
        obs.flush()?;
        let mut vis = BufWriter::new(File::create(dir.join(VISITS_FILE))?);
        for v in &self.visits {
            vis.write_all(v.to_line().as_bytes())?;
        }
        vis.flush()?;
        write_meta(dir, self)?;
        Ok(())
    }

    /// Reads a crawl directory, repairing a torn tail in memory (files are
    /// left untouched).
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, CrawlError> {
        Self::load_impl(dir.as_ref(), false)
    }

    /// Reads a crawl directory, failing with file and line on any damage.
    pub fn load_strict(dir: impl AsRef<Path>) -> Result<Self, CrawlError> {
        Self::load_impl(dir.as_ref(), true)
    }

    fn load_impl(dir: &Path, strict: bool) -> Result<Self, CrawlError> {
        let meta = kv::read_file(dir.join(META_FILE)).map_err(|e| CrawlError::Corrupt(format!("meta: {e}")))?;
        let mode = meta
            .get("mode")
            .ok_or_else(|| CrawlError::Corrupt("meta has no mode".into()))?
            .parse()
            .map_err(CrawlError::Corrupt)?;
        let rec = recover(dir, strict)?;
        let mut crawl = RawCrawl::new(mode);
        crawl.visits = rec.visits;
        crawl.observations = rec.observations;
        if let Ok(stats) = CrawlStats::from_kv(&meta) {
            crawl.queue = QueueStats { enqueued: stats.enqueued, dequeued: stats.dequeued };
            crawl.throttled = stats.throttled;
            crawl.retries = stats.retries;
            crawl.stop_reason = stats.stop_reason;
        }
        crawl.meta = meta;
        Ok(crawl)
    }
}

fn write_meta(dir: &Path, crawl: &RawCrawl) -> Result<(), CrawlError> {
    let mut kv: Vec<(String, String)> = crawl.meta.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let stats = crawl.stats().to_kv();
    let stat_keys: HashSet<&str> = stats.iter().map(|(k, _)| k.as_str()).collect();
    kv.retain(|(k, _)| !stat_keys.contains(k.as_str()));
    kv.extend(stats);
    kv::write_file(dir.join(META_FILE), &kv)?;
    Ok(())
}

struct Recovered {
    visits: Vec<VisitRecord>,
    observations: Vec<(NodeId, NodeId)>,
    visits_bytes: u64,
    observations_bytes: u64,
}

/// Complete, newline-terminated lines with their end offsets.
fn complete_lines(path: &Path, strict: bool) -> Result<Vec<(String, u64)>, CrawlError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    let mut start = 0usize;
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'\n' {
            let line = String::from_utf8_lossy(&bytes[start..i]).into_owned();
            out.push((line, (i + 1) as u64));
            start = i + 1;
        }
    }
    if start < bytes.len() {
        if strict {
            return Err(CrawlError::Corrupt(format!("{}:{}: unterminated final line", path.display(), out.len() + 1)));
        }
        warn!("{}: discarding torn trailing line", path.display());
    }
    Ok(out)
}

fn recover(dir: &Path, strict: bool) -> Result<Recovered, CrawlError> {
    let mut visits = Vec::new();
    let mut visit_ends = Vec::new();
    for (n, (line, end)) in complete_lines(&dir.join(VISITS_FILE), strict)?.into_iter().enumerate() {
        match VisitRecord::parse(&line) {
            Ok(r) => {
                visits.push(r);
                visit_ends.push(end);
            }
            Err(e) if strict => return Err(CrawlError::Corrupt(format!("{VISITS_FILE}:{}: {e}", n + 1))),
            Err(e) => {
                warn!("{VISITS_FILE} line {}: {e}; discarding it and everything after", n + 1);
                break;
            }
        }
    }

    let obs_lines = complete_lines(&dir.join(OBSERVATIONS_FILE), strict)?;
    let mut observations = Vec::new();
    let mut observations_bytes = 0u64;
    let mut at = 0usize;
    let mut kept = 0usize;
    'records: for v in &visits {
        let mut block = Vec::with_capacity(v.degree);
        let mut block_end = observations_bytes;
        let block_start = at;
        for _ in 0..v.degree {
            let Some((line, end)) = obs_lines.get(at) else {
                if strict {
                    return Err(CrawlError::Corrupt(format!("{OBSERVATIONS_FILE}: missing observations for visit of {}", v.id)));
                }
                warn!("observations for visit of {} are incomplete; discarding from there", v.id);
                break 'records;
            };
            let pair = line
                .split_once('\t')
                .and_then(|(a, b)| Some((a.parse::<NodeId>().ok()?, b.parse::<NodeId>().ok()?)))
                .ok_or_else(|| CrawlError::Corrupt(format!("{OBSERVATIONS_FILE} line {}: {line:?}", at + 1)))?;
            if pair.0 != v.id {
                return Err(CrawlError::Corrupt(format!(
                    "{OBSERVATIONS_FILE} line {}: observation from {} where visit {} was expected",
                    at + 1,
                    pair.0,
                    v.id
                )));
            }
            block.push(pair);
            block_end = *end;
            at += 1;
        }
        debug_assert_eq!(at - block_start, v.degree);
        observations_bytes = block_end;
        observations.extend(block);
        kept += 1;
    }
    visits.truncate(kept);
    let visits_bytes = kept.checked_sub(1).map_or(0, |i| visit_ends[i]);
    if observations.len() < obs_lines.len() {
        if strict {
            return Err(CrawlError::Corrupt(format!(
                "{OBSERVATIONS_FILE}:{}: observation without a committed visit",
                observations.len() + 1
            )));
        }
        warn!("dropping {} observations of an uncommitted visit", obs_lines.len() - observations.len());
    }
    Ok(Recovered { visits, observations, visits_bytes, observations_bytes })
}

/// Append-only sink for a crawl in progress, optionally backed by a crawl
/// directory.
pub struct Recorder {
    crawl: RawCrawl,
    dir: Option<PathBuf>,
    files: Option<(File, File)>,
    resumed: usize,
}

impl Recorder {
    pub fn in_memory(mode: CrawlMode, meta: BTreeMap<String, String>) -> Self {
        let mut crawl = RawCrawl::new(mode);
        crawl.meta = meta;
        Recorder { crawl, dir: None, files: None, resumed: 0 }
    }

    /// Opens `dir` for appending, recovering any records a previous run left.
    ///
    /// Parameters in `meta` that were recorded by the previous run must
    /// match; a resumed crawl with different parameters would not reproduce
    /// the same queue.
    pub fn open(dir: impl AsRef<Path>, mode: CrawlMode, meta: BTreeMap<String, String>) -> Result<Self, CrawlError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let meta_path = dir.join(META_FILE);
        let mut crawl = RawCrawl::new(mode);
        if meta_path.exists() {
            let old = kv::read_file(&meta_path).map_err(|e| CrawlError::Corrupt(format!("meta: {e}")))?;
            if old.get("mode").map(String::as_str) != Some(&mode.to_string()) {
                return Err(CrawlError::Config(format!(
                    "{} holds a {:?} crawl, not {mode}",
                    dir.display(),
                    old.get("mode")
                )));
            }
            for (k, v) in &meta {
                if let Some(prev) = old.get(k) {
                    if prev != v {
                        return Err(CrawlError::Config(format!("cannot resume: {k} was {prev}, now {v}")));
                    }
                }
            }
            if let Ok(stats) = CrawlStats::from_kv(&old) {
                crawl.throttled = stats.throttled;
                crawl.retries = stats.retries;
            }
        }
        let rec = recover(&dir, false)?;
        let resumed = rec.visits.len();
        crawl.visits = rec.visits;
        crawl.observations = rec.observations;
        crawl.meta = meta;
        crawl.meta.insert("mode".into(), mode.to_string());

        let open = |name: &str, len: u64| -> Result<File, CrawlError> {
            let f = OpenOptions::new().create(true).truncate(false).write(true).open(dir.join(name))?;
            f.set_len(len)?;
            drop(f);
            Ok(OpenOptions::new().append(true).open(dir.join(name))?)
        };
        let obs = open(OBSERVATIONS_FILE, rec.observations_bytes)?;
        let vis = open(VISITS_FILE, rec.visits_bytes)?;
        write_meta(&dir, &crawl)?;
        Ok(Recorder { crawl, dir: Some(dir), files: Some((obs, vis)), resumed })
    }

    /// Records recovered from disk when the recorder was opened.
    pub fn resumed(&self) -> usize {
        self.resumed
    }

    pub fn crawl(&self) -> &RawCrawl {
        &self.crawl
    }

    pub fn crawl_mut(&mut self) -> &mut RawCrawl {
        &mut self.crawl
    }

    /// Appends one visit and the friends it returned.
    pub fn commit(&mut self, record: VisitRecord, friends: &[NodeId]) -> Result<(), CrawlError> {
        debug_assert_eq!(record.degree, friends.len());
        if let Some((obs, vis)) = &mut self.files {
            if !friends.is_empty() {
                let mut buf = String::with_capacity(friends.len() * 24);
                for f in friends {
                    buf.push_str(&format!("{}\t{f}\n", record.id));
                }
                obs.write_all(buf.as_bytes())?;
                obs.flush()?;
            }
            vis.write_all(record.to_line().as_bytes())?;
            vis.flush()?;
        }
        self.crawl.observations.extend(friends.iter().map(|&f| (record.id, f)));
        self.crawl.visits.push(record);
        Ok(())
    }

    /// Writes final counters to `meta` and returns the crawl.
    pub fn finish(self) -> Result<RawCrawl, CrawlError> {
        if let (Some(dir), Some((obs, vis))) = (&self.dir, &self.files) {
            obs.sync_all()?;
            vis.sync_all()?;
            write_meta(dir, &self.crawl)?;
        }
        Ok(self.crawl)
    }
}
