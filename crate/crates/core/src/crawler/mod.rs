//! HTTP crawlers for the mock OSN service.
//!
//! [`bfs_crawl`] walks outward from the logged-in user; [`uniform_crawl`]
//! probes uniformly random IDs and keeps whatever exists. Both record every
//! request as a [`VisitRecord`] and every returned friend as an observation,
//! optionally streaming them to a resumable crawl directory.

mod bfs;
mod client;
mod raw;
mod uni;

use std::io;

use thiserror::Error;

pub use bfs::{bfs_crawl, BfsConfig, CrawlLimits};
pub use client::{FetchOutcome, OsnClient, RetryPolicy};
pub use raw::{
    CrawlMode, CrawlStats, Outcome, QueueStats, RawCrawl, Recorder, VisitRecord, META_FILE, OBSERVATIONS_FILE,
    VISITS_FILE,
};
pub use uni::{generate_uniform_queue, uniform_crawl, uniform_queues, UniConfig};

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("login failed: {0}")]
    Login(String),
    #[error("session rejected by the service")]
    Unauthorized,
    #[error("time budget exhausted")]
    Deadline,
    #[error("invalid crawl config: {0}")]
    Config(String),
    #[error("corrupt crawl directory: {0}")]
    Corrupt(String),
    #[error("crawl I/O: {0}")]
    Io(#[from] io::Error),
}
