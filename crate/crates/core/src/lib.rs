//! Crawling-based social network sampling laboratory.
//!
//! The crate generates a synthetic online social network ([`world`]), serves
//! it over HTTP with realistic access constraints ([`service`]), samples it
//! with a breadth-first and a uniform rejection crawler ([`crawler`]),
//! anonymizes and de-duplicates the harvest ([`pipeline`]), and computes the
//! usual social-network-analysis metrics ([`metrics`]). [`harness`] wires the
//! stages into reproducible BFS-versus-uniform experiments.

pub mod graph;
pub mod kv;
pub mod world;
pub mod service;
pub mod crawler;
pub mod metrics;
pub mod pipeline;
pub mod harness;
