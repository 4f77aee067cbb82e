//! Social-network-analysis metrics over a [`SocialGraph`].
//!
//! Every computation is a pure function of an immutable graph. Parallel
//! sections reduce with integer sums or in node order, so results do not
//! depend on the number of worker threads.

mod clustering;
mod components;
mod degree;
mod hops;
mod report;
mod spectral;

use thiserror::Error;

pub use clustering::{avg_clustering, clustering_by_degree, clustering_coefficient, local_clustering, triangles_per_node};
pub use components::{connected_components, ComponentSummary, UnionFind};
pub use degree::{avg_degree, ccdf, ccdf_loglog_slope, degree_distribution, median_degree, DegreeHistogram, DegreeSummary};
pub use hops::{effective_diameter, hop_plot, HopPlot};
pub use report::{full_report, Analysis, MetricsParams, MetricsReport};
pub use spectral::{principal_right_singular_vector, top_singular_values, SpectralOptions, SpectralResult};

#[cfg(doc)]
use crate::graph::SocialGraph;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("graph is empty")]
    EmptyGraph,
    #[error("node {0} is not in the graph")]
    UnknownNode(u64),
    #[error("quantile must be in (0, 1], got {0}")]
    BadQuantile(f64),
    #[error("effective diameter is undefined: no connected pairs")]
    NoConnectedPairs,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
