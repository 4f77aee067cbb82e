use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use log::warn;

use super::{
    avg_degree, ccdf, ccdf_loglog_slope, clustering_by_degree, connected_components, degree_distribution, effective_diameter,
    hop_plot, local_clustering, median_degree, top_singular_values, DegreeHistogram, DegreeSummary, HopPlot, MetricsError,
    SpectralOptions,
};
use crate::crawler::CrawlStats;
use crate::graph::SocialGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsParams {
    pub q: f64,
    pub spectral: SpectralOptions,
    /// Graphs with at most this many nodes get an exact hop plot.
    pub exact_hop_threshold: usize,
    pub hop_sample_sources: usize,
    pub rng_seed: u64,
    /// Server-side friend-list cap the sample was taken under, if any.
    pub degree_cap: Option<usize>,
    /// Width of the ID space the sample was drawn from, if known.
    pub id_space_bits: Option<u32>,
}

impl Default for MetricsParams {
    fn default() -> Self {
        MetricsParams {
            q: 0.9,
            spectral: SpectralOptions::default(),
            exact_hop_threshold: 5000,
            hop_sample_sources: 256,
            rng_seed: 1,
            degree_cap: None,
            id_space_bits: None,
        }
    }
}

/// Table-shaped summary of one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub params: MetricsParams,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub avg_degree: f64,
    pub median_degree: usize,
    pub max_degree: usize,
    /// Degrees of every node in the graph.
    pub degrees: DegreeSummary,
    /// Node count per degree over the whole graph.
    pub degree_histogram: BTreeMap<usize, usize>,
    /// Observed (possibly capped) degrees of the users a crawler visited.
    pub visited: Option<DegreeSummary>,
    pub crawl: Option<CrawlStats>,
    pub effective_diameter: Option<f64>,
    pub hop_exact: bool,
    pub hop_sources: usize,
    pub connected_pairs: f64,
    pub component_sizes: Vec<usize>,
    pub largest_component_fraction: f64,
    pub avg_clustering: f64,
    pub clustering_by_degree: BTreeMap<usize, f64>,
    pub ccdf_slope: Option<f64>,
    pub top_singular_values: Vec<f64>,
    pub spectral_converged: bool,
    pub spectral_degenerate: bool,
    /// `avg_degree <= sigma_1 <= max_degree`, up to tolerance.
    pub spectral_bounds_ok: bool,
    /// Principal right singular vector over node indices.
    pub principal_vector: Vec<f64>,
}

impl MetricsReport {
    /// Degrees a crawler would have observed: visited users when present,
    /// otherwise the whole graph.
    pub fn observed_degrees(&self) -> DegreeSummary {
        self.visited.unwrap_or(self.degrees)
    }

    /// Whole-graph degrees as a crawler would see them through a friend
    /// cap: every degree replaced by `min(degree, cap)`.
    pub fn capped_degrees(&self, cap: Option<usize>) -> Option<DegreeSummary> {
        let cap = cap.unwrap_or(usize::MAX);
        let degrees: Vec<usize> = self
            .degree_histogram
            .iter()
            .flat_map(|(&k, &n)| std::iter::repeat_n(k.min(cap), n))
            .collect();
        DegreeSummary::from_degrees(&degrees)
    }

    pub fn singleton_components(&self) -> usize {
        self.component_sizes.iter().rev().take_while(|&&s| s == 1).count()
    }

    pub fn to_kv(&self) -> Vec<(String, String)> {
        let mut kv: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| kv.push((k.to_string(), v));
        put("n_nodes", self.n_nodes.to_string());
        put("n_edges", self.n_edges.to_string());
        put("avg_degree", self.avg_degree.to_string());
        put("median_degree", self.median_degree.to_string());
        put("max_degree", self.max_degree.to_string());
        put("degree_sd", self.degrees.sd.to_string());
        match &self.visited {
            Some(v) => {
                put("visited_count", v.count.to_string());
                put("visited_avg_degree", v.mean.to_string());
                put("visited_median_degree", v.median.to_string());
                put("visited_degree_sd", v.sd.to_string());
            }
            None => put("visited_count", "none".into()),
        }
        put("effective_diameter", self.effective_diameter.map_or("undefined".into(), |d| d.to_string()));
        put("q", self.params.q.to_string());
        put("hop_mode", if self.hop_exact { "exact" } else { "sampled" }.into());
        put("hop_sources", self.hop_sources.to_string());
        put("connected_pairs", self.connected_pairs.to_string());
        put("components", self.component_sizes.len().to_string());
        put("largest_component_size", self.component_sizes.first().copied().unwrap_or(0).to_string());
        put("largest_component_fraction", self.largest_component_fraction.to_string());
        put("singleton_components", self.singleton_components().to_string());
        put("avg_clustering", self.avg_clustering.to_string());
        put("ccdf_slope", self.ccdf_slope.map_or("undefined".into(), |s| s.to_string()));
        put("top_singular_value", self.top_singular_values.first().copied().unwrap_or(0.0).to_string());
        put("spectral_k", self.params.spectral.k.to_string());
        put("spectral_tol", self.params.spectral.tol.to_string());
        put("spectral_max_iter", self.params.spectral.max_iter.to_string());
        put("spectral_converged", self.spectral_converged.to_string());
        put("spectral_degenerate", self.spectral_degenerate.to_string());
        put("spectral_bounds_ok", self.spectral_bounds_ok.to_string());
        put("exact_hop_threshold", self.params.exact_hop_threshold.to_string());
        put("hop_sample_sources", self.params.hop_sample_sources.to_string());
        put("rng_seed", self.params.rng_seed.to_string());
        put("degree_cap", self.params.degree_cap.map_or("none".into(), |c| c.to_string()));
        put("id_space_bits", self.params.id_space_bits.map_or("none".into(), |c| c.to_string()));
        if let Some(c) = &self.crawl {
            kv.extend(c.to_kv().into_iter().map(|(k, v)| (format!("crawl_{k}"), v)));
        }
        kv
    }
}

/// A report plus the series behind its plots.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub report: MetricsReport,
    pub histogram: DegreeHistogram,
    pub ccdf: Vec<(usize, f64)>,
    pub hop_plot: HopPlot,
}

impl Analysis {
    /// Attaches the observed degrees of crawler-visited users.
    pub fn with_visited(mut self, degrees: &[usize]) -> Self {
        self.report.visited = DegreeSummary::from_degrees(degrees);
        self
    }

    pub fn with_crawl(mut self, stats: CrawlStats) -> Self {
        self.report.crawl = Some(stats);
        self
    }

    /// Writes `report` plus the plot-ready CSV series under `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> io::Result<Vec<String>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut emit = |name: &str, body: String| -> io::Result<()> {
            fs::write(dir.join(name), body)?;
            written.push(name.to_string());
            Ok(())
        };
        emit("report", crate::kv::render(&self.report.to_kv()))?;

        let mut s = String::from("k,count\n");
        for (k, c) in &self.histogram.entries {
            let _ = writeln!(s, "{k},{c}");
        }
        emit("degree.csv", s)?;

        let mut s = String::from("k,ccdf\n");
        for (k, p) in &self.ccdf {
            let _ = writeln!(s, "{k},{p}");
        }
        emit("ccdf.csv", s)?;

        let mut s = String::from("h,g\n");
        for (h, g) in &self.hop_plot.points {
            let _ = writeln!(s, "{h},{g}");
        }
        emit("hops.csv", s)?;

        let mut s = String::from("k,mean_cc\n");
        for (k, c) in &self.report.clustering_by_degree {
            let _ = writeln!(s, "{k},{c}");
        }
        emit("cc_by_degree.csv", s)?;

        let mut s = String::from("rank,value\n");
        for (i, v) in self.report.top_singular_values.iter().enumerate() {
            let _ = writeln!(s, "{},{v}", i + 1);
        }
        emit("spectrum.csv", s)?;

        let mut mags: Vec<f64> = self.report.principal_vector.iter().map(|x| x.abs()).collect();
        mags.sort_unstable_by(|a, b| b.total_cmp(a));
        let mut s = String::from("rank,magnitude\n");
        for (i, m) in mags.iter().enumerate() {
            let _ = writeln!(s, "{},{m}", i + 1);
        }
        emit("principal_vector.csv", s)?;
        Ok(written)
    }
}

/// Computes every metric. The hop plot is exact up to
/// `params.exact_hop_threshold` nodes and sampled above.
pub fn full_report(g: &SocialGraph, params: &MetricsParams) -> Result<Analysis, MetricsError> {
    if g.is_empty() {
        return Err(MetricsError::EmptyGraph);
    }
    let histogram = degree_distribution(g)?;
    let ccdf_points = ccdf(&histogram)?;
    let degrees: Vec<usize> = g.degrees().collect();
    let summary = DegreeSummary::from_degrees(&degrees).ok_or(MetricsError::EmptyGraph)?;
    let avg = avg_degree(g)?;
    let max_degree = g.max_degree();

    let exact = g.node_count() <= params.exact_hop_threshold;
    let hp = hop_plot(g, exact, params.hop_sample_sources, params.rng_seed)?;
    let eff = match effective_diameter(&hp, params.q) {
        Ok(d) => Some(d),
        Err(MetricsError::NoConnectedPairs) => None,
        Err(e) => return Err(e),
    };

    let comps = connected_components(g);
    let local = local_clustering(g);
    let avg_cc = local.iter().sum::<f64>() / local.len() as f64;
    let cc_by_degree = clustering_by_degree(g, &local);

    let min_positive = histogram.entries.keys().copied().find(|&k| k > 0).unwrap_or(1);
    let ccdf_slope = ccdf_loglog_slope(&ccdf_points, 2 * min_positive, max_degree / 2);

    let spectrum = top_singular_values(g, &params.spectral)?;
    let top = spectrum.values.first().copied().unwrap_or(0.0);
    let slack = 1e-6 * top.max(1.0);
    let bounds_ok = top + slack >= avg && top <= max_degree as f64 + slack;
    if !bounds_ok {
        warn!("top singular value {top} outside [avg degree {avg}, max degree {max_degree}]");
    }

    let report = MetricsReport {
        params: params.clone(),
        n_nodes: g.node_count(),
        n_edges: g.edge_count(),
        avg_degree: avg,
        median_degree: median_degree(g)?,
        max_degree,
        degrees: summary,
        degree_histogram: histogram.entries.clone(),
        visited: None,
        crawl: None,
        effective_diameter: eff,
        hop_exact: hp.exact,
        hop_sources: hp.sources,
        connected_pairs: hp.total_pairs,
        component_sizes: comps.sizes,
        largest_component_fraction: comps.largest_fraction,
        avg_clustering: avg_cc,
        clustering_by_degree: cc_by_degree,
        ccdf_slope,
        spectral_converged: spectrum.all_converged(),
        spectral_degenerate: spectrum.any_degenerate(),
        spectral_bounds_ok: bounds_ok,
        principal_vector: spectrum.vectors.into_iter().next().unwrap_or_default(),
        top_singular_values: spectrum.values,
    };
    Ok(Analysis { report, histogram, ccdf: ccdf_points, hop_plot: hp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::test_graphs::*;

    fn params() -> MetricsParams {
        MetricsParams { spectral: SpectralOptions { k: 3, tol: 1e-14, max_iter: 5000, seed: 3 }, ..MetricsParams::default() }
    }

    #[test]
    fn triangle_report() {
        let r = full_report(&complete(3), &params()).unwrap().report;
        assert_eq!((r.n_nodes, r.n_edges), (3, 3));
        assert_eq!(r.avg_degree, 2.0);
        assert!((r.effective_diameter.unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(r.largest_component_fraction, 1.0);
        assert_eq!(r.avg_clustering, 1.0);
        assert!((r.top_singular_values[0] - 2.0).abs() < 1e-9);
        assert!(r.spectral_bounds_ok);
    }

    #[test]
    fn edgeless_report() {
        let g = SocialGraph::from_edges([1, 2, 3], []).unwrap();
        let a = full_report(&g, &params()).unwrap();
        assert_eq!(a.report.component_sizes, vec![1, 1, 1]);
        assert_eq!(a.report.avg_clustering, 0.0);
        assert_eq!(a.hop_plot.total_pairs, 0.0);
        assert_eq!(a.report.effective_diameter, None);
        let kv = a.report.to_kv();
        assert!(kv.contains(&("effective_diameter".into(), "undefined".into())));
    }

    #[test]
    fn empty_graph_is_an_error() {
        assert_eq!(full_report(&SocialGraph::empty(), &params()), Err(MetricsError::EmptyGraph));
    }

    #[test]
    fn writes_every_series() {
        let dir = tempfile::tempdir().unwrap();
        let a = full_report(&star(5), &params()).unwrap();
        let files = a.write_dir(dir.path()).unwrap();
        for f in ["report", "degree.csv", "ccdf.csv", "hops.csv", "cc_by_degree.csv", "spectrum.csv", "principal_vector.csv"] {
            assert!(files.contains(&f.to_string()));
            assert!(dir.path().join(f).exists());
        }
        let hops = fs::read_to_string(dir.path().join("hops.csv")).unwrap();
        assert_eq!(hops, "h,g\n1,5\n2,15\n");
    }
}
