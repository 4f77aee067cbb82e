use std::collections::BTreeMap;

use super::MetricsError;
use crate::graph::SocialGraph;

/// Node counts per degree.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DegreeHistogram {
    pub entries: BTreeMap<usize, usize>,
    pub n: usize,
}

impl DegreeHistogram {
    pub fn from_degrees(degrees: impl IntoIterator<Item = usize>) -> Self {
        let mut h = DegreeHistogram::default();
        for d in degrees {
            *h.entries.entry(d).or_default() += 1;
            h.n += 1;
        }
        h
    }

    /// Empirical `P(k) = n_k / n`.
    pub fn probability(&self, k: usize) -> f64 {
        self.entries.get(&k).copied().unwrap_or(0) as f64 / self.n as f64
    }
}

pub fn degree_distribution(g: &SocialGraph) -> Result<DegreeHistogram, MetricsError> {
    if g.is_empty() {
        return Err(MetricsError::EmptyGraph);
    }
    Ok(DegreeHistogram::from_degrees(g.degrees()))
}

/// `(k, fraction of nodes with degree >= k)` at every realized degree.
pub fn ccdf(hist: &DegreeHistogram) -> Result<Vec<(usize, f64)>, MetricsError> {
    if hist.n == 0 {
        return Err(MetricsError::EmptyGraph);
    }
    let mut at_least = hist.n;
    let mut out = Vec::with_capacity(hist.entries.len());
    for (&k, &count) in &hist.entries {
        out.push((k, at_least as f64 / hist.n as f64));
        at_least -= count;
    }
    Ok(out)
}

/// Least-squares slope of `ln ccdf(k)` against `ln k`, sampling the empirical
/// CCDF on a log-spaced grid (eight points per decade) within `[k_lo, k_hi]`.
/// Returns `None` with fewer than three usable grid points.
pub fn ccdf_loglog_slope(points: &[(usize, f64)], k_lo: usize, k_hi: usize) -> Option<f64> {
    if points.is_empty() || k_lo == 0 || k_hi <= k_lo {
        return None;
    }
    let step = 10f64.powf(1.0 / 8.0);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut k = k_lo as f64;
    while k <= k_hi as f64 + 1e-9 {
        let kk = k.ceil() as usize;
        // smallest realized degree >= kk carries ccdf(kk)
        let ix = points.partition_point(|p| p.0 < kk);
        if let Some(&(_, p)) = points.get(ix) {
            if p > 0.0 {
                xs.push((kk as f64).ln());
                ys.push(p.ln());
            }
        }
        k *= step;
    }
    xs.dedup();
    if xs.len() < 3 || xs.len() != ys.len() {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

pub fn avg_degree(g: &SocialGraph) -> Result<f64, MetricsError> {
    if g.is_empty() {
        return Err(MetricsError::EmptyGraph);
    }
    Ok(2.0 * g.edge_count() as f64 / g.node_count() as f64)
}

/// Lower median: element `floor((n - 1) / 2)` of the sorted degrees.
pub fn median_degree(g: &SocialGraph) -> Result<usize, MetricsError> {
    let mut d: Vec<usize> = g.degrees().collect();
    lower_median(&mut d).ok_or(MetricsError::EmptyGraph)
}

pub(crate) fn lower_median(values: &mut [usize]) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    let mid = (values.len() - 1) / 2;
    Some(*values.select_nth_unstable(mid).1)
}

/// Count, mean, sample standard deviation and lower median of a degree list.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DegreeSummary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub median: usize,
}

impl DegreeSummary {
    pub fn from_degrees(degrees: &[usize]) -> Option<Self> {
        if degrees.is_empty() {
            return None;
        }
        let n = degrees.len() as f64;
        let mean = degrees.iter().map(|&d| d as f64).sum::<f64>() / n;
        let ss: f64 = degrees.iter().map(|&d| (d as f64 - mean).powi(2)).sum();
        let sd = if degrees.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
        let median = lower_median(&mut degrees.to_vec())?;
        Some(DegreeSummary { count: degrees.len(), mean, sd, median })
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        self.sd / (self.count as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::test_graphs::*;

    #[test]
    fn star_ccdf() {
        let g = star(5);
        let c = ccdf(&degree_distribution(&g).unwrap()).unwrap();
        assert_eq!(c, vec![(1, 1.0), (5, 1.0 / 6.0)]);
        // fraction with degree >= 2 is carried by the next realized degree
        assert_eq!(ccdf_value(&c, 2), 1.0 / 6.0);
    }

    fn ccdf_value(c: &[(usize, f64)], k: usize) -> f64 {
        c.iter().find(|p| p.0 >= k).map(|p| p.1).unwrap_or(0.0)
    }

    #[test]
    fn regular_graph_single_bin() {
        let h = degree_distribution(&complete(5)).unwrap();
        assert_eq!(h.entries.len(), 1);
        assert_eq!(h.entries[&4], 5);
        assert_eq!(h.probability(4), 1.0);
    }

    #[test]
    fn averages_and_medians() {
        assert_eq!(avg_degree(&complete(3)).unwrap(), 2.0);
        assert_eq!(median_degree(&complete(3)).unwrap(), 2);
        assert!((avg_degree(&star(5)).unwrap() - 10.0 / 6.0).abs() < 1e-15);
        assert_eq!(median_degree(&star(5)).unwrap(), 1);
        assert_eq!(median_degree(&SocialGraph::empty()), Err(MetricsError::EmptyGraph));
        assert_eq!(degree_distribution(&SocialGraph::empty()), Err(MetricsError::EmptyGraph));
    }

    #[test]
    fn capped_degrees_pin_the_median() {
        let capped: Vec<usize> = [450, 900, 410, 12, 401].iter().map(|&d: &usize| d.min(400)).collect();
        assert_eq!(DegreeSummary::from_degrees(&capped).unwrap().median, 400);
    }

    #[test]
    fn summary_statistics() {
        let s = DegreeSummary::from_degrees(&[1, 2, 3, 4]).unwrap();
        assert_eq!(s.median, 2);
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn slope_of_exact_power_law() {
        // ccdf(k) = k^-1.5 exactly on every integer
        let pts: Vec<(usize, f64)> = (1..=10_000).map(|k| (k, (k as f64).powf(-1.5))).collect();
        let s = ccdf_loglog_slope(&pts, 10, 1000).unwrap();
        assert!((s + 1.5).abs() < 1e-9, "{s}");
    }
}
