use std::fmt::Write as _;

use super::HarnessError;
use crate::metrics::MetricsReport;

/// One-sided 1% critical value of the standard normal.
pub const DEGREE_BIAS_Z: f64 = 2.326;
/// Largest-component shortfall against the truth that counts as fragmented.
pub const FRAGMENTATION_MARGIN: f64 = 0.01;
/// Share of refused friend lists above which a sample's visible population
/// differs from the actual one.
pub const PRIVACY_THRESHOLD: f64 = 0.01;
/// Standard errors a hit rate may stray from the ID-space density.
pub const HIT_RATE_SIGMAS: f64 = 3.0;

pub const VERDICT_NAMES: [&str; 5] =
    ["degree_bias", "median_pinning", "component_fragmentation", "privacy_discrepancy", "hit_rate"];

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: &'static str,
    pub sample: String,
    pub statistic: f64,
    pub threshold: f64,
    /// Whether the test applies to this sample at all (e.g. hit rate needs a
    /// known ID space).
    pub applicable: bool,
    pub positive: bool,
    pub detail: String,
}

/// Two samples set against the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSummary {
    pub labels: [String; 2],
    pub samples: [MetricsReport; 2],
    pub truth: MetricsReport,
    pub verdicts: Vec<Verdict>,
}

impl ComparisonSummary {
    pub fn verdict(&self, sample: &str, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.sample == sample && v.name == name)
    }

    pub fn relabel(mut self, a: &str, b: &str) -> Self {
        let old = self.labels.clone();
        for v in &mut self.verdicts {
            v.sample = if v.sample == old[0] { a.to_string() } else { b.to_string() };
        }
        self.labels = [a.to_string(), b.to_string()];
        self
    }

    pub fn to_kv(&self) -> Vec<(String, String)> {
        let mut kv = Vec::new();
        for v in &self.verdicts {
            let p = format!("verdict.{}.{}", v.sample, v.name);
            kv.push((format!("{p}.statistic"), v.statistic.to_string()));
            kv.push((format!("{p}.threshold"), v.threshold.to_string()));
            kv.push((format!("{p}.applicable"), v.applicable.to_string()));
            kv.push((format!("{p}.positive"), v.positive.to_string()));
            kv.push((format!("{p}.detail"), v.detail.clone()));
        }
        for (label, r) in [("truth", &self.truth), (&self.labels[0], &self.samples[0]), (&self.labels[1], &self.samples[1])] {
            for (k, v) in r.to_kv() {
                kv.push((format!("{label}.{k}"), v));
            }
        }
        kv
    }

    /// Side-by-side table of headline metrics.
    pub fn table_csv(&self) -> String {
        type Column = fn(&MetricsReport) -> String;
        let rows: [(&str, Column); 10] = [
            ("nodes", |r| r.n_nodes.to_string()),
            ("edges", |r| r.n_edges.to_string()),
            ("observed_avg_degree", |r| r.observed_degrees().mean.to_string()),
            ("observed_median_degree", |r| r.observed_degrees().median.to_string()),
            ("graph_avg_degree", |r| r.avg_degree.to_string()),
            ("effective_diameter", |r| r.effective_diameter.map_or("undefined".into(), |d| d.to_string())),
            ("avg_clustering", |r| r.avg_clustering.to_string()),
            ("largest_component_fraction", |r| r.largest_component_fraction.to_string()),
            ("singleton_components", |r| r.singleton_components().to_string()),
            ("top_singular_value", |r| r.top_singular_values.first().copied().unwrap_or(0.0).to_string()),
        ];
        let mut s = format!("metric,truth,{},{}\n", self.labels[0], self.labels[1]);
        for (name, f) in rows {
            let _ = writeln!(s, "{name},{},{},{}", f(&self.truth), f(&self.samples[0]), f(&self.samples[1]));
        }
        s
    }
}

fn verdicts_for(label: &str, s: &MetricsReport, truth: &MetricsReport) -> Vec<Verdict> {
    let cap = s.params.degree_cap;
    let obs = s.observed_degrees();
    let expected = truth.capped_degrees(cap).unwrap_or(truth.degrees);
    let v = |name, statistic: f64, threshold: f64, applicable: bool, positive: bool, detail: String| Verdict {
        name,
        sample: label.to_string(),
        statistic,
        threshold,
        applicable,
        positive,
        detail,
    };
    let mut out = Vec::with_capacity(5);

    // Observed mean degree against the truth as seen through the same cap.
    let se = obs.std_error();
    let z = if se > 0.0 {
        (obs.mean - expected.mean) / se
    } else if obs.mean == expected.mean {
        0.0
    } else {
        f64::INFINITY.copysign(obs.mean - expected.mean)
    };
    out.push(v(
        "degree_bias",
        z,
        DEGREE_BIAS_Z,
        true,
        z > DEGREE_BIAS_Z,
        format!("observed mean {} vs true mean {} (n={})", obs.mean, expected.mean, obs.count),
    ));

    let (pinned, applicable) = match cap {
        Some(c) => (obs.median == c && truth.degrees.median > c, true),
        None => (false, false),
    };
    out.push(v(
        "median_pinning",
        obs.median as f64,
        cap.map_or(f64::NAN, |c| c as f64),
        applicable,
        pinned,
        if pinned { "pinned at cap".to_string() } else { "not pinned".to_string() },
    ));

    let threshold = truth.largest_component_fraction - FRAGMENTATION_MARGIN;
    out.push(v(
        "component_fragmentation",
        s.largest_component_fraction,
        threshold,
        true,
        s.largest_component_fraction < threshold,
        format!("{} components, {} singletons", s.component_sizes.len(), s.singleton_components()),
    ));

    let (share, has_crawl) = match &s.crawl {
        Some(c) if c.private + c.visited > 0 => (c.private as f64 / (c.private + c.visited) as f64, true),
        Some(_) => (0.0, true),
        None => (0.0, false),
    };
    out.push(v(
        "privacy_discrepancy",
        share,
        PRIVACY_THRESHOLD,
        has_crawl,
        share > PRIVACY_THRESHOLD,
        "private / (private + visited)".to_string(),
    ));

    match (&s.crawl, s.params.id_space_bits) {
        (Some(c), Some(bits)) if c.attempts > 0 => {
            let p = truth.n_nodes as f64 / 2f64.powi(bits as i32);
            let rate = c.hit_rate().unwrap_or(0.0);
            let band = HIT_RATE_SIGMAS * (p * (1.0 - p) / c.attempts as f64).sqrt();
            out.push(v(
                "hit_rate",
                rate,
                p,
                true,
                (rate - p).abs() > band,
                format!("{} hits in {} probes; expected density {p} +/- {band}", c.visited + c.private, c.attempts),
            ));
        }
        (c, _) => out.push(v(
            "hit_rate",
            c.as_ref().and_then(|c| c.hit_rate()).unwrap_or(f64::NAN),
            f64::NAN,
            false,
            false,
            "no ID-space probing in this sample".to_string(),
        )),
    }
    out
}

/// Verdicts for both samples against `truth`.
///
/// Reports must share `q` and `spectral_k`; the two samples must share their
/// friend cap. Verdicts depend only on each sample and the truth, so swapping
/// `a` and `b` swaps labels and nothing else.
pub fn compare_reports(a: &MetricsReport, b: &MetricsReport, truth: &MetricsReport) -> Result<ComparisonSummary, HarnessError> {
    for (label, r) in [("a", a), ("b", b)] {
        if r.params.q != truth.params.q {
            return Err(HarnessError::new("compare", format!("sample {label} uses q={}, truth q={}", r.params.q, truth.params.q)));
        }
        if r.params.spectral.k != truth.params.spectral.k {
            return Err(HarnessError::new(
                "compare",
                format!("sample {label} uses spectral_k={}, truth {}", r.params.spectral.k, truth.params.spectral.k),
            ));
        }
    }
    if a.params.degree_cap != b.params.degree_cap {
        return Err(HarnessError::new(
            "compare",
            format!("samples were taken under different caps ({:?} vs {:?})", a.params.degree_cap, b.params.degree_cap),
        ));
    }
    let mut verdicts = verdicts_for("a", a, truth);
    verdicts.extend(verdicts_for("b", b, truth));
    Ok(ComparisonSummary {
        labels: ["a".to_string(), "b".to_string()],
        samples: [a.clone(), b.clone()],
        truth: truth.clone(),
        verdicts,
    })
}
