use log::warn;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::MetricsError;
use crate::graph::SocialGraph;

/// Cumulative count of connected unordered node pairs by hop distance.
#[derive(Debug, Clone, PartialEq)]
pub struct HopPlot {
    /// `(h, g(h))` for `h = 1..=max_distance`; `g(0) = 0` is implicit.
    pub points: Vec<(u32, f64)>,
    pub total_pairs: f64,
    pub exact: bool,
    pub sources: usize,
}

impl HopPlot {
    /// `g(h)`, with `g(0) = 0` and saturation past the largest distance.
    pub fn g(&self, h: u32) -> f64 {
        if h == 0 {
            return 0.0;
        }
        match self.points.get(h as usize - 1) {
            Some(&(_, g)) => g,
            None => self.total_pairs,
        }
    }
}

fn bfs_counts(g: &SocialGraph, src: usize, dist: &mut [u32], queue: &mut Vec<u32>, counts: &mut Vec<u64>) {
    const UNSEEN: u32 = u32::MAX;
    queue.clear();
    queue.push(src as u32);
    dist[src] = 0;
    let mut head = 0;
    while head < queue.len() {
        let a = queue[head] as usize;
        head += 1;
        let d = dist[a] + 1;
        for &b in g.neighbors(a) {
            if dist[b as usize] == UNSEEN {
                dist[b as usize] = d;
                queue.push(b);
                if counts.len() < d as usize {
                    counts.resize(d as usize, 0);
                }
                counts[d as usize - 1] += 1;
            }
        }
    }
    for &a in queue.iter() {
        dist[a as usize] = UNSEEN;
    }
}

fn add_counts(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    if a.len() < b.len() {
        return add_counts(b, a);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Hop plot by breadth-first search. In exact mode every node is a source.
/// Otherwise `sample_sources` nodes drawn without replacement are used and
/// counts are scaled by `n / sample_sources`; the scaled estimate is
/// unbiased for the pair counts but noisy for small samples.
pub fn hop_plot(g: &SocialGraph, exact: bool, sample_sources: usize, rng_seed: u64) -> Result<HopPlot, MetricsError> {
    let n = g.node_count();
    if n == 0 {
        return Err(MetricsError::EmptyGraph);
    }
    let sources: Vec<usize> = if exact {
        (0..n).collect()
    } else {
        if sample_sources == 0 {
            return Err(MetricsError::InvalidParameter("sample_sources must be positive".into()));
        }
        if sample_sources > n {
            warn!("hop plot: {sample_sources} sources requested but graph has {n} nodes; clamping");
        }
        let s = sample_sources.min(n);
        if s == n {
            (0..n).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let mut v = index::sample(&mut rng, n, s).into_vec();
            v.sort_unstable();
            v
        }
    };
    let counts = sources
        .par_iter()
        .fold(
            || (vec![u32::MAX; n], Vec::new(), Vec::new()),
            |(mut dist, mut queue, mut counts), &s| {
                bfs_counts(g, s, &mut dist, &mut queue, &mut counts);
                (dist, queue, counts)
            },
        )
        .map(|(_, _, c)| c)
        .reduce(Vec::new, add_counts);

    let scale = n as f64 / sources.len() as f64;
    let mut cumulative = 0u64;
    let mut points = Vec::with_capacity(counts.len());
    for (h, c) in counts.iter().enumerate() {
        cumulative += c;
        // ordered pairs -> unordered
        points.push((h as u32 + 1, cumulative as f64 * scale / 2.0));
    }
    let total_pairs = points.last().map(|p| p.1).unwrap_or(0.0);
    Ok(HopPlot { points, total_pairs, exact: sources.len() == n, sources: sources.len() })
}

/// Linearly interpolated hop count at which a fraction `q` of connected
/// pairs is reached, with `f(0) = 0`.
pub fn effective_diameter(hp: &HopPlot, q: f64) -> Result<f64, MetricsError> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(MetricsError::BadQuantile(q));
    }
    if hp.total_pairs <= 0.0 {
        return Err(MetricsError::NoConnectedPairs);
    }
    let target = q * hp.total_pairs;
    let mut prev = 0.0;
    for &(h, g) in &hp.points {
        if g >= target {
            return Ok((h - 1) as f64 + (target - prev) / (g - prev));
        }
        prev = g;
    }
    // only reachable through rounding at q = 1
    Ok(hp.points.last().map(|p| p.0 as f64).unwrap_or(0.0))
}
