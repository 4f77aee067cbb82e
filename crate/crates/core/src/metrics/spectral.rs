//! Top singular values of the 0/1 adjacency operator.
//!
//! The adjacency matrix is symmetric, so its singular values are the absolute
//! eigenvalues and its eigenvectors are right singular vectors. Eigenpairs
//! come from thick-restart Lanczos on `A` with full reorthogonalization:
//! both ends of the spectrum converge together, and `+sigma / -sigma` pairs
//! of bipartite components stay distinct instead of merging into a double
//! eigenvalue of `A^2`. When the Krylov space becomes invariant, a fresh random
//! direction is injected, which also uncovers repeated eigenvalues. Graphs of
//! at most [`FULL_BASIS_LIMIT`] nodes use a basis spanning the whole space, so
//! their spectra are exact up to rounding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::MetricsError;
use crate::graph::SocialGraph;

/// Largest graph solved with a full-dimensional Krylov basis.
pub const FULL_BASIS_LIMIT: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    pub k: usize,
    /// Residual tolerance `||A v - theta v|| <= tol * sigma_1` for each pair.
    pub tol: f64,
    /// Maximum applications of `A`; at least `k` are always made.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { k: 20, tol: 1e-10, max_iter: 5000, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    /// Descending singular values.
    pub values: Vec<f64>,
    /// Unit right singular vectors over node indices, one per value. The
    /// first is the Perron vector: eigenvector of the largest eigenvalue,
    /// first clearly nonzero entry positive.
    pub vectors: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
    pub residuals: Vec<f64>,
    pub matvecs: usize,
    /// True where a value is within `sqrt(tol)` (relative) of its successor,
    /// so the corresponding vectors are not individually determined.
    pub degenerate: Vec<bool>,
}

impl SpectralResult {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    pub fn any_degenerate(&self) -> bool {
        self.degenerate.iter().any(|&d| d)
    }
}

fn apply(g: &SocialGraph, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().enumerate().with_min_len(1024).for_each(|(a, out)| {
        *out = g.neighbors(a).iter().map(|&b| x[b as usize]).sum();
    });
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() >= 1 << 14 {
        a.par_chunks(4096).zip(b.par_chunks(4096)).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>()).sum()
    } else {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    if y.len() >= 1 << 14 {
        y.par_chunks_mut(4096).zip(x.par_chunks(4096)).for_each(|(ys, xs)| {
            ys.iter_mut().zip(xs).for_each(|(p, q)| *p += a * q);
        });
    } else {
        y.iter_mut().zip(x).for_each(|(p, q)| *p += a * q);
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn scale(v: &mut [f64], s: f64) {
    v.iter_mut().for_each(|x| *x *= s);
}

/// Removes the components of `v` along the orthonormal `basis` (two passes)
/// and returns the accumulated coefficients.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut coef = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (c, b) in coef.iter_mut().zip(basis) {
            let x = dot(v, b);
            axpy(v, -x, b);
            *c += x;
        }
    }
    coef
}

/// Flips `v` so its first clearly nonzero entry is positive.
fn fix_sign(v: &mut [f64]) {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-9 * peak) {
        if *first < 0.0 {
            scale(v, -1.0);
        }
    }
}

/// Eigen-decomposition of a small dense symmetric matrix by cyclic Jacobi
/// rotations. Returns eigenvalues and the matrix whose columns are the
/// matching unit eigenvectors.
pub(crate) fn symmetric_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let total: f64 = a.iter().flatten().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let (arp, arq) = (a[r][p], a[r][q]);
                    a[r][p] = c * arp - s * arq;
                    a[r][q] = s * arp + c * arq;
                }
                for r in 0..n {
                    let (apr, aqr) = (a[p][r], a[q][r]);
                    a[p][r] = c * apr - s * aqr;
                    a[q][r] = s * apr + c * aqr;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

struct Ritz {
    theta: Vec<f64>,
    /// Column `i` holds the coordinates of Ritz vector `i` in the basis.
    s: Vec<Vec<f64>>,
    /// Ritz indices ordered by decreasing `|theta|`, largest eigenvalue
    /// first among near-ties.
    order: Vec<usize>,
}

fn rayleigh_ritz(h: &[Vec<f64>], size: usize) -> Ritz {
    let sub: Vec<Vec<f64>> = h[..size].iter().map(|row| row[..size].to_vec()).collect();
    let (theta, s) = symmetric_eigen(sub);
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| theta[b].abs().total_cmp(&theta[a].abs()).then(theta[b].total_cmp(&theta[a])));
    Ritz { theta, s, order }
}

fn combine(basis: &[Vec<f64>], s: &[Vec<f64>], col: usize, n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for (l, b) in basis.iter().enumerate() {
        let c = s[l][col];
        if c != 0.0 {
            axpy(&mut y, c, b);
        }
    }
    y
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..4 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        orthogonalize(&mut v, basis);
        let nv = norm(&v);
        if nv > 1e-8 {
            scale(&mut v, 1.0 / nv);
            return Some(v);
        }
    }
    None
}

pub fn top_singular_values(g: &SocialGraph, opts: &SpectralOptions) -> Result<SpectralResult, MetricsError> {
    let n = g.node_count();
    if n == 0 {
        return Err(MetricsError::EmptyGraph);
    }
    if opts.k == 0 {
        return Err(MetricsError::InvalidParameter("k must be at least 1".into()));
    }
    if opts.max_iter == 0 || !(opts.tol > 0.0) {
        return Err(MetricsError::InvalidParameter("max_iter and tol must be positive".into()));
    }
    let k = opts.k.min(n);
    let m = if n <= FULL_BASIS_LIMIT { n } else { n.min((2 * k + 20).max(3 * k)) };
    let keep = (k + (m - k) / 2).min(m - 1);
    let norm_bound = g.max_degree().max(1) as f64;
    let breakdown = 1e-12 * norm_bound;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut start: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let ns = norm(&start);
    scale(&mut start, 1.0 / ns);
    basis.push(start);
    let mut h = vec![vec![0.0; m]; m];
    let mut matvecs = 0usize;
    let mut w = vec![0.0; n];

    // Invariant at the top of each cycle: `basis` holds the vectors whose
    // columns of `h` are known plus the next vector to expand.
    let mut j = 0usize;
    let (ritz, beta, converged_all) = loop {
        let mut beta = 0.0;
        let mut residual: Option<Vec<f64>> = None;
        while j < m {
            apply(g, &basis[j], &mut w);
            matvecs += 1;
            let mut r = w.clone();
            let coef = orthogonalize(&mut r, &basis);
            for (i, c) in coef.iter().enumerate() {
                h[i][j] = *c;
                h[j][i] = *c;
            }
            beta = norm(&r);
            j += 1;
            if beta > breakdown {
                scale(&mut r, 1.0 / beta);
            } else {
                beta = 0.0;
            }
            if j == m || (matvecs >= opts.max_iter && j >= k) {
                residual = (beta > 0.0).then_some(r);
                break;
            }
            if beta > 0.0 {
                h[j][j - 1] = beta;
                h[j - 1][j] = beta;
                basis.push(r);
            } else {
                // invariant subspace: continue from a fresh direction
                match random_unit(&mut rng, n, &basis) {
                    Some(v) => basis.push(v),
                    None => break,
                }
            }
        }
        let size = j;
        debug_assert_eq!(basis.len(), size);
        let ritz = rayleigh_ritz(&h, size);
        let scale_ref = ritz.order.first().map_or(0.0, |&i| ritz.theta[i].abs()).max(f64::MIN_POSITIVE);
        let want = k.min(size);
        let converged_all = size == n
            || ritz.order[..want].iter().all(|&i| (beta * ritz.s[size - 1][i]).abs() <= opts.tol * scale_ref);
        if converged_all || matvecs >= opts.max_iter {
            break (ritz, beta, converged_all);
        }

        // thick restart: keep the leading Ritz vectors plus the residual
        let kept: Vec<usize> = ritz.order[..keep.min(size - 1)].to_vec();
        let mut next: Vec<Vec<f64>> = kept.iter().map(|&i| combine(&basis, &ritz.s, i, n)).collect();
        let mut hn = vec![vec![0.0; m]; m];
        for (a, &i) in kept.iter().enumerate() {
            hn[a][a] = ritz.theta[i];
        }
        let fresh = match residual {
            Some(mut r) => {
                orthogonalize(&mut r, &next);
                let nr = norm(&r);
                scale(&mut r, 1.0 / nr);
                for (a, &i) in kept.iter().enumerate() {
                    let c = beta * ritz.s[size - 1][i];
                    hn[a][kept.len()] = c;
                    hn[kept.len()][a] = c;
                }
                Some(r)
            }
            None => random_unit(&mut rng, n, &next),
        };
        let Some(fresh) = fresh else {
            break (ritz, beta, converged_all);
        };
        next.push(fresh);
        j = kept.len();
        basis = next;
        h = hn;
    };

    let size = ritz.theta.len();
    let basis = &basis[..size];
    let want = k.min(size);
    let scale_ref = ritz.order.first().map_or(0.0, |&i| ritz.theta[i].abs()).max(f64::MIN_POSITIVE);
    let mut order: Vec<usize> = ritz.order[..want].to_vec();
    // the Perron eigenvalue leads, even when rounding puts -sigma ahead
    if let Some(perron) = (0..size).max_by(|&a, &b| ritz.theta[a].total_cmp(&ritz.theta[b])) {
        if want > 0 && order[0] != perron && ritz.theta[perron] >= ritz.theta[order[0]].abs() * (1.0 - 1e-9) {
            match order.iter().position(|&i| i == perron) {
                Some(pos) => {
                    order.remove(pos);
                }
                None => {
                    order.pop();
                }
            }
            order.insert(0, perron);
        }
    }
    let mut res = SpectralResult {
        values: Vec::with_capacity(k),
        vectors: Vec::with_capacity(k),
        converged: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
        matvecs,
        degenerate: Vec::with_capacity(k),
    };
    for &i in &order {
        let r = if size == n { 0.0 } else { (beta * ritz.s[size - 1][i]).abs() };
        res.values.push(ritz.theta[i].abs());
        res.vectors.push(combine(basis, &ritz.s, i, n));
        res.residuals.push(r);
        res.converged.push(converged_all || r <= opts.tol * scale_ref);
    }
    if res.values.len() > 1 && res.values[0] < res.values[1] {
        res.values[0] = res.values[1];
    }
    // an invariant subspace smaller than k leaves the rest of the spectrum at 0
    while res.values.len() < k {
        res.values.push(0.0);
        res.vectors.push(vec![0.0; n]);
        res.residuals.push(0.0);
        res.converged.push(false);
    }
    let gap = opts.tol.sqrt();
    for i in 0..res.values.len() {
        let degenerate = res.values.get(i + 1).is_some_and(|&next| res.values[i] - next <= gap * res.values[i].max(1.0));
        res.degenerate.push(degenerate);
    }
    if let Some(v) = res.vectors.first_mut() {
        let nv = norm(v);
        if nv > 0.0 {
            scale(v, 1.0 / nv);
        }
        fix_sign(v);
    }
    Ok(res)
}

/// Unit principal right singular vector over node indices, first nonzero
/// entry positive. The boolean reports convergence.
pub fn principal_right_singular_vector(g: &SocialGraph, opts: &SpectralOptions) -> Result<(Vec<f64>, bool), MetricsError> {
    let r = top_singular_values(g, &SpectralOptions { k: 1, ..*opts })?;
    Ok((r.vectors.into_iter().next().unwrap_or_default(), r.converged[0]))
}
