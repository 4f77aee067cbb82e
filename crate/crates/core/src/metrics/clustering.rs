use std::collections::BTreeMap;

use rayon::prelude::*;

use super::MetricsError;
use crate::graph::SocialGraph;

fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn triangles_at(g: &SocialGraph, v: usize) -> usize {
    let nv = g.neighbors(v);
    nv.iter().map(|&u| intersection_size(nv, g.neighbors(u as usize))).sum::<usize>() / 2
}

/// Number of triangles through each node, by node index.
pub fn triangles_per_node(g: &SocialGraph) -> Vec<usize> {
    (0..g.node_count()).into_par_iter().map(|v| triangles_at(g, v)).collect()
}

fn coefficient(triangles: usize, degree: usize) -> f64 {
    if degree < 2 {
        0.0
    } else {
        2.0 * triangles as f64 / (degree * (degree - 1)) as f64
    }
}

/// Local clustering coefficient of every node; 0 for degree below 2.
pub fn local_clustering(g: &SocialGraph) -> Vec<f64> {
    triangles_per_node(g).into_iter().enumerate().map(|(v, t)| coefficient(t, g.degree(v))).collect()
}

pub fn clustering_coefficient(g: &SocialGraph, id: u64) -> Result<f64, MetricsError> {
    let v = g.index_of(id).ok_or(MetricsError::UnknownNode(id))?;
    Ok(coefficient(triangles_at(g, v), g.degree(v)))
}

/// Mean over all nodes, including those with degree below 2.
pub fn avg_clustering(g: &SocialGraph) -> Result<f64, MetricsError> {
    if g.is_empty() {
        return Err(MetricsError::EmptyGraph);
    }
    let local = local_clustering(g);
    Ok(local.iter().sum::<f64>() / local.len() as f64)
}

/// Mean clustering coefficient per degree value.
pub fn clustering_by_degree(g: &SocialGraph, local: &[f64]) -> BTreeMap<usize, f64> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (v, &c) in local.iter().enumerate() {
        let e = acc.entry(g.degree(v)).or_default();
        e.0 += c;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::test_graphs::*;

    #[test]
    fn triangle_is_fully_clustered() {
        let g = complete(3);
        for id in 0..3 {
            assert_eq!(clustering_coefficient(&g, id).unwrap(), 1.0);
        }
    }

    #[test]
    fn path_center_is_zero() {
        assert_eq!(clustering_coefficient(&path(3), 1).unwrap(), 0.0);
        assert_eq!(clustering_coefficient(&path(3), 0).unwrap(), 0.0);
        assert_eq!(clustering_coefficient(&path(3), 9), Err(MetricsError::UnknownNode(9)));
    }

    #[test]
    fn k4_minus_edge() {
        // K4 without edge {0,1}: nodes 0,1 have C = 1, nodes 2,3 have C = 2/3
        let g = SocialGraph::from_edges([], [(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let local = local_clustering(&g);
        assert_eq!(local[0], 1.0);
        assert_eq!(local[1], 1.0);
        assert!((local[2] - 2.0 / 3.0).abs() < 1e-15);
        assert!((local[3] - 2.0 / 3.0).abs() < 1e-15);
        assert!((avg_clustering(&g).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        let by = clustering_by_degree(&g, &local);
        assert_eq!(by[&2], 1.0);
        assert!((by[&3] - 2.0 / 3.0).abs() < 1e-15);
    }
}
