use crate::graph::SocialGraph;

/// Disjoint sets with union by size and path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComponentSummary {
    /// Component sizes, descending.
    pub sizes: Vec<usize>,
    /// Largest component size over node count; 0 for the empty graph.
    pub largest_fraction: f64,
}

impl ComponentSummary {
    pub fn singletons(&self) -> usize {
        self.sizes.iter().rev().take_while(|&&s| s == 1).count()
    }
}

pub fn connected_components(g: &SocialGraph) -> ComponentSummary {
    let n = g.node_count();
    let mut uf = UnionFind::new(n);
    for a in 0..n {
        for &b in g.neighbors(a) {
            if (b as usize) > a {
                uf.union(a, b as usize);
            }
        }
    }
    let roots: Vec<usize> = (0..n).filter(|&a| uf.find(a) == a).collect();
    let mut sizes: Vec<usize> = roots.into_iter().map(|a| uf.set_size(a)).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let largest_fraction = if n == 0 { 0.0 } else { sizes[0] as f64 / n as f64 };
    ComponentSummary { sizes, largest_fraction }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::test_graphs::*;

    #[test]
    fn two_triangles() {
        let g = SocialGraph::from_edges([], [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let c = connected_components(&g);
        assert_eq!(c.sizes, vec![3, 3]);
        assert_eq!(c.largest_fraction, 0.5);
    }

    #[test]
    fn connected_and_isolated() {
        let c = connected_components(&path(7));
        assert_eq!(c.sizes, vec![7]);
        assert_eq!(c.largest_fraction, 1.0);
        let g = SocialGraph::from_edges([9], [(0, 1), (1, 2), (0, 2)]).unwrap();
        let c = connected_components(&g);
        assert_eq!(c.sizes, vec![3, 1]);
        assert_eq!(c.largest_fraction, 0.75);
        assert_eq!(c.singletons(), 1);
        assert!(connected_components(&SocialGraph::empty()).sizes.is_empty());
    }

    #[test]
    fn union_find_basics() {
        let mut uf = UnionFind::new(5);
        assert!(uf.union(0, 1));
        assert!(uf.union(3, 4));
        assert!(!uf.union(1, 0));
        assert!(uf.union(1, 4));
        assert_eq!(uf.set_size(3), 4);
        assert_eq!(uf.set_size(2), 1);
    }
}
