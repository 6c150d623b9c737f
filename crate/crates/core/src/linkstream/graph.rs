use serde::{Deserialize, Serialize};

/// Undirected simple graph on nodes `0..node_count`, optionally weighted.
///
/// Edges are stored sorted with `u < v`. Footprint weights are contact
/// durations and may be 0 on degenerate windows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticGraph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    weights: Option<Vec<f64>>,
}

impl StaticGraph {
    /// Unweighted graph from any edge iterator; duplicates and orientation are
    /// normalized, self-loops dropped.
    pub fn from_edges(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut edges: Vec<_> = edges
            .into_iter()
            .filter(|&(u, v)| u != v)
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        debug_assert!(edges.iter().all(|&(_, v)| v < node_count));
        edges.sort_unstable();
        edges.dedup();
        StaticGraph { node_count, edges, weights: None }
    }

    pub(crate) fn with_weights(node_count: usize, edges: Vec<(usize, usize)>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(edges.len(), weights.len());
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        StaticGraph { node_count, edges, weights: Some(weights) }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.node_count];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.node_count).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(u, v) in &self.edges {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru.max(rv)] = ru.min(rv);
            }
        }
        let mut slot = vec![usize::MAX; self.node_count];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for x in 0..self.node_count {
            let r = find(&mut parent, x);
            if slot[r] == usize::MAX {
                slot[r] = comps.len();
                comps.push(Vec::new());
            }
            comps[slot[r]].push(x);
        }
        comps
    }
}
