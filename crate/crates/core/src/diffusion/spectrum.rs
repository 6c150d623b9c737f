use nalgebra::{DMatrix, SymmetricEigen};

use super::{checked_eigen, clamp_kernel, exp_from_eigen, Laplacian};
use crate::error::Result;
use crate::linkstream::StaticGraph;

#[derive(Clone)]
struct Component {
    nodes: Vec<usize>,
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
}

/// Laplacian spectrum of a static graph, one eigendecomposition per
/// non-trivial connected component.
///
/// The heat kernel of a graph is block diagonal over its components, with
/// isolated nodes keeping all their mass. Storing per-component spectra keeps
/// sparse instantaneous graphs cheap both in memory and when a kernel is
/// applied to a running product.
#[derive(Clone)]
pub struct GraphSpectrum {
    node_count: usize,
    components: Vec<Component>,
}

impl GraphSpectrum {
    pub fn new(graph: &StaticGraph) -> Result<Self> {
        let node_count = graph.node_count();
        let comps: Vec<Vec<usize>> = graph.components().into_iter().filter(|c| c.len() > 1).collect();
        let mut owner = vec![(usize::MAX, usize::MAX); node_count];
        for (ci, nodes) in comps.iter().enumerate() {
            for (local, &x) in nodes.iter().enumerate() {
                owner[x] = (ci, local);
            }
        }
        let mut blocks: Vec<DMatrix<f64>> = comps.iter().map(|c| DMatrix::zeros(c.len(), c.len())).collect();
        for &(u, v) in graph.edges() {
            let ((c, lu), (_, lv)) = (owner[u], owner[v]);
            let b = &mut blocks[c];
            b[(lu, lv)] = -1.0;
            b[(lv, lu)] = -1.0;
            b[(lu, lu)] += 1.0;
            b[(lv, lv)] += 1.0;
        }
        let mut components = Vec::with_capacity(comps.len());
        for (nodes, block) in comps.into_iter().zip(blocks) {
            components.push(Component { nodes, eigen: checked_eigen(block)? });
        }
        Ok(GraphSpectrum { node_count, components })
    }

    pub fn from_laplacian(l: &Laplacian) -> Result<Self> {
        let n = l.node_count();
        let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
        let edges: Vec<_> = edges.filter(|&(i, j)| l.matrix()[(i, j)] != 0.0).collect();
        Self::new(&StaticGraph::from_edges(n, edges))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Node sets of the non-trivial components.
    pub fn components(&self) -> impl Iterator<Item = &[usize]> {
        self.components.iter().map(|c| c.nodes.as_slice())
    }

    /// Whole spectrum of the Laplacian (isolated nodes contribute zeros),
    /// unsorted.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.components.iter().flat_map(|c| c.eigen.eigenvalues.iter().copied()).collect();
        let covered: usize = self.components.iter().map(|c| c.nodes.len()).sum();
        out.extend(std::iter::repeat_n(0.0, self.node_count - covered));
        out
    }

    /// Clamped heat kernel of each component, with the smallest raw entry.
    pub fn block_kernels(&self, lambda: f64, tau: f64) -> Result<(Vec<(&[usize], DMatrix<f64>)>, f64)> {
        let mut min_raw = f64::INFINITY;
        let mut out = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let mut k = exp_from_eigen(&c.eigen, lambda, tau);
            min_raw = min_raw.min(clamp_kernel(&mut k)?);
            out.push((c.nodes.as_slice(), k));
        }
        Ok((out, min_raw))
    }

    /// Dense `N×N` heat kernel. The reported minimum is `+inf` for an edgeless
    /// graph, whose kernel is the identity.
    pub fn dense_kernel(&self, lambda: f64, tau: f64) -> Result<(DMatrix<f64>, f64)> {
        let mut k = DMatrix::identity(self.node_count, self.node_count);
        let (blocks, min_raw) = self.block_kernels(lambda, tau)?;
        for (nodes, b) in blocks {
            for (i, &r) in nodes.iter().enumerate() {
                for (j, &c) in nodes.iter().enumerate() {
                    k[(r, c)] = b[(i, j)];
                }
            }
        }
        Ok((k, min_raw))
    }

    /// `P ← P · exp(−λ L τ)` touching only the columns of each component and
    /// only the rows that carry mass in them. Returns the smallest raw kernel
    /// entry seen.
    pub fn apply_right(&self, p: &mut DMatrix<f64>, lambda: f64, tau: f64) -> Result<f64> {
        debug_assert_eq!(p.ncols(), self.node_count);
        let (blocks, min_raw) = self.block_kernels(lambda, tau)?;
        for (nodes, k) in blocks {
            let rows: Vec<usize> = (0..p.nrows()).filter(|&r| nodes.iter().any(|&c| p[(r, c)] != 0.0)).collect();
            if rows.is_empty() {
                continue;
            }
            let gathered = DMatrix::from_fn(rows.len(), nodes.len(), |i, j| p[(rows[i], nodes[j])]);
            let updated = gathered * k;
            for (i, &r) in rows.iter().enumerate() {
                for (j, &c) in nodes.iter().enumerate() {
                    p[(r, c)] = updated[(i, j)];
                }
            }
        }
        Ok(min_raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{heat_kernel_static, laplacian};
    use approx::assert_relative_eq;

    fn graph() -> StaticGraph {
        StaticGraph::from_edges(7, [(0, 3), (3, 5), (1, 4), (5, 0), (6, 5)])
    }

    #[test]
    fn component_route_matches_dense_route() {
        let g = graph();
        let s = GraphSpectrum::new(&g).unwrap();
        let (k, _) = s.dense_kernel(0.8, 1.7).unwrap();
        let dense = heat_kernel_static(&laplacian(&g), 0.8, 1.7).unwrap();
        assert_relative_eq!(k, dense, epsilon = 1e-12);
    }

    #[test]
    fn apply_right_matches_dense_product() {
        let g = graph();
        let s = GraphSpectrum::new(&g).unwrap();
        let mut p = DMatrix::from_fn(7, 7, |i, j| ((i * 7 + j) % 5) as f64 / 10.0);
        let expect = &p * heat_kernel_static(&laplacian(&g), 2.0, 0.4).unwrap();
        s.apply_right(&mut p, 2.0, 0.4).unwrap();
        assert_relative_eq!(p, expect, epsilon = 1e-12);
    }

    #[test]
    fn spectrum_includes_isolated_zeros() {
        let s = GraphSpectrum::new(&graph()).unwrap();
        let mut ev = s.eigenvalues();
        ev.sort_by(f64::total_cmp);
        assert_eq!(ev.len(), 7);
        // two components with a zero mode each, plus the isolated node 2
        assert_eq!(ev.iter().filter(|x| x.abs() < 1e-12).count(), 3);
        assert_eq!(s.components().count(), 2);
    }

    #[test]
    fn from_laplacian_round_trip() {
        let l = laplacian(&graph());
        let s = GraphSpectrum::from_laplacian(&l).unwrap();
        assert_eq!(s.components().count(), 2);
    }
}
