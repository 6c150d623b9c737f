//! Snapshot-based comparison detectors: windowed Frobenius distances and
//! Laplacian anomaly detection (LAD).

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::diffusion::GraphSpectrum;
use crate::error::{Error, Result};
use crate::linkstream::{SnapshotSequence, StaticGraph};
use crate::par::Parallelism;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrobeniusSignal {
    /// `values[i]` is `F(ℓ + i)`.
    pub values: Vec<f64>,
    pub window_len_ell: usize,
}

impl FrobeniusSignal {
    /// Snapshot index of `values[0]`.
    pub fn offset(&self) -> usize {
        self.window_len_ell
    }
}

/// Normalized squared distance between two binary adjacency matrices given as
/// edge sets: `‖A − B‖²_F / (‖A‖_F ‖B‖_F)`. `None` when exactly one is empty.
fn normalized_distance(a: &BTreeSet<(usize, usize)>, b: &BTreeSet<(usize, usize)>) -> Option<f64> {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => Some(0.0),
        (true, false) | (false, true) => None,
        _ => {
            // each undirected edge contributes two unit entries
            let diff = a.symmetric_difference(b).count() as f64;
            Some(diff / (a.len() as f64 * b.len() as f64).sqrt())
        }
    }
}

/// `F(t)`, the mean normalized distance from `A_t` to its `ℓ` predecessors.
///
/// A pair with both snapshots empty contributes 0. A pair with exactly one
/// empty snapshot is left out of the mean; if every pair is left out the value
/// is 0.
pub fn frobenius_signal(seq: &SnapshotSequence, ell: usize) -> Result<FrobeniusSignal> {
    if ell == 0 {
        return Err(Error::arg("Frobenius window length must be at least 1"));
    }
    if seq.len() <= ell {
        return Err(Error::arg(format!("{} snapshots leave no value for window length {ell}", seq.len())));
    }
    let sets: Vec<BTreeSet<(usize, usize)>> = seq.iter().map(|e| e.iter().copied().collect()).collect();
    let values = (ell..seq.len())
        .map(|t| {
            let terms: Vec<f64> = (1..=ell).filter_map(|j| normalized_distance(&sets[t], &sets[t - j])).collect();
            if terms.is_empty() {
                0.0
            } else {
                terms.iter().sum::<f64>() / terms.len() as f64
            }
        })
        .collect();
    Ok(FrobeniusSignal { values, window_len_ell: ell })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadScore {
    /// One unit (or zero) vector per snapshot.
    pub signatures: Vec<Vec<f64>>,
    /// `scores[i]` is `z(window_len + i)`.
    pub scores: Vec<f64>,
    pub window_len: usize,
    pub k_components: usize,
}

impl LadScore {
    /// Snapshot indices of the `k` most anomalous scores, ascending.
    pub fn top_k(&self, k: usize) -> Result<Vec<usize>> {
        Ok(lad_top_k(&self.scores, k)?.into_iter().map(|i| i + self.window_len).collect())
    }
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Unit-normalized top-`k` singular values of each snapshot Laplacian.
pub fn lad_signatures(seq: &SnapshotSequence, k: usize, par: Parallelism) -> Result<Vec<Vec<f64>>> {
    let n = seq.node_count();
    if k == 0 || k > n {
        return Err(Error::arg(format!("number of components must be in 1..={n}, got {k}")));
    }
    par.try_map_range(seq.len(), |s| {
        let g = StaticGraph::from_edges(n, seq.edges(s).iter().copied());
        // the Laplacian is PSD, so its singular values are its eigenvalues
        let mut sv: Vec<f64> = GraphSpectrum::new(&g)?.eigenvalues().into_iter().map(|x| x.max(0.0)).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv.truncate(k);
        Ok(normalize(sv))
    })
}

/// `z(t) = 1 − |σ(t) · u|` with `u` the dominant left singular vector of the
/// previous `window_len` signatures.
pub fn lad_scores(signatures: &[Vec<f64>], window_len: usize) -> Result<LadScore> {
    if window_len == 0 {
        return Err(Error::arg("LAD window length must be at least 1"));
    }
    let k = signatures.first().map_or(0, Vec::len);
    if signatures.iter().any(|s| s.len() != k) {
        return Err(Error::arg("signatures differ in length"));
    }
    let scores = (window_len..signatures.len()).map(|t| score(&signatures[t - window_len..t], &signatures[t])).collect();
    Ok(LadScore { signatures: signatures.to_vec(), scores, window_len, k_components: k })
}

fn score(history: &[Vec<f64>], current: &[f64]) -> f64 {
    let k = current.len();
    let m = DMatrix::from_fn(k, history.len(), |i, j| history[j][i]);
    let current_zero = current.iter().all(|&x| x == 0.0);
    if m.iter().all(|&x| x == 0.0) {
        return if current_zero { 0.0 } else { 1.0 };
    }
    let svd = m.svd(true, false);
    let top = svd.singular_values.imax();
    let u = svd.u.expect("left singular vectors requested").column(top).into_owned();
    let dot: f64 = u.iter().zip(current).map(|(a, b)| a * b).sum();
    (1.0 - dot.abs()).clamp(0.0, 1.0)
}

/// Positions of the `k` largest scores, ascending; ties favour earlier positions.
pub fn lad_top_k(scores: &[f64], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > scores.len() {
        return Err(Error::arg(format!("cannot select {k} of {} scores", scores.len())));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut picked = order[..k].to_vec();
    picked.sort_unstable();
    Ok(picked)
}
