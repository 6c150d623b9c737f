use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::diffusion::{checked_eigen, Laplacian};
use crate::error::{Error, Result};

/// Tolerance on imaginary parts and negative real parts in [`spectral_check`].
pub const SPECTRUM_TOLERANCE: f64 = 1e-9;

/// Complex spectrum of a square matrix and, when that spectrum is real and
/// non-negative, the Shannon entropy of its normalized eigenvalues.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// `[re, im]` pairs.
    pub eigenvalues: Vec<[f64; 2]>,
    pub is_real_nonnegative: bool,
    pub vn_entropy: Option<f64>,
}

fn shannon_of_weights(weights: &[f64]) -> f64 {
    let z: f64 = weights.iter().sum();
    let h: f64 = weights.iter().map(|w| w / z).filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum();
    h.max(0.0)
}

/// Entropy of the eigenvalue distribution of `exp(−τL) / Z`.
pub fn von_neumann_entropy(l: &Laplacian, tau: f64) -> Result<f64> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::arg(format!("diffusion time must be non-negative, got {tau}")));
    }
    let eig = checked_eigen(l.matrix().clone())?;
    let mu_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    // shifting by the smallest eigenvalue leaves the normalized weights unchanged
    let weights: Vec<f64> = eig.eigenvalues.iter().map(|mu| (-tau * (mu - mu_min)).exp()).collect();
    Ok(shannon_of_weights(&weights))
}

pub fn spectral_check(matrix: &DMatrix<f64>) -> Result<SpectrumReport> {
    if !matrix.is_square() || matrix.nrows() == 0 {
        return Err(Error::arg(format!("expected a non-empty square matrix, got {}x{}", matrix.nrows(), matrix.ncols())));
    }
    let ev = matrix.clone().complex_eigenvalues();
    let eigenvalues: Vec<[f64; 2]> = ev.iter().map(|c| [c.re, c.im]).collect();
    let is_real_nonnegative =
        eigenvalues.iter().all(|&[re, im]| im.abs() <= SPECTRUM_TOLERANCE && re >= -SPECTRUM_TOLERANCE);
    let vn_entropy = if is_real_nonnegative {
        let weights: Vec<f64> = eigenvalues.iter().map(|&[re, _]| re.max(0.0)).collect();
        (weights.iter().sum::<f64>() > 0.0).then(|| shannon_of_weights(&weights))
    } else {
        None
    };
    Ok(SpectrumReport { eigenvalues, is_real_nonnegative: is_real_nonnegative && vn_entropy.is_some(), vn_entropy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{heat_kernel_static, laplacian, DiffusionModel, Direction};
    use crate::linkstream::{Event, LinkStream, StaticGraph};
    use approx::assert_relative_eq;

    #[test]
    fn von_neumann_examples() {
        let empty = laplacian(&StaticGraph::from_edges(5, []));
        assert_relative_eq!(von_neumann_entropy(&empty, 3.0).unwrap(), 5f64.ln(), epsilon = 1e-14);
        let edge = laplacian(&StaticGraph::from_edges(2, [(0, 1)]));
        let e = (-2.0f64).exp();
        let (p, q) = (1.0 / (1.0 + e), e / (1.0 + e));
        assert_relative_eq!(von_neumann_entropy(&edge, 1.0).unwrap(), -p * p.ln() - q * q.ln(), epsilon = 1e-14);
        let path = laplacian(&StaticGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]));
        assert_relative_eq!(von_neumann_entropy(&path, 1e-12).unwrap(), 4f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn static_kernel_spectrum_is_real() {
        let l = laplacian(&StaticGraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]));
        let r = spectral_check(&heat_kernel_static(&l, 1.0, 0.5).unwrap()).unwrap();
        assert!(r.is_real_nonnegative);
        let h = r.vn_entropy.unwrap();
        assert!((0.0..=4f64.ln()).contains(&h));
    }

    #[test]
    fn identity_spectrum() {
        let r = spectral_check(&DMatrix::identity(3, 3)).unwrap();
        assert!(r.eigenvalues.iter().all(|&[re, im]| (re - 1.0).abs() < 1e-14 && im == 0.0));
        assert_relative_eq!(r.vn_entropy.unwrap(), 3f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn temporal_cycle_spectrum_leaves_the_positive_reals() {
        let s = LinkStream::new(
            3,
            3.0,
            [Event::new(0., 1., 0, 1), Event::new(1., 2., 1, 2), Event::new(2., 3., 0, 2)],
        )
        .unwrap();
        let m = DiffusionModel::new(&s, Direction::Forward).unwrap();
        let r = spectral_check(&m.kernel(1.0, 0.0, 3.0).unwrap().matrix).unwrap();
        assert!(!r.is_real_nonnegative, "{:?}", r.eigenvalues);
        assert_eq!(r.vn_entropy, None);
    }

    #[test]
    fn rejects_non_square() {
        assert!(spectral_check(&DMatrix::zeros(2, 3)).is_err());
    }
}
