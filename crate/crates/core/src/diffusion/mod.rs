//! Heat diffusion on link streams.
//!
//! On each grid interval the instantaneous graph is static and the transition
//! matrix is the heat kernel `exp(-λ L τ)` of its combinatorial Laplacian.
//! Kernels between arbitrary times are chronological products of those
//! inter-transition matrices (row-vector convention, left to right). Backward
//! kernels are forward kernels of the time-reversed stream.
//!
//! Exponentials are evaluated through symmetric eigendecompositions. A
//! [`DiffusionModel`] decomposes every instantaneous graph once, per connected
//! component, and reuses the spectra for every rate `λ` and every query window.

mod model;
mod spectrum;
mod store;

pub use model::{DiffusionModel, TransitionKernel};
pub use spectrum::GraphSpectrum;
pub use store::{load_store, save_store, KernelStore};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkstream::StaticGraph;

/// Entries in `[-CLAMP_TOLERANCE, 0)` are rounding noise and are set to 0.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

/// Relative bound on `‖LQ − QΛ‖∞ / ‖L‖∞` accepted from the eigensolver.
pub const EIGEN_RESIDUAL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            other => Err(Error::arg(format!("unknown direction `{other}`"))),
        }
    }
}

/// Combinatorial Laplacian `L = D − A` of an unweighted graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Laplacian {
    matrix: DMatrix<f64>,
    degrees: Vec<usize>,
}

impl Laplacian {
    pub fn new(graph: &StaticGraph) -> Self {
        let n = graph.node_count();
        let degrees = graph.degrees();
        let mut matrix = DMatrix::zeros(n, n);
        for &(u, v) in graph.edges() {
            matrix[(u, v)] = -1.0;
            matrix[(v, u)] = -1.0;
        }
        for (i, &d) in degrees.iter().enumerate() {
            matrix[(i, i)] = d as f64;
        }
        Laplacian { matrix, degrees }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn node_count(&self) -> usize {
        self.degrees.len()
    }
}

pub fn laplacian(graph: &StaticGraph) -> Laplacian {
    Laplacian::new(graph)
}

/// Symmetric eigendecomposition with the residual check applied.
pub(crate) fn checked_eigen(matrix: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let norm = inf_norm(&matrix);
    let eig = SymmetricEigen::new(matrix.clone());
    if norm > 0.0 {
        let residual = &matrix * &eig.eigenvectors - &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues);
        let r = inf_norm(&residual);
        if r > EIGEN_RESIDUAL_TOLERANCE * norm {
            return Err(Error::Numerical(format!(
                "eigen residual {r:e} exceeds {EIGEN_RESIDUAL_TOLERANCE:e} x ‖L‖∞ = {norm}"
            )));
        }
    }
    Ok(eig)
}

pub(crate) fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `Q · diag(exp(−λ μ τ)) · Qᵀ` for an eigendecomposition `(μ, Q)`.
pub(crate) fn exp_from_eigen(eig: &SymmetricEigen<f64, nalgebra::Dyn>, lambda: f64, tau: f64) -> DMatrix<f64> {
    let mut scaled = eig.eigenvectors.clone();
    for (j, mu) in eig.eigenvalues.iter().enumerate() {
        let f = (-lambda * mu * tau).exp();
        scaled.column_mut(j).scale_mut(f);
    }
    scaled * eig.eigenvectors.transpose()
}

/// Zeroes rounding-level negative entries and returns the smallest raw entry.
/// Anything below `-CLAMP_TOLERANCE` is a numerical-integrity failure.
pub(crate) fn clamp_kernel(m: &mut DMatrix<f64>) -> Result<f64> {
    let mut min_raw = f64::INFINITY;
    for x in m.iter_mut() {
        min_raw = min_raw.min(*x);
        if *x < 0.0 {
            if *x < -CLAMP_TOLERANCE {
                return Err(Error::Numerical(format!("kernel entry {x:e} below -{CLAMP_TOLERANCE:e}")));
            }
            *x = 0.0;
        }
    }
    Ok(min_raw)
}

/// `exp(−λ L τ)` by dense eigendecomposition of the whole Laplacian.
pub fn heat_kernel_static(l: &Laplacian, lambda: f64, tau: f64) -> Result<DMatrix<f64>> {
    check_rate(lambda)?;
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::arg(format!("diffusion time must be non-negative, got {tau}")));
    }
    let n = l.node_count();
    if tau == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let eig = checked_eigen(l.matrix.clone())?;
    let mut k = exp_from_eigen(&eig, lambda, tau);
    clamp_kernel(&mut k)?;
    Ok(k)
}

pub(crate) fn check_rate(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::arg(format!("diffusion rate must be positive, got {lambda}")));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Independent matrix exponential: scaling and squaring over a 30-term
    //! Taylor series. Shares no code with the eigen path.
    use nalgebra::DMatrix;

    pub fn expm_taylor(a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let norm = a.iter().map(|x| x.abs()).fold(0.0, f64::max) * n as f64;
        let mut squarings = 0;
        let mut scale = 1.0;
        while norm * scale > 0.5 {
            scale *= 0.5;
            squarings += 1;
        }
        let x = a * scale;
        let mut term = DMatrix::identity(n, n);
        let mut sum = DMatrix::identity(n, n);
        for k in 1..=30 {
            term = &term * &x / k as f64;
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }
}
