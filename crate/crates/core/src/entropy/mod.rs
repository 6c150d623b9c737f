//! Conditional entropy of heat diffusion.
//!
//! For a transition kernel `T` and an initial law `p`, the conditional entropy
//! is `Σ_i p_i H(T_i,:)` with the Shannon row entropy `H` in nats. Forward
//! global entropy `H(Z(t) | Z(0))` is non-decreasing in `t`; the local variant
//! evaluates the same quantity on the window `[t − Δ/2, t + Δ/2]` with a
//! uniform start.

mod local;
mod signal;
mod spectral;

pub use local::{
    local_entropy, local_entropy_signal, local_entropy_signals, snapshot_entropy_signals, GridMode,
};
pub use signal::{read_signal, write_signal, EntropySignal};
pub use spectral::{spectral_check, von_neumann_entropy, SpectrumReport};

use nalgebra::DMatrix;

use crate::diffusion::{check_rate, DiffusionModel, Direction};
use crate::error::{Error, Result};
use crate::linkstream::LinkStream;

/// Tolerance on probability rows: sum within this of 1, entries above its
/// negative.
pub const ROW_TOLERANCE: f64 = 1e-10;

/// Probability vector over the node set.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::arg("distribution over an empty node set"));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::arg("distribution has a negative or NaN entry"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::arg(format!("distribution sums to {sum}, not 1")));
        }
        Ok(Distribution { probs })
    }

    pub fn uniform(n: usize) -> Self {
        Distribution { probs: vec![1.0 / n as f64; n] }
    }

    pub fn point_mass(n: usize, i: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[i] = 1.0;
        Distribution { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn check_row<'a>(row: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    let mut sum = 0.0;
    for &r in row {
        if !(r >= -ROW_TOLERANCE) {
            return Err(Error::Numerical(format!("probability row has entry {r:e}")));
        }
        sum += r;
    }
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        return Err(Error::Numerical(format!("probability row sums to {sum}")));
    }
    Ok(())
}

/// Shannon entropy `−Σ r log r` (nats) of one probability row, `0 log 0 = 0`.
pub fn row_entropy(row: &[f64]) -> Result<f64> {
    check_row(row)?;
    Ok(entropy_unchecked(row.iter().copied()))
}

fn entropy_unchecked(row: impl Iterator<Item = f64>) -> f64 {
    let h: f64 = row.filter(|&r| r > 0.0).map(|r| -r * r.ln()).sum();
    h.max(0.0)
}

/// `D_KL(row ‖ uniform) = Σ r log(N r)` with zero terms dropped.
pub fn kl_to_uniform(row: &[f64]) -> f64 {
    let n = row.len() as f64;
    row.iter().filter(|&&r| r > 0.0).map(|&r| r * (n * r).ln()).sum::<f64>().max(0.0)
}

/// `Σ_i p_i H(T_i,:)` for a row-stochastic matrix.
pub fn conditional_entropy(kernel: &DMatrix<f64>, p0: &Distribution) -> Result<f64> {
    if kernel.nrows() != p0.len() || kernel.ncols() != p0.len() {
        return Err(Error::arg("kernel and distribution sizes differ"));
    }
    // columns of the transpose are contiguous rows of the kernel
    let t = kernel.transpose();
    let mut h = 0.0;
    for (i, col) in t.column_iter().enumerate() {
        check_row(col.iter())?;
        if p0.probs[i] > 0.0 {
            h += p0.probs[i] * entropy_unchecked(col.iter().copied());
        }
    }
    Ok(h)
}

/// Global conditional entropy at time `t`.
///
/// Forward models diffuse over `[0, t]`. Backward models diffuse from `t_max`
/// back to `t`, so the backward value is non-increasing when read in original
/// time.
pub fn global_entropy(model: &DiffusionModel, lambda: f64, t: f64, p0: &Distribution) -> Result<f64> {
    let (t1, t2) = match model.direction() {
        Direction::Forward => (0.0, t),
        Direction::Backward => (t, model.t_max()),
    };
    let k = model.kernel(lambda, t1, t2)?;
    conditional_entropy(&k.matrix, p0)
}

/// Global entropy at increasing `eval_times`, propagating one running kernel.
pub fn global_entropy_curve(
    model: &DiffusionModel,
    lambda: f64,
    eval_times: &[f64],
    p0: &Distribution,
) -> Result<EntropySignal> {
    check_rate(lambda)?;
    if eval_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::arg("evaluation times must be non-decreasing"));
    }
    for &t in eval_times {
        model.check_window(t, t)?;
    }
    let n = model.node_count();
    let t_max = model.t_max();
    // internal diffusion time from the process start
    let elapsed = |t: f64| match model.direction() {
        Direction::Forward => t,
        Direction::Backward => t_max - t,
    };
    let mut order: Vec<usize> = (0..eval_times.len()).collect();
    if model.direction() == Direction::Backward {
        order.reverse();
    }
    let mut values = vec![0.0; eval_times.len()];
    let mut p = DMatrix::identity(n, n);
    let mut reached = 0.0;
    for i in order {
        let s = elapsed(eval_times[i]);
        model.propagate(&mut p, lambda, reached, s)?;
        reached = reached.max(s);
        let mut clamped = p.clone();
        crate::diffusion::clamp_kernel(&mut clamped)?;
        values[i] = conditional_entropy(&clamped, p0)?;
    }
    Ok(EntropySignal {
        times: eval_times.to_vec(),
        values,
        rate_lambda: lambda,
        window_delta: None,
        direction: model.direction(),
    })
}

/// `Σ_k (|V_k| / N) log |V_k|` over the connected components of the
/// unweighted footprint on `[a, b]`.
pub fn upper_bound(stream: &LinkStream, a: f64, b: f64) -> Result<f64> {
    let g = stream.footprint(a, b, false)?;
    let n = stream.node_count() as f64;
    Ok(g.components().iter().map(|c| c.len() as f64 / n * (c.len() as f64).ln()).sum())
}
