use std::borrow::Cow;

use nalgebra::DMatrix;

use super::{check_rate, clamp_kernel, Direction, GraphSpectrum};
use crate::error::{Error, Result};
use crate::linkstream::{LinkStream, StaticGraph, TemporalGrid};
use crate::par::Parallelism;

/// Above this many bytes of eigenvectors the spectra are recomputed on demand
/// instead of cached.
const EAGER_CACHE_BYTES: usize = 256 << 20;

enum SpectrumCache {
    Eager(Vec<GraphSpectrum>),
    Lazy(Vec<StaticGraph>),
}

/// Inhomogeneous heat diffusion on one link stream in one direction.
///
/// Holds the temporal grid and the Laplacian spectrum of every instantaneous
/// graph. Nothing here depends on the rate, so one model serves a whole `λ`
/// sweep. Backward models are built on the reversed stream; their public
/// methods still take times in the original orientation.
pub struct DiffusionModel {
    direction: Direction,
    node_count: usize,
    t_max: f64,
    grid: TemporalGrid,
    cache: SpectrumCache,
}

/// Row-stochastic transition matrix from `t1` to `t2`.
#[derive(Clone, Debug)]
pub struct TransitionKernel {
    pub matrix: DMatrix<f64>,
    pub t1: f64,
    pub t2: f64,
    pub rate_lambda: f64,
    pub direction: Direction,
    /// Smallest entry produced by any exponential before clamping; `+inf` when
    /// no exponential was needed.
    pub min_raw_entry: f64,
}

impl TransitionKernel {
    /// Largest deviation of a row sum and of a column sum from 1.
    pub fn stochasticity_error(&self) -> (f64, f64) {
        let rows = self.matrix.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max);
        let cols = self.matrix.column_iter().map(|c| (c.sum() - 1.0).abs()).fold(0.0, f64::max);
        (rows, cols)
    }
}

impl DiffusionModel {
    pub fn new(stream: &LinkStream, direction: Direction) -> Result<Self> {
        Self::with_parallelism(stream, direction, Parallelism::default())
    }

    pub fn with_parallelism(stream: &LinkStream, direction: Direction, par: Parallelism) -> Result<Self> {
        let oriented: Cow<LinkStream> = match direction {
            Direction::Forward => Cow::Borrowed(stream),
            Direction::Backward => Cow::Owned(stream.reversed()),
        };
        let grid = oriented.temporal_grid();
        let graphs = oriented.interval_graphs(&grid);
        let footprint_bytes: usize = graphs
            .iter()
            .map(|g| g.components().iter().filter(|c| c.len() > 1).map(|c| c.len() * c.len() * 8).sum::<usize>())
            .sum();
        let cache = if footprint_bytes <= EAGER_CACHE_BYTES {
            SpectrumCache::Eager(par.try_map_range(graphs.len(), |k| GraphSpectrum::new(&graphs[k]))?)
        } else {
            SpectrumCache::Lazy(graphs)
        };
        Ok(DiffusionModel { direction, node_count: stream.node_count(), t_max: stream.t_max(), grid, cache })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Grid of the oriented stream (the reversed grid for backward models).
    pub fn grid(&self) -> &TemporalGrid {
        &self.grid
    }

    pub fn spectrum(&self, k: usize) -> Result<Cow<'_, GraphSpectrum>> {
        match &self.cache {
            SpectrumCache::Eager(s) => Ok(Cow::Borrowed(&s[k])),
            SpectrumCache::Lazy(g) => Ok(Cow::Owned(GraphSpectrum::new(&g[k])?)),
        }
    }

    /// Maps an original-time window to the model's internal orientation.
    pub(crate) fn to_internal(&self, t1: f64, t2: f64) -> (f64, f64) {
        match self.direction {
            Direction::Forward => (t1, t2),
            Direction::Backward => (self.t_max - t2, self.t_max - t1),
        }
    }

    pub(crate) fn check_window(&self, t1: f64, t2: f64) -> Result<()> {
        for t in [t1, t2] {
            if !(0.0..=self.t_max).contains(&t) {
                return Err(Error::OutOfDomain { t, t_max: self.t_max });
            }
        }
        if t1 > t2 {
            return Err(Error::arg(format!("kernel window [{t1}, {t2}] is reversed")));
        }
        Ok(())
    }

    /// `P ← P · T(a, b)` in internal time, composing partial and full
    /// inter-transition matrices chronologically. Returns the smallest raw
    /// exponential entry.
    pub(crate) fn propagate(&self, p: &mut DMatrix<f64>, lambda: f64, a: f64, b: f64) -> Result<f64> {
        let mut min_raw = f64::INFINITY;
        if b <= a {
            return Ok(min_raw);
        }
        let mut k = self.grid.locate(a);
        while k < self.grid.interval_count() {
            let (lo, hi) = self.grid.interval(k);
            if lo >= b {
                break;
            }
            let tau = b.min(hi) - a.max(lo);
            if tau > 0.0 {
                min_raw = min_raw.min(self.spectrum(k)?.apply_right(p, lambda, tau)?);
            }
            k += 1;
        }
        Ok(min_raw)
    }

    /// Transition kernel `T(t1, t2)` with times in the original orientation.
    pub fn kernel(&self, lambda: f64, t1: f64, t2: f64) -> Result<TransitionKernel> {
        check_rate(lambda)?;
        self.check_window(t1, t2)?;
        let (a, b) = self.to_internal(t1, t2);
        let mut matrix = DMatrix::identity(self.node_count, self.node_count);
        let min_raw = self.propagate(&mut matrix, lambda, a, b)?;
        clamp_kernel(&mut matrix)?;
        Ok(TransitionKernel { matrix, t1, t2, rate_lambda: lambda, direction: self.direction, min_raw_entry: min_raw })
    }
}
