//! Heat-diffusion conditional entropy on continuous-time temporal networks.
//!
//! A [`LinkStream`] holds interval-stamped undirected links. Heat diffusion on
//! the stream is the chronological product of per-interval heat kernels
//! `exp(-λ L τ)`; its conditional entropy `H(Z(t) | Z(0))` is non-decreasing in
//! time and bounded by the component structure of the static footprint. The
//! windowed variant `H(t, λ, Δ)` turns a stream into a one-dimensional signal
//! that is segmented with an exact piecewise-linear dynamic program to recover
//! graph change points.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`linkstream`] | streams, grids, footprints, reversal, snapshots, file formats |
//! | [`diffusion`] | Laplacians, heat kernels, kernel composition, kernel stores |
//! | [`entropy`] | global/local conditional entropy, bounds, spectral check |
//! | [`segmentation`] | linear cost, fixed-K and penalized search, Hausdorff |
//! | [`baselines`] | Frobenius distance and LAD snapshot detectors |
//! | [`synth`] | block-structured stream generators and benchmark families |

pub mod baselines;
pub mod diffusion;
pub mod entropy;
mod error;
pub mod linkstream;
pub mod par;
pub mod segmentation;
pub mod synth;

pub use diffusion::{Direction, DiffusionModel, KernelStore, Laplacian, TransitionKernel};
pub use entropy::{Distribution, EntropySignal, SpectrumReport};
pub use error::{Error, Result};
pub use linkstream::{Event, LinkStream, SnapshotSequence, StaticGraph, TemporalGrid};
pub use par::Parallelism;
pub use segmentation::{Segmentation, Signal};
