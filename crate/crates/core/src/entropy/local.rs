use nalgebra::DMatrix;

use super::{conditional_entropy, Distribution, EntropySignal};
use crate::diffusion::{check_rate, clamp_kernel, DiffusionModel, Direction};
use crate::error::{Error, Result};
use crate::linkstream::SnapshotSequence;
use crate::par::Parallelism;

/// Where a local entropy signal is sampled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridMode {
    /// Every time of the stream's temporal grid.
    Events,
    /// `Δ/2, Δ/2 + step, ...` up to `t_max − Δ/2`.
    Uniform { step: f64 },
}

/// Conditional entropy of `T(t − Δ/2, t + Δ/2)` from a uniform start.
pub fn local_entropy(model: &DiffusionModel, lambda: f64, t: f64, delta: f64) -> Result<f64> {
    check_delta(model, delta)?;
    check_center(model, t, delta)?;
    window_entropy(model, lambda, t - delta / 2.0, t + delta / 2.0)
}

fn check_delta(model: &DiffusionModel, delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::arg(format!("window length must be non-negative, got {delta}")));
    }
    if delta > model.t_max() {
        return Err(Error::arg(format!("window length {delta} exceeds t_max = {}", model.t_max())));
    }
    Ok(())
}

fn check_center(model: &DiffusionModel, t: f64, delta: f64) -> Result<()> {
    let half = delta / 2.0;
    if !(t >= half && t <= model.t_max() - half) {
        return Err(Error::OutOfDomain { t, t_max: model.t_max() });
    }
    Ok(())
}

fn window_entropy(model: &DiffusionModel, lambda: f64, a: f64, b: f64) -> Result<f64> {
    check_rate(lambda)?;
    let (lo, hi) = model.to_internal(a, b);
    let n = model.node_count();
    let mut p = DMatrix::identity(n, n);
    model.propagate(&mut p, lambda, lo, hi)?;
    clamp_kernel(&mut p)?;
    conditional_entropy(&p, &Distribution::uniform(n))
}

fn sample_times(model: &DiffusionModel, delta: f64, mode: GridMode) -> Result<Vec<f64>> {
    let t_max = model.t_max();
    let half = delta / 2.0;
    let times = match mode {
        GridMode::Events => {
            let mut ts: Vec<f64> = match model.direction() {
                Direction::Forward => model.grid().times().to_vec(),
                Direction::Backward => model.grid().times().iter().rev().map(|&s| t_max - s).collect(),
            };
            ts.retain(|&t| t >= half && t <= t_max - half);
            ts.dedup();
            ts
        }
        GridMode::Uniform { step } => {
            if !(step.is_finite() && step > 0.0) {
                return Err(Error::arg(format!("resampling step must be positive, got {step}")));
            }
            let span = t_max - delta;
            let count = (span / step * (1.0 + 1e-12)).floor() as usize + 1;
            (0..count).map(|i| half + i as f64 * step).filter(|&t| t <= t_max - half).collect()
        }
    };
    Ok(times)
}

/// Local entropy sampled over the stream, one independent window per point.
pub fn local_entropy_signal(
    model: &DiffusionModel,
    lambda: f64,
    delta: f64,
    mode: GridMode,
    par: Parallelism,
) -> Result<EntropySignal> {
    Ok(local_entropy_signals(model, &[lambda], delta, mode, par)?.remove(0))
}

/// One signal per rate, sharing the model's cached spectra.
pub fn local_entropy_signals(
    model: &DiffusionModel,
    lambdas: &[f64],
    delta: f64,
    mode: GridMode,
    par: Parallelism,
) -> Result<Vec<EntropySignal>> {
    check_delta(model, delta)?;
    if delta >= model.t_max() {
        return Err(Error::arg(format!("window length {delta} must be below t_max = {}", model.t_max())));
    }
    for &l in lambdas {
        check_rate(l)?;
    }
    let times = sample_times(model, delta, mode)?;
    let half = delta / 2.0;
    let flat = par.try_map_range(times.len() * lambdas.len(), |i| {
        let (li, ti) = (i / times.len(), i % times.len());
        window_entropy(model, lambdas[li], times[ti] - half, times[ti] + half)
    })?;
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(li, &lambda)| EntropySignal {
            times: times.clone(),
            values: flat[li * times.len()..(li + 1) * times.len()].to_vec(),
            rate_lambda: lambda,
            window_delta: Some(delta),
            direction: model.direction(),
        })
        .collect())
}

/// Local entropy of a snapshot sequence, one value per snapshot.
///
/// Each snapshot becomes a block of links active over its whole slot; the
/// window of length `delta` is centred on the slot midpoint `(s + ½) w` and
/// clipped to the sequence span. Sample times are snapshot indices.
pub fn snapshot_entropy_signals(
    seq: &SnapshotSequence,
    lambdas: &[f64],
    delta: f64,
    direction: Direction,
    par: Parallelism,
) -> Result<Vec<EntropySignal>> {
    if seq.is_empty() {
        return Err(Error::arg("empty snapshot sequence"));
    }
    let w = seq.width();
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::arg(format!("window length must be positive, got {delta}")));
    }
    for &l in lambdas {
        check_rate(l)?;
    }
    let stream = seq.to_link_stream()?;
    let model = DiffusionModel::with_parallelism(&stream, direction, par)?;
    let t_max = stream.t_max();
    let count = seq.len();
    let flat = par.try_map_range(count * lambdas.len(), |i| {
        let (li, s) = (i / count, i % count);
        let c = (s as f64 + 0.5) * w;
        window_entropy(&model, lambdas[li], (c - delta / 2.0).max(0.0), (c + delta / 2.0).min(t_max))
    })?;
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(li, &lambda)| EntropySignal {
            times: (0..count).map(|s| s as f64).collect(),
            values: flat[li * count..(li + 1) * count].to_vec(),
            rate_lambda: lambda,
            window_delta: Some(delta),
            direction,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::upper_bound;
    use crate::linkstream::{Event, LinkStream};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn complete(n: usize, t_max: f64) -> LinkStream {
        let evs = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| Event::new(0.0, t_max, u, v)));
        LinkStream::new(n, t_max, evs).unwrap()
    }

    #[test]
    fn quiet_window_has_zero_entropy() {
        let s = LinkStream::new(4, 10.0, [Event::new(0., 1., 0, 1), Event::new(8., 9., 2, 3)]).unwrap();
        let m = DiffusionModel::new(&s, Direction::Forward).unwrap();
        assert_eq!(local_entropy(&m, 1.0, 4.5, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn complete_graph_saturates() {
        let m = DiffusionModel::new(&complete(6, 10.0), Direction::Forward).unwrap();
        assert_relative_eq!(local_entropy(&m, 5.0, 5.0, 4.0).unwrap(), 6f64.ln(), epsilon = 1e-6);
    }

    #[test]
    fn boundary_and_length_errors() {
        let m = DiffusionModel::new(&complete(3, 10.0), Direction::Forward).unwrap();
        assert!(matches!(local_entropy(&m, 1.0, 1.0, 4.0), Err(Error::OutOfDomain { .. })));
        assert!(matches!(local_entropy(&m, 1.0, 9.5, 4.0), Err(Error::OutOfDomain { .. })));
        assert!(local_entropy_signal(&m, 1.0, 10.0, GridMode::Events, Parallelism::Sequential).is_err());
        assert!(local_entropy_signal(&m, 1.0, 2.0, GridMode::Uniform { step: 0.0 }, Parallelism::Sequential).is_err());
    }

    #[test]
    fn empty_stream_signal_is_zero() {
        let m = DiffusionModel::new(&LinkStream::empty(5, 20.0).unwrap(), Direction::Forward).unwrap();
        let sig = local_entropy_signal(&m, 1.0, 4.0, GridMode::Uniform { step: 1.0 }, Parallelism::Sequential).unwrap();
        assert_eq!(sig.times.first(), Some(&2.0));
        assert_eq!(sig.times.last(), Some(&18.0));
        assert_eq!(sig.times.len(), 17);
        assert!(sig.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn event_grid_is_restricted_to_the_domain() {
        let s = LinkStream::new(3, 10.0, [Event::new(0.5, 3., 0, 1), Event::new(4., 9.5, 1, 2)]).unwrap();
        for dir in [Direction::Forward, Direction::Backward] {
            let m = DiffusionModel::new(&s, dir).unwrap();
            let sig = local_entropy_signal(&m, 1.0, 2.0, GridMode::Events, Parallelism::Sequential).unwrap();
            assert_eq!(sig.times, vec![3.0, 4.0]);
        }
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let s = LinkStream::new(4, 10.0, [Event::new(0., 6., 0, 1), Event::new(2., 9., 1, 2), Event::new(5., 10., 2, 3)]).unwrap();
        let m = DiffusionModel::new(&s, Direction::Forward).unwrap();
        let mode = GridMode::Uniform { step: 0.5 };
        let a = local_entropy_signals(&m, &[0.1, 1.0], 3.0, mode, Parallelism::Sequential).unwrap();
        let b = local_entropy_signals(&m, &[0.1, 1.0], 3.0, mode, Parallelism::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[1].values, local_entropy_signal(&m, 1.0, 3.0, mode, Parallelism::Sequential).unwrap().values);
    }

    #[test]
    fn snapshot_signal_tracks_activity() {
        let quiet = vec![(0, 1)];
        let busy: Vec<_> = (0..5).flat_map(|u| ((u + 1)..6).map(move |v| (u, v))).collect();
        let seq = SnapshotSequence::from_edge_lists(2.0, 6, vec![quiet.clone(), quiet, busy.clone(), busy]).unwrap();
        let sig = &snapshot_entropy_signals(&seq, &[1.0], 1.0, Direction::Forward, Parallelism::Sequential).unwrap()[0];
        assert_eq!(sig.times, vec![0.0, 1.0, 2.0, 3.0]);
        assert!(sig.values[0] < sig.values[2]);
        assert_eq!(sig.values[0], sig.values[1]);
        assert_relative_eq!(sig.values[2], sig.values[3], epsilon = 1e-12);
    }

    fn stream() -> impl Strategy<Value = LinkStream> {
        crate::linkstream::tests::dyadic_stream()
    }

    proptest! {
        #[test]
        fn local_entropy_grows_with_the_window(s in stream(), f in 0.0f64..1.0, d1 in 0.0f64..0.999, d2 in 0.0f64..0.999, lambda in 0.05f64..5.0) {
            let t = f * s.t_max();
            let cap = 2.0 * t.min(s.t_max() - t);
            let (small, large) = (cap * d1.min(d2), cap * d1.max(d2));
            let m = DiffusionModel::new(&s, Direction::Forward).unwrap();
            let h1 = local_entropy(&m, lambda, t, small).unwrap();
            let h2 = local_entropy(&m, lambda, t, large).unwrap();
            prop_assert!(h2 >= h1 - 1e-9, "{h1} > {h2}");
            let bound = upper_bound(&s, t - large / 2.0, t + large / 2.0).unwrap();
            prop_assert!(h2 <= bound + 1e-9);
            prop_assert!(h2 <= (s.node_count() as f64).ln() + 1e-9);
        }
    }
}
