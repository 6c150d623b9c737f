//! Benchmark tuning and evaluation.
//!
//! Each detector turns a snapshot sequence into breakpoints under some
//! hyperparameters. Hyperparameters are chosen on the training split by mean
//! Hausdorff distance (first grid point wins ties) and then applied once to
//! the test split.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use tempent_core::baselines::{frobenius_signal, lad_scores, lad_signatures, lad_top_k};
use tempent_core::entropy::snapshot_entropy_signals;
use tempent_core::linkstream::project_changepoints;
use tempent_core::segmentation::{hausdorff_score, segment_fixed_k, segment_penalized};
use tempent_core::synth::{make_benchmark, Benchmark, BenchmarkSample, Family};
use tempent_core::{Direction, Parallelism, Signal, SnapshotSequence};

use crate::config::RunConfig;

pub const REPORT_VERSION: u32 = 1;

/// Quantile with linear interpolation between order statistics at position
/// `q (n − 1)`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub distances: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub mean: f64,
}

impl SplitResult {
    pub fn new(distances: Vec<f64>) -> Self {
        let mut s = distances.clone();
        s.sort_by(f64::total_cmp);
        let (median, q1, q3, mean) = if s.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        } else {
            (quantile(&s, 0.5), quantile(&s, 0.25), quantile(&s, 0.75), s.iter().sum::<f64>() / s.len() as f64)
        };
        SplitResult { distances, median, q1, q3, mean }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningPoint {
    pub params: BTreeMap<String, f64>,
    pub mean_train: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub chosen: BTreeMap<String, f64>,
    pub train: SplitResult,
    pub test: SplitResult,
    pub tuning: Vec<TuningPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub family: Family,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub snapshot_width: f64,
    pub delta: f64,
    /// `fixed-k` for single-change families, `penalized` for MultiBench.
    pub search: String,
    pub methods: Vec<MethodReport>,
}

impl EvalReport {
    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == name)
    }
}

/// A benchmark sample reduced to what the detectors see.
pub struct Prepared {
    pub snapshots: SnapshotSequence,
    /// Snapshot indices holding a change.
    pub truth: Vec<usize>,
}

impl Prepared {
    pub fn new(sample: &BenchmarkSample, width: f64) -> anyhow::Result<Self> {
        let snapshots = sample.stream.aggregate_snapshots(width)?;
        let truth = project_changepoints(&sample.true_changepoints, width);
        Ok(Prepared { snapshots, truth })
    }

    pub fn gamma(&self) -> usize {
        self.snapshots.len()
    }
}

/// How a detector's 1-d signal becomes breakpoints.
#[derive(Clone, Copy, Debug)]
enum Search {
    /// The true number of changes is given.
    Known,
    Penalized(f64),
}

fn segment(values: &[f64], search: Search, truth_len: usize, min_size: usize) -> anyhow::Result<Vec<usize>> {
    let signal = Signal::new(values.to_vec())?;
    Ok(match search {
        Search::Known => segment_fixed_k(&signal, truth_len, min_size)?.breakpoints,
        Search::Penalized(beta) => segment_penalized(&signal, beta, min_size)?.breakpoints,
    })
}

fn score(p: &Prepared, predicted: &[usize]) -> anyhow::Result<f64> {
    Ok(hausdorff_score(&p.truth, predicted, p.gamma())?)
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Per-sample signals a detector computes once per sample and reuses across
/// its hyperparameter grid.
trait Detector: Sync {
    type Cache: Send;

    fn name(&self) -> &'static str;

    /// Grid in tuning order.
    fn grid(&self) -> Vec<BTreeMap<String, f64>>;

    /// Signals for the given grid points only.
    fn prepare(&self, p: &Prepared, points: &[BTreeMap<String, f64>]) -> anyhow::Result<Self::Cache>;

    fn detect(&self, p: &Prepared, cache: &Self::Cache, point: &BTreeMap<String, f64>) -> anyhow::Result<Vec<usize>>;
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    penalized: bool,
}

impl Ctx<'_> {
    fn with_penalties(&self, grid: &[f64], base: Vec<(&'static str, f64)>) -> Vec<BTreeMap<String, f64>> {
        if self.penalized {
            grid.iter()
                .map(|&b| {
                    let mut v = base.clone();
                    v.push(("beta", b));
                    params(&v)
                })
                .collect()
        } else {
            vec![params(&base)]
        }
    }

    fn search(&self, point: &BTreeMap<String, f64>) -> Search {
        match point.get("beta") {
            Some(&b) if self.penalized => Search::Penalized(b),
            _ => Search::Known,
        }
    }
}

struct EntropyDetector<'a>(Ctx<'a>);

impl Detector for EntropyDetector<'_> {
    /// Signal values keyed by the bit pattern of λ.
    type Cache = BTreeMap<u64, Vec<f64>>;

    fn name(&self) -> &'static str {
        "entropy"
    }

    fn grid(&self) -> Vec<BTreeMap<String, f64>> {
        self.0.cfg.lambdas.iter().flat_map(|&l| self.0.with_penalties(&self.0.cfg.penalties, vec![("lambda", l)])).collect()
    }

    fn prepare(&self, p: &Prepared, points: &[BTreeMap<String, f64>]) -> anyhow::Result<Self::Cache> {
        let mut lambdas: Vec<f64> = points.iter().map(|x| x["lambda"]).collect();
        lambdas.dedup();
        let delta = self.0.cfg.delta_or_default();
        let signals = snapshot_entropy_signals(&p.snapshots, &lambdas, delta, Direction::Forward, Parallelism::Sequential)?;
        Ok(lambdas.iter().zip(signals).map(|(l, s)| (l.to_bits(), s.values)).collect())
    }

    fn detect(&self, p: &Prepared, cache: &Self::Cache, point: &BTreeMap<String, f64>) -> anyhow::Result<Vec<usize>> {
        let values = &cache[&point["lambda"].to_bits()];
        segment(values, self.0.search(point), p.truth.len(), self.0.cfg.min_size)
    }
}

struct FrobeniusDetector<'a>(Ctx<'a>);

impl Detector for FrobeniusDetector<'_> {
    type Cache = BTreeMap<usize, Vec<f64>>;

    fn name(&self) -> &'static str {
        "frobenius"
    }

    fn grid(&self) -> Vec<BTreeMap<String, f64>> {
        self.0.cfg.frobenius_ells.iter().flat_map(|&l| self.0.with_penalties(&self.0.cfg.frobenius_penalties, vec![("ell", l as f64)])).collect()
    }

    fn prepare(&self, p: &Prepared, points: &[BTreeMap<String, f64>]) -> anyhow::Result<Self::Cache> {
        let mut out = BTreeMap::new();
        for x in points {
            let ell = x["ell"] as usize;
            if let std::collections::btree_map::Entry::Vacant(slot) = out.entry(ell) {
                slot.insert(frobenius_signal(&p.snapshots, ell)?.values);
            }
        }
        Ok(out)
    }

    fn detect(&self, p: &Prepared, cache: &Self::Cache, point: &BTreeMap<String, f64>) -> anyhow::Result<Vec<usize>> {
        let ell = point["ell"] as usize;
        let bps = segment(&cache[&ell], self.0.search(point), p.truth.len(), self.0.cfg.min_size)?;
        Ok(bps.into_iter().map(|b| b + ell).collect())
    }
}

struct LadDetector<'a>(Ctx<'a>);

impl Detector for LadDetector<'_> {
    /// Full descending Laplacian spectra, one per snapshot.
    type Cache = Vec<Vec<f64>>;

    fn name(&self) -> &'static str {
        "lad"
    }

    fn grid(&self) -> Vec<BTreeMap<String, f64>> {
        let cfg = self.0.cfg;
        cfg.lad_components
            .iter()
            .flat_map(|&k| cfg.lad_windows.iter().map(move |&w| params(&[("k", k as f64), ("window", w as f64)])))
            .collect()
    }

    fn prepare(&self, p: &Prepared, _points: &[BTreeMap<String, f64>]) -> anyhow::Result<Self::Cache> {
        // truncating and renormalizing the full signature equals the top-k signature
        Ok(lad_signatures(&p.snapshots, p.snapshots.node_count(), Parallelism::Sequential)?)
    }

    fn detect(&self, p: &Prepared, cache: &Self::Cache, point: &BTreeMap<String, f64>) -> anyhow::Result<Vec<usize>> {
        let k = (point["k"] as usize).min(p.snapshots.node_count());
        let window = point["window"] as usize;
        let sigs: Vec<Vec<f64>> = cache
            .iter()
            .map(|s| {
                let top = &s[..k];
                let norm = top.iter().map(|x| x * x).sum::<f64>().sqrt();
                top.iter().map(|x| if norm > 0.0 { x / norm } else { 0.0 }).collect()
            })
            .collect();
        let scores = lad_scores(&sigs, window)?;
        let want = p.truth.len().min(scores.scores.len());
        if want == 0 {
            return Ok(Vec::new());
        }
        Ok(lad_top_k(&scores.scores, want)?.into_iter().map(|i| i + window).collect())
    }
}

fn distances<D: Detector>(
    det: &D,
    samples: &[Prepared],
    points: &[BTreeMap<String, f64>],
    par: Parallelism,
) -> anyhow::Result<Vec<Vec<f64>>> {
    // rows: samples, columns: grid points
    par.try_map_range(samples.len(), |i| {
        let p = &samples[i];
        let cache = det.prepare(p, points)?;
        points.iter().map(|x| score(p, &det.detect(p, &cache, x)?)).collect::<anyhow::Result<Vec<f64>>>()
    })
}

fn evaluate<D: Detector>(det: &D, train: &[Prepared], test: &[Prepared], par: Parallelism) -> anyhow::Result<MethodReport> {
    let grid = det.grid();
    let table = distances(det, train, &grid, par)?;
    let mut tuning = Vec::with_capacity(grid.len());
    let mut best = (0, f64::INFINITY);
    for (j, point) in grid.iter().enumerate() {
        let mean = table.iter().map(|row| row[j]).sum::<f64>() / table.len().max(1) as f64;
        if mean < best.1 {
            best = (j, mean);
        }
        tuning.push(TuningPoint { params: point.clone(), mean_train: mean });
    }
    let best = best.0;
    let chosen = grid[best].clone();
    let train_d: Vec<f64> = table.iter().map(|row| row[best]).collect();
    let test_d: Vec<f64> = distances(det, test, std::slice::from_ref(&chosen), par)?.into_iter().map(|r| r[0]).collect();
    Ok(MethodReport {
        method: det.name().into(),
        chosen,
        train: SplitResult::new(train_d),
        test: SplitResult::new(test_d),
        tuning,
    })
}

/// Generates one family's benchmark and evaluates the three detectors.
pub fn run_benchmark(family: Family, cfg: &RunConfig, par: Parallelism) -> anyhow::Result<EvalReport> {
    let bench = make_benchmark(family, &cfg.generator, cfg.n_train, cfg.n_test, cfg.seed)?;
    evaluate_benchmark(&bench, cfg, par)
}

pub fn evaluate_benchmark(bench: &Benchmark, cfg: &RunConfig, par: Parallelism) -> anyhow::Result<EvalReport> {
    let w = cfg.snapshot_width;
    let prep = |xs: &[BenchmarkSample]| par.try_map_range(xs.len(), |i| Prepared::new(&xs[i], w));
    let (train, test) = (prep(&bench.train)?, prep(&bench.test)?);
    let penalized = bench.family == Family::MultiBench;
    let ctx = || Ctx { cfg, penalized };
    let methods = vec![
        evaluate(&EntropyDetector(ctx()), &train, &test, par)?,
        evaluate(&FrobeniusDetector(ctx()), &train, &test, par)?,
        evaluate(&LadDetector(ctx()), &train, &test, par)?,
    ];
    Ok(EvalReport {
        version: REPORT_VERSION,
        family: bench.family,
        seed: cfg.seed,
        n_train: bench.train.len(),
        n_test: bench.test.len(),
        snapshot_width: w,
        delta: cfg.delta_or_default(),
        search: if penalized { "penalized" } else { "fixed-k" }.into(),
        methods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate_linearly() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&s, 0.5), 2.5);
        assert_eq!(quantile(&s, 0.25), 1.75);
        assert_eq!(quantile(&s, 0.75), 3.25);
        assert_eq!(quantile(&[5.0], 0.3), 5.0);
        let r = SplitResult::new(vec![3.0, 0.0, 1.0]);
        assert_eq!((r.median, r.q1, r.q3), (1.0, 0.5, 2.0));
        assert_eq!(r.distances, vec![3.0, 0.0, 1.0]);
    }

    #[test]
    fn small_benchmark_runs() {
        let mut cfg = RunConfig { n_train: 2, n_test: 2, lambdas: vec![0.01, 1.0], ..Default::default() };
        cfg.generator.node_count = 40;
        cfg.generator.t_max = 80.0;
        cfg.generator.change_margin = 16.0;
        cfg.generator.multi_min_spacing = 12.0;
        cfg.generator.community_total_rate = 40.0;
        for fam in Family::ALL {
            let r = run_benchmark(fam, &cfg, Parallelism::Sequential).unwrap();
            assert_eq!(r.methods.len(), 3);
            for m in &r.methods {
                assert_eq!(m.test.distances.len(), 2);
                assert!(m.test.distances.iter().all(|&d| (0.0..=20.0).contains(&d)));
            }
            assert_eq!(r.method("entropy").unwrap().tuning.len(), if fam == Family::MultiBench { 10 } else { 2 });
        }
    }
}
