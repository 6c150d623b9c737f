//! Subcommand bodies. Each takes a validated [`RunConfig`] and writes its
//! outputs, returning the paths or values it produced.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use tempent_core::baselines::frobenius_signal;
use tempent_core::diffusion::{load_store, save_store};
use tempent_core::entropy::{
    global_entropy_curve, local_entropy_signals, read_signal, snapshot_entropy_signals, spectral_check, write_signal,
    EntropySignal, GridMode,
};
use tempent_core::linkstream::{load_contacts, read_link_stream, read_snapshots, write_link_stream, write_snapshots};
use tempent_core::segmentation::{segment_fixed_k, segment_penalized};
use tempent_core::synth::{make_benchmark, merge_split_stream, temporal_cycle, toy_path, Family, MergeSplitPattern};
use tempent_core::{
    DiffusionModel, Direction, Distribution, KernelStore, LinkStream, Parallelism, Signal, SnapshotSequence, SpectrumReport,
};

use crate::bench::{run_benchmark, EvalReport};
use crate::config::{RunConfig, UsageError};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn require_input(cfg: &RunConfig) -> anyhow::Result<&str> {
    cfg.input.as_deref().ok_or_else(|| usage("no `input` given"))
}

/// Stream from `input`, or a built-in stream named by `family`.
pub fn load_stream(cfg: &RunConfig) -> anyhow::Result<LinkStream> {
    if cfg.input.is_none() {
        match cfg.family.as_deref() {
            Some("cycle") => return Ok(temporal_cycle()),
            Some("toy-path") => return Ok(toy_path(cfg.toy_n, cfg.toy_k)?),
            _ => {}
        }
    }
    let path = require_input(cfg)?;
    match cfg.input_format.as_str() {
        "contacts" => {
            let d = cfg.contacts_duration.ok_or_else(|| usage("contact input needs `contacts_duration`"))?;
            Ok(load_contacts(path, d)?)
        }
        "snapshots" => Ok(load_snapshots(path)?.to_link_stream()?),
        _ => Ok(read_link_stream(BufReader::new(File::open(path)?))?),
    }
}

fn load_snapshots(path: &str) -> anyhow::Result<SnapshotSequence> {
    Ok(read_snapshots(BufReader::new(File::open(path)?))?)
}

/// Snapshots from a snapshot file, or by aggregating a stream input.
pub fn load_sequence(cfg: &RunConfig) -> anyhow::Result<SnapshotSequence> {
    if cfg.input_format == "snapshots" {
        return load_snapshots(require_input(cfg)?);
    }
    Ok(load_stream(cfg)?.aggregate_snapshots(cfg.snapshot_width)?)
}

fn write_json<T: Serialize>(value: &T, output: &str) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    if output == "-" {
        std::io::stdout().write_all(text.as_bytes())?;
    } else {
        if let Some(dir) = Path::new(output).parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(output, text)?;
    }
    Ok(())
}

fn write_stream_file(stream: &LinkStream, path: &Path) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_link_stream(stream, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes generated streams plus a `manifest.json` into the output directory.
pub fn cmd_synth(cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    let family = cfg.family.as_deref().ok_or_else(|| usage("synth needs `family`"))?;
    let dir = PathBuf::from(&cfg.output);
    fs::create_dir_all(&dir)?;
    let manifest = if let Ok(fam) = family.parse::<Family>() {
        let bench = make_benchmark(fam, &cfg.generator, cfg.n_train, cfg.n_test, cfg.seed)?;
        let mut samples = Vec::new();
        for (split, list) in [("train", &bench.train), ("test", &bench.test)] {
            for (i, s) in list.iter().enumerate() {
                let name = format!("{split}_{i:03}.csv");
                write_stream_file(&s.stream, &dir.join(&name))?;
                samples.push(json!({
                    "split": split,
                    "index": i,
                    "seed": s.seed,
                    "path": name,
                    "true_changepoints": s.true_changepoints,
                }));
            }
        }
        json!({ "family": fam.to_string(), "seed": cfg.seed, "params": cfg.generator, "samples": samples })
    } else {
        let (stream, truth, label) = if let Some(p) = family.strip_prefix("merge-split-") {
            let pattern: MergeSplitPattern = p.parse()?;
            let s = merge_split_stream(pattern, cfg.merge_split_rate, cfg.seed)?;
            (s.stream, s.true_changepoints, s.label)
        } else if family == "toy-path" {
            (toy_path(cfg.toy_n, cfg.toy_k)?, Vec::new(), format!("toy-path-{}-{}", cfg.toy_n, cfg.toy_k))
        } else if family == "cycle" {
            (temporal_cycle(), Vec::new(), "cycle".to_string())
        } else {
            return Err(usage(format!("unknown family `{family}`")));
        };
        write_stream_file(&stream, &dir.join("stream.csv"))?;
        json!({
            "family": label,
            "seed": cfg.seed,
            "samples": [{ "path": "stream.csv", "true_changepoints": truth }],
        })
    };
    let path = dir.join("manifest.json");
    write_json(&manifest, path.to_str().ok_or_else(|| usage("non UTF-8 output path"))?)?;
    Ok(path)
}

fn signal_file_name(s: &EntropySignal, mode: &str) -> String {
    let delta = s.window_delta.map_or("none".into(), |d| format!("{d}"));
    format!("entropy_{mode}_{}_lambda{:e}_delta{delta}.csv", s.direction, s.rate_lambda)
}

/// One CSV per rate in `lambdas`.
pub fn cmd_entropy(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    let par = Parallelism::default();
    let (signals, mode) = if cfg.input_format == "snapshots" {
        let seq = load_sequence(cfg)?;
        let delta = cfg.delta.unwrap_or(seq.width() / 2.0);
        (snapshot_entropy_signals(&seq, &cfg.lambdas, delta, cfg.direction, par)?, "snapshot")
    } else {
        let stream = load_stream(cfg)?;
        let model = DiffusionModel::with_parallelism(&stream, cfg.direction, par)?;
        if cfg.mode == "global" {
            let times = stream.temporal_grid().times().to_vec();
            let p0 = Distribution::uniform(stream.node_count());
            let signals = cfg
                .lambdas
                .iter()
                .map(|&l| global_entropy_curve(&model, l, &times, &p0))
                .collect::<Result<Vec<_>, _>>()?;
            (signals, "global")
        } else {
            let grid = match cfg.grid.as_str() {
                "uniform" => GridMode::Uniform { step: cfg.step.ok_or_else(|| usage("grid = uniform needs `step`"))? },
                _ => GridMode::Events,
            };
            (local_entropy_signals(&model, &cfg.lambdas, cfg.delta_or_default(), grid, par)?, "local")
        }
    };
    let dir = PathBuf::from(&cfg.output);
    fs::create_dir_all(&dir)?;
    let mut paths = Vec::new();
    for s in &signals {
        let path = dir.join(signal_file_name(s, mode));
        let mut w = BufWriter::new(File::create(&path)?);
        write_signal(s, &mut w)?;
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Serialize)]
pub struct DetectOutput {
    pub breakpoints: Vec<usize>,
    pub cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", rename = "K")]
    pub k: Option<usize>,
    pub signal_meta: serde_json::Value,
}

/// Segments a signal file, or a detector signal built from a stream input.
pub fn cmd_detect(cfg: &RunConfig) -> anyhow::Result<DetectOutput> {
    let (values, offset, meta) = if let Some(path) = &cfg.signal {
        let s = read_signal(BufReader::new(File::open(path)?))?;
        let meta = json!({
            "source": path,
            "lambda": s.rate_lambda,
            "delta": s.window_delta,
            "direction": s.direction,
            "length": s.values.len(),
        });
        (s.values, 0, meta)
    } else {
        let seq = load_sequence(cfg)?;
        let one_lambda = || match cfg.lambdas.as_slice() {
            [l] => Ok(*l),
            _ => Err(usage("detect builds one signal: give exactly one value in `lambdas`")),
        };
        match cfg.detector.as_str() {
            "entropy" => {
                let l = one_lambda()?;
                let delta = cfg.delta.unwrap_or(seq.width() / 2.0);
                let s = snapshot_entropy_signals(&seq, &[l], delta, cfg.direction, Parallelism::default())?.remove(0);
                let meta = json!({ "detector": "entropy", "lambda": l, "delta": delta, "direction": cfg.direction, "snapshot_width": seq.width(), "length": s.values.len() });
                (s.values, 0, meta)
            }
            "frobenius" => {
                let ell = cfg.frobenius_ells[0];
                let f = frobenius_signal(&seq, ell)?;
                let meta = json!({ "detector": "frobenius", "ell": ell, "snapshot_width": seq.width(), "length": f.values.len() });
                (f.values, ell, meta)
            }
            _ => return Err(usage("detect segments entropy or frobenius signals; LAD is scored with top-k in `bench`")),
        }
    };
    let signal = Signal::new(values)?;
    let seg = match cfg.search.as_str() {
        "penalized" => match cfg.penalties.as_slice() {
            [b] => segment_penalized(&signal, *b, cfg.min_size)?,
            _ => return Err(usage("penalized detection needs exactly one value in `penalties`")),
        },
        _ => segment_fixed_k(&signal, cfg.k.ok_or_else(|| usage("fixed-k detection needs `k`"))?, cfg.min_size)?,
    };
    Ok(DetectOutput {
        breakpoints: seg.breakpoints.iter().map(|b| b + offset).collect(),
        cost: seg.total_cost,
        beta: seg.penalty_beta,
        k: if seg.penalty_beta.is_none() { Some(seg.breakpoints.len()) } else { None },
        signal_meta: meta,
    })
}

pub fn cmd_bench(cfg: &RunConfig) -> anyhow::Result<EvalReport> {
    let family: Family = cfg.family.as_deref().ok_or_else(|| usage("bench needs `family`"))?.parse()?;
    run_benchmark(family, cfg, Parallelism::default())
}

pub fn cmd_aggregate(cfg: &RunConfig) -> anyhow::Result<usize> {
    let seq = load_stream(cfg)?.aggregate_snapshots(cfg.snapshot_width)?;
    if cfg.output == "-" {
        write_snapshots(&seq, std::io::stdout().lock())?;
    } else {
        let mut w = BufWriter::new(File::create(&cfg.output)?);
        write_snapshots(&seq, &mut w)?;
        w.flush()?;
    }
    Ok(seq.len())
}

fn kernel_window(cfg: &RunConfig, stream: &LinkStream) -> (f64, f64) {
    (cfg.t1.unwrap_or(0.0), cfg.t2.unwrap_or(stream.t_max()))
}

/// Spectrum of the kernel over `[t1, t2]` at the first rate in `lambdas`.
pub fn cmd_spectral_check(cfg: &RunConfig) -> anyhow::Result<SpectrumReport> {
    let stream = load_stream(cfg)?;
    let (t1, t2) = kernel_window(cfg, &stream);
    let model = DiffusionModel::new(&stream, cfg.direction)?;
    let k = model.kernel(cfg.lambdas[0], t1, t2)?;
    Ok(spectral_check(&k.matrix)?)
}

#[derive(Serialize)]
pub struct StoreSummary {
    pub path: String,
    pub node_count: usize,
    pub intervals: usize,
    pub lambda: f64,
    pub direction: Direction,
    pub round_trip_exact: bool,
}

/// Saves the per-interval kernels at the first rate and reloads them.
pub fn cmd_store(cfg: &RunConfig) -> anyhow::Result<StoreSummary> {
    let stream = load_stream(cfg)?;
    let model = DiffusionModel::new(&stream, cfg.direction)?;
    let store = KernelStore::build(&model, cfg.lambdas[0])?;
    save_store(&store, &cfg.output)?;
    let back = load_store(&cfg.output)?;
    let exact = back.grid.iter().zip(&store.grid).all(|(a, b)| a.to_bits() == b.to_bits())
        && back.matrices.len() == store.matrices.len()
        && back
            .matrices
            .iter()
            .zip(&store.matrices)
            .all(|(a, b)| a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    Ok(StoreSummary {
        path: cfg.output.clone(),
        node_count: store.node_count,
        intervals: store.matrices.len(),
        lambda: store.rate_lambda,
        direction: store.direction,
        round_trip_exact: exact,
    })
}

pub fn write_report(report: &EvalReport, output: &str) -> anyhow::Result<()> {
    write_json(report, output)
}

pub fn print_json<T: Serialize>(value: &T, output: &str) -> anyhow::Result<()> {
    write_json(value, output)
}
