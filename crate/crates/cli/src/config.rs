//! Flat `key = value` run configuration.
//!
//! Values come from, in increasing priority: built-in defaults, a config file,
//! then command-line overrides. Every key is listed in [`KEYS`], which also
//! feeds `--help`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use tempent_core::synth::BenchmarkParams;
use tempent_core::Direction;

/// Bad configuration or arguments; maps to the usage exit code.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Float,
    Int,
    Str,
    FloatList,
    IntList,
}

/// `(key, kind, description)` for every configuration key.
const KEYS: &[(&str, Kind, &str)] = &[
    ("input", Kind::Str, "input file (link stream CSV, contact list or snapshot CSV)"),
    ("input_format", Kind::Str, "stream | contacts | snapshots"),
    ("contacts_duration", Kind::Float, "link duration in seconds given to each contact record"),
    ("signal", Kind::Str, "entropy/baseline signal CSV consumed by `detect`"),
    ("family", Kind::Str, "ActivityBench | CommunityBench | MultiBench | merge-split-A/B/C | toy-path | cycle"),
    ("lambdas", Kind::FloatList, "diffusion rates (default: 13 log-spaced values in [1e-5, 1])"),
    ("delta", Kind::Float, "local window length in seconds (default: snapshot_width / 2)"),
    ("snapshot_width", Kind::Float, "snapshot width w in seconds"),
    ("direction", Kind::Str, "forward | backward"),
    ("mode", Kind::Str, "local | global entropy"),
    ("grid", Kind::Str, "events | uniform sampling of local entropy"),
    ("step", Kind::Float, "sampling step for grid = uniform"),
    ("detector", Kind::Str, "entropy | frobenius | lad"),
    ("search", Kind::Str, "fixed-k | penalized"),
    ("k", Kind::Int, "number of breakpoints for search = fixed-k"),
    ("penalties", Kind::FloatList, "penalty grid for search = penalized"),
    ("min_size", Kind::Int, "minimum segment length in samples"),
    ("frobenius_penalties", Kind::FloatList, "penalty grid for Frobenius signals in penalized benchmarks"),
    ("frobenius_ells", Kind::IntList, "Frobenius window lengths tried during tuning"),
    ("lad_components", Kind::IntList, "LAD signature sizes tried during tuning"),
    ("lad_windows", Kind::IntList, "LAD window lengths tried during tuning"),
    ("t1", Kind::Float, "kernel window start for spectral-check and store"),
    ("t2", Kind::Float, "kernel window end (default: t_max)"),
    ("seed", Kind::Int, "master seed; per-sample seeds derive from it"),
    ("n_train", Kind::Int, "training samples per benchmark"),
    ("n_test", Kind::Int, "test samples per benchmark"),
    ("output", Kind::Str, "output directory or file; `-` for stdout where a single file is written"),
    ("toy_n", Kind::Int, "toy path node count"),
    ("toy_k", Kind::Int, "toy path overlap depth"),
    ("merge_split_rate", Kind::Float, "per-pair link rate of the merge/split streams"),
    ("node_count", Kind::Int, "benchmark nodes"),
    ("t_max", Kind::Float, "benchmark duration in seconds"),
    ("mean_link_duration", Kind::Float, "mean link duration in seconds"),
    ("activity_blocks", Kind::Int, "block count of the activity families"),
    ("activity_intra_rate", Kind::Float, "quiet-regime intra-block rate per pair"),
    ("activity_inter_rate", Kind::Float, "quiet-regime inter-block rate per pair"),
    ("activity_factor", Kind::Float, "busy / quiet rate ratio"),
    ("change_margin", Kind::Float, "single change times avoid this margin at both ends"),
    ("community_blocks_coarse", Kind::Int, "coarse block count of CommunityBench"),
    ("community_blocks_fine", Kind::Int, "fine block count of CommunityBench"),
    ("community_total_rate", Kind::Float, "expected links per second over all pairs in CommunityBench"),
    ("community_inter_fraction", Kind::Float, "share of CommunityBench links across blocks"),
    ("multi_max_breaks", Kind::Int, "largest number of MultiBench changes"),
    ("multi_min_spacing", Kind::Float, "minimum MultiBench gap between changes and to either end"),
];

/// `--help` text listing every key.
pub fn keys_help() -> String {
    let mut out = String::from("Configuration keys (config file lines `key = value`, or `--set key=value`):\n");
    for (k, kind, doc) in KEYS {
        let kind = match kind {
            Kind::Float => "float",
            Kind::Int => "int",
            Kind::Str => "text",
            Kind::FloatList => "floats,...",
            Kind::IntList => "ints,...",
        };
        out.push_str(&format!("  {k:<26} {kind:<11} {doc}\n"));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub input: Option<String>,
    pub input_format: String,
    pub contacts_duration: Option<f64>,
    pub signal: Option<String>,
    pub family: Option<String>,
    pub lambdas: Vec<f64>,
    pub delta: Option<f64>,
    pub snapshot_width: f64,
    pub direction: Direction,
    pub mode: String,
    pub grid: String,
    pub step: Option<f64>,
    pub detector: String,
    pub search: String,
    pub k: Option<usize>,
    pub penalties: Vec<f64>,
    pub min_size: usize,
    pub frobenius_penalties: Vec<f64>,
    pub frobenius_ells: Vec<usize>,
    pub lad_components: Vec<usize>,
    pub lad_windows: Vec<usize>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub output: String,
    pub toy_n: usize,
    pub toy_k: usize,
    pub merge_split_rate: f64,
    #[serde(flatten)]
    pub generator: BenchmarkParams,
}

/// 13 logarithmically spaced rates in `[1e-5, 1]`.
pub fn default_lambdas() -> Vec<f64> {
    (0..13).map(|i| 10f64.powf(-5.0 + 5.0 * i as f64 / 12.0)).collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            input_format: "stream".into(),
            contacts_duration: None,
            signal: None,
            family: None,
            lambdas: default_lambdas(),
            delta: None,
            snapshot_width: 4.0,
            direction: Direction::Forward,
            mode: "local".into(),
            grid: "events".into(),
            step: None,
            detector: "entropy".into(),
            search: "fixed-k".into(),
            k: None,
            penalties: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            frobenius_penalties: vec![0.0025, 0.005, 0.01, 0.02, 0.04],
            min_size: 2,
            frobenius_ells: vec![1, 2, 3, 4, 5],
            lad_components: vec![2, 4, 8, 16],
            lad_windows: vec![2, 3, 5, 8],
            t1: None,
            t2: None,
            seed: 0,
            n_train: 10,
            n_test: 50,
            output: "out".into(),
            toy_n: 10,
            toy_k: 0,
            merge_split_rate: 0.02,
            generator: BenchmarkParams::default(),
        }
    }
}

fn parse_value(key: &str, kind: Kind, raw: &str) -> anyhow::Result<Value> {
    let bad = |what: &str| usage(format!("key `{key}`: expected {what}, got `{raw}`"));
    let float = |s: &str| s.trim().parse::<f64>().ok().filter(|x| x.is_finite());
    let int = |s: &str| s.trim().parse::<u64>().ok();
    Ok(match kind {
        Kind::Float => Value::from(float(raw).ok_or_else(|| bad("a number"))?),
        Kind::Int => Value::from(int(raw).ok_or_else(|| bad("a non-negative integer"))?),
        Kind::Str => Value::from(raw.trim()),
        Kind::FloatList => Value::from(
            raw.split(',').map(|s| float(s).ok_or_else(|| bad("comma-separated numbers"))).collect::<anyhow::Result<Vec<_>>>()?,
        ),
        Kind::IntList => Value::from(
            raw.split(',').map(|s| int(s).ok_or_else(|| bad("comma-separated integers"))).collect::<anyhow::Result<Vec<_>>>()?,
        ),
    })
}

/// Accumulates `key = value` assignments over the defaults.
pub struct ConfigBuilder {
    values: Map<String, Value>,
}

impl Default for ConfigBuilder {
    fn default() -> Self {
        let Value::Object(values) = serde_json::to_value(RunConfig::default()).expect("config serializes") else {
            unreachable!("config is a struct")
        };
        ConfigBuilder { values }
    }
}

impl ConfigBuilder {
    pub fn set(&mut self, key: &str, raw: &str) -> anyhow::Result<&mut Self> {
        let key = key.trim();
        let &(_, kind, _) =
            KEYS.iter().find(|(k, _, _)| *k == key).ok_or_else(|| usage(format!("unknown configuration key `{key}`")))?;
        let value = parse_value(key, kind, raw)?;
        self.values.insert(key.to_string(), value);
        Ok(self)
    }

    /// Applies one `key=value` assignment.
    pub fn assign(&mut self, assignment: &str) -> anyhow::Result<&mut Self> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| usage(format!("expected key=value, got `{assignment}`")))?;
        self.set(k, v)
    }

    pub fn load_str(&mut self, text: &str) -> anyhow::Result<&mut Self> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.assign(line).map_err(|e| usage(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(self)
    }

    pub fn load_file(&mut self, path: &Path) -> anyhow::Result<&mut Self> {
        let text = std::fs::read_to_string(path)?;
        self.load_str(&text)
    }

    pub fn build(&self) -> anyhow::Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_value(Value::Object(self.values.clone()))
            .map_err(|e| usage(format!("invalid configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.lambdas.is_empty() || self.lambdas.iter().any(|&l| l <= 0.0) {
            return Err(usage("lambdas must be a non-empty list of positive rates"));
        }
        if !(self.snapshot_width > 0.0) {
            return Err(usage("snapshot_width must be positive"));
        }
        if self.delta.is_some_and(|d| d <= 0.0) {
            return Err(usage("delta must be positive"));
        }
        match self.search.as_str() {
            "fixed-k" => {
                if self.k == Some(0) {
                    return Err(usage("k must be at least 1"));
                }
            }
            "penalized" => {
                for (name, grid) in [("penalties", &self.penalties), ("frobenius_penalties", &self.frobenius_penalties)] {
                    if grid.is_empty() || grid.iter().any(|&b| b <= 0.0) {
                        return Err(usage(format!("{name} must be a non-empty list of positive values")));
                    }
                }
            }
            other => return Err(usage(format!("search must be fixed-k or penalized, got `{other}`"))),
        }
        for (name, allowed) in [
            ("detector", &["entropy", "frobenius", "lad"][..]),
            ("mode", &["local", "global"][..]),
            ("grid", &["events", "uniform"][..]),
            ("input_format", &["stream", "contacts", "snapshots"][..]),
        ] {
            let value = match name {
                "detector" => &self.detector,
                "mode" => &self.mode,
                "grid" => &self.grid,
                _ => &self.input_format,
            };
            if !allowed.contains(&value.as_str()) {
                return Err(usage(format!("{name} must be one of {allowed:?}, got `{value}`")));
            }
        }
        if self.min_size == 0 {
            return Err(usage("min_size must be at least 1"));
        }
        for (name, list) in [("frobenius_ells", &self.frobenius_ells), ("lad_components", &self.lad_components), ("lad_windows", &self.lad_windows)] {
            if list.is_empty() || list.contains(&0) {
                return Err(usage(format!("{name} must be a non-empty list of positive integers")));
            }
        }
        Ok(())
    }

    /// Local window length, `w / 2` unless set.
    pub fn delta_or_default(&self) -> f64 {
        self.delta.unwrap_or(self.snapshot_width / 2.0)
    }
}
