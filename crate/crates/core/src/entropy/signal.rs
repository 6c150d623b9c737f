use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::diffusion::Direction;
use crate::error::{Error, Result};

/// Entropy values sampled at increasing times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropySignal {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub rate_lambda: f64,
    /// Local window length; `None` for global entropy curves.
    pub window_delta: Option<f64>,
    pub direction: Direction,
}

impl EntropySignal {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// CSV with a parameter comment line followed by `t,value` rows.
pub fn write_signal<W: Write>(signal: &EntropySignal, mut out: W) -> Result<()> {
    let delta = signal.window_delta.map_or_else(|| "none".to_string(), |d| d.to_string());
    writeln!(out, "# lambda={}, delta={delta}, direction={}", signal.rate_lambda, signal.direction)?;
    writeln!(out, "t,value")?;
    for (t, v) in signal.times.iter().zip(&signal.values) {
        writeln!(out, "{t},{v}")?;
    }
    Ok(())
}

pub fn read_signal<R: BufRead>(input: R) -> Result<EntropySignal> {
    let mut lines = input.lines().enumerate();
    let mut next = || lines.next().map(|(i, l)| l.map(|l| (i + 1, l)));
    let (_, meta) = next().transpose()?.ok_or(Error::Parse { line: 1, message: "empty signal file".into() })?;
    let meta = meta
        .strip_prefix('#')
        .ok_or(Error::Parse { line: 1, message: "missing parameter comment".into() })?;
    let (mut lambda, mut delta, mut direction) = (None, None, None);
    for field in meta.split(',') {
        let (key, value) = field
            .trim()
            .split_once('=')
            .ok_or(Error::Parse { line: 1, message: format!("malformed field `{}`", field.trim()) })?;
        let bad = |what: &str| Error::Parse { line: 1, message: format!("bad {what} `{value}`") };
        match key {
            "lambda" => lambda = Some(value.parse::<f64>().map_err(|_| bad("lambda"))?),
            "delta" if value == "none" => delta = Some(None),
            "delta" => delta = Some(Some(value.parse::<f64>().map_err(|_| bad("delta"))?)),
            "direction" => direction = Some(value.parse::<Direction>().map_err(|_| bad("direction"))?),
            _ => {}
        }
    }
    let missing = |k: &str| Error::Parse { line: 1, message: format!("parameter comment lacks `{k}`") };
    let rate_lambda = lambda.ok_or_else(|| missing("lambda"))?;
    let window_delta = delta.ok_or_else(|| missing("delta"))?;
    let direction = direction.ok_or_else(|| missing("direction"))?;

    match next().transpose()? {
        Some((_, h)) if h.trim() == "t,value" => {}
        _ => return Err(Error::Parse { line: 2, message: "expected header `t,value`".into() }),
    }
    let (mut times, mut values) = (Vec::new(), Vec::new());
    while let Some((line, text)) = next().transpose()? {
        if text.trim().is_empty() {
            continue;
        }
        let parse = |s: Option<&str>| s.and_then(|s| s.trim().parse::<f64>().ok());
        let mut parts = text.split(',');
        match (parse(parts.next()), parse(parts.next()), parts.next()) {
            (Some(t), Some(v), None) => {
                times.push(t);
                values.push(v);
            }
            _ => return Err(Error::Parse { line, message: format!("expected `t,value`, got `{text}`") }),
        }
    }
    Ok(EntropySignal { times, values, rate_lambda, window_delta, direction })
}
