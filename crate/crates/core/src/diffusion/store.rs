//! Persisted inter-transition matrices.
//!
//! File layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size        field
//! 0       8           magic  b"TKSTORE\0"
//! 8       4           version (u32) = 1
//! 12      1           direction (0 forward, 1 backward)
//! 13      3           zero padding
//! 16      8           N (u64)
//! 24      8           λ (f64)
//! 32      8           m, number of grid intervals (u64)
//! 40      8 (m+1)     grid times t_0 .. t_m (f64)
//! ...     8 m N N     matrices, interval-major, each row-major (f64)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{check_rate, DiffusionModel, Direction};
use crate::error::{Error, Result};
use crate::par::Parallelism;

const MAGIC: &[u8; 8] = b"TKSTORE\0";
const VERSION: u32 = 1;

/// Inter-transition matrices `exp(−λ L(t_k) τ_k)` for every grid interval of a
/// stream, at one fixed rate.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelStore {
    pub rate_lambda: f64,
    pub direction: Direction,
    pub node_count: usize,
    /// Grid times `t_0 < ... < t_m`.
    pub grid: Vec<f64>,
    pub matrices: Vec<DMatrix<f64>>,
}

impl KernelStore {
    pub fn build(model: &DiffusionModel, lambda: f64) -> Result<Self> {
        Self::build_with(model, lambda, Parallelism::default())
    }

    pub fn build_with(model: &DiffusionModel, lambda: f64, par: Parallelism) -> Result<Self> {
        check_rate(lambda)?;
        let grid = model.grid();
        let matrices = par.try_map_range(grid.interval_count(), |k| {
            let (a, b) = grid.interval(k);
            model.spectrum(k)?.dense_kernel(lambda, b - a).map(|(m, _)| m)
        })?;
        Ok(KernelStore {
            rate_lambda: lambda,
            direction: model.direction(),
            node_count: model.node_count(),
            grid: grid.times().to_vec(),
            matrices,
        })
    }

    /// Product of the stored matrices over grid intervals `k1..k2`.
    pub fn compose(&self, k1: usize, k2: usize) -> Result<DMatrix<f64>> {
        if k1 > k2 || k2 > self.matrices.len() {
            return Err(Error::arg(format!("interval range {k1}..{k2} outside 0..{}", self.matrices.len())));
        }
        let n = self.node_count;
        Ok(self.matrices[k1..k2].iter().fold(DMatrix::identity(n, n), |acc, m| acc * m))
    }

    fn check_consistent(&self) -> Result<()> {
        let m = self.matrices.len();
        if self.grid.len() != m + 1 {
            return Err(Error::StoreFormat(format!("{} grid times for {m} matrices", self.grid.len())));
        }
        if self.matrices.iter().any(|x| x.nrows() != self.node_count || x.ncols() != self.node_count) {
            return Err(Error::StoreFormat("matrix shape does not match N".into()));
        }
        Ok(())
    }
}

pub fn save_store(store: &KernelStore, path: impl AsRef<Path>) -> Result<()> {
    store.check_consistent()?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[store.direction as u8, 0, 0, 0])?;
    w.write_all(&(store.node_count as u64).to_le_bytes())?;
    w.write_all(&store.rate_lambda.to_le_bytes())?;
    w.write_all(&(store.matrices.len() as u64).to_le_bytes())?;
    for t in &store.grid {
        w.write_all(&t.to_le_bytes())?;
    }
    for m in &store.matrices {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                w.write_all(&m[(i, j)].to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_store(path: impl AsRef<Path>) -> Result<KernelStore> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::StoreFormat(format!("truncated file: need {n} bytes at offset {}", self.pos))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn decode(bytes: &[u8]) -> Result<KernelStore> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(Error::StoreFormat("bad magic".into()));
    }
    let version = u32::from_le_bytes(c.take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::StoreFormat(format!("unsupported version {version}")));
    }
    let direction = match c.take(4)?[0] {
        0 => Direction::Forward,
        1 => Direction::Backward,
        d => return Err(Error::StoreFormat(format!("bad direction byte {d}"))),
    };
    let n = c.u64()? as usize;
    let rate_lambda = c.f64()?;
    let m = c.u64()? as usize;
    let expected = n
        .checked_mul(n)
        .and_then(|nn| nn.checked_mul(m))
        .and_then(|x| x.checked_add(m + 1))
        .and_then(|x| x.checked_mul(8))
        .and_then(|x| x.checked_add(40));
    if expected != Some(bytes.len()) {
        return Err(Error::StoreFormat(format!(
            "shape mismatch: header N={n}, m={m} does not match file size {}",
            bytes.len()
        )));
    }
    let grid = (0..=m).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let mut matrices = Vec::with_capacity(m);
    for _ in 0..m {
        let data = (0..n * n).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
        matrices.push(DMatrix::from_row_slice(n, n, &data));
    }
    Ok(KernelStore { rate_lambda, direction, node_count: n, grid, matrices })
}
