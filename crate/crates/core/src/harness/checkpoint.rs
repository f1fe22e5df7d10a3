//! Binary state snapshots.
//!
//! Layout (little-endian): magic `CFSIM`, `u32` format version, `u64` nx and
//! ny, `f64` lx, ly and t, then the row-major `f64` arrays n, c, ux, uy.

use std::path::Path;

use crate::error::{Result, SimError};
use crate::grid::{BoundaryKind, Grid, ScalarField, VectorField};
use crate::model::SimState;

pub const MAGIC: &[u8; 5] = b"CFSIM";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 5 + 4 + 8 + 8 + 8 + 8 + 8;

pub fn encode(state: &SimState) -> Vec<u8> {
    let g = state.grid();
    let arrays = [&state.n.data, &state.c.data, &state.u.ux, &state.u.uy];
    let len: usize = arrays.iter().map(|a| a.len()).sum();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * len);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx as u64).to_le_bytes());
    out.extend_from_slice(&(g.ny as u64).to_le_bytes());
    for v in [g.lx, g.ly, state.t] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for a in arrays {
        for v in a.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            SimError::Format(format!(
                "truncated: needed {n} bytes at offset {}, file has {}",
                self.pos,
                self.bytes.len()
            ))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| SimError::Format("array too large".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

pub fn decode(bytes: &[u8]) -> Result<SimState> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(SimError::Format("bad magic bytes".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(SimError::Format(format!(
            "version mismatch: file has version {version}, reader supports version {FORMAT_VERSION}"
        )));
    }
    let nx = usize::try_from(r.u64()?).map_err(|_| SimError::Format("nx out of range".into()))?;
    let ny = usize::try_from(r.u64()?).map_err(|_| SimError::Format("ny out of range".into()))?;
    let (lx, ly, t) = (r.f64()?, r.f64()?, r.f64()?);
    let grid = Grid::new(nx, ny, lx, ly).map_err(|e| SimError::Format(format!("bad grid header: {e}")))?;
    let cells = nx.checked_mul(ny).ok_or_else(|| SimError::Format("grid too large".into()))?;
    let expected = HEADER_LEN + 8 * (2 * cells + (nx + 1) * ny + nx * (ny + 1));
    if bytes.len() < expected {
        return Err(SimError::Format(format!(
            "truncated: expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    if bytes.len() > expected {
        return Err(SimError::Format(format!(
            "trailing data: expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let nb = BoundaryKind::NeumannZero;
    let n = ScalarField::from_data(grid, nb, r.f64s(cells)?)?;
    let c = ScalarField::from_data(grid, nb, r.f64s(cells)?)?;
    let mut u = VectorField::zeros(grid);
    u.ux = r.f64s((nx + 1) * ny)?;
    u.uy = r.f64s(nx * (ny + 1))?;
    SimState::new(t, n, c, u)
}

pub fn write_checkpoint(state: &SimState, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(state)).map_err(|e| SimError::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<SimState> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| SimError::io(path, e))?;
    decode(&bytes)
}
