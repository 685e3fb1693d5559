//! Binary field snapshots.
//!
//! Layout, all little-endian: magic `NLW1`, u32 dimension, u32 grid map
//! (0 uniform, 1 sinh), f64 stretch parameter (0 for uniform), u64 node count,
//! f64 r_max, f64 time, then the radii, u and u_t as f64 arrays.

use std::path::Path;

use crate::dimension::Dimension;
use crate::error::{NlwError, Result};
use crate::functionals::{FieldState, GridMap, RadialGrid};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"NLW1";
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 8 + 8;

pub fn encode_snapshot(state: &FieldState) -> Vec<u8> {
    let grid = &state.grid;
    let m = grid.len();
    let mut out = Vec::with_capacity(HEADER_LEN + 24 * m);
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&grid.dim().n().to_le_bytes());
    let (tag, c) = match grid.map() {
        GridMap::Uniform => (0u32, 0.0),
        GridMap::Sinh { c } => (1u32, c),
    };
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&c.to_le_bytes());
    out.extend_from_slice(&(m as u64).to_le_bytes());
    out.extend_from_slice(&grid.r_max().to_le_bytes());
    out.extend_from_slice(&state.time.to_le_bytes());
    for v in grid.nodes().iter().chain(&state.u).chain(&state.ut) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> [u8; K] {
        let mut b = [0u8; K];
        b.copy_from_slice(&self.bytes[self.pos..self.pos + K]);
        self.pos += K;
        b
    }

    fn f64s(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| f64::from_le_bytes(self.take())).collect()
    }
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<FieldState> {
    if bytes.len() < 4 || &bytes[..4] != SNAPSHOT_MAGIC {
        return Err(NlwError::Format("missing NLW1 magic".into()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(NlwError::Truncated {
            missing: HEADER_LEN - bytes.len(),
        });
    }
    let mut rd = Reader { bytes, pos: 4 };
    let dim = Dimension::new(u32::from_le_bytes(rd.take()))?;
    let tag = u32::from_le_bytes(rd.take());
    let c = f64::from_le_bytes(rd.take());
    let m = u64::from_le_bytes(rd.take());
    let r_max = f64::from_le_bytes(rd.take());
    let time = f64::from_le_bytes(rd.take());

    let payload = m
        .checked_mul(24)
        .and_then(|p| usize::try_from(p).ok())
        .ok_or_else(|| NlwError::Format(format!("node count {m} is too large")))?;
    let have = bytes.len() - HEADER_LEN;
    if have < payload {
        return Err(NlwError::Truncated {
            missing: payload - have,
        });
    }
    if have > payload {
        return Err(NlwError::Format(format!("{} trailing bytes after the payload", have - payload)));
    }
    let m = m as usize;
    let grid = match tag {
        0 => RadialGrid::uniform(dim, r_max, m),
        1 => RadialGrid::stretched(dim, r_max, m, c),
        t => return Err(NlwError::Format(format!("unknown grid map tag {t}"))),
    }
    .map_err(|e| NlwError::Format(format!("grid header: {e}")))?;
    let radii = rd.f64s(m);
    if radii.iter().zip(grid.nodes()).any(|(a, b)| a.to_bits() != b.to_bits()) {
        return Err(NlwError::Format("stored radii do not match the declared grid".into()));
    }
    let u = rd.f64s(m);
    let ut = rd.f64s(m);
    FieldState::new(grid.into_shared(), u, ut, time)
}

pub fn save_snapshot(state: &FieldState, path: &Path) -> Result<()> {
    std::fs::write(path, encode_snapshot(state)).map_err(|e| NlwError::io(path, e))
}

pub fn load_snapshot(path: &Path) -> Result<FieldState> {
    let bytes = std::fs::read(path).map_err(|e| NlwError::io(path, e))?;
    decode_snapshot(&bytes)
}
