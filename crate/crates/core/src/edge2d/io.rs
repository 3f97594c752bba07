//! JSON summaries and the MSTP binary grid dump.
//!
//! MSTP layout: 32-byte header (b"MSTP", u32 version, u64 n_s, u64 n_t,
//! 8 zero bytes) followed by n_s·n_t complex64 values (f32 real, f32 imag),
//! row-major in s, all little-endian.

use super::solve::{EigenResult2D, SolveStats};
use crate::error::{Error, Result};
use magstep_linalg::C64;
use serde::Serialize;
use std::io::{Read, Write};
use std::path::Path;

pub const MSTP_MAGIC: &[u8; 4] = b"MSTP";
pub const MSTP_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSummary<'a> {
    pub h: f64,
    pub a: f64,
    pub lambdas: &'a [f64],
    pub stats: &'a SolveStats,
}

pub fn summary_json(res: &EigenResult2D) -> Result<String> {
    Ok(serde_json::to_string_pretty(&EigenSummary {
        h: res.h,
        a: res.a,
        lambdas: &res.lambdas,
        stats: &res.stats,
    })?)
}

pub fn write_mstp(w: &mut impl Write, n_s: usize, n_t: usize, values: &[C64]) -> Result<()> {
    if values.len() != n_s * n_t {
        return Err(Error::Format(format!("{} values for a {n_s} x {n_t} grid", values.len())));
    }
    let mut head = [0u8; 32];
    head[..4].copy_from_slice(MSTP_MAGIC);
    head[4..8].copy_from_slice(&MSTP_VERSION.to_le_bytes());
    head[8..16].copy_from_slice(&(n_s as u64).to_le_bytes());
    head[16..24].copy_from_slice(&(n_t as u64).to_le_bytes());
    let mut buf = Vec::with_capacity(32 + 8 * values.len());
    buf.extend_from_slice(&head);
    for v in values {
        buf.extend_from_slice(&(v.re as f32).to_le_bytes());
        buf.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_mstp(r: &mut impl Read) -> Result<(usize, usize, Vec<C64>)> {
    let mut head = [0u8; 32];
    r.read_exact(&mut head)?;
    if &head[..4] != MSTP_MAGIC {
        return Err(Error::Format("missing MSTP magic".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes"));
    if version != MSTP_VERSION {
        return Err(Error::Format(format!("MSTP version {version}")));
    }
    let n_s = u64::from_le_bytes(head[8..16].try_into().expect("8 bytes")) as usize;
    let n_t = u64::from_le_bytes(head[16..24].try_into().expect("8 bytes")) as usize;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != 8 * n_s * n_t {
        return Err(Error::Format(format!("MSTP body has {} bytes for {n_s} x {n_t}", body.len())));
    }
    let vals = body
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().expect("4 bytes"));
            let im = f32::from_le_bytes(c[4..].try_into().expect("4 bytes"));
            C64::new(re as f64, im as f64)
        })
        .collect();
    Ok((n_s, n_t, vals))
}

/// Full-grid dump of eigenvector `mode`.
pub fn dump_eigenvector(path: &Path, res: &EigenResult2D, mode: usize) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    write_mstp(&mut f, res.domain.n_s + 1, res.domain.n_t + 1, &res.full_grid(mode))
}
