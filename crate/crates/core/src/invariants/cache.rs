//! On-disk cache of [`SpectralInvariants`], keyed by (a, L, n).

use super::SpectralInvariants;
use crate::error::{Error, Result};
use crate::fiber1d::Grid1D;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const CACHE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridKey {
    #[serde(rename = "L")]
    pub half_length: f64,
    #[serde(rename = "n")]
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheDoc {
    pub schema_version: u32,
    pub a: f64,
    pub grid: GridKey,
    pub beta_a: f64,
    pub zeta_a: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    #[serde(rename = "M3")]
    pub m3: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    pub c2: f64,
    pub mu_second: f64,
    pub phi0: f64,
    pub dphi0: f64,
    pub phi_a: Vec<f64>,
    pub phi_cor: Vec<f64>,
}

impl From<&SpectralInvariants> for CacheDoc {
    fn from(inv: &SpectralInvariants) -> Self {
        Self {
            schema_version: CACHE_SCHEMA_VERSION,
            a: inv.a,
            grid: GridKey {
                half_length: inv.grid.half_length,
                n_points: inv.grid.n_points,
            },
            beta_a: inv.beta_a,
            zeta_a: inv.zeta_a,
            m2: inv.m2,
            m3: inv.m3,
            i2: inv.i2,
            c2: inv.c2,
            mu_second: inv.mu_second,
            phi0: inv.phi0,
            dphi0: inv.dphi0,
            phi_a: inv.phi_a.clone(),
            phi_cor: inv.phi_cor.clone(),
        }
    }
}

impl CacheDoc {
    pub fn into_invariants(self) -> Result<SpectralInvariants> {
        if self.schema_version != CACHE_SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "cache schema {} (expected {CACHE_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let grid = Grid1D::new(self.grid.half_length, self.grid.n_points)?;
        if self.phi_a.len() != grid.n_points || self.phi_cor.len() != grid.n_points {
            return Err(Error::Format("cached profiles do not match the grid".into()));
        }
        Ok(SpectralInvariants {
            a: self.a,
            beta_a: self.beta_a,
            zeta_a: self.zeta_a,
            phi_a: self.phi_a,
            phi0: self.phi0,
            dphi0: self.dphi0,
            m2: self.m2,
            m3: self.m3,
            i2: self.i2,
            c2: self.c2,
            mu_second: self.mu_second,
            phi_cor: self.phi_cor,
            grid,
        })
    }
}

pub fn cache_path(dir: &Path, a: f64, grid: &Grid1D) -> PathBuf {
    dir.join(format!(
        "invariants_a{:+.6}_L{}_n{}.json",
        a, grid.half_length, grid.n_points
    ))
}

/// Serialized document; stable for identical inputs.
pub fn to_json(inv: &SpectralInvariants) -> Result<String> {
    Ok(serde_json::to_string_pretty(&CacheDoc::from(inv))?)
}

/// Writes via a temporary file and rename, so readers never see a partial file.
pub fn write_cache(path: &Path, inv: &SpectralInvariants) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!("json.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(to_json(inv)?.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_cache(path: &Path) -> Result<SpectralInvariants> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str::<CacheDoc>(&text)?.into_invariants()
}

/// Cached invariants when a valid entry exists, otherwise computes and stores
/// them. The flag reports a cache hit.
pub fn load_or_compute(a: f64, grid: &Grid1D, dir: &Path) -> Result<(SpectralInvariants, bool)> {
    let path = cache_path(dir, a, grid);
    if path.exists() {
        if let Ok(inv) = read_cache(&path) {
            if inv.a == a && inv.grid == *grid {
                return Ok((inv, true));
            }
        }
    }
    let inv = SpectralInvariants::compute(a, grid)?;
    write_cache(&path, &inv)?;
    Ok((inv, false))
}
