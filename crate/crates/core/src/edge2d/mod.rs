//! The 2D edge operator in Frenet coordinates: assembly, eigen-solves,
//! asymptotic fits and localization diagnostics.

mod assemble;
mod diagnostics;
mod fit;
mod geometry;
mod io;
mod solve;

pub use assemble::{assemble_operator2d, assemble_operator2d_with, AssemblyOptions, Operator2D};
pub use diagnostics::{
    density_stats, localization_diagnostics, rescaled_gauge_removed, DensityStats, LocalizationReport, MASS_RADII,
};
pub use fit::{
    fit_asymptotics, fit_three_terms, least_squares, EigenSample, FitReport, FitRow, PredictedConstants,
};
pub use geometry::{
    build_gauge_potential, gauge_potential, jacobian, CurvatureProfile, EdgeDomain, ProfileKind, ScaledDomainSpec,
};
pub use io::{dump_eigenvector, read_mstp, summary_json, write_mstp, EigenSummary, MSTP_MAGIC, MSTP_VERSION};
pub use solve::{
    predicted_shift, solve_eigs2d, solve_near_prediction, solve_near_prediction_with, EigenResult2D, Solve2dOptions,
    SolveStats,
};

use crate::error::Result;
use crate::invariants::SpectralInvariants;
use serde::Serialize;

/// Mesh factors (f₁, f₂) for extrapolation in f².
pub const DEFAULT_MESH_PAIR: (f64, f64) = (0.2, 0.15);

/// Assemble on the h-scaled domain and solve near the predicted λ₁.
pub fn solve_scaled(
    h: f64,
    a: f64,
    profile: &CurvatureProfile,
    spec: &ScaledDomainSpec,
    k: usize,
    inv: &SpectralInvariants,
) -> Result<EigenResult2D> {
    solve_scaled_with(h, a, profile, spec, k, inv, &Solve2dOptions::default())
}

pub fn solve_scaled_with(
    h: f64,
    a: f64,
    profile: &CurvatureProfile,
    spec: &ScaledDomainSpec,
    k: usize,
    inv: &SpectralInvariants,
    opts: &Solve2dOptions,
) -> Result<EigenResult2D> {
    let domain = EdgeDomain::scaled(h, spec)?;
    let op = assemble_operator2d(h, a, profile, &domain)?;
    solve_near_prediction_with(&op, k, inv, opts)
}

#[derive(Debug, Clone)]
pub struct ExtrapolatedEigs {
    pub h: f64,
    pub mesh: (f64, f64),
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    /// E(f₂) + (E(f₂) − E(f₁))·f₂²/(f₁² − f₂²).
    pub lambdas: Vec<f64>,
    pub fine_result: EigenResult2D,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtrapolatedSummary {
    pub h: f64,
    pub mesh: (f64, f64),
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub fine_stats: SolveStats,
}

impl ExtrapolatedEigs {
    pub fn summary(&self) -> ExtrapolatedSummary {
        ExtrapolatedSummary {
            h: self.h,
            mesh: self.mesh,
            coarse: self.coarse.clone(),
            fine: self.fine.clone(),
            lambdas: self.lambdas.clone(),
            fine_stats: self.fine_result.stats.clone(),
        }
    }

    pub fn sample(&self) -> EigenSample {
        EigenSample {
            h: self.h,
            lambdas: self.lambdas.clone(),
        }
    }
}

pub fn extrapolate_mesh(coarse: f64, fine: f64, f1: f64, f2: f64) -> f64 {
    fine + (fine - coarse) * f2 * f2 / (f1 * f1 - f2 * f2)
}

/// Two solves at mesh factors `mesh` and extrapolation of each eigenvalue
/// in f².
pub fn solve_extrapolated(
    h: f64,
    a: f64,
    profile: &CurvatureProfile,
    spec: &ScaledDomainSpec,
    mesh: (f64, f64),
    k: usize,
    inv: &SpectralInvariants,
) -> Result<ExtrapolatedEigs> {
    solve_extrapolated_with(h, a, profile, spec, mesh, k, inv, &Solve2dOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn solve_extrapolated_with(
    h: f64,
    a: f64,
    profile: &CurvatureProfile,
    spec: &ScaledDomainSpec,
    mesh: (f64, f64),
    k: usize,
    inv: &SpectralInvariants,
    opts: &Solve2dOptions,
) -> Result<ExtrapolatedEigs> {
    let coarse = solve_scaled_with(h, a, profile, &ScaledDomainSpec { f: mesh.0, ..*spec }, k, inv, opts)?;
    let fine = solve_scaled_with(h, a, profile, &ScaledDomainSpec { f: mesh.1, ..*spec }, k, inv, opts)?;
    let lambdas = coarse
        .lambdas
        .iter()
        .zip(&fine.lambdas)
        .map(|(c, f)| extrapolate_mesh(*c, *f, mesh.0, mesh.1))
        .collect();
    Ok(ExtrapolatedEigs {
        h,
        mesh,
        coarse: coarse.lambdas,
        fine: fine.lambdas.clone(),
        lambdas,
        fine_result: fine,
    })
}
