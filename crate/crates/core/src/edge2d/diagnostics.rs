//! Localization of computed eigenfunctions and their rescaled projections.

use super::solve::EigenResult2D;
use crate::error::Result;
use crate::invariants::SpectralInvariants;
use crate::quasimode::{projection_diagnostics, GridFunction2D, ProjectionDiagnostics};
use magstep_linalg::C64;
use serde::Serialize;

pub const MASS_RADII: [f64; 3] = [2.0, 4.0, 8.0];

/// Moments and tails of a nonnegative density on an s × t node grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityStats {
    pub total: f64,
    pub mean_s: f64,
    pub mean_t: f64,
    /// √(2 Var s): equals w for a density ∝ exp(−s²/w²).
    pub scale_s: f64,
    pub scale_t: f64,
    /// Fitted amplitude decay rates in t/`t_unit` on the (t < 0, t > 0) tails.
    pub decay_t: (Option<f64>, Option<f64>),
    /// Same in |s|/`s_unit`, averaged over the two tails.
    pub decay_s: Option<f64>,
}

/// `density` is row-major in s and already includes quadrature weights.
pub fn density_stats(s: &[f64], t: &[f64], density: &[f64], s_unit: f64, t_unit: f64) -> DensityStats {
    let nt = t.len();
    let mut rho_s = vec![0.0; s.len()];
    let mut rho_t = vec![0.0; nt];
    for (k, d) in density.iter().enumerate() {
        rho_s[k / nt] += d;
        rho_t[k % nt] += d;
    }
    let total: f64 = rho_s.iter().sum();
    let mean = |x: &[f64], r: &[f64]| x.iter().zip(r).map(|(a, b)| a * b).sum::<f64>() / total;
    let (ms, mt) = (mean(s, &rho_s), mean(t, &rho_t));
    let var = |x: &[f64], r: &[f64], m: f64| x.iter().zip(r).map(|(a, b)| (a - m).powi(2) * b).sum::<f64>() / total;
    let tail_rate = |x: &[f64], r: &[f64], unit: f64, sign: f64| -> Option<f64> {
        let peak = r.iter().cloned().fold(0.0, f64::max);
        let pts: Vec<(f64, f64)> = x
            .iter()
            .zip(r)
            .filter(|(xi, ri)| xi.signum() == sign && **ri > 1e-10 * peak && **ri < 1e-3 * peak)
            .map(|(xi, ri)| (xi.abs() / unit, ri.ln()))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        // Density decays at twice the amplitude rate.
        Some(-0.5 * sxy / sxx)
    };
    let ds = match (tail_rate(s, &rho_s, s_unit, -1.0), tail_rate(s, &rho_s, s_unit, 1.0)) {
        (Some(a), Some(b)) => Some(0.5 * (a + b)),
        (a, b) => a.or(b),
    };
    DensityStats {
        total,
        mean_s: ms,
        mean_t: mt,
        scale_s: (2.0 * var(s, &rho_s, ms)).sqrt(),
        scale_t: (2.0 * var(t, &rho_t, mt)).sqrt(),
        decay_t: (tail_rate(t, &rho_t, t_unit, -1.0), tail_rate(t, &rho_t, t_unit, 1.0)),
        decay_s: ds,
    }
}

/// Fraction of the density at |x| ≥ r along one axis.
fn mass_beyond(x: &[f64], density: &[f64], stride_is_t: bool, nt: usize, r: f64) -> f64 {
    let total: f64 = density.iter().sum();
    let outside: f64 = density
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let c = if stride_is_t { x[k % nt] } else { x[k / nt] };
            c.abs() >= r
        })
        .map(|(_, d)| d)
        .sum();
    outside / total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationReport {
    pub h: f64,
    pub mode: usize,
    pub lambda: f64,
    /// (c, mass fraction at |t| ≥ c h^{1/2}).
    pub normal_mass_outside: Vec<(f64, f64)>,
    /// (c, mass fraction at |s| ≥ c h^{1/8}).
    pub tangential_mass_outside: Vec<(f64, f64)>,
    /// Scales in units of h^{1/2} and h^{1/8}.
    pub normal_scale: f64,
    pub tangential_scale: f64,
    pub stats: DensityStats,
    pub projection: ProjectionDiagnostics,
    /// ‖v − Π₀v‖/‖v‖.
    pub relative_defect_pi0: f64,
    /// ‖R₀^new v‖/‖v‖.
    pub relative_rnew: f64,
}

/// v(σ, τ) = e^{−iζ_aσ/h^{3/8}} h^{5/16} ψ(h^{1/8}σ, h^{1/2}τ) on the full
/// node grid. The cutoffs χ(h^ησ)χ(h^δτ) are not applied.
pub fn rescaled_gauge_removed(res: &EigenResult2D, mode: usize, inv: &SpectralInvariants) -> GridFunction2D {
    let d = &res.domain;
    let h = res.h;
    let (hs, ht) = (h.powf(0.125), h.sqrt());
    let sigma: Vec<f64> = (0..=d.n_s).map(|i| d.s_node(i) / hs).collect();
    let tau: Vec<f64> = (0..=d.n_t).map(|j| d.t_node(j) / ht).collect();
    let u = res.full_grid(mode);
    let nt = tau.len();
    let amp = h.powf(5.0 / 16.0);
    let values = u
        .iter()
        .enumerate()
        .map(|(k, x)| x * C64::from_polar(amp, -inv.zeta_a * sigma[k / nt] / h.powf(0.375)))
        .collect();
    GridFunction2D { sigma, tau, values }
}

pub fn localization_diagnostics(res: &EigenResult2D, mode: usize, inv: &SpectralInvariants) -> Result<LocalizationReport> {
    let d = &res.domain;
    let h = res.h;
    let s: Vec<f64> = (0..=d.n_s).map(|i| d.s_node(i)).collect();
    let t: Vec<f64> = (0..=d.n_t).map(|j| d.t_node(j)).collect();
    let nt = t.len();
    // Mass-weighted density on the full grid (Dirichlet nodes carry zero).
    let mut density = vec![0.0; s.len() * nt];
    for (k, (u, m)) in res.eigvecs[mode].iter().zip(&res.mass).enumerate() {
        let (i, j) = d.node_of(k);
        density[i * nt + j] = u.norm_sqr() * m;
    }
    let (su, tu) = (h.powf(0.125), h.sqrt());
    let stats = density_stats(&s, &t, &density, su, tu);
    let v = rescaled_gauge_removed(res, mode, inv);
    let projection = projection_diagnostics(&v, inv, h)?;
    Ok(LocalizationReport {
        h,
        mode,
        lambda: res.lambdas[mode],
        normal_mass_outside: MASS_RADII
            .iter()
            .map(|&c| (c, mass_beyond(&t, &density, true, nt, c * tu)))
            .collect(),
        tangential_mass_outside: MASS_RADII
            .iter()
            .map(|&c| (c, mass_beyond(&s, &density, false, nt, c * su)))
            .collect(),
        normal_scale: stats.scale_t / tu,
        tangential_scale: stats.scale_s / su,
        stats,
        relative_defect_pi0: projection.defect_pi0 / projection.norm_v,
        relative_rnew: projection.norm_rnew / projection.norm_v,
        projection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_scales_are_recovered() {
        let h: f64 = 5e-3;
        let (ws, wt) = (h.powf(0.125), h.sqrt());
        let s: Vec<f64> = (0..401).map(|i| -8.0 * ws + 16.0 * ws * i as f64 / 400.0).collect();
        let t: Vec<f64> = (0..401).map(|j| -8.0 * wt + 16.0 * wt * j as f64 / 400.0).collect();
        let mut dens = Vec::new();
        for &x in &s {
            for &y in &t {
                dens.push((-(y * y) / h - x * x / h.powf(0.25)).exp());
            }
        }
        let st = density_stats(&s, &t, &dens, ws, wt);
        assert!((st.scale_s / ws - 1.0).abs() < 0.05);
        assert!((st.scale_t / wt - 1.0).abs() < 0.05);
        assert!(mass_beyond(&t, &dens, true, t.len(), 2.0 * wt) < 1e-2);
    }
}
