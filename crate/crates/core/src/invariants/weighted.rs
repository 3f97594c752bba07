//! Curvature-weighted fiber model on (−R, R) with measure (1 − κh^{1/2}τ)dτ.
//!
//! The quadratic form
//!   q(u) = ∫ (|u′|² + (1 + 2κh^{1/2}τ)(b_aτ + ξ − κh^{1/2}b_aτ²/2)² u²)(1 − κh^{1/2}τ) dτ
//! is discretized on the nodes of the invariants grid inside (−R, R): link
//! weights at midpoints, nodal potential and mass. At κ = 0 and R ≥ L this is
//! exactly the fiber operator, so λ₁ reproduces β_a without discretization
//! offset. The generalized problem is reduced by D^{1/2} similarity.

use super::SpectralInvariants;
use crate::error::{Error, Result};
use crate::fiber1d::field_profile;
use magstep_linalg::TriDiag;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedModelParams {
    pub a: f64,
    pub xi: f64,
    pub kappa: f64,
    pub h: f64,
    pub delta: f64,
    /// Truncation radius; `None` means h^{−δ}.
    pub radius: Option<f64>,
}

/// Largest radius that keeps |κ|h^{1/2}R ≤ 0.3, capped at `half_length`.
pub fn numerical_radius(kappa: f64, h: f64, half_length: f64) -> f64 {
    let s = kappa.abs() * h.sqrt();
    if s == 0.0 {
        half_length
    } else {
        half_length.min(0.3 / s)
    }
}

impl WeightedModelParams {
    /// Truncation at h^{−δ}.
    pub fn with_delta(a: f64, xi: f64, kappa: f64, h: f64, delta: f64) -> Result<Self> {
        let p = Self {
            a,
            xi,
            kappa,
            h,
            delta,
            radius: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Explicit truncation radius.
    pub fn with_radius(a: f64, xi: f64, kappa: f64, h: f64, delta: f64, radius: f64) -> Result<Self> {
        let p = Self {
            a,
            xi,
            kappa,
            h,
            delta,
            radius: Some(radius),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn radius(&self) -> f64 {
        self.radius.unwrap_or_else(|| self.h.powf(-self.delta))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h < 1.0) {
            return Err(Error::domain(format!("h = {} must lie in (0, 1)", self.h)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0 / 12.0) {
            return Err(Error::domain(format!("delta = {} must lie in (0, 1/12)", self.delta)));
        }
        let r = self.radius();
        if !(r > 0.0) {
            return Err(Error::domain(format!("radius {r} must be positive")));
        }
        let s = self.kappa.abs() * self.h.sqrt() * r;
        if s >= 1.0 / 3.0 {
            return Err(Error::domain(format!(
                "|kappa| h^(1/2) R = {s:.4} must stay below 1/3"
            )));
        }
        Ok(())
    }
}

/// Discretized model as a symmetric tridiagonal after mass reduction,
/// together with the retained node indices of the invariants grid.
pub fn weighted_operator(p: &WeightedModelParams, inv: &SpectralInvariants) -> Result<(TriDiag, Vec<usize>)> {
    p.validate()?;
    let g = &inv.grid;
    let dt = g.step();
    let r = p.radius();
    let sh = p.kappa * p.h.sqrt();
    let idx: Vec<usize> = (1..g.n_points - 1).filter(|&j| g.node(j).abs() < r).collect();
    if idx.len() < 3 {
        return Err(Error::domain(format!("radius {r} keeps fewer than 3 nodes")));
    }
    let weight = |t: f64| 1.0 - sh * t;
    let mut diag = Vec::with_capacity(idx.len());
    let mut mass = Vec::with_capacity(idx.len());
    for &j in &idx {
        let t = g.node(j);
        let m = weight(t);
        if m <= 0.0 {
            return Err(Error::domain(format!("weight {m} at tau = {t}")));
        }
        let b = field_profile(p.a, t);
        let q = b * t + p.xi - sh * b * t * t / 2.0;
        let v = (1.0 + 2.0 * sh * t) * q * q;
        let links = weight(t - 0.5 * dt) + weight(t + 0.5 * dt);
        diag.push(links / (dt * dt) + v * m);
        mass.push(m);
    }
    let off: Vec<f64> = idx
        .windows(2)
        .map(|w| -weight(0.5 * (g.node(w[0]) + g.node(w[1]))) / (dt * dt))
        .collect();
    let d: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let diag: Vec<f64> = diag.iter().zip(&d).map(|(k, s)| k * s * s).collect();
    let off: Vec<f64> = off.iter().enumerate().map(|(i, k)| k * d[i] * d[i + 1]).collect();
    Ok((TriDiag::new(diag, off)?, idx))
}

pub fn weighted_op_lambda1(p: &WeightedModelParams, inv: &SpectralInvariants) -> Result<f64> {
    let (t, _) = weighted_operator(p, inv)?;
    Ok(t.eigenvalue_by_bisection(0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub h: f64,
    pub kappa: f64,
    pub offsets: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub lambda_at_zeta: f64,
    /// λ₁ − β_a − κM₃h^{1/2} per offset.
    pub margins: Vec<f64>,
    /// (λ₁(ζ + d) − λ₁(ζ))/d² per offset.
    pub growth: Vec<f64>,
    pub min_margin: f64,
    /// Smallest C with min margin ≥ −C·h.
    pub calibrated_c: f64,
    /// Smallest |d| from which the margin stays ≥ c₂d²/2 for all larger |d|
    /// on the same side; reported, not asserted.
    pub quadratic_regime_from: Option<f64>,
}

/// ±logspace(1e−3, 1, per_side).
pub fn default_offsets(per_side: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * per_side);
    for i in 0..per_side {
        let e = -3.0 + 3.0 * i as f64 / (per_side as f64 - 1.0);
        let d = 10f64.powf(e);
        out.push(-d);
        out.push(d);
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Evaluates λ₁ over ζ_a + offsets at fixed (κ, h), with the radius chosen by
/// [`numerical_radius`].
pub fn weighted_lower_bound_check(
    offsets: &[f64],
    inv: &SpectralInvariants,
    kappa: f64,
    h: f64,
    delta: f64,
) -> Result<LowerBoundReport> {
    let r = numerical_radius(kappa, h, inv.grid.half_length);
    let lam = |xi: f64| -> Result<f64> {
        weighted_op_lambda1(&WeightedModelParams::with_radius(inv.a, xi, kappa, h, delta, r)?, inv)
    };
    let l0 = lam(inv.zeta_a)?;
    let shift = inv.beta_a + kappa * inv.m3 * h.sqrt();
    let lambdas: Vec<f64> = offsets.iter().map(|d| lam(inv.zeta_a + d)).collect::<Result<_>>()?;
    let margins: Vec<f64> = lambdas.iter().map(|l| l - shift).collect();
    let growth: Vec<f64> = lambdas
        .iter()
        .zip(offsets)
        .map(|(l, d)| (l - l0) / (d * d))
        .collect();
    let min_margin = margins.iter().copied().fold(l0 - shift, f64::min);
    let ok = |i: usize| margins[i] >= 0.5 * inv.c2 * offsets[i] * offsets[i];
    // Per side: the smallest |d| beyond which every offset satisfies the bound.
    let side_threshold = |sign: f64| -> Option<f64> {
        let mut idx: Vec<usize> = (0..offsets.len()).filter(|&i| offsets[i].signum() == sign).collect();
        idx.sort_by(|&i, &k| offsets[k].abs().total_cmp(&offsets[i].abs()));
        let mut from = None;
        for i in idx {
            if !ok(i) {
                break;
            }
            from = Some(offsets[i].abs());
        }
        from
    };
    let quadratic_regime_from = match (side_threshold(-1.0), side_threshold(1.0)) {
        (Some(l), Some(r)) => Some(l.max(r)),
        _ => None,
    };
    Ok(LowerBoundReport {
        h,
        kappa,
        offsets: offsets.to_vec(),
        lambdas,
        lambda_at_zeta: l0,
        margins,
        growth,
        min_margin,
        calibrated_c: (-min_margin).max(0.0) / h,
        quadratic_regime_from,
    })
}
