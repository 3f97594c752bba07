//! Curvature profiles, the Frenet rectangle and the edge gauge.

use crate::error::{Error, Result};
use crate::fiber1d::field_profile;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// k_max·exp(−(|k₂|/(2k_max))s²).
    GaussianBump,
    /// k_max(1 + cos ωs)/2 on |ωs| ≤ π, zero outside, ω = √(2|k₂|/k_max).
    CosineBump,
    /// k ≡ 0 (straight edge); requires k_max = k₂ = 0.
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureProfile {
    pub kind: ProfileKind,
    pub k_max: f64,
    pub k2: f64,
}

impl CurvatureProfile {
    pub fn new(kind: ProfileKind, k_max: f64, k2: f64) -> Result<Self> {
        let p = Self { kind, k_max, k2 };
        p.validate()?;
        Ok(p)
    }

    pub fn gaussian(k_max: f64, k2: f64) -> Result<Self> {
        Self::new(ProfileKind::GaussianBump, k_max, k2)
    }

    pub fn flat() -> Self {
        Self {
            kind: ProfileKind::Flat,
            k_max: 0.0,
            k2: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ProfileKind::Flat => {
                if self.k_max != 0.0 || self.k2 != 0.0 {
                    return Err(Error::domain("flat profile takes k_max = k2 = 0"));
                }
            }
            _ => {
                if !(self.k_max > 0.0 && self.k_max.is_finite()) {
                    return Err(Error::domain(format!("k_max = {} must be positive", self.k_max)));
                }
                if !(self.k2 < 0.0 && self.k2.is_finite()) {
                    return Err(Error::domain(format!("k2 = {} must be negative", self.k2)));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self.kind {
            ProfileKind::GaussianBump => self.k_max * (-(self.k2.abs() / (2.0 * self.k_max)) * s * s).exp(),
            ProfileKind::CosineBump => {
                let w = (2.0 * self.k2.abs() / self.k_max).sqrt();
                let x = w * s;
                if x.abs() >= std::f64::consts::PI {
                    0.0
                } else {
                    0.5 * self.k_max * (1.0 + x.cos())
                }
            }
            ProfileKind::Flat => 0.0,
        }
    }

    /// Centered second difference at s = 0, Richardson-combined over steps
    /// 1e−3 and 5e−4.
    pub fn second_difference_at_zero(&self) -> f64 {
        let d = |e: f64| (self.eval(e) - 2.0 * self.eval(0.0) + self.eval(-e)) / (e * e);
        (4.0 * d(5e-4) - d(1e-3)) / 3.0
    }

    /// Largest value of k on the real line.
    pub fn max_value(&self) -> f64 {
        self.k_max.max(0.0)
    }
}

/// Frenet rectangle (−S, S) × (t_min, t_max), Dirichlet on all sides (or
/// periodic in s), with `n_s × n_t` cells. (0, 0) is a grid node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDomain {
    #[serde(rename = "S")]
    pub s_half: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub n_s: usize,
    pub n_t: usize,
    #[serde(default)]
    pub periodic_s: bool,
}

/// Parameters of the h-scaled domain family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledDomainSpec {
    /// S = s_scale·h^{1/8}.
    pub s_scale: f64,
    /// t_min = −t_below·h^{1/2}.
    pub t_below: f64,
    /// t_max = min(t_cap, t_above·h^{1/2}).
    pub t_above: f64,
    pub t_cap: f64,
    /// dt = f·h^{1/2}.
    pub f: f64,
    /// ds = aspect·dt.
    pub aspect: f64,
}

impl Default for ScaledDomainSpec {
    fn default() -> Self {
        Self {
            s_scale: 18.0,
            t_below: 9.0,
            t_above: 7.5,
            t_cap: 0.5,
            f: 0.15,
            aspect: 2.0,
        }
    }
}

impl EdgeDomain {
    pub fn new(s_half: f64, t_min: f64, t_max: f64, n_s: usize, n_t: usize) -> Result<Self> {
        let d = Self {
            s_half,
            t_min,
            t_max,
            n_s,
            n_t,
            periodic_s: false,
        };
        d.validate_grid()?;
        Ok(d)
    }

    /// (−S, S) × (−T, T).
    pub fn symmetric(s_half: f64, t_half: f64, n_s: usize, n_t: usize) -> Result<Self> {
        Self::new(s_half, -t_half, t_half, n_s, n_t)
    }

    pub fn periodic(self) -> Self {
        Self {
            periodic_s: true,
            ..self
        }
    }

    /// Domain scaled to the localization lengths h^{1/2} (normal) and
    /// h^{1/8} (tangential), with t-extents snapped to whole cells.
    pub fn scaled(h: f64, spec: &ScaledDomainSpec) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::domain(format!("h = {h} must lie in (0, 1)")));
        }
        let sh = h.sqrt();
        let dt = spec.f * sh;
        let below = (spec.t_below * sh / dt).round() as usize;
        let above = ((spec.t_cap.min(spec.t_above * sh)) / dt).floor() as usize;
        let ds = spec.aspect * dt;
        let half_cells = (spec.s_scale * h.powf(0.125) / ds).round().max(1.0) as usize;
        Self::new(
            half_cells as f64 * ds,
            -(below as f64) * dt,
            above as f64 * dt,
            2 * half_cells,
            below + above,
        )
    }

    fn validate_grid(&self) -> Result<()> {
        if !(self.s_half > 0.0 && self.t_min < 0.0 && self.t_max > 0.0) {
            return Err(Error::domain(format!(
                "domain S = {}, t in ({}, {}) must contain (0, 0) in its interior",
                self.s_half, self.t_min, self.t_max
            )));
        }
        if self.n_s < 2 || self.n_t < 2 || self.n_s % 2 != 0 {
            return Err(Error::domain(format!(
                "cell counts n_s = {}, n_t = {} (n_s must be even, both >= 2)",
                self.n_s, self.n_t
            )));
        }
        let j0 = -self.t_min / self.dt();
        if (j0 - j0.round()).abs() > 1e-8 {
            return Err(Error::domain(format!("t = 0 is not a grid node (index {j0})")));
        }
        Ok(())
    }

    /// Grid checks plus 1 − t k(s) ≥ 1/2 on the rectangle.
    pub fn validate(&self, profile: &CurvatureProfile) -> Result<()> {
        self.validate_grid()?;
        profile.validate()?;
        let jac = 1.0 - self.t_max * profile.max_value();
        if jac < 0.5 {
            return Err(Error::domain(format!(
                "Frenet chart degenerates: 1 - t_max k_max = {jac:.4} < 1/2"
            )));
        }
        Ok(())
    }

    pub fn ds(&self) -> f64 {
        2.0 * self.s_half / self.n_s as f64
    }

    pub fn dt(&self) -> f64 {
        (self.t_max - self.t_min) / self.n_t as f64
    }

    /// Node index of t = 0.
    pub fn t_zero(&self) -> usize {
        (-self.t_min / self.dt()).round() as usize
    }

    pub fn s_node(&self, i: usize) -> f64 {
        (i as f64 - (self.n_s / 2) as f64) * self.ds()
    }

    pub fn t_node(&self, j: usize) -> f64 {
        (j as f64 - self.t_zero() as f64) * self.dt()
    }

    /// Unknown s-indices: 1..n_s (Dirichlet) or 0..n_s (periodic).
    pub fn s_unknowns(&self) -> std::ops::Range<usize> {
        if self.periodic_s {
            0..self.n_s
        } else {
            1..self.n_s
        }
    }

    pub fn n_s_unknowns(&self) -> usize {
        self.s_unknowns().len()
    }

    pub fn n_t_unknowns(&self) -> usize {
        self.n_t - 1
    }

    pub fn n_unknowns(&self) -> usize {
        self.n_s_unknowns() * self.n_t_unknowns()
    }

    /// Unknown index of full-grid node (i, j); t is the fastest index.
    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        if j == 0 || j >= self.n_t {
            return None;
        }
        let r = self.s_unknowns();
        let i = if self.periodic_s { i % self.n_s } else { i };
        if !r.contains(&i) {
            return None;
        }
        Some((i - r.start) * (self.n_t - 1) + (j - 1))
    }

    /// Full-grid node of an unknown index.
    pub fn node_of(&self, k: usize) -> (usize, usize) {
        let nt = self.n_t - 1;
        (k / nt + self.s_unknowns().start, k % nt + 1)
    }
}

/// Jacobian 𝔞 = 1 − t k(s).
pub fn jacobian(profile: &CurvatureProfile, s: f64, t: f64) -> f64 {
    1.0 - t * profile.eval(s)
}

/// F̃₁(s, t) = −b_a(t)(t − t²k(s)/2); F̃₂ ≡ 0.
pub fn gauge_potential(profile: &CurvatureProfile, a: f64, s: f64, t: f64) -> f64 {
    -field_profile(a, t) * (t - 0.5 * t * t * profile.eval(s))
}

/// F̃₁ on the full node grid, row-major in s.
pub fn build_gauge_potential(profile: &CurvatureProfile, a: f64, domain: &EdgeDomain) -> Vec<f64> {
    let mut out = Vec::with_capacity((domain.n_s + 1) * (domain.n_t + 1));
    for i in 0..=domain.n_s {
        let s = domain.s_node(i);
        for j in 0..=domain.n_t {
            out.push(gauge_potential(profile, a, s, domain.t_node(j)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauge_examples() {
        let flat = CurvatureProfile::flat();
        assert_eq!(gauge_potential(&flat, -0.5, 0.3, 0.0), 0.0);
        assert_eq!(gauge_potential(&flat, 0.2, 0.0, 1.0), -1.0);
        let unit = CurvatureProfile {
            kind: ProfileKind::GaussianBump,
            k_max: 1.0,
            k2: -1e-300,
        };
        assert!((gauge_potential(&unit, -0.5, 0.0, -1.0) + 0.75).abs() < 1e-15);
    }

    #[test]
    fn profile_second_difference() {
        for kind in [ProfileKind::GaussianBump, ProfileKind::CosineBump] {
            let p = CurvatureProfile::new(kind, 1.0, -0.5).unwrap();
            assert_eq!(p.eval(0.0), 1.0);
            let d2 = p.second_difference_at_zero();
            assert!((d2 + 0.5).abs() < 1e-8, "{kind:?}: {d2}");
            for s in [0.1, 1.0, 3.0, 10.0] {
                assert!(p.eval(s) < 1.0 && p.eval(-s) == p.eval(s));
            }
        }
    }

    #[test]
    fn scaled_domain_has_origin_node() {
        let d = EdgeDomain::scaled(5e-3, &ScaledDomainSpec::default()).unwrap();
        assert!(d.t_node(d.t_zero()).abs() < 1e-15);
        assert!(d.s_node(d.n_s / 2).abs() < 1e-15);
        assert!(d.t_max <= 0.5 + 1e-12);
        let p = CurvatureProfile::gaussian(1.0, -0.5).unwrap();
        d.validate(&p).unwrap();
        let k = d.index(d.n_s / 2, d.t_zero()).unwrap();
        assert_eq!(d.node_of(k), (d.n_s / 2, d.t_zero()));
    }

    #[test]
    fn frenet_violation_is_rejected() {
        let p = CurvatureProfile::gaussian(1.0, -0.5).unwrap();
        let d = EdgeDomain::symmetric(4.0, 0.8, 100, 100).unwrap();
        assert!(d.validate(&p).is_err());
    }
}
