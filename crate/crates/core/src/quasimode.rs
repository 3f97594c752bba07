//! WKB quasimodes for the rescaled edge operator and projection diagnostics.
//!
//! In the variables σ = h^{−1/8}s, τ = h^{−1/2}t the operator expands as
//! P₀ + h^{3/8}P₁ + h^{1/2}P₂ + h^{3/4}P₃ + O(h^{7/8}) with
//!
//!   P₀ = −∂τ² + W² − β,   W = ζ + b_a(τ)τ
//!   P₁ = −2iW∂σ
//!   P₂ = k_max h₁,         h₁ = ∂τ + 2τW² − b_aτ²W
//!   P₃ = −∂σ² + (k₂/2)σ² h₁
//!
//! Every hierarchy term is a short sum of τ-profiles (on the invariants grid)
//! times σ-functions of the form polynomial × Gaussian. The σ factors are
//! handled exactly, so σ-derivatives and σ-integrals carry no discretization
//! error and norms come from Gram sums.

use crate::error::{Error, Result};
use crate::fiber1d::{field_profile, Grid1D};
use crate::invariants::{h1_apply, Resolvent, SpectralInvariants};
use magstep_linalg::{tridiag_smallest, TriDiag, C64};
use serde::Serialize;

/// Tangential cutoff exponent η.
pub const ETA: f64 = 1.0 / 16.0;
/// Normal cutoff exponent δ.
pub const DELTA: f64 = 1.0 / 16.0;
/// σ-grid half-length in oscillator widths.
pub const SIGMA_WIDTHS: f64 = 12.0;

/// C² bump: 1 on [−½, ½], 0 outside (−1, 1), quintic smoothstep between.
pub fn cutoff(x: f64) -> f64 {
    let r = x.abs();
    if r <= 0.5 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        let u = 2.0 * r - 1.0;
        1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    }
}

/// ∫ σᵏ e^{−σ²/w²} dσ.
fn gaussian_moment(k: usize, w: f64) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let m = k / 2;
    // Γ(m + ½) by the recurrence from Γ(½) = √π.
    let mut gamma = std::f64::consts::PI.sqrt();
    for j in 0..m {
        gamma *= j as f64 + 0.5;
    }
    w.powi(k as i32 + 1) * gamma
}

/// p(σ)·exp(−σ²/(2w²)) with p given by its monomial coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussPoly {
    pub coeffs: Vec<f64>,
    pub width: f64,
}

impl GaussPoly {
    pub fn zero(width: f64) -> Self {
        Self {
            coeffs: vec![0.0],
            width,
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let p = self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c);
        p * (-s * s / (2.0 * self.width * self.width)).exp()
    }

    /// (p′ − σp/w²)·exp(−σ²/(2w²)).
    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        let iw2 = 1.0 / (self.width * self.width);
        let mut c = vec![0.0; n + 1];
        for (k, &a) in self.coeffs.iter().enumerate() {
            if k > 0 {
                c[k - 1] += k as f64 * a;
            }
            c[k + 1] -= a * iw2;
        }
        Self {
            coeffs: c,
            width: self.width,
        }
    }

    pub fn mul_sigma2(&self) -> Self {
        let mut c = vec![0.0, 0.0];
        c.extend_from_slice(&self.coeffs);
        Self {
            coeffs: c,
            width: self.width,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            width: self.width,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert_eq!(self.width, o.width);
        let n = self.coeffs.len().max(o.coeffs.len());
        let c = (0..n)
            .map(|k| self.coeffs.get(k).unwrap_or(&0.0) + o.coeffs.get(k).unwrap_or(&0.0))
            .collect();
        Self {
            coeffs: c,
            width: self.width,
        }
    }

    /// Exact ∫ self·other dσ.
    pub fn inner(&self, o: &Self) -> f64 {
        debug_assert_eq!(self.width, o.width);
        let mut s = 0.0;
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                s += a * b * gaussian_moment(i + j, self.width);
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }
}

/// H^harm = −c₂ d²/dσ² + Kσ², K = k₂M₃/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicOscParams {
    pub c2: f64,
    pub k: f64,
}

impl HarmonicOscParams {
    pub fn new(c2: f64, k: f64) -> Result<Self> {
        if !(c2 > 0.0 && k > 0.0) {
            return Err(Error::domain(format!("oscillator needs c2 > 0 and K > 0 (got {c2}, {k})")));
        }
        Ok(Self { c2, k })
    }

    pub fn from_invariants(inv: &SpectralInvariants, k2: f64) -> Result<Self> {
        Self::new(inv.c2, k2 * inv.m3 / 2.0)
    }

    /// w = (c₂/K)^{1/4}.
    pub fn width(&self) -> f64 {
        (self.c2 / self.k).powf(0.25)
    }

    /// E_n = (2n − 1)√(c₂K), n ≥ 1.
    pub fn level(&self, n: usize) -> f64 {
        (2.0 * n as f64 - 1.0) * (self.c2 * self.k).sqrt()
    }

    /// L²-normalized n-th eigenfunction H_{n−1}(σ/w)e^{−σ²/(2w²)}.
    pub fn hermite_function(&self, n: usize) -> GaussPoly {
        assert!(n >= 1, "levels are numbered from 1");
        let w = self.width();
        let m = n - 1;
        // Physicists' Hermite coefficients in x, by H_{j+1} = 2xH_j − 2jH_{j−1}.
        let mut prev = vec![1.0];
        let mut cur = vec![0.0, 2.0];
        if m == 0 {
            cur = prev.clone();
        } else {
            for j in 1..m {
                let mut next = vec![0.0; j + 2];
                for (k, &c) in cur.iter().enumerate() {
                    next[k + 1] += 2.0 * c;
                }
                for (k, &c) in prev.iter().enumerate() {
                    next[k] -= 2.0 * j as f64 * c;
                }
                prev = cur;
                cur = next;
            }
        }
        let coeffs: Vec<f64> = cur.iter().enumerate().map(|(k, c)| c / w.powi(k as i32)).collect();
        let g = GaussPoly { coeffs, width: w };
        let nrm = g.norm();
        g.scaled(1.0 / nrm)
    }

    /// −c₂f″ + Kσ²f.
    pub fn apply(&self, f: &GaussPoly) -> GaussPoly {
        f.derivative()
            .derivative()
            .scaled(-self.c2)
            .add(&f.mul_sigma2().scaled(self.k))
    }

    /// Dirichlet finite-difference discretization on `g`.
    pub fn discretize(&self, g: &Grid1D) -> TriDiag {
        let ds = g.step();
        let inv = self.c2 / (ds * ds);
        let diag = (1..g.n_points - 1)
            .map(|j| {
                let s = g.node(j);
                2.0 * inv + self.k * s * s
            })
            .collect();
        TriDiag::new(diag, vec![-inv; g.n_points - 3]).expect("finite oscillator entries")
    }
}

/// σ-grid of `SIGMA_WIDTHS` oscillator widths.
pub fn default_sigma_grid(p: &HarmonicOscParams, n_points: usize) -> Result<Grid1D> {
    Grid1D::new(SIGMA_WIDTHS * p.width(), n_points)
}

/// Analytic E_n and the Hermite function sampled on `g` (trapezoid-normalized).
pub fn harm_eigenpair(n: usize, p: &HarmonicOscParams, g: &Grid1D) -> Result<(f64, Vec<f64>)> {
    if n == 0 {
        return Err(Error::domain("oscillator levels start at n = 1"));
    }
    let f = p.hermite_function(n);
    let mut v: Vec<f64> = g.nodes().iter().map(|&s| f.eval(s)).collect();
    let nrm = g.inner(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    Ok((p.level(n), v))
}

/// The lowest `count` eigenvalues of the discretized oscillator.
pub fn harm_discrete_levels(count: usize, p: &HarmonicOscParams, g: &Grid1D) -> Result<Vec<f64>> {
    let t = p.discretize(g);
    Ok(tridiag_smallest(&t, count, 1e-13)?.into_iter().map(|e| e.value).collect())
}

/// coef · τ-profile ⊗ σ-function.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: C64,
    pub tau: Vec<f64>,
    pub sigma: GaussPoly,
}

/// Finite sum of separable terms on the invariants τ-grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Separable {
    pub terms: Vec<Term>,
}

impl Separable {
    pub fn single(coef: C64, tau: Vec<f64>, sigma: GaussPoly) -> Self {
        Self {
            terms: vec![Term { coef, tau, sigma }],
        }
    }

    pub fn push_scaled(&mut self, other: &Separable, s: C64) {
        for t in &other.terms {
            self.terms.push(Term {
                coef: t.coef * s,
                tau: t.tau.clone(),
                sigma: t.sigma.clone(),
            });
        }
    }

    pub fn plus(&self, other: &Separable, s: C64) -> Separable {
        let mut out = self.clone();
        out.push_scaled(other, s);
        out
    }

    fn map(&self, f: impl Fn(&Term) -> Vec<Term>) -> Separable {
        Separable {
            terms: self.terms.iter().flat_map(f).collect(),
        }
    }

    /// ⟨self, other⟩ (conjugate-linear in self): exact in σ, trapezoid in τ.
    pub fn inner(&self, other: &Separable, g: &Grid1D) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for a in &self.terms {
            for b in &other.terms {
                s += a.coef.conj() * b.coef * g.inner(&a.tau, &b.tau) * a.sigma.inner(&b.sigma);
            }
        }
        s
    }

    pub fn norm(&self, g: &Grid1D) -> f64 {
        self.inner(self, g).re.max(0.0).sqrt()
    }

    /// ∫ self(σ, τ) w(τ) dτ as (real part, imaginary part) σ-functions.
    pub fn tau_pairing(&self, w: &[f64], g: &Grid1D) -> (GaussPoly, GaussPoly) {
        let width = self.terms.first().map_or(1.0, |t| t.sigma.width);
        let mut re = GaussPoly::zero(width);
        let mut im = GaussPoly::zero(width);
        for t in &self.terms {
            let p = g.inner(&t.tau, w);
            re = re.add(&t.sigma.scaled(t.coef.re * p));
            im = im.add(&t.sigma.scaled(t.coef.im * p));
        }
        (re, im)
    }

    /// Samples on σ-nodes × τ-grid, row-major in σ.
    pub fn sample(&self, sigma: &[f64], n_tau: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); sigma.len() * n_tau];
        for t in &self.terms {
            for (i, &s) in sigma.iter().enumerate() {
                let c = t.coef * t.sigma.eval(s);
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &mut out[i * n_tau..(i + 1) * n_tau];
                for (o, &p) in row.iter_mut().zip(&t.tau) {
                    *o += c * p;
                }
            }
        }
        out
    }
}

/// The truncated operator pieces acting on separable sums.
pub struct HierarchyOps<'a> {
    pub inv: &'a SpectralInvariants,
    pub resolvent: Resolvent,
    w: Vec<f64>,
    pub k_max: f64,
    pub k2: f64,
}

impl<'a> HierarchyOps<'a> {
    pub fn new(inv: &'a SpectralInvariants, k_max: f64, k2: f64) -> Self {
        Self {
            inv,
            resolvent: Resolvent::new(inv),
            w: inv.w_profile(),
            k_max,
            k2,
        }
    }

    fn times_w(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.w).map(|(a, b)| a * b).collect()
    }

    pub fn p0(&self, g: &Separable) -> Separable {
        g.map(|t| {
            vec![Term {
                coef: t.coef,
                tau: self.resolvent.operator_apply(&t.tau),
                sigma: t.sigma.clone(),
            }]
        })
    }

    pub fn p1(&self, g: &Separable) -> Separable {
        g.map(|t| {
            vec![Term {
                coef: t.coef * C64::new(0.0, -2.0),
                tau: self.times_w(&t.tau),
                sigma: t.sigma.derivative(),
            }]
        })
    }

    pub fn p2(&self, g: &Separable) -> Separable {
        g.map(|t| {
            vec![Term {
                coef: t.coef * self.k_max,
                tau: h1_apply(self.inv, &t.tau),
                sigma: t.sigma.clone(),
            }]
        })
    }

    pub fn p3(&self, g: &Separable) -> Separable {
        g.map(|t| {
            vec![
                Term {
                    coef: -t.coef,
                    tau: t.tau.clone(),
                    sigma: t.sigma.derivative().derivative(),
                },
                Term {
                    coef: t.coef * (0.5 * self.k2),
                    tau: h1_apply(self.inv, &t.tau),
                    sigma: t.sigma.mul_sigma2(),
                },
            ]
        })
    }

    /// (P₀ + h^{3/8}P₁ + h^{1/2}P₂ + h^{3/4}P₃ − μ)g.
    pub fn truncated_residual(&self, h: f64, g: &Separable, mu: f64) -> Separable {
        let mut r = self.p0(g);
        r.push_scaled(&self.p1(g), C64::new(h.powf(0.375), 0.0));
        r.push_scaled(&self.p2(g), C64::new(h.sqrt(), 0.0));
        r.push_scaled(&self.p3(g), C64::new(h.powf(0.75), 0.0));
        r.push_scaled(g, C64::new(-mu, 0.0));
        r
    }
}

#[derive(Debug, Clone)]
pub struct QuasiModeExpansion {
    pub n: usize,
    pub mu: [f64; 4],
    pub g: [Separable; 4],
    pub k_max: f64,
    pub k2: f64,
    pub harm: HarmonicOscParams,
    pub f: GaussPoly,
    pub sigma_grid: Grid1D,
    pub tau_grid: Grid1D,
}

impl QuasiModeExpansion {
    /// g₀ + h^{3/8}g₁ + h^{1/2}g₂ + h^{3/4}g₃.
    pub fn trial(&self, h: f64) -> Separable {
        let mut g = self.g[0].clone();
        g.push_scaled(&self.g[1], C64::new(h.powf(0.375), 0.0));
        g.push_scaled(&self.g[2], C64::new(h.sqrt(), 0.0));
        g.push_scaled(&self.g[3], C64::new(h.powf(0.75), 0.0));
        g
    }

    /// μ₀ + h^{3/8}μ₁ + h^{1/2}μ₂ + h^{3/4}μ₃.
    pub fn mu_of_h(&self, h: f64) -> f64 {
        self.mu[0] + h.powf(0.375) * self.mu[1] + h.sqrt() * self.mu[2] + h.powf(0.75) * self.mu[3]
    }

    /// A term sampled on the σ-grid × τ-grid.
    pub fn to_grid(&self, which: usize) -> GridFunction2D {
        GridFunction2D {
            sigma: self.sigma_grid.nodes(),
            tau: self.tau_grid.nodes(),
            values: self.g[which].sample(&self.sigma_grid.nodes(), self.tau_grid.n_points),
        }
    }
}

/// Builds (μᵢ, gᵢ), i = 0..3, for oscillator level `n` ≥ 1.
pub fn build_expansion(
    inv: &SpectralInvariants,
    k_max: f64,
    k2: f64,
    n: usize,
    sigma_points: usize,
) -> Result<QuasiModeExpansion> {
    if !(k2 < 0.0) {
        return Err(Error::domain(format!("k2 = {k2} must be negative")));
    }
    if n == 0 {
        return Err(Error::domain("mode index starts at 1"));
    }
    let harm = HarmonicOscParams::from_invariants(inv, k2)?;
    let f = harm.hermite_function(n);
    let ops = HierarchyOps::new(inv, k_max, k2);
    let r = &ops.resolvent;
    let wphi = ops.times_w(&inv.phi_a);
    let r1 = r.apply(&wphi)?;
    let src2: Vec<f64> = h1_apply(inv, &inv.phi_a)
        .iter()
        .zip(&inv.phi_a)
        .map(|(a, p)| a - inv.m3 * p)
        .collect();
    let r2 = r.apply(&src2)?;
    let r3 = r.apply(&ops.times_w(&r1))?;
    let one = C64::new(1.0, 0.0);

    let g0 = Separable::single(one, inv.phi_a.clone(), f.clone());
    let g1 = Separable::single(C64::new(0.0, 2.0), r1, f.derivative());
    let g2 = Separable::single(C64::new(-k_max, 0.0), r2.clone(), f.clone());
    // g₃ = −R[P₁g₁ + (P₃ − μ₃)g₀] = −4R(W r₁)⊗f″ − (k₂/2)R(h₁φ)⊗σ²f,
    // using R(φ) = 0 and R(h₁φ) = R(h₁φ − M₃φ).
    let mut g3 = Separable::single(C64::new(-4.0, 0.0), r3, f.derivative().derivative());
    g3.push_scaled(
        &Separable::single(one, r2, f.mul_sigma2()),
        C64::new(-0.5 * k2, 0.0),
    );
    let mu = [0.0, 0.0, k_max * inv.m3, harm.level(n)];
    Ok(QuasiModeExpansion {
        n,
        mu,
        g: [g0, g1, g2, g3],
        k_max,
        k2,
        harm,
        f,
        sigma_grid: default_sigma_grid(&harm, sigma_points)?,
        tau_grid: inv.grid,
    })
}

/// Norms of the hierarchy equations (e₀)–(e₃) and of the solvability
/// condition, all relative to ‖f‖ = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HierarchyResiduals {
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    /// ‖⟨P₁g₁ + (P₃ − μ₃)g₀, φ⟩_τ‖ from the discrete profiles.
    pub solvability_discrete: f64,
    /// ‖−c₂f″ + (k₂M₃/2)σ²f − μ₃f‖, exact in σ.
    pub solvability_exact: f64,
}

pub fn hierarchy_residuals(exp: &QuasiModeExpansion, inv: &SpectralInvariants) -> HierarchyResiduals {
    let ops = HierarchyOps::new(inv, exp.k_max, exp.k2);
    let g = &inv.grid;
    let [g0, g1, g2, g3] = &exp.g;
    let m = |s: f64| C64::new(s, 0.0);
    let e0 = ops.p0(g0).norm(g);
    let e1 = ops.p0(g1).plus(&ops.p1(g0), m(1.0)).norm(g);
    let e2 = ops
        .p0(g2)
        .plus(&ops.p2(g0), m(1.0))
        .plus(g0, m(-exp.mu[2]))
        .norm(g);
    let lower = ops.p1(g1).plus(&ops.p3(g0), m(1.0)).plus(g0, m(-exp.mu[3]));
    let e3 = ops.p0(g3).plus(&lower, m(1.0)).norm(g);
    let (re, im) = lower.tau_pairing(&inv.phi_a, g);
    let solvability_discrete = (re.inner(&re) + im.inner(&im)).max(0.0).sqrt();
    let exact = exp.harm.apply(&exp.f).add(&exp.f.scaled(-exp.mu[3]));
    HierarchyResiduals {
        e0,
        e1,
        e2,
        e3,
        solvability_discrete,
        solvability_exact: exact.norm(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasimodeResidual {
    pub h: f64,
    pub mu_h: f64,
    /// ‖(P_trunc − μ(h))g‖/‖g‖ in the flat L² norm.
    pub relative_flat: f64,
    /// Same ratio in L²((1 − h^{1/2}τk(h^{1/8}σ))dσdτ), k replaced by its
    /// quadratic Taylor model; nodes with nonpositive weight are dropped.
    pub relative_weighted: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualOptions {
    /// Added to μ₃ (for perturbation studies).
    pub mu3_offset: f64,
    pub weighted: bool,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self {
            mu3_offset: 0.0,
            weighted: false,
        }
    }
}

/// Residual of the truncated operator on the trial state at semiclassical
/// parameter `h`. The cutoffs χ(h^ησ)χ(h^δτ) are not applied; the grids are
/// only required to cover their supports.
pub fn apply_pnew_truncated(
    h: f64,
    exp: &QuasiModeExpansion,
    inv: &SpectralInvariants,
    opts: &ResidualOptions,
) -> Result<QuasimodeResidual> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::domain(format!("h = {h} must lie in (0, 1)")));
    }
    let s_reach = h.powf(-ETA);
    let t_reach = h.powf(-DELTA);
    if exp.sigma_grid.half_length < s_reach || exp.tau_grid.half_length < t_reach {
        return Err(Error::domain(format!(
            "grids (sigma {}, tau {}) do not cover the cutoff supports ({s_reach:.3}, {t_reach:.3}) at h = {h}",
            exp.sigma_grid.half_length, exp.tau_grid.half_length
        )));
    }
    let ops = HierarchyOps::new(inv, exp.k_max, exp.k2);
    let g = exp.trial(h);
    let mu_h = exp.mu_of_h(h) + h.powf(0.75) * opts.mu3_offset;
    let r = ops.truncated_residual(h, &g, mu_h);
    let relative_flat = r.norm(&inv.grid) / g.norm(&inv.grid);
    let relative_weighted = if opts.weighted {
        let sig = exp.sigma_grid.nodes();
        let tau = inv.grid.nodes();
        let nt = tau.len();
        let rs = r.sample(&sig, nt);
        let gs = g.sample(&sig, nt);
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &s) in sig.iter().enumerate() {
            let k = exp.k_max + 0.5 * exp.k2 * h.powf(0.25) * s * s;
            for (j, &t) in tau.iter().enumerate() {
                let wgt = 1.0 - h.sqrt() * t * k;
                if wgt <= 0.0 {
                    continue;
                }
                num += wgt * rs[i * nt + j].norm_sqr();
                den += wgt * gs[i * nt + j].norm_sqr();
            }
        }
        Some((num / den).sqrt())
    } else {
        None
    };
    Ok(QuasimodeResidual {
        h,
        mu_h,
        relative_flat,
        relative_weighted,
    })
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Complex samples on a σ × τ product grid, row-major in σ.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction2D {
    pub sigma: Vec<f64>,
    pub tau: Vec<f64>,
    pub values: Vec<C64>,
}

/// Trapezoid weights for arbitrary increasing nodes.
pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let d = 0.5 * (x[i + 1] - x[i]);
        w[i] += d;
        w[i + 1] += d;
    }
    w
}

impl GridFunction2D {
    pub fn from_fn(sigma: Vec<f64>, tau: Vec<f64>, f: impl Fn(f64, f64) -> C64) -> Self {
        let mut values = Vec::with_capacity(sigma.len() * tau.len());
        for &s in &sigma {
            for &t in &tau {
                values.push(f(s, t));
            }
        }
        Self { sigma, tau, values }
    }

    pub fn n_sigma(&self) -> usize {
        self.sigma.len()
    }

    pub fn n_tau(&self) -> usize {
        self.tau.len()
    }

    pub fn row(&self, i: usize) -> &[C64] {
        let nt = self.n_tau();
        &self.values[i * nt..(i + 1) * nt]
    }

    pub fn inner(&self, o: &Self) -> C64 {
        let ws = trapezoid_weights(&self.sigma);
        let wt = trapezoid_weights(&self.tau);
        let nt = self.n_tau();
        let mut s = C64::new(0.0, 0.0);
        for (i, a) in ws.iter().enumerate() {
            for (j, b) in wt.iter().enumerate() {
                let k = i * nt + j;
                s += self.values[k].conj() * o.values[k] * (a * b);
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            sigma: self.sigma.clone(),
            tau: self.tau.clone(),
            values: self.values.iter().zip(&o.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn map_tau(&self, f: impl Fn(f64) -> f64) -> Self {
        let nt = self.n_tau();
        let mut out = self.clone();
        for (k, v) in out.values.iter_mut().enumerate() {
            *v *= f(self.tau[k % nt]);
        }
        out
    }

    /// Centered difference in τ (one-sided at the ends).
    pub fn d_tau(&self) -> Self {
        let nt = self.n_tau();
        let mut out = self.clone();
        for i in 0..self.n_sigma() {
            let row = self.row(i);
            for j in 0..nt {
                let (a, b) = (j.saturating_sub(1), (j + 1).min(nt - 1));
                out.values[i * nt + j] = (row[b] - row[a]) / (self.tau[b] - self.tau[a]);
            }
        }
        out
    }

    /// Centered difference in σ (one-sided at the ends).
    pub fn d_sigma(&self) -> Self {
        let (ns, nt) = (self.n_sigma(), self.n_tau());
        let mut out = self.clone();
        for i in 0..ns {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(ns - 1));
            let d = self.sigma[b] - self.sigma[a];
            for j in 0..nt {
                out.values[i * nt + j] = (self.values[b * nt + j] - self.values[a * nt + j]) / d;
            }
        }
        out
    }
}

/// Linear interpolation of an invariants-grid profile at τ (zero outside).
pub fn interpolate_profile(g: &Grid1D, profile: &[f64], tau: f64) -> f64 {
    let x = (tau + g.half_length) / g.step();
    if x < 0.0 || x > (g.n_points - 1) as f64 {
        return 0.0;
    }
    let j = (x.floor() as usize).min(g.n_points - 2);
    let f = x - j as f64;
    profile[j] * (1.0 - f) + profile[j + 1] * f
}

fn profile_on(inv: &SpectralInvariants, profile: &[f64], tau: &[f64]) -> Vec<f64> {
    tau.iter().map(|&t| interpolate_profile(&inv.grid, profile, t)).collect()
}

/// u ↦ (∫ p u dτ)·p with p normalized against the weights `m`.
fn rank_one_tau(v: &GridFunction2D, p: &[f64], m: &[f64]) -> GridFunction2D {
    let nt = v.n_tau();
    let pp: f64 = p.iter().zip(m).map(|(a, w)| a * a * w).sum();
    let mut out = v.clone();
    for i in 0..v.n_sigma() {
        let row = v.row(i);
        let c: C64 = row.iter().zip(p).zip(m).map(|((x, a), w)| x * (a * w)).sum::<C64>() / pp;
        for j in 0..nt {
            out.values[i * nt + j] = c * p[j];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pi0Defects {
    pub norm_v: f64,
    pub norm_pi0: f64,
    /// ‖v − Π₀v‖.
    pub defect_pi0: f64,
    /// ‖∂τ(v − Π₀v)‖.
    pub defect_dtau: f64,
    /// ‖τ(v − Π₀v)‖.
    pub defect_tau: f64,
}

/// Π₀ = I ⊗ π_a with φ_a interpolated to the τ-nodes of `v` and renormalized
/// there, so the discrete operator is an exact orthogonal projection.
pub fn project_pi0(v: &GridFunction2D, inv: &SpectralInvariants) -> (GridFunction2D, Pi0Defects) {
    let phi = profile_on(inv, &inv.phi_a, &v.tau);
    let pv = rank_one_tau(v, &phi, &trapezoid_weights(&v.tau));
    let d = v.sub(&pv);
    let defects = Pi0Defects {
        norm_v: v.norm(),
        norm_pi0: pv.norm(),
        defect_pi0: d.norm(),
        defect_dtau: d.d_tau().norm(),
        defect_tau: d.map_tau(|t| t).norm(),
    };
    (pv, defects)
}

/// Π_h = I ⊗ π_{a,h}: orthogonal projection onto
/// φ_{a,h} = χ(h^δτ)(φ_a + h^{1/2}κφ_cor) in L²((1 − h^{1/2}κτ)dτ).
pub fn project_pi_h(
    v: &GridFunction2D,
    inv: &SpectralInvariants,
    kappa: f64,
    h: f64,
    delta: f64,
) -> Result<GridFunction2D> {
    let sh = h.sqrt() * kappa;
    let wt = trapezoid_weights(&v.tau);
    let mut m = Vec::with_capacity(v.n_tau());
    for (&t, &w) in v.tau.iter().zip(&wt) {
        let a = 1.0 - sh * t;
        if a <= 0.0 {
            return Err(Error::domain(format!("weight {a} at tau = {t}")));
        }
        m.push(w * a);
    }
    let phi = profile_on(inv, &inv.phi_a, &v.tau);
    let cor = profile_on(inv, &inv.phi_cor, &v.tau);
    let cut = h.powf(delta);
    let p: Vec<f64> = v
        .tau
        .iter()
        .zip(phi.iter().zip(&cor))
        .map(|(&t, (a, c))| cutoff(cut * t) * (a + sh * c))
        .collect();
    Ok(rank_one_tau(v, &p, &m))
}

/// ϕ_a = φ_a − 4W·R(Wφ_a) on the invariants grid.
pub fn rnew_profile(inv: &SpectralInvariants) -> Result<Vec<f64>> {
    let w = inv.w_profile();
    let wphi: Vec<f64> = w.iter().zip(&inv.phi_a).map(|(a, b)| a * b).collect();
    let r1 = Resolvent::new(inv).apply(&wphi)?;
    Ok(inv
        .phi_a
        .iter()
        .zip(w.iter().zip(&r1))
        .map(|(p, (w, r))| p - 4.0 * w * r)
        .collect())
}

/// (R₀^new v)(σ) = ∫ ϕ_a(τ)v(σ, τ)dτ.
pub fn project_rnew(v: &GridFunction2D, inv: &SpectralInvariants) -> Result<Vec<C64>> {
    let prof = rnew_profile(inv)?;
    Ok(project_rnew_with(v, inv, &prof))
}

pub fn project_rnew_with(v: &GridFunction2D, inv: &SpectralInvariants, prof: &[f64]) -> Vec<C64> {
    let p = profile_on(inv, prof, &v.tau);
    let wt = trapezoid_weights(&v.tau);
    (0..v.n_sigma())
        .map(|i| {
            v.row(i)
                .iter()
                .zip(p.iter().zip(&wt))
                .map(|(x, (a, w))| x * (a * w))
                .sum()
        })
        .collect()
}

/// L² norm of σ-samples.
pub fn sigma_norm(sigma: &[f64], f: &[C64]) -> f64 {
    trapezoid_weights(sigma)
        .iter()
        .zip(f)
        .map(|(w, x)| w * x.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionDiagnostics {
    pub h: f64,
    pub norm_v: f64,
    pub defect_pi0: f64,
    pub defect_dtau: f64,
    pub defect_tau: f64,
    pub norm_rnew: f64,
    /// ‖h^{3/8}∂σ v‖.
    pub d_sigma: f64,
    /// ‖(h^{3/8}∂σ)²v‖.
    pub d_sigma2: f64,
}

pub fn projection_diagnostics(v: &GridFunction2D, inv: &SpectralInvariants, h: f64) -> Result<ProjectionDiagnostics> {
    let (_, d) = project_pi0(v, inv);
    let rn = project_rnew(v, inv)?;
    let s = h.powf(0.375);
    let ds = v.d_sigma();
    Ok(ProjectionDiagnostics {
        h,
        norm_v: d.norm_v,
        defect_pi0: d.defect_pi0,
        defect_dtau: d.defect_dtau,
        defect_tau: d.defect_tau,
        norm_rnew: sigma_norm(&v.sigma, &rn),
        d_sigma: s * ds.norm(),
        d_sigma2: s * s * ds.d_sigma().norm(),
    })
}

/// b_a-aware momentum W(τ) for arbitrary τ.
pub fn momentum_at(inv: &SpectralInvariants, tau: f64) -> f64 {
    inv.zeta_a + field_profile(inv.a, tau) * tau
}
