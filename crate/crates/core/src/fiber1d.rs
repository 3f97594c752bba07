//! Fiber operator h_a[ξ] = −d²/dτ² + (ξ + b_a(τ)τ)² on a truncated line.
//!
//! The grid includes the endpoints ±L, where the Dirichlet condition pins the
//! solution to zero; the unknowns are the interior nodes. `n_points` is odd so
//! the field jump at τ = 0 sits on a node.

use crate::error::{Error, Result};
use magstep_linalg::{tridiag_smallest, TriDiag};
use serde::{Deserialize, Serialize};

/// Eigenvalue tolerance for the 1D solves (scaled by ‖T‖∞ inside the solver).
pub const FIBER_EIG_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub half_length: f64,
    pub n_points: usize,
}

impl Grid1D {
    pub fn new(half_length: f64, n_points: usize) -> Result<Self> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::domain(format!("half_length {half_length} must be positive")));
        }
        if n_points < 3 || n_points % 2 == 0 {
            return Err(Error::domain(format!("n_points {n_points} must be odd and >= 3")));
        }
        Ok(Self {
            half_length,
            n_points,
        })
    }

    /// L = 20, n = 4001.
    pub fn standard() -> Self {
        Self {
            half_length: 20.0,
            n_points: 4001,
        }
    }

    /// Same half-length, step halved.
    pub fn refined(&self) -> Self {
        Self {
            half_length: self.half_length,
            n_points: 2 * self.n_points - 1,
        }
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_length / (self.n_points as f64 - 1.0)
    }

    pub fn center(&self) -> usize {
        (self.n_points - 1) / 2
    }

    pub fn node(&self, j: usize) -> f64 {
        // Symmetric about the centre so τ = 0 is exact.
        (j as f64 - self.center() as f64) * self.step()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }

    /// Trapezoid integral of nodal values.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let n = self.n_points;
        let inner: f64 = f[1..n - 1].iter().sum();
        (inner + 0.5 * (f[0] + f[n - 1])) * self.step()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let prod: Vec<f64> = u.iter().zip(v).map(|(a, b)| a * b).collect();
        self.integrate(&prod)
    }

    /// Trapezoid rule applied separately on τ ≤ 0 and τ ≥ 0. The integrand is
    /// given as a function of (τ, b) and the τ = 0 node is evaluated on both
    /// sides, so one-sided limits of a jumping integrand are respected.
    pub fn integrate_split(&self, a: f64, f: impl Fn(usize, f64, f64) -> f64) -> f64 {
        let c = self.center();
        let n = self.n_points;
        let mut s = 0.0;
        for j in 1..c {
            s += f(j, self.node(j), a);
        }
        for j in c + 1..n - 1 {
            s += f(j, self.node(j), 1.0);
        }
        s += 0.5 * (f(0, self.node(0), a) + f(n - 1, self.node(n - 1), 1.0));
        s += 0.5 * (f(c, 0.0, a) + f(c, 0.0, 1.0));
        s * self.step()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberParams {
    pub a: f64,
    pub xi: f64,
}

impl FiberParams {
    pub fn new(a: f64, xi: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&a) || !xi.is_finite() {
            return Err(Error::domain(format!("fiber parameters a={a}, xi={xi}")));
        }
        Ok(Self { a, xi })
    }
}

/// b_a(τ): 1 on τ ≥ 0, a on τ < 0.
pub fn field_profile(a: f64, tau: f64) -> f64 {
    if tau >= 0.0 {
        1.0
    } else {
        a
    }
}

/// One sample of the band function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub xi: f64,
    pub mu: f64,
    /// Ground state on all grid nodes (zero at ±L), φ(0) > 0, ∫φ² = 1.
    pub phi: Vec<f64>,
    pub mu_prime: f64,
}

/// Central-difference discretization on the interior nodes.
pub fn build_fiber_operator(p: &FiberParams, g: &Grid1D) -> TriDiag {
    let dt = g.step();
    let inv = 1.0 / (dt * dt);
    let diag: Vec<f64> = (1..g.n_points - 1)
        .map(|j| {
            let t = g.node(j);
            let w = p.xi + field_profile(p.a, t) * t;
            2.0 * inv + w * w
        })
        .collect();
    let off = vec![-inv; g.n_points - 3];
    TriDiag::new(diag, off).expect("fiber operator entries are finite")
}

/// Lifts an interior vector to all nodes, normalizes in L², fixes φ(0) > 0.
pub(crate) fn embed_normalized(g: &Grid1D, interior: &[f64]) -> Vec<f64> {
    let mut phi = Vec::with_capacity(g.n_points);
    phi.push(0.0);
    phi.extend_from_slice(interior);
    phi.push(0.0);
    let nrm = g.inner(&phi, &phi).sqrt();
    let sign = if phi[g.center()] < 0.0 { -1.0 } else { 1.0 };
    for v in phi.iter_mut() {
        *v *= sign / nrm;
    }
    phi
}

/// Polishes a ground-state approximation so every entry is positive with full
/// relative accuracy in the far tails.
///
/// For σ below λ₁ the matrix T − σ is an M-matrix: its unpivoted LU has
/// positive pivots and a positive inverse, so inverse iteration from |v|
/// never subtracts and tails far below machine epsilon keep their sign.
pub fn positive_ground_state(t: &TriDiag, lambda1: f64, v: &[f64]) -> Vec<f64> {
    let sigma = lambda1 - 1e-8 * lambda1.abs().max(1.0);
    let d = t.diag();
    let e = t.offdiag();
    let n = d.len();
    let mut x: Vec<f64> = v.iter().map(|x| x.abs().max(f64::MIN_POSITIVE)).collect();
    let mut piv = vec![0.0; n];
    piv[0] = d[0] - sigma;
    for i in 1..n {
        piv[i] = d[i] - sigma - e[i - 1] * e[i - 1] / piv[i - 1];
    }
    for _ in 0..2 {
        for i in 1..n {
            x[i] -= e[i - 1] / piv[i - 1] * x[i - 1];
        }
        x[n - 1] /= piv[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - e[i] * x[i + 1]) / piv[i];
        }
        let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    x
}

/// Ground state of the fiber operator.
pub fn band_value(p: &FiberParams, g: &Grid1D) -> Result<BandPoint> {
    let t = build_fiber_operator(p, g);
    let pair = tridiag_smallest(&t, 1, FIBER_EIG_TOL)?.remove(0);
    let phi = embed_normalized(g, &positive_ground_state(&t, pair.value, &pair.vector));
    let mut bp = BandPoint {
        xi: p.xi,
        mu: pair.value,
        phi,
        mu_prime: 0.0,
    };
    bp.mu_prime = band_derivative_fh(&bp, p, g);
    Ok(bp)
}

/// Ground-state energy only.
pub fn band_energy(p: &FiberParams, g: &Grid1D) -> f64 {
    build_fiber_operator(p, g).eigenvalue_by_bisection(0)
}

/// μ′(ξ) = 2∫(ξ + b_a τ)φ² by the trapezoid rule.
pub fn band_derivative_fh(bp: &BandPoint, p: &FiberParams, g: &Grid1D) -> f64 {
    let f: Vec<f64> = (0..g.n_points)
        .map(|j| {
            let t = g.node(j);
            (p.xi + field_profile(p.a, t) * t) * bp.phi[j] * bp.phi[j]
        })
        .collect();
    2.0 * g.integrate(&f)
}

/// μ′(ξ) from the boundary values at τ = 0:
/// (1 − 1/a)(φ′(0)² + (μ − ξ²)φ(0)²), φ′(0) by centered difference.
pub fn band_derivative_boundary(bp: &BandPoint, p: &FiberParams, g: &Grid1D) -> f64 {
    let c = g.center();
    let phi0 = bp.phi[c];
    let dphi0 = (bp.phi[c + 1] - bp.phi[c - 1]) / (2.0 * g.step());
    (1.0 - 1.0 / p.a) * (dphi0 * dphi0 + (bp.mu - p.xi * p.xi) * phi0 * phi0)
}

/// Band function on `n_xi` uniformly spaced momenta in [xi_lo, xi_hi].
pub fn band_sweep(a: f64, xi_lo: f64, xi_hi: f64, n_xi: usize, g: &Grid1D) -> Result<Vec<BandPoint>> {
    if !(xi_lo < xi_hi) || n_xi < 2 {
        return Err(Error::domain(format!(
            "sweep needs xi_lo < xi_hi and n_xi >= 2 (got {xi_lo}, {xi_hi}, {n_xi})"
        )));
    }
    (0..n_xi)
        .map(|i| {
            let xi = xi_lo + (xi_hi - xi_lo) * i as f64 / (n_xi as f64 - 1.0);
            band_value(&FiberParams::new(a, xi)?, g)
        })
        .collect()
}

/// Neumann half-line problem −u″ + (τ + ξ)²u on [0, L] with u′(0) = 0 and
/// u(L) = 0, discretized on cell centres τ_j = (j + ½)·step.
pub fn neumann_half_line_energy(xi: f64, half_length: f64, cells: usize) -> Result<f64> {
    let dt = half_length / cells as f64;
    let inv = 1.0 / (dt * dt);
    let diag: Vec<f64> = (0..cells)
        .map(|j| {
            let t = (j as f64 + 0.5) * dt;
            let kin = if j == 0 { inv } else { 2.0 * inv };
            kin + (t + xi).powi(2)
        })
        .collect();
    let t = TriDiag::new(diag, vec![-inv; cells - 1])?;
    Ok(t.eigenvalue_by_bisection(0))
}

/// Minimum of the Neumann band over ξ (the de Gennes constant), with the
/// minimizer, by golden-section search on [−2, 0].
pub fn neumann_de_gennes(half_length: f64, cells: usize) -> Result<(f64, f64)> {
    let f = |x: f64| neumann_half_line_energy(x, half_length, cells);
    let (xi, val) = golden_min(|x| f(x).unwrap_or(f64::INFINITY), -2.0, 0.0, 1e-9);
    Ok((val, xi))
}

/// Golden-section minimization of a unimodal function on [lo, hi].
pub fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}
