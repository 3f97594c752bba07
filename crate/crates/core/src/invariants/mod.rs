//! Spectral invariants of the fiber family at its band minimum.
//!
//! Integrals whose integrand jumps at τ = 0 (anything carrying 1/b_a) use
//! [`Grid1D::integrate_split`]; the rest use the plain trapezoid rule.

mod cache;
pub mod weighted;

pub use cache::{
    cache_path, load_or_compute, read_cache, to_json, write_cache, CacheDoc, CACHE_SCHEMA_VERSION,
};
pub use weighted::{
    default_offsets, numerical_radius, weighted_lower_bound_check, weighted_op_lambda1, LowerBoundReport,
    WeightedModelParams,
};

use crate::error::{Error, Result};
use crate::fiber1d::{
    band_energy, band_value, build_fiber_operator, field_profile, BandPoint, FiberParams, Grid1D,
};
use magstep_linalg::{cg_solve, CgOptions, Shifted, TriDiag};
use serde::{Deserialize, Serialize};

/// Initial bracket for the band minimizer.
pub const ZETA_BRACKET: (f64, f64) = (-3.0, 0.0);
/// Step for the second difference of μ at ζ.
pub const MU_SECOND_STEP: f64 = 1e-3;
const RESOLVENT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralInvariants {
    pub a: f64,
    pub beta_a: f64,
    pub zeta_a: f64,
    pub phi_a: Vec<f64>,
    pub phi0: f64,
    pub dphi0: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    #[serde(rename = "M3")]
    pub m3: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    pub c2: f64,
    pub mu_second: f64,
    pub phi_cor: Vec<f64>,
    pub grid: Grid1D,
}

/// W(τ) = ζ + b_a(τ)τ at node j.
pub fn momentum_shift(inv: &SpectralInvariants, j: usize) -> f64 {
    let t = inv.grid.node(j);
    inv.zeta_a + field_profile(inv.a, t) * t
}

/// Band minimum by bisection on the Feynman–Hellmann derivative.
pub fn find_zeta_point(a: f64, g: &Grid1D) -> Result<BandPoint> {
    if a > 0.0 || a < -1.0 {
        return Err(Error::domain(format!(
            "a = {a}: the band minimum is interior only for a in [-1, 0]"
        )));
    }
    let eval = |xi: f64| band_value(&FiberParams::new(a, xi)?, g);
    let (mut lo, mut hi) = ZETA_BRACKET;
    let mut plo = eval(lo)?;
    let phi_hi = eval(hi)?;
    if !(plo.mu_prime < 0.0 && phi_hi.mu_prime > 0.0) {
        return Err(Error::Bracket {
            lo,
            hi,
            dlo: plo.mu_prime,
            dhi: phi_hi.mu_prime,
        });
    }
    let mut best = if plo.mu_prime.abs() < phi_hi.mu_prime.abs() {
        plo.clone()
    } else {
        phi_hi
    };
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        let pm = eval(mid)?;
        if pm.mu_prime.abs() < best.mu_prime.abs() {
            best = pm.clone();
        }
        if pm.mu_prime == 0.0 || best.mu_prime.abs() <= 1e-12 {
            break;
        }
        if (pm.mu_prime < 0.0) == (plo.mu_prime < 0.0) {
            lo = mid;
            plo = pm;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// (ζ_a, β_a) on the given grid.
pub fn find_zeta(a: f64, g: &Grid1D) -> Result<(f64, f64)> {
    let bp = find_zeta_point(a, g)?;
    Ok((bp.xi, bp.mu))
}

/// Θ₀ = β_{−1} on the given grid.
pub fn de_gennes(g: &Grid1D) -> Result<f64> {
    Ok(find_zeta(-1.0, g)?.1)
}

/// Extrapolates a second-order quantity from step s (coarse) and s/2 (fine).
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// μ″ at ξ by a centered second difference with step `dxi`, refined by one
/// Richardson step against `dxi/2`.
pub fn mu_second_fd(a: f64, xi: f64, g: &Grid1D, dxi: f64) -> Result<f64> {
    let mu = |x: f64| -> Result<f64> { Ok(band_energy(&FiberParams::new(a, x)?, g)) };
    let m0 = mu(xi)?;
    let d2 = |d: f64| -> Result<f64> { Ok((mu(xi + d)? - 2.0 * m0 + mu(xi - d)?) / (d * d)) };
    Ok(richardson(d2(dxi)?, d2(0.5 * dxi)?))
}

impl SpectralInvariants {
    /// Full constant set on grid `g`.
    pub fn compute(a: f64, g: &Grid1D) -> Result<Self> {
        if !(-1.0..0.0).contains(&a) {
            return Err(Error::domain(format!("invariants need a in [-1, 0), got {a}")));
        }
        let bp = find_zeta_point(a, g)?;
        let c = g.center();
        let dt = g.step();
        let mut inv = SpectralInvariants {
            a,
            beta_a: bp.mu,
            zeta_a: bp.xi,
            phi0: bp.phi[c],
            dphi0: (bp.phi[c + 1] - bp.phi[c - 1]) / (2.0 * dt),
            phi_a: bp.phi,
            m2: 0.0,
            m3: 0.0,
            i2: 0.0,
            c2: 0.0,
            mu_second: 0.0,
            phi_cor: Vec::new(),
            grid: *g,
        };
        inv.m2 = moment(2, &inv);
        inv.m3 = moment(3, &inv);
        let (i2, c2) = compute_i2_c2(&inv)?;
        inv.i2 = i2;
        inv.c2 = c2;
        inv.mu_second = mu_second_fd(a, inv.zeta_a, g, MU_SECOND_STEP)?;
        inv.phi_cor = phi_cor(&inv)?;
        Ok(inv)
    }

    /// The fiber operator h_a[ζ_a] on the interior nodes.
    pub fn fiber_operator(&self) -> TriDiag {
        build_fiber_operator(
            &FiberParams {
                a: self.a,
                xi: self.zeta_a,
            },
            &self.grid,
        )
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    /// W(τ_j) = ζ + b_a(τ_j)τ_j on all nodes.
    pub fn w_profile(&self) -> Vec<f64> {
        (0..self.grid.n_points).map(|j| momentum_shift(self, j)).collect()
    }

    /// ⟨u, v⟩ in L² by the trapezoid rule.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.grid.inner(u, v)
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Predicted third coefficient (2n − 1)√(k₂M₃c₂/2).
    pub fn harmonic_level(&self, k2: f64, n: usize) -> f64 {
        (2.0 * n as f64 - 1.0) * (k2 * self.m3 * self.c2 / 2.0).sqrt()
    }
}

/// M_n = ∫ b_a⁻¹(ζ + b_aτ)ⁿ φ² dτ, with one-sided limits at τ = 0.
pub fn moment(n: u32, inv: &SpectralInvariants) -> f64 {
    let phi = &inv.phi_a;
    let z = inv.zeta_a;
    inv.grid
        .integrate_split(inv.a, |j, t, b| (z + b * t).powi(n as i32) * phi[j] * phi[j] / b)
}

/// M_n with b_a(0) = 1 at the τ = 0 node (plain trapezoid rule).
pub fn moment_nodewise(n: u32, inv: &SpectralInvariants) -> f64 {
    let f: Vec<f64> = (0..inv.grid.n_points)
        .map(|j| {
            let b = field_profile(inv.a, inv.grid.node(j));
            momentum_shift(inv, j).powi(n as i32) * inv.phi_a[j].powi(2) / b
        })
        .collect();
    inv.grid.integrate(&f)
}

/// X = ∫ φ²/b_a.
pub fn inverse_field_mass(inv: &SpectralInvariants) -> f64 {
    let phi = &inv.phi_a;
    inv.grid.integrate_split(inv.a, |j, _, b| phi[j] * phi[j] / b)
}

/// Closed-form moments in terms of boundary data at τ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedForms {
    /// ⅓(1/a − 1)ζφ(0)φ′(0).
    pub m3: f64,
    /// −½β∫φ²/b + ¼(1/a − 1)ζφ(0)φ′(0), as printed.
    pub m2_printed: f64,
    /// ½β∫φ²/b + ¼(1/a − 1)φ(0)φ′(0), rederived from the eigenvalue
    /// equation tested against φ/b and τφ′/b.
    pub m2_derived: f64,
}

pub fn closed_forms(inv: &SpectralInvariants) -> ClosedForms {
    let s = 1.0 / inv.a - 1.0;
    let x = inverse_field_mass(inv);
    let pp = inv.phi0 * inv.dphi0;
    ClosedForms {
        m3: s * inv.zeta_a * pp / 3.0,
        m2_printed: -0.5 * inv.beta_a * x + 0.25 * s * inv.zeta_a * pp,
        m2_derived: 0.5 * inv.beta_a * x + 0.25 * s * pp,
    }
}

/// Quadrature minus right-hand side for the five moment identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentIdentities {
    /// ∫τWφ² − M₂.
    pub tau_w: f64,
    /// ∫τW²φ² − (M₃ − ζM₂).
    pub tau_w2: f64,
    /// ∫bτ²Wφ² − (M₃ − 2ζM₂).
    pub b_tau2_w: f64,
    /// ∫τφ² + ζ∫φ²/b.
    pub tau: f64,
    /// ∫τφ′² − (βζ∫φ²/b + 2M₃ − 2ζM₂), as printed.
    pub tau_dphi2_printed: f64,
    /// ∫τφ′² − (βζ∫φ²/b + 2M₃ − 3ζM₂), from the virial identity with
    /// multiplier τ²φ′/2.
    pub tau_dphi2_derived: f64,
    /// ∫Wφ² (orthogonality of φ and Wφ).
    pub orthogonality: f64,
}

impl MomentIdentities {
    /// The five identities with the right-hand sides as printed.
    pub fn printed(&self) -> [f64; 5] {
        [self.tau_w, self.tau_w2, self.b_tau2_w, self.tau, self.tau_dphi2_printed]
    }

    pub fn derived(&self) -> [f64; 5] {
        [self.tau_w, self.tau_w2, self.b_tau2_w, self.tau, self.tau_dphi2_derived]
    }
}

pub fn moment_identities(inv: &SpectralInvariants) -> MomentIdentities {
    let g = &inv.grid;
    let n = g.n_points;
    let dt = g.step();
    let phi = &inv.phi_a;
    let z = inv.zeta_a;
    let nodal = |f: &dyn Fn(f64, f64, f64) -> f64| -> f64 {
        let v: Vec<f64> = (0..n)
            .map(|j| {
                let t = g.node(j);
                let b = field_profile(inv.a, t);
                f(t, b, z + b * t) * phi[j] * phi[j]
            })
            .collect();
        g.integrate(&v)
    };
    let x = inverse_field_mass(inv);
    let (m2, m3, beta) = (inv.m2, inv.m3, inv.beta_a);
    // ∫τφ′² on links: midpoint rule with forward differences.
    let tau_dphi2: f64 = (0..n - 1)
        .map(|j| {
            let tm = g.node(j) + 0.5 * dt;
            let d = (phi[j + 1] - phi[j]) / dt;
            tm * d * d * dt
        })
        .sum();
    MomentIdentities {
        tau_w: nodal(&|t, _, w| t * w) - m2,
        tau_w2: nodal(&|t, _, w| t * w * w) - (m3 - z * m2),
        b_tau2_w: nodal(&|t, b, w| b * t * t * w) - (m3 - 2.0 * z * m2),
        tau: nodal(&|t, _, _| t) + z * x,
        tau_dphi2_printed: tau_dphi2 - (beta * z * x + 2.0 * m3 - 2.0 * z * m2),
        tau_dphi2_derived: tau_dphi2 - (beta * z * x + 2.0 * m3 - 3.0 * z * m2),
        orthogonality: nodal(&|_, _, w| w),
    }
}

/// Regularized resolvent of h_a[ζ_a] − β_a: zero on φ_a, inverse on its
/// orthogonal complement. Solved by deflated conjugate gradients.
pub struct Resolvent {
    op: TriDiag,
    beta: f64,
    phi_interior: Vec<f64>,
    n_points: usize,
    step: f64,
}

impl Resolvent {
    pub fn new(inv: &SpectralInvariants) -> Self {
        let n = inv.grid.n_points;
        Self {
            op: inv.fiber_operator(),
            beta: inv.beta_a,
            phi_interior: inv.phi_a[1..n - 1].to_vec(),
            n_points: n,
            step: inv.grid.step(),
        }
    }

    /// u − ⟨u, φ⟩φ.
    pub fn project_out(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n_points;
        let c: f64 = u[1..n - 1]
            .iter()
            .zip(&self.phi_interior)
            .map(|(x, y)| x * y)
            .sum::<f64>()
            * self.step;
        let mut out = u.to_vec();
        for (o, p) in out[1..n - 1].iter_mut().zip(&self.phi_interior) {
            *o -= c * p;
        }
        out[0] = 0.0;
        out[n - 1] = 0.0;
        out
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.n_points;
        if u.len() != n {
            return Err(Error::domain(format!("resolvent input length {} != {n}", u.len())));
        }
        let pu = self.project_out(u);
        let nu = u[1..n - 1].iter().map(|x| x * x).sum::<f64>().sqrt();
        let npu = pu[1..n - 1].iter().map(|x| x * x).sum::<f64>().sqrt();
        if npu <= RESOLVENT_TOL * nu {
            return Ok(vec![0.0; n]);
        }
        let shifted = Shifted {
            op: &self.op,
            shift: self.beta,
        };
        let rep = cg_solve(
            &shifted,
            &pu[1..n - 1],
            &CgOptions {
                tol: RESOLVENT_TOL,
                max_iter: 200_000,
                deflation: Some(&self.phi_interior),
                jacobi: true,
                keep_iterates: false,
            },
        )?;
        let mut v = Vec::with_capacity(n);
        v.push(0.0);
        v.extend(rep.x);
        v.push(0.0);
        Ok(v)
    }

    /// (h − β)v on all nodes (zero at the ends).
    pub fn operator_apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n_points;
        let mut out = vec![0.0; n];
        let y = self.op.matvec(&v[1..n - 1]);
        for (j, yj) in y.into_iter().enumerate() {
            out[j + 1] = yj - self.beta * v[j + 1];
        }
        out
    }
}

pub fn resolvent_apply(inv: &SpectralInvariants, u: &[f64]) -> Result<Vec<f64>> {
    Resolvent::new(inv).apply(u)
}

/// I₂ = ⟨Wφ, R(Wφ)⟩ and c₂ = 1 − 4I₂.
pub fn compute_i2_c2(inv: &SpectralInvariants) -> Result<(f64, f64)> {
    let wphi: Vec<f64> = inv.w_profile().iter().zip(&inv.phi_a).map(|(w, p)| w * p).collect();
    let r = Resolvent::new(inv).apply(&wphi)?;
    let i2 = inv.inner(&wphi, &r);
    Ok((i2, 1.0 - 4.0 * i2))
}

/// h⁽¹⁾[ζ]u = u′ + (2τW² − b_aτ²W)u, u′ by centered differences.
pub fn h1_apply(inv: &SpectralInvariants, u: &[f64]) -> Vec<f64> {
    let g = &inv.grid;
    let n = g.n_points;
    let dt = g.step();
    (0..n)
        .map(|j| {
            if j == 0 || j == n - 1 {
                return 0.0;
            }
            let t = g.node(j);
            let b = field_profile(inv.a, t);
            let w = inv.zeta_a + b * t;
            (u[j + 1] - u[j - 1]) / (2.0 * dt) + (2.0 * t * w * w - b * t * t * w) * u[j]
        })
        .collect()
}

/// h⁽¹⁾φ − M₃φ.
pub fn phi_cor_source(inv: &SpectralInvariants) -> Vec<f64> {
    h1_apply(inv, &inv.phi_a)
        .iter()
        .zip(&inv.phi_a)
        .map(|(h, p)| h - inv.m3 * p)
        .collect()
}

/// φ_cor = −R(h⁽¹⁾φ − M₃φ).
pub fn phi_cor(inv: &SpectralInvariants) -> Result<Vec<f64>> {
    let src = phi_cor_source(inv);
    Ok(Resolvent::new(inv).apply(&src)?.into_iter().map(|v| -v).collect())
}

/// Scalar invariants extrapolated from a grid and its refinement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extrapolated {
    pub a: f64,
    pub beta: f64,
    pub zeta: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub closed: ClosedForms,
    pub identities_printed: [f64; 5],
    pub identities_derived: [f64; 5],
    pub i2: f64,
    pub c2: f64,
    pub mu_second: f64,
    pub phi0: f64,
    pub dphi0: f64,
}

impl Extrapolated {
    /// Richardson combination of invariants computed on `g` and `g.refined()`.
    pub fn from_pair(coarse: &SpectralInvariants, fine: &SpectralInvariants) -> Self {
        let r = richardson;
        let (cc, cf) = (closed_forms(coarse), closed_forms(fine));
        let (ic, ifn) = (moment_identities(coarse), moment_identities(fine));
        let zip5 = |x: [f64; 5], y: [f64; 5]| -> [f64; 5] { std::array::from_fn(|i| r(x[i], y[i])) };
        Self {
            a: coarse.a,
            beta: r(coarse.beta_a, fine.beta_a),
            zeta: r(coarse.zeta_a, fine.zeta_a),
            m1: r(moment(1, coarse), moment(1, fine)),
            m2: r(coarse.m2, fine.m2),
            m3: r(coarse.m3, fine.m3),
            closed: ClosedForms {
                m3: r(cc.m3, cf.m3),
                m2_printed: r(cc.m2_printed, cf.m2_printed),
                m2_derived: r(cc.m2_derived, cf.m2_derived),
            },
            identities_printed: zip5(ic.printed(), ifn.printed()),
            identities_derived: zip5(ic.derived(), ifn.derived()),
            i2: r(coarse.i2, fine.i2),
            c2: r(coarse.c2, fine.c2),
            mu_second: r(coarse.mu_second, fine.mu_second),
            phi0: r(coarse.phi0, fine.phi0),
            dphi0: r(coarse.dphi0, fine.dphi0),
        }
    }

    pub fn compute(a: f64, g: &Grid1D) -> Result<Self> {
        let coarse = SpectralInvariants::compute(a, g)?;
        let fine = SpectralInvariants::compute(a, &g.refined())?;
        Ok(Self::from_pair(&coarse, &fine))
    }
}
