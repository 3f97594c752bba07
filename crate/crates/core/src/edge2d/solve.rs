//! Bottom of the spectrum of the assembled pair.

use super::assemble::Operator2D;
use super::geometry::{CurvatureProfile, EdgeDomain};
use crate::error::Result;
use crate::invariants::SpectralInvariants;
use magstep_linalg::{hermitian_smallest_eigs, EigOptions, InnerSolve, LinalgError, C64};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solve2dOptions {
    /// Relative residual bound per eigenpair.
    pub tol: f64,
    /// Shift for the inverse iteration; must lie below λ₁.
    pub shift: f64,
    /// Banded LDLᴴ (with inertia certificate) or CG inner solves.
    pub banded: bool,
    pub max_iter: usize,
}

impl Default for Solve2dOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            shift: 0.0,
            banded: true,
            max_iter: 3000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveStats {
    pub n_unknowns: usize,
    pub bandwidth: usize,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub factorizations: usize,
    pub shift: f64,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EigenResult2D {
    pub h: f64,
    pub a: f64,
    pub profile: CurvatureProfile,
    pub domain: EdgeDomain,
    pub lambdas: Vec<f64>,
    /// Mass-normalized eigenvectors on the unknowns, phase fixed so the value
    /// at the (0, 0) node is real and nonnegative.
    pub eigvecs: Vec<Vec<C64>>,
    pub mass: Vec<f64>,
    pub stats: SolveStats,
}

impl EigenResult2D {
    /// Values of eigenvector `n` on the full (n_s + 1) × (n_t + 1) node grid,
    /// row-major in s, with zeros on Dirichlet sides.
    pub fn full_grid(&self, n: usize) -> Vec<C64> {
        let d = &self.domain;
        let mut out = vec![C64::new(0.0, 0.0); (d.n_s + 1) * (d.n_t + 1)];
        for (k, v) in self.eigvecs[n].iter().enumerate() {
            let (i, j) = d.node_of(k);
            out[i * (d.n_t + 1) + j] = *v;
        }
        if d.periodic_s {
            for j in 0..=d.n_t {
                out[d.n_s * (d.n_t + 1) + j] = out[j];
            }
        }
        out
    }
}

/// The `k` smallest eigenpairs of K u = λ M u.
pub fn solve_eigs2d(op: &Operator2D, k: usize, opts: &Solve2dOptions) -> Result<EigenResult2D> {
    let a = op.reduced();
    let eo = EigOptions {
        tol: opts.tol,
        relative: true,
        block_size: None,
        max_iter: opts.max_iter,
        shift: opts.shift,
        inner: if opts.banded {
            InnerSolve::BandedLdl
        } else {
            InnerSolve::Cg {
                tol: 1e-12,
                max_iter: 50_000,
            }
        },
        certify: opts.banded,
        seed: 0x6564_6765,
    };
    let (pairs, st) = hermitian_smallest_eigs(&a, k, &eo)?;
    let d = &op.domain;
    let origin = d.index(d.n_s / 2, d.t_zero());
    let mut lambdas = Vec::with_capacity(k);
    let mut eigvecs = Vec::with_capacity(k);
    for p in pairs {
        let mut u: Vec<C64> = p.vector.iter().zip(&op.mass).map(|(y, m)| y / m.sqrt()).collect();
        if let Some(o) = origin {
            let z = u[o];
            if z.norm() > 0.0 {
                let rot = z.conj() / z.norm();
                u.iter_mut().for_each(|x| *x *= rot);
            }
        }
        lambdas.push(p.value);
        eigvecs.push(u);
    }
    Ok(EigenResult2D {
        h: op.h,
        a: op.a,
        profile: op.profile,
        domain: op.domain,
        lambdas,
        eigvecs,
        mass: op.mass.clone(),
        stats: SolveStats {
            n_unknowns: a.dim(),
            bandwidth: a.bandwidth(),
            iterations: st.iterations,
            inner_iterations: st.inner_iterations,
            factorizations: st.factorizations,
            shift: st.shift,
            residuals: st.residuals,
        },
    })
}

/// hβ_a + h^{3/2}k_max M₃ minus `margin`·h: a shift just below λ₁.
pub fn predicted_shift(h: f64, inv: &SpectralInvariants, profile: &CurvatureProfile, margin: f64) -> f64 {
    h * (inv.beta_a + profile.k_max * inv.m3 * h.sqrt() - margin)
}

/// Banded solve at a shift predicted from the invariants; if the inertia
/// test finds eigenvalues below the shift, the margin is doubled and the solve
/// retried.
pub fn solve_near_prediction(op: &Operator2D, k: usize, inv: &SpectralInvariants) -> Result<EigenResult2D> {
    solve_near_prediction_with(op, k, inv, &Solve2dOptions::default())
}

/// As [`solve_near_prediction`], with every option but the shift taken from `base`.
pub fn solve_near_prediction_with(
    op: &Operator2D,
    k: usize,
    inv: &SpectralInvariants,
    base: &Solve2dOptions,
) -> Result<EigenResult2D> {
    let mut margin = 0.01;
    let mut last = None;
    for _ in 0..6 {
        let opts = Solve2dOptions {
            shift: predicted_shift(op.h, inv, &op.profile, margin),
            ..*base
        };
        match solve_eigs2d(op, k, &opts) {
            Err(crate::Error::Linalg(e @ LinalgError::Inertia { expected: 0, .. })) => {
                last = Some(e);
                margin *= 2.0;
            }
            other => return other,
        }
    }
    Err(last.expect("at least one attempt").into())
}
