//! Conjugate gradients with optional Jacobi scaling and a single
//! orthogonality constraint.

use crate::scalar::{axpy, dot, norm, scale_in_place, Scalar};
use crate::{LinalgError, Result, SparseHermitian, TriDiag, C64};

/// Hermitian linear map acting on vectors of `T`.
pub trait LinearOperator<T: Scalar> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
    /// Real diagonal, if cheaply available (used for Jacobi scaling).
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }
}

impl<T: Scalar> LinearOperator<T> for TriDiag {
    fn dim(&self) -> usize {
        self.len()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        let d = self.diag();
        let e = self.offdiag();
        let n = d.len();
        for i in 0..n {
            let mut s = x[i].scale(d[i]);
            if i > 0 {
                s += x[i - 1].scale(e[i - 1]);
            }
            if i + 1 < n {
                s += x[i + 1].scale(e[i]);
            }
            y[i] = s;
        }
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(self.diag().to_vec())
    }
}

impl LinearOperator<C64> for SparseHermitian {
    fn dim(&self) -> usize {
        SparseHermitian::dim(self)
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matvec_into(x, y);
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(SparseHermitian::diagonal(self))
    }
}

/// `A − shift·I` without copying `A`.
pub struct Shifted<'a, O: ?Sized> {
    pub op: &'a O,
    pub shift: f64,
}

impl<T: Scalar, O: LinearOperator<T> + ?Sized> LinearOperator<T> for Shifted<'_, O> {
    fn dim(&self) -> usize {
        self.op.dim()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        self.op.apply(x, y);
        axpy(T::from_real(-self.shift), x, y);
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        self.op
            .diagonal()
            .map(|d| d.into_iter().map(|v| v - self.shift).collect())
    }
}

#[derive(Debug, Clone)]
pub struct CgOptions<'a, T> {
    /// Stop when ‖b − Ax‖ ≤ tol·‖b‖.
    pub tol: f64,
    pub max_iter: usize,
    /// Solve on the orthogonal complement of this vector.
    pub deflation: Option<&'a [T]>,
    pub jacobi: bool,
    /// Keep every iterate (for diagnostics on small problems).
    pub keep_iterates: bool,
}

impl<T> Default for CgOptions<'_, T> {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            deflation: None,
            jacobi: false,
            keep_iterates: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgReport<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    /// ‖r_k‖/‖b‖ for k = 0..=iterations (recursive residuals).
    pub residual_history: Vec<f64>,
    /// α_k ⟨r_k, z_k⟩: the exact-arithmetic drop of the squared A-norm error at step k.
    pub energy_drops: Vec<f64>,
    pub iterates: Vec<Vec<T>>,
}

fn project<T: Scalar>(v: &mut [T], w: Option<&[T]>) {
    if let Some(w) = w {
        let c = dot(w, v);
        axpy(-c, w, v);
    }
}

/// Solves `A x = b` for Hermitian positive definite `A` (on the constraint
/// subspace when `deflation` is given). The right-hand side and every Krylov
/// iterate are projected against the constraint vector.
pub fn cg_solve<T: Scalar, O: LinearOperator<T> + ?Sized>(
    a: &O,
    b: &[T],
    opts: &CgOptions<'_, T>,
) -> Result<CgReport<T>> {
    let n = a.dim();
    if b.len() != n {
        return Err(LinalgError::Dimension {
            expected: n,
            got: b.len(),
        });
    }
    let w_unit: Option<Vec<T>> = match opts.deflation {
        Some(w) => {
            let nw = norm(w);
            if nw == 0.0 {
                return Err(LinalgError::InvalidMatrix("zero deflation vector".into()));
            }
            let mut w = w.to_vec();
            scale_in_place(&mut w, 1.0 / nw);
            Some(w)
        }
        None => None,
    };
    let wref = w_unit.as_deref();
    let inv_diag: Option<Vec<f64>> = if opts.jacobi {
        a.diagonal()
            .map(|d| d.into_iter().map(|v| if v > 0.0 { 1.0 / v } else { 1.0 }).collect())
    } else {
        None
    };
    let precondition = |r: &[T]| -> Vec<T> {
        let mut z = match &inv_diag {
            Some(id) => r.iter().zip(id).map(|(&ri, &di)| ri.scale(di)).collect(),
            None => r.to_vec(),
        };
        project(&mut z, wref);
        z
    };

    let mut r = b.to_vec();
    project(&mut r, wref);
    let bnorm = norm(&r);
    let mut x = vec![T::zero(); n];
    let mut report = CgReport {
        x: Vec::new(),
        iterations: 0,
        residual_history: vec![1.0],
        energy_drops: Vec::new(),
        iterates: Vec::new(),
    };
    if bnorm == 0.0 {
        report.x = x;
        report.residual_history = vec![0.0];
        return Ok(report);
    }
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z).re();
    let mut ap = vec![T::zero(); n];
    for k in 0..opts.max_iter {
        a.apply(&p, &mut ap);
        project(&mut ap, wref);
        let pap = dot(&p, &ap).re();
        if pap <= 0.0 || !pap.is_finite() {
            return Err(LinalgError::Indefinite {
                iteration: k,
                curvature: pap,
            });
        }
        let alpha = rz / pap;
        axpy(T::from_real(alpha), &p, &mut x);
        axpy(T::from_real(-alpha), &ap, &mut r);
        report.energy_drops.push(alpha * rz);
        if opts.keep_iterates {
            report.iterates.push(x.clone());
        }
        let rel = norm(&r) / bnorm;
        report.residual_history.push(rel);
        report.iterations = k + 1;
        if rel <= opts.tol {
            project(&mut x, wref);
            report.x = x;
            return Ok(report);
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z).re();
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, &zi) in p.iter_mut().zip(&z) {
            *pi = zi + pi.scale(beta);
        }
    }
    Err(LinalgError::CgNonConvergence {
        iterations: opts.max_iter,
        residual: *report.residual_history.last().unwrap_or(&f64::NAN),
    })
}
