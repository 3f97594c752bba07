//! Symmetric tridiagonal eigensolver: Sturm bisection for the values,
//! inverse iteration for the vectors.

use crate::{EigenPair, LinalgError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TriDiag {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl TriDiag {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(LinalgError::InvalidMatrix("empty tridiagonal".into()));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(LinalgError::InvalidMatrix(format!(
                "offdiag length {} for dimension {}",
                offdiag.len(),
                diag.len()
            )));
        }
        if diag.iter().chain(&offdiag).any(|v| !v.is_finite()) {
            return Err(LinalgError::InvalidMatrix("non-finite entry".into()));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.offdiag[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.offdiag[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.offdiag[i - 1].abs();
            }
            if i + 1 < n {
                r += self.offdiag[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.offdiag[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.offdiag[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    fn pivmin(&self) -> f64 {
        let emax = self.offdiag.iter().fold(1.0f64, |m, e| m.max(e * e));
        f64::MIN_POSITIVE * emax
    }

    /// Number of eigenvalues strictly below `sigma` (negative LDLᵀ pivots).
    pub fn sturm_count(&self, sigma: f64) -> usize {
        let pivmin = self.pivmin();
        let mut count = 0;
        let mut q = self.diag[0] - sigma;
        for i in 0..self.len() {
            if i > 0 {
                let e = self.offdiag[i - 1];
                q = self.diag[i] - sigma - e * e / q;
            }
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Eigenvalue with 0-based index `index` in ascending order, by bisection.
    pub fn eigenvalue_by_bisection(&self, index: usize) -> f64 {
        let (glo, ghi) = self.gershgorin();
        let pad = f64::EPSILON * (glo.abs().max(ghi.abs()) + 1.0) * 4.0;
        let mut lo = glo - pad;
        let mut hi = ghi + pad;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + self.pivmin() {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves (T − λI)x = b by Gaussian elimination with partial pivoting.
    /// Tiny pivots are replaced by ±eps·‖T‖ so exact eigenvalues are usable shifts.
    fn shifted_solve(&self, lambda: f64, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        let tiny = f64::EPSILON * self.norm_inf().max(f64::MIN_POSITIVE);
        if n == 1 {
            let mut p = self.diag[0] - lambda;
            if p.abs() < tiny {
                p = tiny;
            }
            return vec![b[0] / p];
        }
        // Row i of U holds (u0, u1, u2) at columns (i, i+1, i+2).
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut rhs = b.to_vec();
        // Current row being eliminated: (c0, c1) at columns (i, i+1), plus c2 for fill.
        let mut c0 = self.diag[0] - lambda;
        let mut c1 = self.offdiag[0];
        let mut c2 = 0.0;
        let mut r = rhs[0];
        for i in 0..n - 1 {
            let sub = self.offdiag[i];
            let nd = self.diag[i + 1] - lambda;
            let nsup = if i + 2 < n { self.offdiag[i + 1] } else { 0.0 };
            let nr = rhs[i + 1];
            if c0.abs() >= sub.abs() {
                if c0.abs() < tiny {
                    c0 = tiny;
                }
                let m = sub / c0;
                u0[i] = c0;
                u1[i] = c1;
                u2[i] = c2;
                rhs[i] = r;
                c0 = nd - m * c1;
                c1 = nsup - m * c2;
                c2 = 0.0;
                r = nr - m * r;
            } else {
                // Swap rows i and i+1.
                let m = c0 / sub;
                u0[i] = sub;
                u1[i] = nd;
                u2[i] = nsup;
                rhs[i] = nr;
                let (oc1, oc2, or) = (c1, c2, r);
                c0 = oc1 - m * nd;
                c1 = oc2 - m * nsup;
                c2 = 0.0;
                r = or - m * nr;
            }
        }
        if c0.abs() < tiny {
            c0 = tiny;
        }
        u0[n - 1] = c0;
        rhs[n - 1] = r;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * x[i + 2];
            }
            x[i] = s / u0[i];
        }
        x
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nrm > 0.0 {
        for v in x.iter_mut() {
            *v /= nrm;
        }
    }
    nrm
}

/// The `k` smallest eigenpairs in ascending order.
///
/// Eigenvalues come from bisection; vectors from inverse iteration, with each
/// vector reorthogonalized against earlier vectors whose eigenvalues lie
/// within 1e−3‖T‖ (so exact ties come out orthonormal).
pub fn tridiag_smallest(t: &TriDiag, k: usize, tol: f64) -> Result<Vec<EigenPair<f64>>> {
    let n = t.len();
    if k > n {
        return Err(LinalgError::TooManyEigenpairs { requested: k, n });
    }
    let values: Vec<f64> = (0..k).map(|i| t.eigenvalue_by_bisection(i)).collect();
    let tnorm = t.norm_inf().max(f64::MIN_POSITIVE);
    let cluster_gap = 1e-3 * tnorm;
    let res_tol = tol * tnorm;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut out: Vec<EigenPair<f64>> = Vec::with_capacity(k);

    for (i, &lambda) in values.iter().enumerate() {
        let first = out
            .iter()
            .position(|p| (lambda - p.value).abs() <= cluster_gap)
            .unwrap_or(out.len());
        let mut best: Option<(f64, Vec<f64>)> = None;
        'restart: for _attempt in 0..4 {
            let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            normalize(&mut x);
            for it in 0..6 {
                let mut y = t.shifted_solve(lambda, &x);
                for _pass in 0..2 {
                    for p in &out[first..] {
                        let c: f64 = p.vector.iter().zip(&y).map(|(a, b)| a * b).sum();
                        for (yi, vi) in y.iter_mut().zip(&p.vector) {
                            *yi -= c * vi;
                        }
                    }
                }
                if normalize(&mut y) == 0.0 || y.iter().any(|v| !v.is_finite()) {
                    continue 'restart;
                }
                x = y;
                let tx = t.matvec(&x);
                let res = tx
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - lambda * b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if best.as_ref().is_none_or(|(r, _)| res < *r) {
                    best = Some((res, x.clone()));
                }
                if res <= res_tol && it >= 1 {
                    break 'restart;
                }
            }
        }
        let (res, vector) = best.ok_or(LinalgError::InverseIteration {
            index: i,
            residual: f64::INFINITY,
        })?;
        if res > res_tol {
            return Err(LinalgError::InverseIteration {
                index: i,
                residual: res,
            });
        }
        out.push(EigenPair {
            value: lambda,
            vector,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let t = TriDiag::new(vec![2.0, 2.0], vec![-1.0]).unwrap();
        let e = tridiag_smallest(&t, 2, 1e-12).unwrap();
        assert!((e[0].value - 1.0).abs() < 1e-14);
        assert!((e[1].value - 3.0).abs() < 1e-14);
    }

    #[test]
    fn repeated_diagonal_is_orthonormal() {
        let t = TriDiag::new(vec![5.0; 3], vec![0.0; 2]).unwrap();
        let e = tridiag_smallest(&t, 3, 1e-12).unwrap();
        for p in &e {
            assert!((p.value - 5.0).abs() < 1e-14);
        }
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = e[i].vector.iter().zip(&e[j].vector).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn laplacian_closed_form() {
        let n = 200;
        let t = TriDiag::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap();
        let e = tridiag_smallest(&t, 6, 1e-12).unwrap();
        for (m, p) in e.iter().enumerate() {
            let want =
                2.0 - 2.0 * ((m as f64 + 1.0) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((p.value - want).abs() < 1e-13, "{m}: {} vs {want}", p.value);
        }
    }

    #[test]
    fn shifted_solve_matches_matvec() {
        let t = TriDiag::new(vec![0.1, 3.0, -2.0, 0.5], vec![1.0, 4.0, 0.3]).unwrap();
        let b = vec![1.0, -2.0, 0.5, 3.0];
        let x = t.shifted_solve(0.7, &b);
        let tx = t.matvec(&x);
        for i in 0..4 {
            assert!((tx[i] - 0.7 * x[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn too_many_requested() {
        let t = TriDiag::new(vec![1.0], vec![]).unwrap();
        assert!(tridiag_smallest(&t, 2, 1e-10).is_err());
        assert!(tridiag_smallest(&t, 0, 1e-10).unwrap().is_empty());
    }
}
