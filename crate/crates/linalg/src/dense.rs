//! Dense Hermitian eigensolver used as a cross-check oracle.

use crate::tridiag::{tridiag_smallest, TriDiag};
use crate::{EigenPair, LinalgError, Result, C64};

/// Largest dimension the dense oracle accepts.
pub const DENSE_ORACLE_CAP: usize = 2000;

/// Row-major dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHermitian {
    n: usize,
    data: Vec<C64>,
}

impl DenseHermitian {
    /// Checks Hermiticity to `1e-12 · max|a_ij|`.
    pub fn new(n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(LinalgError::Dimension {
                expected: n * n,
                got: data.len(),
            });
        }
        let scale = data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for i in 0..n {
            for j in i..n {
                let d = (data[i * n + j] - data[j * n + i].conj()).norm();
                if d > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                    return Err(LinalgError::InvalidMatrix(format!(
                        "not Hermitian at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> C64) -> Result<Self> {
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = f(i, j);
            }
        }
        Self::new(n, data)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(x)
                    .fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }
}

/// The `k` smallest eigenpairs by Householder tridiagonalization followed by
/// [`tridiag_smallest`]. Refuses matrices above [`DENSE_ORACLE_CAP`].
pub fn dense_hermitian_eigs(a: &DenseHermitian, k: usize) -> Result<Vec<EigenPair<C64>>> {
    let n = a.n;
    if n > DENSE_ORACLE_CAP {
        return Err(LinalgError::OracleCap {
            n,
            cap: DENSE_ORACLE_CAP,
        });
    }
    if k > n {
        return Err(LinalgError::TooManyEigenpairs { requested: k, n });
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let zero = C64::new(0.0, 0.0);
    let mut m = a.data.clone();
    // Symmetrize exactly so rounding in the input cannot leak into the reduction.
    for i in 0..n {
        m[i * n + i] = C64::new(m[i * n + i].re, 0.0);
        for j in 0..i {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i].conj());
            m[i * n + j] = avg;
            m[j * n + i] = avg.conj();
        }
    }

    let mut reflectors: Vec<(Vec<C64>, f64)> = Vec::with_capacity(n.saturating_sub(2));
    let mut sub = vec![zero; n.saturating_sub(1)];
    for col in 0..n.saturating_sub(1) {
        let len = n - col - 1;
        let x: Vec<C64> = (0..len).map(|r| m[(col + 1 + r) * n + col]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let tail = x[1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
        if len == 1 || tail == 0.0 || xnorm == 0.0 {
            sub[col] = x[0];
            reflectors.push((Vec::new(), 0.0));
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let beta = -phase * xnorm;
        let mut v = x.clone();
        v[0] -= beta;
        let vv = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let tau = 2.0 / vv;
        // Trailing block B ← H B H with H = I − τ v vᴴ.
        let off = col + 1;
        let mut p = vec![zero; len];
        for (r, pr) in p.iter_mut().enumerate() {
            let row = &m[(off + r) * n + off..(off + r) * n + off + len];
            *pr = row.iter().zip(&v).fold(zero, |acc, (b, vc)| acc + b * vc) * tau;
        }
        let vp = v
            .iter()
            .zip(&p)
            .fold(zero, |acc, (vc, pc)| acc + vc.conj() * pc);
        let kcoef = 0.5 * tau * vp;
        let w: Vec<C64> = p.iter().zip(&v).map(|(pc, vc)| pc - kcoef * vc).collect();
        for r in 0..len {
            for c in 0..len {
                m[(off + r) * n + off + c] -= v[r] * w[c].conj() + w[r] * v[c].conj();
            }
        }
        sub[col] = beta;
        reflectors.push((v, tau));
    }

    // Unitary diagonal scaling makes the subdiagonal real and nonnegative.
    let mut phases = vec![C64::new(1.0, 0.0); n];
    let mut offdiag = vec![0.0; n.saturating_sub(1)];
    for i in 0..n.saturating_sub(1) {
        let e = sub[i];
        let r = e.norm();
        offdiag[i] = r;
        phases[i + 1] = if r > 0.0 { phases[i] * (e / r) } else { phases[i] };
    }
    let diag: Vec<f64> = (0..n).map(|i| m[i * n + i].re).collect();
    let t = TriDiag::new(diag, offdiag)?;
    let pairs = tridiag_smallest(&t, k, 1e-13)?;

    let mut out = Vec::with_capacity(k);
    for p in pairs {
        let mut y: Vec<C64> = p
            .vector
            .iter()
            .zip(&phases)
            .map(|(z, ph)| ph * *z)
            .collect();
        for (col, (v, tau)) in reflectors.iter().enumerate().rev() {
            if v.is_empty() {
                continue;
            }
            let off = col + 1;
            let seg = &mut y[off..off + v.len()];
            let s = v
                .iter()
                .zip(seg.iter())
                .fold(zero, |acc, (vc, yc)| acc + vc.conj() * yc)
                * *tau;
            for (yc, vc) in seg.iter_mut().zip(v) {
                *yc -= s * vc;
            }
        }
        let nrm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in y.iter_mut() {
            *z /= nrm;
        }
        out.push(EigenPair {
            value: p.value,
            vector: y,
        });
    }
    Ok(out)
}
