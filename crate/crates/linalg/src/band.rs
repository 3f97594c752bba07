//! Banded LDLᴴ factorization of a shifted Hermitian matrix.
//!
//! No pivoting: the factorization is meant for shifts below (or well
//! separated from) the spectrum, where it coincides with a Cholesky
//! factorization. The pivot signs give the inertia of `A − σI`.

use crate::{LinalgError, Result, SparseHermitian, C64};

#[derive(Debug, Clone)]
pub struct BandLdl {
    n: usize,
    bw: usize,
    shift: f64,
    /// Row i, slot m stores d_k·conj(l_ik) for k = i − bw + m.
    ld: Vec<C64>,
    d: Vec<f64>,
}

impl BandLdl {
    /// Factors `A − shift·I`.
    pub fn factor(a: &SparseHermitian, shift: f64) -> Result<Self> {
        let n = a.dim();
        let bw = a.bandwidth();
        let zero = C64::new(0.0, 0.0);
        let mut ld = vec![zero; n * bw];
        let mut d = vec![0.0; n];
        let mut lrow = vec![zero; bw];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            lrow.iter_mut().for_each(|v| *v = zero);
            let (cols, vals) = a.row(i);
            // a_ij for j < i, placed at slot j − (i − bw).
            for (&j, &v) in cols.iter().zip(vals) {
                if j < i {
                    lrow[j + bw - i] = v;
                }
            }
            for j in lo..i {
                let slot_i = j + bw - i;
                let jlo = j.saturating_sub(bw).max(lo);
                let mut s = lrow[slot_i];
                if jlo < j {
                    let ri = &lrow[jlo + bw - i..slot_i];
                    let rj = &ld[j * bw + (jlo + bw - j)..j * bw + bw];
                    for (x, y) in ri.iter().zip(rj) {
                        s -= x * y;
                    }
                }
                lrow[slot_i] = s / d[j];
            }
            let mut di = a.get(i, i).re - shift;
            for j in lo..i {
                let l = lrow[j + bw - i];
                di -= l.norm_sqr() * d[j];
            }
            if di == 0.0 || !di.is_finite() {
                return Err(LinalgError::InvalidMatrix(format!(
                    "singular pivot at row {i} for shift {shift:.6e}"
                )));
            }
            d[i] = di;
            for j in lo..i {
                let slot = j + bw - i;
                ld[i * bw + slot] = lrow[slot].conj() * d[j];
            }
        }
        Ok(Self {
            n,
            bw,
            shift,
            ld,
            d,
        })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Number of eigenvalues of A strictly below the shift.
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    fn l(&self, i: usize, k: usize) -> C64 {
        self.ld[i * self.bw + (k + self.bw - i)].conj() / self.d[k]
    }

    /// Solves (A − σI) x = b in place.
    pub fn solve_in_place(&self, x: &mut [C64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = x[i];
            for k in lo..i {
                s -= self.l(i, k) * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let xi = x[i];
            let lo = i.saturating_sub(bw);
            for k in lo..i {
                x[k] -= self.l(i, k).conj() * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TripletBuilder;

    fn test_matrix() -> SparseHermitian {
        let n = 12;
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add_diag(i, 4.0 + i as f64 * 0.1);
            if i + 1 < n {
                b.add_pair(i, i + 1, C64::new(-1.0, 0.3));
            }
            if i + 3 < n {
                b.add_pair(i, i + 3, C64::new(0.2, -0.5));
            }
        }
        b.build()
    }

    #[test]
    fn solve_matches_matvec() {
        let a = test_matrix();
        let f = BandLdl::factor(&a, 0.5).unwrap();
        let x0: Vec<C64> = (0..12).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let mut b = a.matvec(&x0);
        for (bi, xi) in b.iter_mut().zip(&x0) {
            *bi -= 0.5 * xi;
        }
        f.solve_in_place(&mut b);
        for (x, y) in b.iter().zip(&x0) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn inertia_counts_eigenvalues_below_shift() {
        let a = test_matrix();
        let dense = crate::DenseHermitian::new(12, a.to_dense()).unwrap();
        let all = crate::dense_hermitian_eigs(&dense, 12).unwrap();
        for shift in [0.0, 2.5, 3.7, 4.4, 6.0, 9.0] {
            let below = all.iter().filter(|p| p.value < shift).count();
            assert_eq!(BandLdl::factor(&a, shift).unwrap().negative_pivots(), below);
        }
    }
}
