//! Smallest eigenpairs of a sparse Hermitian matrix by block inverse
//! iteration with Rayleigh–Ritz.

use crate::band::BandLdl;
use crate::cg::{cg_solve, CgOptions, Shifted};
use crate::dense::{dense_hermitian_eigs, DenseHermitian};
use crate::scalar::{axpy, dot, norm};
use crate::{EigenPair, LinalgError, Result, SparseHermitian, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How `(A − σI)⁻¹` is applied inside the iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerSolve {
    /// Jacobi-scaled CG to the given relative tolerance.
    Cg { tol: f64, max_iter: usize },
    /// Banded LDLᴴ factorization, computed once per shift.
    BandedLdl,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigOptions {
    /// Residual bound ‖Av − θv‖ ≤ tol (or tol·|θ| when `relative`).
    pub tol: f64,
    pub relative: bool,
    /// Block width; defaults to max(2k, k + 4) capped by n.
    pub block_size: Option<usize>,
    pub max_iter: usize,
    /// Shift σ, must lie below the spectrum.
    pub shift: f64,
    pub inner: InnerSolve,
    /// With `BandedLdl`, confirm by inertia that exactly k eigenvalues lie
    /// below the midpoint between the k-th and (k+1)-th Ritz values.
    pub certify: bool,
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            relative: false,
            block_size: None,
            max_iter: 2000,
            shift: 0.0,
            inner: InnerSolve::Cg {
                tol: 1e-12,
                max_iter: 20_000,
            },
            certify: false,
            seed: 0x6d61_6773,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EigStats {
    pub iterations: usize,
    pub inner_iterations: usize,
    pub residuals: Vec<f64>,
    pub shift: f64,
    pub factorizations: usize,
}

fn orthonormalize(block: &mut [Vec<C64>], rng: &mut ChaCha8Rng) {
    for i in 0..block.len() {
        for _attempt in 0..3 {
            for _pass in 0..2 {
                for j in 0..i {
                    let (head, tail) = block.split_at_mut(i);
                    let c = dot(&head[j], &tail[0]);
                    axpy(-c, &head[j], &mut tail[0]);
                }
            }
            let nrm = norm(&block[i]);
            if nrm > 1e-10 && nrm.is_finite() {
                block[i].iter_mut().for_each(|v| *v /= nrm);
                break;
            }
            block[i] = random_vector(block[i].len(), rng);
        }
    }
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect()
}

/// The `k` smallest eigenpairs of a Hermitian positive definite matrix (or of
/// any Hermitian matrix when `opts.shift` lies below its spectrum).
pub fn hermitian_smallest_eigs(
    a: &SparseHermitian,
    k: usize,
    opts: &EigOptions,
) -> Result<(Vec<EigenPair<C64>>, EigStats)> {
    let n = a.dim();
    let mut stats = EigStats {
        shift: opts.shift,
        ..Default::default()
    };
    if k == 0 {
        return Ok((Vec::new(), stats));
    }
    if k > n {
        return Err(LinalgError::TooManyEigenpairs { requested: k, n });
    }
    let p = opts.block_size.unwrap_or((2 * k).max(k + 4)).clamp(k, n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let factor = match opts.inner {
        InnerSolve::BandedLdl => {
            let f = BandLdl::factor(a, opts.shift)?;
            stats.factorizations += 1;
            let neg = f.negative_pivots();
            if neg != 0 {
                return Err(LinalgError::Inertia {
                    shift: opts.shift,
                    expected: 0,
                    found: neg,
                });
            }
            Some(f)
        }
        InnerSolve::Cg { .. } => None,
    };
    let shifted = Shifted {
        op: a,
        shift: opts.shift,
    };

    let mut x: Vec<Vec<C64>> = (0..p).map(|_| random_vector(n, &mut rng)).collect();
    orthonormalize(&mut x, &mut rng);
    let mut ax: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; p];

    for iter in 0..opts.max_iter {
        stats.iterations = iter + 1;
        for (xi, axi) in x.iter().zip(ax.iter_mut()) {
            a.matvec_into(xi, axi);
        }
        let h = DenseHermitian::from_fn(p, |i, j| {
            if i <= j {
                dot(&x[i], &ax[j])
            } else {
                dot(&x[j], &ax[i]).conj()
            }
        })?;
        let ritz = dense_hermitian_eigs(&h, p)?;
        let rotate = |basis: &[Vec<C64>]| -> Vec<Vec<C64>> {
            ritz.iter()
                .map(|rp| {
                    let mut v = vec![C64::new(0.0, 0.0); n];
                    for (b, &c) in basis.iter().zip(&rp.vector) {
                        axpy(c, b, &mut v);
                    }
                    v
                })
                .collect()
        };
        x = rotate(&x);
        ax = rotate(&ax);
        let theta: Vec<f64> = ritz.iter().map(|rp| rp.value).collect();
        let residuals: Vec<f64> = (0..p)
            .map(|i| {
                let mut r = ax[i].clone();
                axpy(C64::new(-theta[i], 0.0), &x[i], &mut r);
                norm(&r)
            })
            .collect();
        let bound = |i: usize| {
            if opts.relative {
                opts.tol * theta[i].abs()
            } else {
                opts.tol
            }
        };
        stats.residuals = residuals[..k].to_vec();
        if (0..k).all(|i| residuals[i] <= bound(i)) {
            if opts.certify && p > k {
                if factor.is_some() {
                    let mid = 0.5 * (theta[k - 1] + theta[k]);
                    let g = BandLdl::factor(a, mid)?;
                    stats.factorizations += 1;
                    let below = g.negative_pivots();
                    if below != k {
                        return Err(LinalgError::Inertia {
                            shift: mid,
                            expected: k,
                            found: below,
                        });
                    }
                }
            }
            let pairs = x
                .into_iter()
                .zip(theta)
                .take(k)
                .map(|(vector, value)| EigenPair { value, vector })
                .collect();
            return Ok((pairs, stats));
        }

        // Apply (A − σI)⁻¹ to the block; converged columns are refreshed too,
        // which keeps them accurate while the rest catch up.
        for xi in x.iter_mut() {
            match (&factor, opts.inner) {
                (Some(f), _) => f.solve_in_place(xi),
                (None, InnerSolve::Cg { tol, max_iter }) => {
                    let rep = cg_solve(
                        &shifted,
                        xi,
                        &CgOptions {
                            tol,
                            max_iter,
                            jacobi: true,
                            ..Default::default()
                        },
                    )?;
                    stats.inner_iterations += rep.iterations;
                    *xi = rep.x;
                }
                (None, InnerSolve::BandedLdl) => unreachable!(),
            }
        }
        orthonormalize(&mut x, &mut rng);
    }
    Err(LinalgError::Stagnation {
        iterations: opts.max_iter,
        residuals: stats.residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TripletBuilder;

    #[test]
    fn diagonal_matrix() {
        let d: Vec<f64> = (0..40).map(|i| 1.0 + ((i * 17) % 40) as f64).collect();
        let a = SparseHermitian::from_diagonal(&d);
        let (e, _) = hermitian_smallest_eigs(&a, 3, &EigOptions::default()).unwrap();
        let vals: Vec<f64> = e.iter().map(|p| p.value).collect();
        for (v, w) in vals.iter().zip([1.0, 2.0, 3.0]) {
            assert!((v - w).abs() < 1e-10);
        }
    }

    #[test]
    fn banded_path_with_certificate() {
        let (nx, ny) = (30, 20);
        let n = nx * ny;
        let mut b = TripletBuilder::new(n);
        for i in 0..nx {
            for j in 0..ny {
                let p = i * ny + j;
                b.add_diag(p, 4.0);
                if i + 1 < nx {
                    b.add_pair(p, p + ny, C64::new(-1.0, 0.0));
                }
                if j + 1 < ny {
                    b.add_pair(p, p + 1, C64::new(-1.0, 0.0));
                }
            }
        }
        let a = b.build();
        let opts = EigOptions {
            inner: InnerSolve::BandedLdl,
            certify: true,
            tol: 1e-11,
            ..Default::default()
        };
        let (e, stats) = hermitian_smallest_eigs(&a, 3, &opts).unwrap();
        let pi = std::f64::consts::PI;
        let one = |m: usize, len: usize| 2.0 - 2.0 * (m as f64 * pi / (len as f64 + 1.0)).cos();
        let mut want = vec![];
        for m in 1..4 {
            for l in 1..4 {
                want.push(one(m, nx) + one(l, ny));
            }
        }
        want.sort_by(f64::total_cmp);
        for (p, w) in e.iter().zip(&want) {
            assert!((p.value - w).abs() < 1e-10, "{} vs {}", p.value, w);
        }
        assert_eq!(stats.factorizations, 2);
    }

    #[test]
    fn shift_above_spectrum_bottom_is_rejected() {
        let a = SparseHermitian::from_diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let opts = EigOptions {
            inner: InnerSolve::BandedLdl,
            shift: 1.5,
            ..Default::default()
        };
        assert!(matches!(
            hermitian_smallest_eigs(&a, 1, &opts),
            Err(LinalgError::Inertia { .. })
        ));
    }
}
