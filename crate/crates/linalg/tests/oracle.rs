use magstep_linalg::{
    cg_solve, dense_hermitian_eigs, hermitian_smallest_eigs, random_hermitian_spd, tridiag_smallest, CgOptions,
    DenseHermitian, EigOptions, InnerSolve, LinearOperator, SparseHermitian, TriDiag,
    TripletBuilder, C64,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(n: usize, seed: u64) -> SparseHermitian {
    random_hermitian_spd(n, seed)
}

#[test]
fn iterative_matches_dense_on_random_matrices() {
    for seed in 0..20u64 {
        let n = 60 + (seed as usize * 23) % 441;
        let a = random_spd(n, seed);
        let dense = DenseHermitian::new(n, a.to_dense()).unwrap();
        let k = 3;
        let want = dense_hermitian_eigs(&dense, k).unwrap();
        let opts = EigOptions {
            tol: 1e-10,
            block_size: Some(12),
            ..Default::default()
        };
        let (got, _) = hermitian_smallest_eigs(&a, k, &opts).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!(
                (g.value - w.value).abs() <= 1e-8,
                "seed {seed} n {n}: {} vs {}",
                g.value,
                w.value
            );
        }
    }
}

#[test]
fn banded_and_cg_paths_agree() {
    let (nx, ny) = (25, 18);
    let n = nx * ny;
    let mut b = TripletBuilder::new(n);
    for i in 0..nx {
        for j in 0..ny {
            let p = i * ny + j;
            b.add_diag(p, 4.0 + 0.01 * (i as f64 - 12.0).powi(2));
            if i + 1 < nx {
                b.add_pair(p, p + ny, C64::from_polar(-1.0, 0.3 * j as f64));
            }
            if j + 1 < ny {
                b.add_pair(p, p + 1, C64::new(-1.0, 0.0));
            }
        }
    }
    let a = b.build();
    let cg = hermitian_smallest_eigs(&a, 4, &EigOptions::default()).unwrap().0;
    let band = hermitian_smallest_eigs(
        &a,
        4,
        &EigOptions {
            inner: InnerSolve::BandedLdl,
            certify: true,
            ..Default::default()
        },
    )
    .unwrap()
    .0;
    for (x, y) in cg.iter().zip(&band) {
        assert!((x.value - y.value).abs() < 1e-9);
    }
}

#[test]
fn separable_dirichlet_laplacian() {
    let (nx, ny) = (16, 11);
    let (hx, hy) = (1.0 / (nx as f64 + 1.0), 1.0 / (ny as f64 + 1.0));
    let n = nx * ny;
    let mut b = TripletBuilder::new(n);
    for i in 0..nx {
        for j in 0..ny {
            let p = i * ny + j;
            b.add_diag(p, 2.0 / (hx * hx) + 2.0 / (hy * hy));
            if i + 1 < nx {
                b.add_pair(p, p + ny, C64::new(-1.0 / (hx * hx), 0.0));
            }
            if j + 1 < ny {
                b.add_pair(p, p + 1, C64::new(-1.0 / (hy * hy), 0.0));
            }
        }
    }
    let a = b.build();
    let one = |m: usize, len: usize, step: f64| {
        (2.0 - 2.0 * (m as f64 * std::f64::consts::PI / (len as f64 + 1.0)).cos()) / (step * step)
    };
    let mut want: Vec<f64> = (1..5)
        .flat_map(|m| (1..5).map(move |l| (m, l)))
        .map(|(m, l)| one(m, nx, hx) + one(l, ny, hy))
        .collect();
    want.sort_by(f64::total_cmp);
    let (got, _) = hermitian_smallest_eigs(
        &a,
        4,
        &EigOptions {
            tol: 1e-8,
            ..Default::default()
        },
    )
    .unwrap();
    for (g, w) in got.iter().zip(&want) {
        assert!((g.value - w).abs() < 1e-8 * w, "{} vs {w}", g.value);
    }
}

#[test]
fn returned_basis_is_orthonormal() {
    let a = random_spd(150, 99);
    let (got, _) = hermitian_smallest_eigs(&a, 5, &EigOptions::default()).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let d: C64 = got[i]
                .vector
                .iter()
                .zip(&got[j].vector)
                .map(|(x, y)| x.conj() * y)
                .sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((d - want).norm() <= 1e-10);
        }
    }
}

#[test]
fn cg_energy_error_is_monotone() {
    let a = random_spd(120, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x_true: Vec<C64> = (0..120)
        .map(|_| C64::new(rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();
    let b = a.matvec(&x_true);
    let rep = cg_solve(
        &a,
        &b,
        &CgOptions {
            tol: 1e-12,
            keep_iterates: true,
            ..Default::default()
        },
    )
    .unwrap();
    let energy = |x: &[C64]| {
        let e: Vec<C64> = x.iter().zip(&x_true).map(|(p, q)| p - q).collect();
        let ae = a.matvec(&e);
        e.iter().zip(&ae).map(|(p, q)| (p.conj() * q).re).sum::<f64>()
    };
    let mut prev = energy(&vec![C64::new(0.0, 0.0); 120]);
    for x in &rep.iterates {
        let cur = energy(x);
        assert!(cur <= prev * (1.0 + 1e-12) + 1e-24, "{cur} > {prev}");
        prev = cur;
    }
    assert!(rep.energy_drops.iter().all(|&d| d >= 0.0));
}

#[test]
fn dense_oracle_refuses_large_input() {
    let n = magstep_linalg::DENSE_ORACLE_CAP + 1;
    let a = DenseHermitian::new(n, vec![C64::new(0.0, 0.0); n * n]).unwrap();
    assert!(dense_hermitian_eigs(&a, 1).is_err());
}

#[test]
fn dense_agrees_with_tridiagonal_solver() {
    let n = 40;
    let d: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
    let e: Vec<f64> = (0..n - 1).map(|i| 0.5 + (i as f64 * 0.11).cos()).collect();
    let t = TriDiag::new(d.clone(), e.clone()).unwrap();
    let dense = DenseHermitian::from_fn(n, |i, j| {
        if i == j {
            C64::new(d[i], 0.0)
        } else if i.abs_diff(j) == 1 {
            C64::new(e[i.min(j)], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
    .unwrap();
    let a = tridiag_smallest(&t, n, 1e-13).unwrap();
    let b = dense_hermitian_eigs(&dense, n).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.value - y.value).abs() < 1e-12);
    }
}

fn tridiag_strategy() -> impl Strategy<Value = TriDiag> {
    (2usize..60).prop_flat_map(|n| {
        (
            proptest::collection::vec(-5.0f64..5.0, n),
            proptest::collection::vec(-2.0f64..2.0, n - 1),
        )
            .prop_map(|(d, e)| TriDiag::new(d, e).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sturm_count_matches_computed_spectrum(t in tridiag_strategy(), sigma in -8.0f64..8.0) {
        let n = t.len();
        let all = tridiag_smallest(&t, n, 1e-12).unwrap();
        let below = all.iter().filter(|p| p.value < sigma).count();
        // Skip shifts that land within rounding of an eigenvalue.
        let close = all.iter().any(|p| (p.value - sigma).abs() < 1e-9);
        prop_assume!(!close);
        prop_assert_eq!(t.sturm_count(sigma), below);
    }

    #[test]
    fn tridiag_vectors_orthonormal(t in tridiag_strategy()) {
        let n = t.len();
        let k = n.min(8);
        let pairs = tridiag_smallest(&t, k, 1e-12).unwrap();
        for i in 0..k {
            for j in 0..k {
                let d: f64 = pairs[i].vector.iter().zip(&pairs[j].vector).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - want).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn cg_residual_bound(seed in 0u64..1000) {
        let a = random_spd(40, seed);
        let b: Vec<C64> = (0..40).map(|i| C64::new((i as f64).sin(), (seed as f64 + i as f64).cos())).collect();
        let rep = cg_solve(&a, &b, &CgOptions { tol: 1e-10, ..Default::default() }).unwrap();
        let mut r = vec![C64::new(0.0, 0.0); 40];
        a.apply(&rep.x, &mut r);
        let res: f64 = r.iter().zip(&b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
        let bn: f64 = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(res <= 1e-9 * bn);
    }
}
