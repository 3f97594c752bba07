use magstep_core::edge2d::*;
use magstep_core::fiber1d::Grid1D;
use magstep_core::invariants::SpectralInvariants;
use magstep_linalg::{SparseHermitian, C64};
use std::sync::OnceLock;

fn inv() -> &'static SpectralInvariants {
    static INV: OnceLock<SpectralInvariants> = OnceLock::new();
    INV.get_or_init(|| SpectralInvariants::compute(-0.5, &Grid1D::standard()).unwrap())
}

fn bump() -> CurvatureProfile {
    CurvatureProfile::gaussian(1.0, -0.5).unwrap()
}

fn banded_at(shift: f64) -> Solve2dOptions {
    Solve2dOptions {
        shift,
        ..Default::default()
    }
}

#[test]
fn gauge_potential_reproduces_the_field() {
    let p = bump();
    let d = EdgeDomain::new(2.0, -0.4, 0.4, 40, 80).unwrap();
    let f = build_gauge_potential(&p, -0.5, &d);
    let nt = d.n_t + 1;
    let dt = d.dt();
    for i in [5, 20, 33] {
        let s = d.s_node(i);
        assert_eq!(f[i * nt + d.t_zero()], 0.0);
        for j in (1..d.n_t).filter(|&j| j != d.t_zero()) {
            let t = d.t_node(j);
            let dtf = (f[i * nt + j + 1] - f[i * nt + j - 1]) / (2.0 * dt);
            let b = if t > 0.0 { 1.0 } else { -0.5 };
            let want = -(1.0 - t * p.eval(s)) * b;
            // Exact up to the kink of b at t = 0, which only touches j = t_zero ± 1.
            if (j as isize - d.t_zero() as isize).abs() > 1 {
                assert!((dtf - want).abs() < 1e-12, "s={s} t={t}: {dtf} vs {want}");
            }
        }
    }
}

#[test]
fn assembly_is_exactly_hermitian() {
    let d = EdgeDomain::scaled(2e-2, &ScaledDomainSpec::default()).unwrap();
    let op = assemble_operator2d(2e-2, -0.5, &bump(), &d).unwrap();
    assert_eq!(op.stiffness.hermitian_defect(), 0.0);
}

#[test]
fn identity_mass_and_diagonal_stiffness() {
    let d = EdgeDomain::new(1.0, -0.5, 0.5, 4, 4).unwrap();
    let diag: Vec<f64> = (0..d.n_unknowns()).map(|k| 3.0 + k as f64).collect();
    let op = Operator2D {
        stiffness: SparseHermitian::from_diagonal(&diag),
        mass: vec![1.0; d.n_unknowns()],
        h: 0.1,
        a: -0.5,
        profile: CurvatureProfile::flat(),
        domain: d,
    };
    let r = solve_eigs2d(&op, 3, &banded_at(0.0)).unwrap();
    for (l, w) in r.lambdas.iter().zip([3.0, 4.0, 5.0]) {
        assert!((l - w).abs() < 1e-10);
    }
}

#[test]
fn zero_field_box_matches_closed_forms() {
    let h = 0.05;
    let d = EdgeDomain::new(1.0, -0.3, 0.3, 60, 30).unwrap();
    let op = assemble_operator2d_with(
        h,
        -0.5,
        &CurvatureProfile::flat(),
        &d,
        &AssemblyOptions {
            field_scale: 0.0,
            omega: None,
        },
    )
    .unwrap();
    let r = solve_eigs2d(&op, 4, &banded_at(0.0)).unwrap();
    let pi = std::f64::consts::PI;
    let (ls, lt) = (2.0 * d.s_half, d.t_max - d.t_min);
    let disc = |m: usize, n: usize, step: f64| (2.0 / step * (pi * m as f64 / (2.0 * n as f64)).sin()).powi(2);
    let mut discrete = vec![];
    let mut continuum = vec![];
    for m in 1..5 {
        for l in 1..3 {
            discrete.push(h * h * (disc(m, d.n_s, d.ds()) + disc(l, d.n_t, d.dt())));
            continuum.push(h * h * ((pi * m as f64 / ls).powi(2) + (pi * l as f64 / lt).powi(2)));
        }
    }
    discrete.sort_by(f64::total_cmp);
    continuum.sort_by(f64::total_cmp);
    for k in 0..4 {
        assert!((r.lambdas[k] - discrete[k]).abs() <= 1e-10 * discrete[k]);
        // O((πm·ds)²/12) consistency error of the 3-point stencil.
        assert!((r.lambdas[k] - continuum[k]).abs() <= 5e-3 * continuum[k]);
    }
}

#[test]
fn uniform_field_periodic_strip_reaches_the_landau_level() {
    let h: f64 = 5e-3;
    let sh = h.sqrt();
    let d = EdgeDomain::new(20.0 * 0.3 * sh, -30.0 * 0.15 * sh, 30.0 * 0.15 * sh, 40, 60)
        .unwrap()
        .periodic();
    let op = assemble_operator2d(h, 1.0, &CurvatureProfile::flat(), &d).unwrap();
    let r = solve_eigs2d(
        &op,
        1,
        // The lowest Landau band is nearly degenerate across s-momenta, so
        // the iteration is stopped at a looser residual.
        &Solve2dOptions {
            banded: false,
            tol: 1e-7,
            shift: 0.9 * h,
            ..Default::default()
        },
    )
    .unwrap();
    let ratio = r.lambdas[0] / h;
    assert!((ratio - 1.0).abs() <= 0.05, "{ratio}");
}

#[test]
fn straight_edge_recovers_beta() {
    let h = 2e-3;
    let spec = ScaledDomainSpec {
        s_scale: 4.0,
        f: 0.2,
        ..Default::default()
    };
    let r = solve_scaled(h, -0.5, &CurvatureProfile::flat(), &spec, 1, inv()).unwrap();
    let dev = (r.lambdas[0] / h - inv().beta_a).abs();
    assert!(dev <= 0.02, "{dev}");
    assert!(r.lambdas[0] > 0.0);
}

fn small_domain() -> EdgeDomain {
    let h: f64 = 2e-2;
    let sh = h.sqrt();
    EdgeDomain::new(60.0 * 0.3 * sh, -45.0 * 0.2 * sh, 17.0 * 0.2 * sh, 120, 62).unwrap()
}

#[test]
fn discrete_gauge_changes_leave_the_spectrum_fixed() {
    let h = 2e-2;
    let d = small_domain();
    let base = assemble_operator2d(h, -0.5, &bump(), &d).unwrap();
    let omega = |s: f64, t: f64| (1.3 * s).sin() * t * t + 0.3 * s - 0.7 * t;
    let gauged = assemble_operator2d_with(
        h,
        -0.5,
        &bump(),
        &d,
        &AssemblyOptions {
            field_scale: 1.0,
            omega: Some(&omega),
        },
    )
    .unwrap();
    let shift = predicted_shift(h, inv(), &bump(), 0.02);
    let opts = Solve2dOptions {
        tol: 1e-11,
        ..banded_at(shift)
    };
    let l0 = solve_eigs2d(&base, 2, &opts).unwrap().lambdas;
    let l1 = solve_eigs2d(&gauged, 2, &opts).unwrap().lambdas;
    for (x, y) in l0.iter().zip(&l1) {
        assert!((x - y).abs() <= 1e-11 * x, "{x} vs {y}");
    }
}

#[test]
fn even_profile_gives_reflection_symmetric_density() {
    let h = 2e-2;
    let d = small_domain();
    let op = assemble_operator2d(h, -0.5, &bump(), &d).unwrap();
    let r = solve_near_prediction(&op, 1, inv()).unwrap();
    let u = r.full_grid(0);
    let nt = d.n_t + 1;
    let peak = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for i in 0..=d.n_s {
        for j in 0..nt {
            let a = u[i * nt + j].norm();
            let b = u[(d.n_s - i) * nt + j].norm();
            assert!((a - b).abs() <= 1e-7 * peak);
        }
    }
    // Phase convention: real and positive at the origin.
    let z = u[(d.n_s / 2) * nt + d.t_zero()];
    assert!(z.re > 0.0 && z.im.abs() <= 1e-14 * z.re);
}

#[test]
fn curvature_lowers_the_ground_state() {
    let h = 1e-2;
    let spec = ScaledDomainSpec {
        f: 0.2,
        ..Default::default()
    };
    let curved = solve_scaled(h, -0.5, &bump(), &spec, 1, inv()).unwrap().lambdas[0];
    let flat = solve_scaled(h, -0.5, &CurvatureProfile::flat(), &spec, 1, inv()).unwrap().lambdas[0];
    assert!(curved < flat, "{curved} vs {flat}");
}

#[test]
fn ground_state_is_insensitive_to_the_domain_size() {
    let h = 5e-3;
    let spec = ScaledDomainSpec {
        f: 0.2,
        ..Default::default()
    };
    let base = solve_scaled(h, -0.5, &bump(), &spec, 1, inv()).unwrap().lambdas[0];
    let wide_s = ScaledDomainSpec {
        s_scale: 2.0 * spec.s_scale,
        ..spec
    };
    let wide_t = ScaledDomainSpec {
        t_below: 2.0 * spec.t_below,
        ..spec
    };
    for (name, sp) in [("S", wide_s), ("T", wide_t)] {
        let l = solve_scaled(h, -0.5, &bump(), &sp, 1, inv()).unwrap().lambdas[0];
        assert!((l - base).abs() <= 1e-6 * base, "{name}: {base} vs {l}");
    }
}

#[test]
fn grid_doubling_moves_lambda1_by_under_one_percent() {
    let h = 1e-2;
    let p = bump();
    let coarse = EdgeDomain::symmetric(4.0, 0.45, 240, 240).unwrap();
    let fine = EdgeDomain::symmetric(4.0, 0.45, 480, 480).unwrap();
    let l = |d: &EdgeDomain| {
        let op = assemble_operator2d(h, -0.5, &p, d).unwrap();
        solve_near_prediction(&op, 1, inv()).unwrap().lambdas[0]
    };
    let (lc, lf) = (l(&coarse), l(&fine));
    assert!((lc - lf).abs() <= 0.01 * lf, "{lc} vs {lf}");
}

#[test]
fn localization_of_the_ground_state() {
    let h = 1e-2;
    let spec = ScaledDomainSpec {
        f: 0.2,
        ..Default::default()
    };
    let r = solve_scaled(h, -0.5, &bump(), &spec, 1, inv()).unwrap();
    let rep = localization_diagnostics(&r, 0, inv()).unwrap();
    let eight = rep.normal_mass_outside.iter().find(|(c, _)| *c == 8.0).unwrap().1;
    assert!(eight <= 1e-4, "{rep:?}");
    // Masses decrease with the radius.
    for w in rep.tangential_mass_outside.windows(2) {
        assert!(w[1].1 <= w[0].1);
    }
    assert!(rep.projection.defect_pi0 <= rep.projection.norm_v);
    let target = 1.0 - 4.0 * inv().i2;
    assert!((rep.relative_rnew / target - 1.0).abs() <= 0.1, "{}", rep.relative_rnew);
}

#[test]
fn synthetic_gaussian_scales() {
    let h: f64 = 5e-3;
    let (ws, wt) = (h.powf(0.125), h.sqrt());
    let s: Vec<f64> = (0..301).map(|i| -7.0 * ws + 14.0 * ws * i as f64 / 300.0).collect();
    let t: Vec<f64> = (0..301).map(|j| -7.0 * wt + 14.0 * wt * j as f64 / 300.0).collect();
    let dens: Vec<f64> = s
        .iter()
        .flat_map(|&x| t.iter().map(move |&y| (-(y * y) / h - x * x / h.powf(0.25)).exp()))
        .collect();
    let st = density_stats(&s, &t, &dens, ws, wt);
    assert!((st.scale_s / ws - 1.0).abs() <= 0.05);
    assert!((st.scale_t / wt - 1.0).abs() <= 0.05);
}

#[test]
fn eigenvector_dump_roundtrip() {
    let h = 2e-2;
    let d = small_domain();
    let op = assemble_operator2d(h, -0.5, &bump(), &d).unwrap();
    let r = solve_near_prediction(&op, 1, inv()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.mstp");
    dump_eigenvector(&path, &r, 0).unwrap();
    let (ns, nt, vals) = read_mstp(&mut std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!((ns, nt), (d.n_s + 1, d.n_t + 1));
    for (a, b) in vals.iter().zip(r.full_grid(0)) {
        assert!((a - b).norm() <= 1e-6 * b.norm().max(1.0));
    }
    let json: serde_json::Value = serde_json::from_str(&summary_json(&r).unwrap()).unwrap();
    assert_eq!(json["h"], h);
    assert!(json["stats"]["residuals"].is_array());
    let _ = C64::new(0.0, 0.0);
}

#[test]
fn fit_recovers_planted_coefficients() {
    let planted = [0.5, -0.1, 0.3];
    let samples: Vec<EigenSample> = [2e-2f64, 1e-2, 5e-3]
        .iter()
        .map(|&h| EigenSample {
            h,
            lambdas: vec![planted[0] * h + planted[1] * h.powf(1.5) + planted[2] * h.powf(1.75)],
        })
        .collect();
    let pred = PredictedConstants::new(inv(), &bump());
    let rep = fit_asymptotics(&samples, &pred).unwrap();
    for (x, y) in rep.fitted.iter().zip(planted) {
        assert!((x - y).abs() <= 1e-10);
    }
    let q = bump().k2 * inv().m3 * inv().c2;
    assert_eq!(pred.third, (q / 2.0).sqrt());
    assert!((pred.gap - 2.0 * pred.third).abs() < 1e-15);
}
