use magstep_core::fiber1d::*;
use magstep_core::invariants::*;
use proptest::prelude::*;
use serde_json::Value;
use std::sync::OnceLock;

fn fixture() -> Value {
    serde_json::from_str(include_str!("fixtures/dense_oracle.json")).unwrap()
}

fn half() -> &'static SpectralInvariants {
    static INV: OnceLock<SpectralInvariants> = OnceLock::new();
    INV.get_or_init(|| SpectralInvariants::compute(-0.5, &Grid1D::standard()).unwrap())
}

fn theta0() -> f64 {
    let g = Grid1D::standard();
    richardson(de_gennes(&g).unwrap(), de_gennes(&g.refined()).unwrap())
}

#[test]
fn band_minimum_matches_dense_oracle() {
    let f = fixture();
    let (zeta, beta) = find_zeta(-0.5, &Grid1D::standard()).unwrap();
    assert!((zeta - f["zeta"].as_f64().unwrap()).abs() < 2e-6, "{zeta}");
    assert!((beta - f["beta"].as_f64().unwrap()).abs() < 1e-10, "{beta}");
}

#[test]
fn second_fiber_eigenvalue_matches_dense_oracle() {
    let f = fixture();
    let p = FiberParams::new(-0.5, f["zeta"].as_f64().unwrap()).unwrap();
    let t = build_fiber_operator(&p, &Grid1D::standard());
    let pairs = magstep_linalg::tridiag_smallest(&t, 2, 1e-12).unwrap();
    assert!((pairs[1].value - f["lambda2_at_zeta"].as_f64().unwrap()).abs() < 1e-10);
}

#[test]
fn symmetric_minimum_sits_at_minus_sqrt_beta() {
    let e = Extrapolated::compute(-1.0, &Grid1D::standard()).unwrap();
    assert!((e.beta - 0.59).abs() < 1e-3);
    assert!((e.zeta + 0.768).abs() < 1e-3);
    assert!((e.zeta + e.beta.sqrt()).abs() < 1e-6, "{} vs {}", e.zeta, -e.beta.sqrt());
}

#[test]
fn minimum_is_stationary_and_convex() {
    let inv = half();
    let bp = band_value(&FiberParams::new(-0.5, inv.zeta_a).unwrap(), &inv.grid).unwrap();
    assert!(bp.mu_prime.abs() <= 1e-8, "{}", bp.mu_prime);
    assert!(inv.mu_second > 0.0);
}

#[test]
fn structural_signs_and_bounds() {
    let inv = half();
    let th = theta0();
    assert!(inv.zeta_a < 0.0);
    assert!(0.5 * th < inv.beta_a && inv.beta_a < 0.5f64.min(th));
    assert!(inv.m3 < 0.0);
    assert!(inv.c2 > 0.0);
    assert!(inv.dphi0 < 0.0);
    assert!((inv.c2 - inv.mu_second / 2.0).abs() < 1e-3);
}

#[test]
fn zeta_boundary_identity() {
    let inv = half();
    let r = inv.dphi0 / inv.phi0;
    assert!((inv.zeta_a + (inv.beta_a + r * r).sqrt()).abs() <= 1e-3);
}

#[test]
fn odd_moments() {
    let inv = half();
    let e = Extrapolated::compute(-0.5, &Grid1D::standard()).unwrap();
    assert!(e.m1.abs() <= 1e-6, "{}", e.m1);
    // Unextrapolated, M₁ carries the O(step²) quadrature error only.
    assert!(moment(1, inv).abs() <= 1e-4);
    let sym = SpectralInvariants::compute(-1.0, &Grid1D::standard()).unwrap();
    assert!(sym.m3.abs() <= 1e-6);
    assert!((inv.m3 - closed_forms(inv).m3).abs() <= 1e-5);
}

#[test]
fn second_moment_closed_form_from_the_eigenvalue_equation() {
    let inv = half();
    assert!((inv.m2 - closed_forms(inv).m2_derived).abs() <= 1e-5);
}

#[test]
fn moment_identities_hold() {
    let id = moment_identities(half());
    assert!(id.tau_w.abs() <= 1e-5);
    assert!(id.orthogonality.abs() <= 1e-6);
    for r in id.derived() {
        assert!(r.abs() <= 1e-4, "{:?}", id.derived());
    }
}

#[test]
fn printed_virial_variant_is_off_by_zeta_m2() {
    // The two right-hand sides differ by ζM₂; the quadrature sides coincide.
    let inv = half();
    let id = moment_identities(inv);
    let gap = id.tau_dphi2_printed - id.tau_dphi2_derived;
    assert!((gap + inv.zeta_a * inv.m2).abs() < 1e-12);
    assert!(gap.abs() > 0.1);
}

#[test]
fn resolvent_of_the_ground_state_vanishes() {
    let inv = half();
    let v = resolvent_apply(inv, &inv.phi_a).unwrap();
    assert!(v.iter().all(|x| *x == 0.0));
}

#[test]
fn resolvent_solves_the_constrained_problem() {
    let inv = half();
    let u: Vec<f64> = inv.w_profile().iter().zip(&inv.phi_a).map(|(w, p)| w * p).collect();
    let r = Resolvent::new(inv);
    let v = r.apply(&u).unwrap();
    assert!(inv.inner(&v, &inv.phi_a).abs() <= 1e-12);
    let res: Vec<f64> = r.operator_apply(&v).iter().zip(&u).map(|(a, b)| a - b).collect();
    assert!(inv.norm(&res) <= 1e-8, "{}", inv.norm(&res));
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tail = inv
        .nodes()
        .iter()
        .zip(&v)
        .filter(|(t, _)| t.abs() >= 10.0)
        .fold(0.0f64, |m, (_, x)| m.max(x.abs()));
    assert!(tail <= 1e-6 * vmax, "{tail} vs {vmax}");
}

#[test]
fn i2_matches_dense_oracle() {
    let inv = half();
    let (i2, c2) = compute_i2_c2(inv).unwrap();
    assert!((i2 - fixture()["i2"].as_f64().unwrap()).abs() <= 1e-6, "{i2}");
    assert!((c2 - (1.0 - 4.0 * i2)).abs() < 1e-15);
    assert!((2.0 * c2 - inv.mu_second).abs() <= 2e-3);
}

#[test]
fn symmetric_curvature_matches_the_neumann_solver() {
    let sym = SpectralInvariants::compute(-1.0, &Grid1D::standard()).unwrap();
    let (_, xi0) = neumann_de_gennes(20.0, 4000).unwrap();
    let e = |x: f64| neumann_half_line_energy(x, 20.0, 4000).unwrap();
    let d = 1e-3;
    let d2 = |d: f64| (e(xi0 + d) - 2.0 * e(xi0) + e(xi0 - d)) / (d * d);
    let neumann = richardson(d2(d), d2(d / 2.0));
    assert!((2.0 * sym.c2 - neumann).abs() <= 1e-3, "{} vs {neumann}", 2.0 * sym.c2);
}

#[test]
fn corrector_is_admissible_and_solves_its_equation() {
    let inv = half();
    assert!(inv.inner(&inv.phi_cor, &inv.phi_a).abs() <= 1e-10);
    let src = phi_cor_source(inv);
    assert!(inv.inner(&src, &inv.phi_a).abs() <= 1e-5);
    let r = Resolvent::new(inv);
    // (h − β)φ_cor = −(source projected off φ).
    let psrc = r.project_out(&src);
    let res: Vec<f64> = r.operator_apply(&inv.phi_cor).iter().zip(&psrc).map(|(a, b)| a + b).collect();
    assert!(inv.norm(&res) <= 1e-7, "{}", inv.norm(&res));
}

#[test]
fn weighted_model_without_curvature_is_the_fiber() {
    let g = Grid1D::standard();
    let inv = half();
    let p = WeightedModelParams::with_radius(1.0, 0.0, 0.0, 1e-4, 1.0 / 16.0, g.half_length).unwrap();
    assert!((weighted_op_lambda1(&p, inv).unwrap() - 1.0).abs() < 5e-4);

    let p = WeightedModelParams::with_radius(-0.5, inv.zeta_a, 0.0, 1e-4, 1.0 / 16.0, g.half_length).unwrap();
    let l = weighted_op_lambda1(&p, inv).unwrap();
    assert!((l - inv.beta_a).abs() <= 1e-6 * inv.beta_a);
}

#[test]
fn weighted_expansion_error_is_order_h() {
    let inv = half();
    let margin = |h: f64| {
        let r = numerical_radius(1.0, h, inv.grid.half_length);
        let p = WeightedModelParams::with_radius(-0.5, inv.zeta_a, 1.0, h, 1.0 / 16.0, r).unwrap();
        weighted_op_lambda1(&p, inv).unwrap() - inv.beta_a - inv.m3 * h.sqrt()
    };
    let c = 2.0 * margin(1e-3).abs() / 1e-3;
    assert!(margin(1e-4).abs() <= c * 1e-4);
}

#[test]
fn curvature_lowers_the_weighted_energy() {
    let inv = half();
    let lam = |kappa: f64| {
        let r = numerical_radius(kappa, 1e-4, inv.grid.half_length);
        let p = WeightedModelParams::with_radius(-0.5, inv.zeta_a, kappa, 1e-4, 1.0 / 16.0, r).unwrap();
        weighted_op_lambda1(&p, inv).unwrap()
    };
    assert!(lam(1.0) < lam(-1.0));
}

#[test]
fn weighted_lower_bound_regimes() {
    let inv = half();
    let near = weighted_lower_bound_check(&[-1e-2, 1e-2], inv, 1.0, 1e-6, 1.0 / 16.0).unwrap();
    for g in &near.growth {
        assert!((g / inv.c2 - 1.0).abs() <= 0.1, "{g} vs {}", inv.c2);
    }
    let far = weighted_lower_bound_check(&[1.0], inv, 1.0, 1e-4, 1.0 / 16.0).unwrap();
    assert!(far.lambdas[0] >= inv.beta_a + 0.01);
    let full = weighted_lower_bound_check(&default_offsets(7), inv, 1.0, 1e-4, 1.0 / 16.0).unwrap();
    assert!(full.min_margin >= -full.calibrated_c * 1e-4 - 1e-15);
    assert!(full.calibrated_c < 10.0, "{}", full.calibrated_c);
}

#[test]
fn weighted_parameters_are_validated() {
    assert!(WeightedModelParams::with_delta(-0.5, -0.66, 1.0, 1e-4, 0.2).is_err());
    assert!(WeightedModelParams::with_radius(-0.5, -0.66, 1.0, 0.5, 1.0 / 16.0, 20.0).is_err());
}

#[test]
fn cache_roundtrip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid1D::new(12.0, 801).unwrap();
    let (first, hit) = load_or_compute(-0.5, &g, dir.path()).unwrap();
    assert!(!hit);
    let path = cache_path(dir.path(), -0.5, &g);
    let bytes = std::fs::read(&path).unwrap();
    let (second, hit) = load_or_compute(-0.5, &g, dir.path()).unwrap();
    assert!(hit);
    assert_eq!(first, second);
    assert_eq!(to_json(&second).unwrap().as_bytes(), &bytes[..]);
}

#[test]
fn cache_rejects_foreign_documents() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid1D::new(12.0, 801).unwrap();
    let (inv, _) = load_or_compute(-0.5, &g, dir.path()).unwrap();
    let path = cache_path(dir.path(), -0.5, &g);
    let mut doc: Value = serde_json::from_str(&to_json(&inv).unwrap()).unwrap();
    doc["surprise"] = Value::from(1);
    std::fs::write(&path, doc.to_string()).unwrap();
    assert!(read_cache(&path).is_err());
    doc.as_object_mut().unwrap().remove("surprise");
    doc["schema_version"] = Value::from(CACHE_SCHEMA_VERSION + 1);
    std::fs::write(&path, doc.to_string()).unwrap();
    assert!(read_cache(&path).is_err());
    // A stale entry is recomputed, not trusted.
    let (again, hit) = load_or_compute(-0.5, &g, dir.path()).unwrap();
    assert!(!hit);
    assert_eq!(again, inv);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn beta_lies_strictly_between_its_bounds(a in -0.9f64..-0.2) {
        let g = Grid1D::new(14.0, 1401).unwrap();
        let th = de_gennes(&g).unwrap();
        let (zeta, beta) = find_zeta(a, &g).unwrap();
        prop_assert!(zeta < 0.0);
        prop_assert!(a.abs() * th < beta && beta < a.abs().min(th));
    }

    #[test]
    fn resolvent_range_is_orthogonal_to_the_ground_state(
        c in proptest::collection::vec(-1.0f64..1.0, 4),
    ) {
        let inv = half();
        let u: Vec<f64> = inv
            .nodes()
            .iter()
            .map(|t| (c[0] + c[1] * t + c[2] * t * t + c[3] * (3.0 * t).sin()) * (-0.1 * t * t).exp())
            .collect();
        let v = resolvent_apply(inv, &u).unwrap();
        prop_assert!(inv.inner(&v, &inv.phi_a).abs() <= 1e-10);
    }
}
