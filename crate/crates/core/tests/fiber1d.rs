use magstep_core::fiber1d::*;
use magstep_core::invariants::find_zeta;
use proptest::prelude::*;
use serde_json::Value;

fn fixture() -> Value {
    serde_json::from_str(include_str!("fixtures/dense_oracle.json")).unwrap()
}

fn standard_point(a: f64, xi: f64) -> BandPoint {
    band_value(&FiberParams::new(a, xi).unwrap(), &Grid1D::standard()).unwrap()
}

#[test]
fn potential_is_the_squared_momentum_shift() {
    let g = Grid1D::new(4.0, 9).unwrap();
    let kin = 2.0 / (g.step() * g.step());
    for (a, xi) in [(1.0, 0.0), (-1.0, 0.0), (-0.5, 1.0)] {
        let t = build_fiber_operator(&FiberParams::new(a, xi).unwrap(), &g);
        for (k, d) in t.diag().iter().enumerate() {
            let tau = g.node(k + 1);
            let w = xi + field_profile(a, tau) * tau;
            assert!((d - kin - w * w).abs() < 1e-12);
        }
    }
    // a = −0.5, ξ = 1 at τ = −2 (node 1 of the interior).
    let t = build_fiber_operator(&FiberParams::new(-0.5, 1.0).unwrap(), &g);
    assert!((t.diag()[1] - kin - 4.0).abs() < 1e-12);
    // a = −1 is even in τ.
    let t = build_fiber_operator(&FiberParams::new(-1.0, 0.0).unwrap(), &g);
    let d = t.diag();
    assert!(d.iter().zip(d.iter().rev()).all(|(x, y)| (x - y).abs() < 1e-12));
}

#[test]
fn uniform_field_gives_the_lowest_landau_level() {
    for xi in [-1.0, 0.0, 1.0] {
        let bp = standard_point(1.0, xi);
        assert!((bp.mu - 1.0).abs() < 5e-4, "xi {xi}: {}", bp.mu);
        assert!(bp.mu_prime.abs() < 1e-5);
    }
}

#[test]
fn antisymmetric_field_minimum_is_the_de_gennes_value() {
    let (xi0, theta) = find_zeta(-1.0, &Grid1D::standard()).unwrap();
    let bp = standard_point(-1.0, -theta.sqrt());
    assert!((bp.mu - 0.59).abs() < 1e-3, "{}", bp.mu);
    assert!((xi0 + theta.sqrt()).abs() < 1e-3);
}

#[test]
fn band_value_matches_dense_oracle() {
    let f = fixture();
    let bp = standard_point(-0.5, -0.8);
    let want = f["mu_at_minus_0_8"].as_f64().unwrap();
    assert!((bp.mu - want).abs() < 1e-10, "{} vs {want}", bp.mu);
}

#[test]
fn derivative_formulas_agree() {
    let g = Grid1D::standard();
    let p = FiberParams::new(-0.5, -0.8).unwrap();
    let bp = band_value(&p, &g).unwrap();
    let boundary = band_derivative_boundary(&bp, &p, &g);
    assert!((bp.mu_prime - boundary).abs() < 1e-4, "{} vs {boundary}", bp.mu_prime);
    let d = 1e-4;
    let e = |x: f64| band_energy(&FiberParams::new(-0.5, x).unwrap(), &g);
    let fd = (e(-0.8 + d) - e(-0.8 - d)) / (2.0 * d);
    assert!((bp.mu_prime - fd).abs() < 1e-5, "{} vs {fd}", bp.mu_prime);
    let oracle = fixture()["mu_prime_fd_at_minus_0_8"].as_f64().unwrap();
    assert!((fd - oracle).abs() < 1e-6);
}

#[test]
fn derivative_vanishes_at_the_band_minimum() {
    let g = Grid1D::standard();
    let (zeta, _) = find_zeta(-0.5, &g).unwrap();
    assert!(standard_point(-0.5, zeta).mu_prime.abs() < 1e-5);
}

#[test]
fn sweeps_have_the_expected_shape() {
    let g = Grid1D::new(20.0, 2001).unwrap();
    let flat = band_sweep(1.0, -1.0, 1.0, 5, &g).unwrap();
    assert!(flat.iter().all(|b| (b.mu - 1.0).abs() < 2e-3));

    let well = band_sweep(-0.5, -2.0, 0.0, 41, &g).unwrap();
    let changes = well.windows(2).filter(|w| w[0].mu_prime.signum() != w[1].mu_prime.signum()).count();
    assert_eq!(changes, 1);

    let ramp = band_sweep(0.5, -1.0, 3.0, 21, &g).unwrap();
    // Decreasing toward a; the plateau sits O(step²) below it.
    assert!(ramp.windows(2).all(|w| w[1].mu <= w[0].mu + 1e-9));
    assert!(ramp.iter().all(|b| b.mu > 0.5 - 1e-4));
    assert!(ramp.last().unwrap().mu - 0.5 < 0.05);
    assert!(band_sweep(0.5, 1.0, 0.0, 5, &g).is_err());
}

#[test]
fn symmetric_fiber_agrees_with_the_neumann_half_line() {
    let g = Grid1D::standard();
    for xi in [-1.2, -0.77, -0.3, 0.4] {
        let full = band_energy(&FiberParams::new(-1.0, xi).unwrap(), &g);
        let half = neumann_half_line_energy(xi, 20.0, 4000).unwrap();
        assert!((full - half).abs() < 1e-4, "xi {xi}: {full} vs {half}");
    }
}

#[test]
fn second_order_convergence_under_grid_doubling() {
    let p = FiberParams::new(-0.5, -0.8).unwrap();
    let mu: Vec<f64> = [1001, 2001, 4001]
        .iter()
        .map(|&n| band_energy(&p, &Grid1D::new(20.0, n).unwrap()))
        .collect();
    let factor = (mu[0] - mu[1]) / (mu[1] - mu[2]);
    assert!((3.5..=4.5).contains(&factor), "{factor}");
}

#[test]
fn truncation_length_is_irrelevant() {
    let p = FiberParams::new(-0.5, -0.8).unwrap();
    let short = band_energy(&p, &Grid1D::new(15.0, 3001).unwrap());
    let long = band_energy(&p, &Grid1D::new(20.0, 4001).unwrap());
    assert!((short - long).abs() <= 1e-9, "{short} vs {long}");
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(Grid1D::new(10.0, 100).is_err());
    assert!(Grid1D::new(-1.0, 101).is_err());
    assert!(Grid1D::new(10.0, 1).is_err());
    assert!(FiberParams::new(1.5, 0.0).is_err());
    assert!(FiberParams::new(-0.5, f64::NAN).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ground_state_is_positive_and_normalized(a in -1.0f64..-0.05, xi in -2.0f64..0.5) {
        let g = Grid1D::new(12.0, 1201).unwrap();
        let bp = band_value(&FiberParams::new(a, xi).unwrap(), &g).unwrap();
        prop_assert!(bp.mu > 0.0);
        prop_assert!(bp.phi[1..g.n_points - 1].iter().all(|&v| v > 0.0));
        prop_assert!((g.inner(&bp.phi, &bp.phi) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn band_energy_lies_between_field_strengths(a in -0.95f64..-0.05, xi in -2.0f64..0.0) {
        // Below: μ ≥ β_a > |a|Θ₀. Above: a Landau trial state centred at −ξ ≥ 0
        // sees a potential no larger than in the uniform field.
        let g = Grid1D::new(12.0, 801).unwrap();
        let mu = band_energy(&FiberParams::new(a, xi).unwrap(), &g);
        prop_assert!(mu > 0.59 * a.abs() - 1e-2);
        prop_assert!(mu < 1.0 + 1e-2);
    }
}
