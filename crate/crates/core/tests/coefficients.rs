mod support;

use std::f64::consts::PI;

use confined_diffusion::coefficients::*;
use confined_diffusion::Error;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn oracle_hs() -> Vec<f64> {
    // 20 widths covering every branch, including values close to breakpoints.
    vec![
        0.02, 0.1, 0.25, 0.4, 0.55, 0.6, 0.62, 0.65, 0.69, 0.72, 0.8, 0.9, 0.99, 1.01, 1.2, 1.5, 2.0, 3.5, 7.0, 20.0,
    ]
}

#[test]
fn nc2_matches_surface_quadrature() {
    for h in oracle_hs() {
        let a = alpha(&Geometry::nc2(h).unwrap()).unwrap();
        let o = support::alpha_nc2_oracle(h);
        assert!(rel(a, o) < 1e-3, "h={h}: {a} vs {o}");
    }
}

#[test]
fn nc3_matches_surface_quadrature() {
    for h in oracle_hs() {
        let a = alpha(&Geometry::nc3(h).unwrap()).unwrap();
        let o = support::alpha_rect_oracle(h, h);
        assert!(rel(a, o) < 1e-3, "h={h}: {a} vs {o}");
    }
}

#[test]
fn pp_matches_surface_quadrature() {
    for h in oracle_hs() {
        let a = alpha(&Geometry::pp(h).unwrap()).unwrap();
        let o = support::alpha_pp_oracle(h);
        assert!(rel(a, o) < 1e-3, "h={h}: {a} vs {o}");
    }
}

#[test]
fn rect_matches_surface_quadrature() {
    for (h, m) in [(0.3, 1.5), (0.8, 1.2), (0.5, 3.0), (1.4, 2.0), (2.5, 4.0)] {
        let a = alpha(&Geometry::rect(h, m).unwrap()).unwrap();
        let o = support::alpha_rect_oracle(h, m);
        assert!(rel(a, o) < 1e-3, "h={h} m={m}: {a} vs {o}");
    }
}

#[test]
fn rect_wide_side_recovers_plates() {
    let a = alpha(&Geometry::rect(0.8, 1e3).unwrap()).unwrap();
    let pp = alpha(&Geometry::pp(0.8).unwrap()).unwrap();
    assert!(rel(a * 1e3, pp) < 1e-3);
}

#[test]
fn limits_at_zero_width() {
    assert_eq!(alpha(&Geometry::nc2(0.0).unwrap()).unwrap(), 2.0);
    assert_eq!(alpha(&Geometry::nc3(0.0).unwrap()).unwrap(), 2.0);
    assert_eq!(alpha(&Geometry::pp(0.0).unwrap()).unwrap(), PI);
}

#[test]
fn wide_channel_asymptotes() {
    for h in [1e3, 1e6] {
        let nc2 = alpha(&Geometry::nc2(h).unwrap()).unwrap() * h;
        let nc3 = alpha(&Geometry::nc3(h).unwrap()).unwrap() * h * h;
        let pp = alpha(&Geometry::pp(h).unwrap()).unwrap() * h;
        let tol = if h == 1e6 { 1e-4 } else { 2e-3 };
        assert!(rel(nc2, PI) < tol);
        assert!(rel(nc3, 4.0 * PI / 3.0) < tol);
        assert!(rel(pp, 4.0 * PI / 3.0) < tol);
    }
}

#[test]
fn branch_continuity() {
    for case in [Case::Nc2, Case::Nc3, Case::Pp] {
        for j in branch_jumps(case) {
            assert!(j.size() < 1e-10, "{case:?} at {}: {} vs {}", j.at, j.below, j.above);
        }
    }
}

#[test]
fn positive_on_log_grid() {
    for case in [Case::Nc2, Case::Nc3, Case::Pp] {
        for k in 0..=240 {
            let h = 10f64.powf(-6.0 + k as f64 * 0.05);
            let a = alpha(&Geometry::new(case, h, h).unwrap()).unwrap();
            assert!(a > 0.0 && a.is_finite(), "{case:?} h={h}: {a}");
        }
    }
}

#[test]
fn g_has_single_interior_maximum() {
    for case in [Case::Nc2, Case::Nc3, Case::Pp] {
        let gs: Vec<f64> = (1..=4000)
            .map(|k| g_coefficient(&Geometry::new(case, k as f64 * 0.025, k as f64 * 0.025).unwrap()).unwrap())
            .collect();
        let peak = gs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(peak > 0 && peak < gs.len() - 1);
        assert!(gs[..=peak].windows(2).all(|w| w[1] > w[0]), "{case:?} not increasing before the peak");
        assert!(gs[peak..].windows(2).all(|w| w[1] < w[0]), "{case:?} not decreasing after the peak");
    }
}

#[test]
fn optimal_widths() {
    for (case, expected) in [(Case::Nc2, 1.47), (Case::Nc3, 1.28), (Case::Pp, 1.2)] {
        let opt = optimal_h(case).unwrap();
        assert!((opt.h_star - expected).abs() <= 0.01, "{case:?}: {}", opt.h_star);
        let g = |h: f64| g_coefficient(&Geometry::new(case, h, h).unwrap()).unwrap();
        assert!(opt.g_max >= g(opt.h_star - 1e-3) && opt.g_max >= g(opt.h_star + 1e-3));
    }
}

#[test]
fn subdivision_gains() {
    let nc2 = subdivision_gain(Case::Nc2, 4.0, 2).unwrap();
    assert!((nc2 - 0.07).abs() <= 0.01, "{nc2}");
    let nc3 = subdivision_gain(Case::Nc3, 3.6, 4).unwrap();
    assert!((nc3 - 0.19).abs() <= 0.01, "{nc3}");
    assert_eq!(subdivision_gain(Case::Nc2, 4.0, 1).unwrap(), 0.0);
    assert!(matches!(subdivision_gain(Case::Nc2, 0.5, 2), Err(Error::Infeasible(_))));
}

#[test]
fn channel_example_numbers() {
    let b = bundle(&Geometry::nc2(3.0).unwrap(), 30, 0.01).unwrap();
    assert!((b.phi - 0.0589).abs() <= 0.0005, "{}", b.phi);
    assert!((b.g - 4.58).abs() <= 0.05, "{}", b.g);
    assert!((b.excluded_volume - b.alpha * 3.0).abs() < 1e-15);
}

#[test]
fn wide_channel_g_tends_to_four() {
    let g = g_coefficient(&Geometry::nc2(1e6).unwrap()).unwrap();
    assert!((g - 4.0).abs() < 1e-4);
}

#[test]
fn zero_width_g() {
    let b = bundle(&Geometry::nc2(0.0).unwrap(), 1, 1e-9).unwrap();
    assert!((b.g - 8.0 / PI).abs() < 1e-12);
    assert!(b.phi < 1e-8);
}

#[test]
fn domain_errors() {
    assert!(matches!(Geometry::nc2(-0.1), Err(Error::Domain(_))));
    assert!(matches!(Geometry::rect(1.0, 0.0), Err(Error::Domain(_))));
    assert!(matches!(bundle(&Geometry::nc2(1.0).unwrap(), 1000, 0.1), Err(Error::DiluteRegime { .. })));
}

proptest! {
    #[test]
    fn bundle_entries_are_finite_and_nonnegative(h in 0.0f64..50.0, n in 1usize..100, eps in 1e-5f64..1e-3) {
        for geom in [Geometry::nc2(h).unwrap(), Geometry::nc3(h).unwrap(), Geometry::pp(h).unwrap()] {
            let b = bundle(&geom, n, eps).unwrap();
            for v in [b.alpha, b.g, b.phi, b.excluded_volume] {
                prop_assert!(v.is_finite() && v >= 0.0);
            }
            prop_assert!(b.phi < 1.0);
        }
    }

    #[test]
    fn rect_is_symmetric_in_its_sides(h in 0.05f64..5.0, m in 0.05f64..5.0) {
        prop_assume!(h.max(m) >= 1.0);
        let a = alpha(&Geometry::rect(h, m).unwrap()).unwrap();
        let b = alpha(&Geometry::rect(m, h).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn fraction_round_trips(h in 0.0f64..10.0, n in 2usize..200, phi in 1e-3f64..0.3) {
        let geom = Geometry::nc2(h).unwrap();
        let eps = diameter_for_fraction(&geom, n, phi);
        prop_assert!((volume_fraction(&geom, n, eps) - phi).abs() < 1e-12);
    }
}
