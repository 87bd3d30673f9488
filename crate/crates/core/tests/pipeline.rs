//! End-to-end runs of the public API on coarse grids.

use hball_core::balayage::{compare_oracle, sandpile, MeasureSpec};
use hball_core::balls::{
    check_monotonicity, check_positivity, compute_ball, default_probes,
    verify_field_characterization, verify_mean_value_with, verify_subharmonic_inequality_with,
};
use hball_core::greens::{GreenEvaluator, GreenMode};
use hball_core::grid::{build_domain_mask, integrate, DomainSpec, RegionMask};
use hball_core::twophase::{null_quadrature_pair, verify_quadrature_identity};
use hball_core::{GridSpec, Point};
use proptest::prelude::*;

fn disc_domain() -> hball_core::grid::DomainMask {
    let g = GridSpec::from_box(-1.0, 1.0, -1.0, 1.0, 0.02).unwrap();
    build_domain_mask(
        g,
        DomainSpec::Disc {
            center: Point::new(0.0, 0.0),
            radius: 0.9,
        },
    )
    .unwrap()
}

#[test]
fn disc_domain_contact_ball_balances_mass() {
    let mask = disc_domain();
    let x0 = Point::new(0.65, 0.0);
    let ball = compute_ball(&mask, x0, 0.3).unwrap();
    assert!(verify_field_characterization(&ball).pass());
    let nu = &ball.balayage.nu;
    assert!(
        nu.total > 0.0,
        "ball of area 0.3 centered 0.25 from the edge must touch it"
    );
    let pos = check_positivity(&ball);
    assert!(pos.get("nu_nonnegative").unwrap().pass);
    // the discrete balayage conserves mass exactly; ω alone misses the partial-fill layer
    let b: f64 = ball.balayage.b.values().iter().sum::<f64>() * 0.02 * 0.02;
    assert!((b + nu.total - 0.3).abs() < 1e-9 * 0.3);
}

#[test]
fn disc_domain_green_matches_numeric_and_mean_value_is_close() {
    let mask = disc_domain();
    let ball = compute_ball(&mask, Point::new(0.0, 0.3), 0.1).unwrap();
    let analytic = GreenEvaluator::new(&mask, GreenMode::Analytic).unwrap();
    let numeric = GreenEvaluator::new(&mask, GreenMode::Numeric).unwrap();
    let probes = default_probes(&ball, 8);
    assert!(!probes.is_empty());
    for &p in &probes {
        let a = analytic.eval(Point::new(0.0, 0.3), p).unwrap();
        let n = numeric.eval(Point::new(0.0, 0.3), p).unwrap();
        assert!((a - n).abs() < 0.05 * a.abs(), "{p:?}: {a} vs {n}");
    }
    // at h = 0.02 the residual is dominated by the O(h) area deficit
    let r = verify_mean_value_with(&ball, &probes, &analytic, 0.1).unwrap();
    assert!(r.pass(), "{:?}", r.get("mean_value_max"));
    let s = verify_subharmonic_inequality_with(&ball, &[Point::new(0.0, 0.4)], &analytic, 0.01)
        .unwrap();
    assert!(s.pass());
}

#[test]
fn sandpile_reproduces_obstacle_solution() {
    let g = GridSpec::from_box(-0.5, 0.5, 0.0, 0.5, 0.01).unwrap();
    let mask = build_domain_mask(g, DomainSpec::HalfPlane { offset: 0.0 }).unwrap();
    let mu = MeasureSpec::point_mass(Point::new(0.03, 0.08), 0.05);
    let ball = compute_ball(&mask, Point::new(0.03, 0.08), 0.05).unwrap();
    let sand = sandpile(&mask, &mu).unwrap();
    assert!(compare_oracle(&ball.balayage, &sand, 5.0).unwrap().pass());
}

#[test]
fn null_pair_square_moments_vanish() {
    let g = GridSpec::from_box(-1.0, 1.0, -1.0, 1.0, 0.02).unwrap();
    let mask = build_domain_mask(g, DomainSpec::WholePlaneBox).unwrap();
    let dplus = RegionMask::from_points(g, |p| p.x.abs() < 0.4 && p.y.abs() < 0.4);
    let tp = null_quadrature_pair(&mask, &dplus).unwrap();
    let r = verify_quadrature_identity(&tp, 4).unwrap();
    for k in 1..=4 {
        assert!(r.get(&format!("quadrature_k{k}")).unwrap().pass, "k={k}");
    }
    let (ap, am) = (integrate(&tp.d_plus), integrate(&tp.d_minus));
    // D₋ is short by the partial-fill layer outside ω, about 0.4 h per unit length
    let outer = 2.0 * std::f64::consts::PI * (2.0 * ap / std::f64::consts::PI).sqrt();
    assert!(am < ap && ap - am < 0.5 * 0.02 * outer, "{ap} vs {am}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn balls_are_nonnegative_and_nested(x in -0.2f64..0.2, y in 0.06f64..0.3, a in 0.01f64..0.06, grow in 1.2f64..2.0) {
        let g = GridSpec::from_box(-0.6, 0.6, 0.0, 0.7, 0.02).unwrap();
        let mask = build_domain_mask(g, DomainSpec::HalfPlane { offset: 0.0 }).unwrap();
        let x0 = Point::new(x, y);
        let small = compute_ball(&mask, x0, a).unwrap();
        let large = compute_ball(&mask, x0, a * grow).unwrap();
        prop_assert!(small.balayage.u.min() >= -1e-12 * small.balayage.u.max());
        prop_assert!(small.omega().is_subset_of(small.omega_big()));
        prop_assert!(small.balayage.nu.min_weight() >= -1e-12 * a);
        prop_assert!(check_monotonicity(&small, &large).unwrap().pass());
        prop_assert!(large.area() + large.balayage.nu.total <= a * grow * (1.0 + 1e-9));
    }
}
