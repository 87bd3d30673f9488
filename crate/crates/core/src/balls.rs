//! Subharmonic balls `D(x0, α) = ω(K, α δ_{x0})` and their verification checks.

use serde::{Deserialize, Serialize};

use crate::balayage::{solve_obstacle_with, BalayageResult, MeasureSpec, ObstacleOptions};
use crate::error::{Error, Result};
use crate::greens::{GreenColumn, GreenEvaluator};
use crate::grid::{integrate, is_starshaped, DomainMask, DomainSpec, Point, RegionMask};
use crate::report::CheckReport;

#[derive(Clone, Debug)]
pub struct BallResult {
    pub center: Point,
    pub alpha: f64,
    pub balayage: BalayageResult,
    pub mask: DomainMask,
}

impl BallResult {
    pub fn omega(&self) -> &RegionMask {
        &self.balayage.omega
    }

    pub fn omega_big(&self) -> &RegionMask {
        &self.balayage.omega_big
    }

    pub fn area(&self) -> f64 {
        integrate(&self.balayage.omega)
    }

    /// Largest distance from the center to a node of `ω`.
    pub fn radius(&self) -> f64 {
        let g = self.mask.grid();
        self.omega()
            .members()
            .map(|k| g.point(k).dist(self.center))
            .fold(0.0, f64::max)
    }
}

pub fn compute_ball(mask: &DomainMask, x0: Point, alpha: f64) -> Result<BallResult> {
    compute_ball_with(mask, x0, alpha, &ObstacleOptions::default())
}

pub fn compute_ball_with(
    mask: &DomainMask,
    x0: Point,
    alpha: f64,
    opts: &ObstacleOptions,
) -> Result<BallResult> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidMeasure(format!(
            "ball size {alpha} must be > 0"
        )));
    }
    let balayage = solve_obstacle_with(mask, &MeasureSpec::point_mass(x0, alpha), opts)?;
    Ok(BallResult {
        center: x0,
        alpha,
        balayage,
        mask: mask.clone(),
    })
}

/// Tolerances of the verification suite. Field tolerances are relative to
/// `max u` (or `α` for complementarity); the rest are relative errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyTolerances {
    pub negativity: f64,
    pub off_ball: f64,
    pub complementarity: f64,
    pub mean_value: f64,
    pub subharmonic: f64,
    pub nu_negativity: f64,
    pub mass: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self {
            negativity: 1e-12,
            off_ball: 1e-6,
            complementarity: 1e-8,
            mean_value: 0.01,
            subharmonic: 0.01,
            nu_negativity: 1e-12,
            mass: 0.01,
        }
    }
}

pub fn verify_field_characterization(ball: &BallResult) -> CheckReport {
    verify_field_characterization_with(ball, &VerifyTolerances::default())
}

/// `u >= 0` on `K`, `u = 0` on `K \ ω` away from `∂ω`, and complementarity.
pub fn verify_field_characterization_with(
    ball: &BallResult,
    tol: &VerifyTolerances,
) -> CheckReport {
    let mask = &ball.mask;
    let u = &ball.balayage.u;
    let scale = u.max().max(f64::MIN_POSITIVE);
    let interior: Vec<usize> = (0..mask.grid().len())
        .filter(|&k| mask.is_interior(k))
        .collect();

    let floor = -tol.negativity * scale;
    let min_u = interior
        .iter()
        .map(|&k| u.get(k))
        .fold(f64::INFINITY, f64::min);
    let negative: Vec<usize> = interior
        .iter()
        .copied()
        .filter(|&k| u.get(k) < floor)
        .collect();

    // Manhattan radius 2 covers every node closer than 2h
    let near = ball.omega().dilate().dilate();
    let far: Vec<usize> = interior
        .iter()
        .copied()
        .filter(|&k| !near.contains(k))
        .collect();
    let off_max = far.iter().map(|&k| u.get(k).abs()).fold(0.0, f64::max) / scale;
    let off_bad: Vec<usize> = far
        .iter()
        .copied()
        .filter(|&k| u.get(k).abs() > tol.off_ball * scale)
        .collect();

    let comp = ball.balayage.complementarity_residual(mask) / ball.alpha;

    let mut r = CheckReport::new();
    r.push("u_nonnegative", min_u, floor, negative.is_empty(), negative);
    r.push(
        "u_vanishes_off_ball",
        off_max,
        tol.off_ball,
        off_bad.is_empty(),
        off_bad,
    );
    r.at_most("complementarity", comp, tol.complementarity);
    r
}

/// Rejects probes that the mean-value identity does not cover.
pub fn validate_probe(ball: &BallResult, p: Point) -> Result<()> {
    let h = ball.mask.grid().h;
    let reach = 3.0 * h * (1.0 - 1e-9);
    if ball.omega().distance_to(p) < reach {
        return Err(Error::ProbeInsideBall { x: p.x, y: p.y });
    }
    if ball.mask.distance_to_complement(p) < reach {
        return Err(Error::ProbeTooCloseToBoundary { x: p.x, y: p.y });
    }
    Ok(())
}

/// `(α G(x0, x), h² Σ_ω G(y, x))` for one probe `x`.
fn green_sides(ball: &BallResult, green: &GreenEvaluator, x: Point) -> Result<(f64, f64)> {
    let g = ball.mask.grid();
    let col: GreenColumn<'_> = green.column(x)?;
    let lhs = ball.alpha * col.at_point(ball.center)?;
    let mut sum = 0.0;
    for k in ball.omega().members() {
        sum += col.at_node(k)?;
    }
    Ok((lhs, g.h * g.h * sum))
}

pub fn verify_mean_value(
    ball: &BallResult,
    probes: &[Point],
    green: &GreenEvaluator,
) -> Result<CheckReport> {
    verify_mean_value_with(ball, probes, green, VerifyTolerances::default().mean_value)
}

/// `|α G(x0,x) - h² Σ_ω G(y,x)| / (α G(x0,x))` per probe, plus the maximum.
pub fn verify_mean_value_with(
    ball: &BallResult,
    probes: &[Point],
    green: &GreenEvaluator,
    tol: f64,
) -> Result<CheckReport> {
    for &p in probes {
        validate_probe(ball, p)?;
    }
    let mut r = CheckReport::new();
    let mut worst: f64 = 0.0;
    for (n, &p) in probes.iter().enumerate() {
        let (lhs, rhs) = green_sides(ball, green, p)?;
        let res = (lhs - rhs).abs() / lhs.abs();
        worst = worst.max(if res.is_nan() { f64::INFINITY } else { res });
        r.at_most(format!("mean_value_{n:02}"), res, tol);
    }
    r.at_most("mean_value_max", worst, tol);
    Ok(r)
}

/// Gap `α G(x0,x) - h² Σ_ω G(y,x)` per probe, relative to `α G(x0,x)`.
///
/// The gap is the balayage potential `u(x)`, so it is nonnegative and vanishes
/// off the ball; the check passes when it is `>= -tol`.
pub fn verify_subharmonic_inequality(
    ball: &BallResult,
    probes: &[Point],
    green: &GreenEvaluator,
) -> Result<CheckReport> {
    verify_subharmonic_inequality_with(ball, probes, green, VerifyTolerances::default().subharmonic)
}

pub fn verify_subharmonic_inequality_with(
    ball: &BallResult,
    probes: &[Point],
    green: &GreenEvaluator,
    tol: f64,
) -> Result<CheckReport> {
    let h = ball.mask.grid().h;
    for &p in probes {
        if p.dist(ball.center) < 3.0 * h * (1.0 - 1e-9)
            || green.mask().distance_to_complement(p) == 0.0
        {
            return Err(Error::ProbeTooCloseToBoundary { x: p.x, y: p.y });
        }
    }
    let mut r = CheckReport::new();
    for (n, &p) in probes.iter().enumerate() {
        let (lhs, rhs) = green_sides(ball, green, p)?;
        r.at_least(
            format!("subharmonic_gap_{n:02}"),
            (lhs - rhs) / lhs.abs(),
            -tol,
        );
    }
    Ok(r)
}

pub fn check_positivity(ball: &BallResult) -> CheckReport {
    check_positivity_with(ball, &VerifyTolerances::default())
}

/// `ν >= 0` nodewise, `λ(ω) <= α (1 + tol)` and `λ(ω) + ν_total = α`.
pub fn check_positivity_with(ball: &BallResult, tol: &VerifyTolerances) -> CheckReport {
    let nu = &ball.balayage.nu;
    let floor = -tol.nu_negativity * ball.alpha;
    let negative: Vec<usize> = nu
        .weights
        .iter()
        .filter(|w| w.1 < floor)
        .map(|w| w.0)
        .collect();
    let area = ball.area();
    let mut r = CheckReport::new();
    r.push(
        "nu_nonnegative",
        nu.min_weight(),
        floor,
        negative.is_empty(),
        negative,
    );
    r.at_most("area_bound", area / ball.alpha - 1.0, tol.mass);
    r.at_most(
        "mass_balance",
        (area + nu.total - ball.alpha).abs() / ball.alpha,
        tol.mass,
    );
    r
}

/// `ω1 ⊆ dilate(ω2)` for balls ordered by mass (same `K`, same center) or by
/// domain (same center and mass, `K1 ⊆ K2`).
pub fn check_monotonicity(small: &BallResult, large: &BallResult) -> Result<CheckReport> {
    if small.mask.grid() != large.mask.grid() {
        return Err(Error::IncomparableInputs(
            "balls live on different grids".into(),
        ));
    }
    let same_center = small.center == large.center;
    let by_mass =
        same_center && small.mask.domain() == large.mask.domain() && small.alpha <= large.alpha;
    let by_domain = same_center
        && small.alpha == large.alpha
        && small
            .mask
            .interior_region()
            .is_subset_of(&large.mask.interior_region());
    if !by_mass && !by_domain {
        return Err(Error::IncomparableInputs(
            "need the same domain with increasing mass, or the same mass with nested domains"
                .into(),
        ));
    }
    let hull = large.omega().dilate();
    let outside: Vec<usize> = small
        .omega()
        .members()
        .filter(|&k| !hull.contains(k))
        .collect();
    let mut r = CheckReport::new();
    r.push(
        "monotone",
        outside.len() as f64,
        0.0,
        outside.is_empty(),
        outside,
    );
    Ok(r)
}

/// Nodes of `Ω \ ω` that do not touch the exterior of `Ω` (8-neighborhood).
/// These are filled holes or slits; the rest of `Ω \ ω` is a one-cell layer.
pub fn enclosed_fill(omega: &RegionMask, omega_big: &RegionMask) -> Vec<usize> {
    let g = *omega.grid();
    omega_big
        .difference(omega)
        .members()
        .filter(|&k| {
            let (i, j) = g.ij(k);
            !g.on_box_edge(i, j) && g.window(k, 1).all(|n| omega_big.contains(n))
        })
        .collect()
}

pub fn check_starshaped_ball(ball: &BallResult) -> Result<CheckReport> {
    let pre = is_starshaped(&ball.mask.interior_region(), ball.center)?;
    if !pre.starshaped {
        return Err(Error::DomainNotStarshaped {
            violations: pre.violations.len(),
        });
    }
    let star = is_starshaped(ball.omega(), ball.center)?;
    let fill = enclosed_fill(ball.omega(), ball.omega_big());
    let mut r = CheckReport::new();
    r.push(
        "omega_starshaped",
        star.violations.len() as f64,
        0.0,
        star.starshaped,
        star.violations,
    );
    r.push(
        "omega_equals_closure",
        fill.len() as f64,
        0.0,
        fill.is_empty(),
        fill,
    );
    Ok(r)
}

pub fn check_halfspace_omega_equality(ball: &BallResult) -> Result<CheckReport> {
    if !matches!(ball.mask.domain(), DomainSpec::HalfPlane { .. }) {
        return Err(Error::WrongDomainKind {
            expected: "half_plane",
        });
    }
    let fill = enclosed_fill(ball.omega(), ball.omega_big());
    let mut r = CheckReport::new();
    r.push(
        "omega_equals_closure",
        fill.len() as f64,
        0.0,
        fill.is_empty(),
        fill,
    );
    Ok(r)
}

/// Up to `n` valid probes on two circles around the center, at radii
/// `R + 6h` and `1.5 (R + 6h)` with `R` the ball radius.
pub fn default_probes(ball: &BallResult, n: usize) -> Vec<Point> {
    let h = ball.mask.grid().h;
    let r0 = ball.radius() + 6.0 * h;
    let per = n.div_ceil(2).max(1);
    let mut out = Vec::with_capacity(n);
    for radius in [r0, 1.5 * r0] {
        for s in 0..per {
            let t = std::f64::consts::TAU * (s as f64 + 0.5) / per as f64;
            let p = Point::new(
                ball.center.x + radius * t.cos(),
                ball.center.y + radius * t.sin(),
            );
            if out.len() < n && validate_probe(ball, p).is_ok() {
                out.push(p);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain_mask, GridSpec};
    use std::f64::consts::PI;

    fn half_plane(h: f64) -> DomainMask {
        let g = GridSpec::from_box(-0.6, 0.6, 0.0, 1.2, h).unwrap();
        build_domain_mask(g, DomainSpec::HalfPlane { offset: 0.0 }).unwrap()
    }

    fn contact(h: f64) -> BallResult {
        compute_ball(&half_plane(h), Point::new(0.0, 0.1), PI * 0.04).unwrap()
    }

    #[test]
    fn rejects_nonpositive_mass() {
        let m = half_plane(0.05);
        assert!(matches!(
            compute_ball(&m, Point::new(0.0, 0.5), 0.0),
            Err(Error::InvalidMeasure(_))
        ));
    }

    #[test]
    fn contact_ball_touches_boundary_and_passes_field_checks() {
        let b = contact(0.01);
        assert!(b.balayage.nu.total > 0.0);
        assert!(b.area() < b.alpha);
        assert!(b
            .omega()
            .contains(b.mask.grid().nearest_node(b.center).unwrap()));
        let r = verify_field_characterization(&b);
        assert!(r.pass(), "{:?}", r);
        let r = check_positivity(&b);
        assert!(r.get("nu_nonnegative").unwrap().pass);
        assert!(r.get("area_bound").unwrap().pass);
        assert!(check_halfspace_omega_equality(&b).unwrap().pass());
    }

    #[test]
    fn negative_u_is_reported() {
        let mut b = contact(0.02);
        let k = b.mask.grid().index(3, 40);
        b.balayage.u.values_mut()[k] = -1e-3;
        let r = verify_field_characterization(&b);
        let c = r.get("u_nonnegative").unwrap();
        assert!(!c.pass);
        assert_eq!(c.violations, vec![k]);
    }

    #[test]
    fn flipped_nu_node_fails_positivity() {
        let mut b = contact(0.02);
        let w = b
            .balayage
            .nu
            .weights
            .iter_mut()
            .find(|w| w.1 > 0.0)
            .unwrap();
        w.1 = -w.1;
        assert!(!check_positivity(&b).get("nu_nonnegative").unwrap().pass);
    }

    #[test]
    fn mean_value_for_non_contact_ball() {
        let m = half_plane(0.01);
        let b = compute_ball(&m, Point::new(0.0, 0.5), PI * 0.04).unwrap();
        assert!(b.balayage.nu.total < 1e-12);
        let green = GreenEvaluator::analytic(&m).unwrap();
        let r = verify_mean_value(&b, &[Point::new(0.3, 1.0)], &green).unwrap();
        assert!(r.get("mean_value_00").unwrap().value < 0.05);
        let inside = verify_mean_value(&b, &[Point::new(0.0, 0.55)], &green);
        assert!(matches!(inside, Err(Error::ProbeInsideBall { .. })));
    }

    #[test]
    fn subharmonic_gap_is_u_inside_the_ball() {
        let b = contact(0.02);
        let green = GreenEvaluator::analytic(&b.mask).unwrap();
        let p = Point::new(0.1, 0.16);
        let r = verify_subharmonic_inequality(&b, &[p], &green).unwrap();
        assert!(r.pass());
        assert!(r.checks[0].value > 0.0);
    }

    #[test]
    fn monotone_in_mass_and_incomparable_inputs() {
        let m = half_plane(0.02);
        let x0 = Point::new(0.0, 0.3);
        let a = compute_ball(&m, x0, 0.1).unwrap();
        let b = compute_ball(&m, x0, 0.2).unwrap();
        assert!(check_monotonicity(&a, &b).unwrap().pass());
        assert!(matches!(
            check_monotonicity(&b, &a),
            Err(Error::IncomparableInputs(_))
        ));
        let c = compute_ball(&m, Point::new(0.1, 0.3), 0.2).unwrap();
        assert!(matches!(
            check_monotonicity(&a, &c),
            Err(Error::IncomparableInputs(_))
        ));
    }

    #[test]
    fn monotone_in_domain() {
        let g = GridSpec::from_box(-2.1, 2.1, -2.1, 2.1, 0.05).unwrap();
        let d = |r| {
            build_domain_mask(
                g,
                DomainSpec::Disc {
                    center: Point::new(0.0, 0.0),
                    radius: r,
                },
            )
            .unwrap()
        };
        let x0 = Point::new(0.3, 0.0);
        let a = compute_ball(&d(1.0), x0, 2.5).unwrap();
        let b = compute_ball(&d(2.0), x0, 2.5).unwrap();
        assert!(a.balayage.nu.total > 0.0);
        assert!(check_monotonicity(&a, &b).unwrap().pass());
    }

    #[test]
    fn hole_in_omega_fails_halfspace_check() {
        let mut b = contact(0.02);
        let k = b.mask.grid().nearest_node(Point::new(0.05, 0.15)).unwrap();
        let mut omega = b.omega().clone();
        omega.set(k, false);
        b.balayage.omega = omega;
        let r = check_halfspace_omega_equality(&b).unwrap();
        assert!(!r.pass());
        assert_eq!(r.checks[0].violations, vec![k]);
    }

    #[test]
    fn wrong_kind_and_non_starshaped_domain() {
        let g = GridSpec::from_box(-1.0, 1.0, -1.0, 1.0, 0.05).unwrap();
        let m = build_domain_mask(g, DomainSpec::WholePlaneBox).unwrap();
        let b = compute_ball(&m, Point::new(0.0, 0.0), 0.2).unwrap();
        assert!(matches!(
            check_halfspace_omega_equality(&b),
            Err(Error::WrongDomainKind { .. })
        ));
        assert!(check_starshaped_ball(&b).unwrap().pass());

        // U-shape seen from the tip of one arm
        let u = DomainSpec::Polygon {
            vertices: [
                (-0.9, -0.9),
                (0.9, -0.9),
                (0.9, 0.9),
                (0.5, 0.9),
                (0.5, -0.5),
                (-0.5, -0.5),
                (-0.5, 0.9),
                (-0.9, 0.9),
            ]
            .iter()
            .map(|&(x, y)| Point::new(x, y))
            .collect(),
        };
        let m = build_domain_mask(g, u).unwrap();
        let b = compute_ball(&m, Point::new(-0.7, 0.7), 0.02).unwrap();
        assert!(matches!(
            check_starshaped_ball(&b),
            Err(Error::DomainNotStarshaped { .. })
        ));
    }

    #[test]
    fn default_probes_are_valid() {
        let b = contact(0.02);
        let probes = default_probes(&b, 16);
        assert!(!probes.is_empty() && probes.len() <= 16);
        for p in probes {
            validate_probe(&b, p).unwrap();
        }
    }
}
