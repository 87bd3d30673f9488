//! Two-phase configurations, Schwarz functions and quadrature identities.
//!
//! With `u` the two-phase potential (`Δu = β₊` on `D₊`, `Δu = -β₋` on `D₋`
//! away from the atoms), the Schwarz functions are
//! `S₊ = β₊ z̄ - 4∂u` on `D₊` and `S₋ = -β₋ z̄ - 4∂u` on `D₋`, with
//! `4∂u = 2 (u_x - i u_y)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::balayage::{solve_obstacle_with, BalayageResult, MeasureSpec, ObstacleOptions};
use crate::balls::{compute_ball_with, BallResult};
use crate::error::{Error, Result};
use crate::grid::{
    build_domain_mask, integrate, ComplexField, DomainMask, DomainSpec, GridSpec, Point,
    RegionMask, ScalarField,
};
use crate::report::CheckReport;

/// Default constant `C` in the `C h · scale` tolerances.
pub const DEFAULT_C: f64 = 5.0;

/// A point of `Γ = ∂D₊ ∩ ∂D₋` with the two nodes it separates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterfacePoint {
    pub midpoint: Point,
    pub plus: usize,
    pub minus: usize,
}

/// Complex nodal field that is only meaningful on `defined`.
#[derive(Clone, Debug)]
pub struct SchwarzField {
    pub values: ComplexField,
    pub defined: RegionMask,
}

impl SchwarzField {
    pub fn get(&self, idx: usize) -> Option<Complex64> {
        self.defined.contains(idx).then(|| self.values.get(idx))
    }

    pub fn max_abs(&self) -> f64 {
        self.defined
            .members()
            .map(|k| self.values.get(k).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct TwoPhaseResult {
    pub d_plus: RegionMask,
    pub d_minus: RegionMask,
    pub gamma: Vec<InterfacePoint>,
    pub u: ScalarField,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub mu_plus: MeasureSpec,
    pub mu_minus: MeasureSpec,
    pub s_plus: SchwarzField,
    pub s_minus: SchwarzField,
    pub exclusion_radius: f64,
    /// The one-phase solve the configuration was built from.
    pub source: BalayageResult,
    pub mask: DomainMask,
}

impl TwoPhaseResult {
    pub fn grid(&self) -> &GridSpec {
        self.d_plus.grid()
    }

    pub fn atoms(&self) -> Vec<Point> {
        self.mu_plus
            .atoms
            .iter()
            .chain(&self.mu_minus.atoms)
            .map(|a| a.location)
            .collect()
    }

    pub fn scale(&self) -> f64 {
        self.s_plus.max_abs().max(self.s_minus.max_abs())
    }
}

/// `ω(H₊, α δ_{x0})` and its mirror image, with the odd extension of `u`.
/// The grid must be symmetric about `y = 0`.
pub fn reflection_twophase(grid: GridSpec, x0: Point, alpha: f64) -> Result<TwoPhaseResult> {
    reflection_twophase_with(grid, x0, alpha, &ObstacleOptions::default(), 3.0 * grid.h)
}

pub fn reflection_twophase_with(
    grid: GridSpec,
    x0: Point,
    alpha: f64,
    opts: &ObstacleOptions,
    exclusion_radius: f64,
) -> Result<TwoPhaseResult> {
    if grid.ny.is_multiple_of(2) || (grid.y_min + grid.y_max()).abs() > 1e-9 * grid.h {
        return Err(Error::InvalidGrid(
            "reflection needs a grid symmetric about y = 0 with odd ny".into(),
        ));
    }
    if !(x0.y > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "x0 = ({}, {}) must lie in y > 0",
            x0.x, x0.y
        )));
    }
    let mask = build_domain_mask(grid, DomainSpec::HalfPlane { offset: 0.0 })?;
    let ball = compute_ball_with(&mask, x0, alpha, opts)?;
    reflect(ball, exclusion_radius)
}

fn reflect(ball: BallResult, exclusion_radius: f64) -> Result<TwoPhaseResult> {
    let g = *ball.mask.grid();
    let axis = (g.ny - 1) / 2;
    let up = ball.balayage.u.values();
    let mut u = vec![0.0; g.len()];
    for j in axis + 1..g.ny {
        for i in 0..g.nx {
            let v = up[g.index(i, j)];
            u[g.index(i, j)] = v;
            u[g.index(i, 2 * axis - j)] = -v;
        }
    }
    let u = ScalarField::from_values(g, u)?;
    let d_plus = ball.balayage.omega.clone();
    let d_minus = d_plus.mirror_rows(axis);
    let gamma: Vec<InterfacePoint> = (0..g.nx)
        .filter_map(|i| {
            let (plus, minus) = (g.index(i, axis + 1), g.index(i, axis - 1));
            (d_plus.contains(plus) && d_minus.contains(minus)).then(|| InterfacePoint {
                midpoint: g.coord(i, axis),
                plus,
                minus,
            })
        })
        .collect();
    let mu_plus = MeasureSpec::point_mass(ball.center, ball.alpha);
    let mu_minus = MeasureSpec::point_mass(ball.center.conj(), ball.alpha);
    let atoms = [ball.center, ball.center.conj()];
    let s_plus = schwarz_field(&u, &d_plus, 1.0, 1.0, exclusion_radius, &atoms);
    let s_minus = schwarz_field(&u, &d_minus, 1.0, -1.0, exclusion_radius, &atoms);
    Ok(TwoPhaseResult {
        d_plus,
        d_minus,
        gamma,
        u,
        beta_plus: 1.0,
        beta_minus: 1.0,
        mu_plus,
        mu_minus,
        s_plus,
        s_minus,
        exclusion_radius,
        source: ball.balayage,
        mask: ball.mask,
    })
}

/// Null quadrature pair: `D₋ = ω(2 λ|_{D₊}) \ D₊` in the whole plane.
pub fn null_quadrature_pair(mask: &DomainMask, d_plus: &RegionMask) -> Result<TwoPhaseResult> {
    null_quadrature_pair_with(mask, d_plus, &ObstacleOptions::default())
}

pub fn null_quadrature_pair_with(
    mask: &DomainMask,
    d_plus: &RegionMask,
    opts: &ObstacleOptions,
) -> Result<TwoPhaseResult> {
    if !matches!(mask.domain(), DomainSpec::WholePlaneBox) {
        return Err(Error::WrongDomainKind {
            expected: "whole_plane_box",
        });
    }
    let g = *mask.grid();
    if d_plus.grid() != &g {
        return Err(Error::GridMismatch);
    }
    if d_plus.is_empty() {
        return Err(Error::InvalidGeometry("positive phase is empty".into()));
    }
    check_null_margin(&g, d_plus)?;

    let res = solve_obstacle_with(mask, &MeasureSpec::uniform(d_plus.clone(), 2.0), opts)?;
    let d_minus = res.omega.difference(d_plus);
    let u = ScalarField::from_values(g, res.u.values().iter().map(|v| -v).collect())?;
    let mut gamma = Vec::new();
    for p in d_plus.members() {
        for m in g.neighbors4(p).filter(|&m| d_minus.contains(m)) {
            let (a, b) = (g.point(p), g.point(m));
            gamma.push(InterfacePoint {
                midpoint: Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y)),
                plus: p,
                minus: m,
            });
        }
    }
    let s_plus = schwarz_field(&u, d_plus, 1.0, 1.0, 0.0, &[]);
    let s_minus = schwarz_field(&u, &d_minus, 1.0, -1.0, 0.0, &[]);
    Ok(TwoPhaseResult {
        d_plus: d_plus.clone(),
        d_minus,
        gamma,
        u,
        beta_plus: 1.0,
        beta_minus: 1.0,
        mu_plus: MeasureSpec::default(),
        mu_minus: MeasureSpec::default(),
        s_plus,
        s_minus,
        exclusion_radius: 0.0,
        source: res,
        mask: mask.clone(),
    })
}

/// The box must hold a disc around the centroid of `D₊` that comfortably
/// contains the expected `ω`, plus the solver margin strip.
fn check_null_margin(g: &GridSpec, d_plus: &RegionMask) -> Result<()> {
    let n = d_plus.count() as f64;
    let (sx, sy) = d_plus
        .members()
        .map(|k| g.point(k))
        .fold((0.0, 0.0), |(a, b), p| (a + p.x, b + p.y));
    let c = Point::new(sx / n, sy / n);
    let rho = d_plus
        .members()
        .map(|k| g.point(k).dist(c))
        .fold(0.0, f64::max);
    let area = integrate(d_plus);
    let need = rho.max((2.0 * area / std::f64::consts::PI).sqrt()) * 1.25 + 5.0 * g.h;
    let room = (c.x - g.x_min)
        .min(g.x_max() - c.x)
        .min(c.y - g.y_min)
        .min(g.y_max() - c.y);
    if room < need {
        return Err(Error::MarginTooSmall(format!(
            "need {need:.4} around ({:.4}, {:.4}), have {room:.4}",
            c.x, c.y
        )));
    }
    Ok(())
}

/// Centered difference quotient along one axis, one-sided on the box edge.
fn diff(values: &[f64], g: &GridSpec, k: usize, along_x: bool) -> f64 {
    let (i, j) = g.ij(k);
    let (pos, n, stride) = if along_x {
        (i, g.nx, 1)
    } else {
        (j, g.ny, g.nx)
    };
    if pos == 0 {
        (values[k + stride] - values[k]) / g.h
    } else if pos + 1 == n {
        (values[k] - values[k - stride]) / g.h
    } else {
        (values[k + stride] - values[k - stride]) / (2.0 * g.h)
    }
}

/// `S = sign·β·z̄ - 4∂u` on `region`, undefined within `exclusion_radius` of
/// any atom.
pub fn schwarz_field(
    u: &ScalarField,
    region: &RegionMask,
    beta: f64,
    sign: f64,
    exclusion_radius: f64,
    atoms: &[Point],
) -> SchwarzField {
    let g = *u.grid();
    let v = u.values();
    let defined = RegionMask::from_fn(g, |k| {
        region.contains(k)
            && atoms
                .iter()
                .all(|a| g.point(k).dist(*a) >= exclusion_radius)
    });
    let mut values = ComplexField::zeros(g);
    for k in defined.members() {
        let z = g.point(k).to_complex();
        let (ux, uy) = (diff(v, &g, k, true), diff(v, &g, k, false));
        values.values_mut()[k] = sign * beta * z.conj() - 2.0 * Complex64::new(ux, -uy);
    }
    SchwarzField { values, defined }
}

/// `∂̄_h S = ½ (D_x S + i D_y S)` at a node whose four neighbors are defined.
pub fn dbar_at(s: &SchwarzField, k: usize) -> Option<Complex64> {
    let g = s.values.grid();
    let (i, j) = g.ij(k);
    if g.on_box_edge(i, j) {
        return None;
    }
    let e = s.get(k + 1)?;
    let w = s.get(k - 1)?;
    let n = s.get(k + g.nx)?;
    let so = s.get(k - g.nx)?;
    let dx = (e - w) / (2.0 * g.h);
    let dy = (n - so) / (2.0 * g.h);
    Some(0.5 * (dx + Complex64::i() * dy))
}

/// `max |∂̄_h S|` over nodes at least `2h` inside `region`, outside the
/// exclusion discs and at least `2h` from `Γ`; passes when `<= C h max|S|`.
pub fn verify_dbar_analytic(
    s: &SchwarzField,
    region: &RegionMask,
    exclusions: &[(Point, f64)],
    gamma: &[InterfacePoint],
    c: f64,
) -> CheckReport {
    verify_dbar_scaled(s, region, exclusions, gamma, c, s.max_abs())
}

/// As [`verify_dbar_analytic`] with an explicit `scale` in place of `max|S|`.
pub fn verify_dbar_scaled(
    s: &SchwarzField,
    region: &RegionMask,
    exclusions: &[(Point, f64)],
    gamma: &[InterfacePoint],
    c: f64,
    scale: f64,
) -> CheckReport {
    let g = *region.grid();
    let tol = c * g.h * scale;
    let core = region.erode().erode();
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    let mut checked = 0usize;
    for k in core.members() {
        let p = g.point(k);
        if exclusions.iter().any(|(a, r)| p.dist(*a) < *r)
            || gamma
                .iter()
                .any(|q| q.midpoint.dist(p) < 2.0 * g.h * (1.0 - 1e-9))
        {
            continue;
        }
        let Some(d) = dbar_at(s, k) else { continue };
        checked += 1;
        worst = worst.max(d.norm());
        if d.norm() > tol {
            bad.push(k);
        }
    }
    let mut r = CheckReport::new();
    r.push("dbar", worst, tol, bad.is_empty(), bad);
    r.at_least("dbar_nodes", checked as f64, 1.0);
    r
}

impl TwoPhaseResult {
    /// `∂̄` check on both phases, skipping discs of `exclusion` around atoms.
    /// The scale is `max |S|` over both phases, since one of them may vanish.
    pub fn verify_dbar(&self, exclusion: f64, c: f64) -> CheckReport {
        let scale = self.scale();
        let ex: Vec<(Point, f64)> = self.atoms().into_iter().map(|a| (a, exclusion)).collect();
        let mut r = CheckReport::new();
        for (name, s, region) in [
            ("plus", &self.s_plus, &self.d_plus),
            ("minus", &self.s_minus, &self.d_minus),
        ] {
            if region.is_empty() {
                continue;
            }
            for mut chk in verify_dbar_scaled(s, region, &ex, &self.gamma, c, scale).checks {
                chk.name = format!("{}_{name}", chk.name);
                r.checks.push(chk);
            }
        }
        r
    }
}

pub fn verify_schwarz_boundary(tp: &TwoPhaseResult) -> CheckReport {
    verify_schwarz_boundary_with(tp, DEFAULT_C, 1.0)
}

/// `S± = ±β± z̄` at boundary nodes of `D±` away from `Γ`. `sign = -1`
/// flips the targets (negative control).
pub fn verify_schwarz_boundary_with(tp: &TwoPhaseResult, c: f64, sign: f64) -> CheckReport {
    let g = *tp.grid();
    let tol = c * g.h * tp.scale();
    let mut r = CheckReport::new();
    for (name, s, region, target) in [
        ("boundary_plus", &tp.s_plus, &tp.d_plus, sign * tp.beta_plus),
        (
            "boundary_minus",
            &tp.s_minus,
            &tp.d_minus,
            -sign * tp.beta_minus,
        ),
    ] {
        let mut worst: f64 = 0.0;
        let mut bad = Vec::new();
        for k in region.boundary_nodes() {
            let p = g.point(k);
            if tp
                .gamma
                .iter()
                .any(|q| q.midpoint.dist(p) < 2.0 * g.h * (1.0 - 1e-9))
            {
                continue;
            }
            let Some(v) = s.get(k) else { continue };
            let err = (v - target * p.to_complex().conj()).norm();
            worst = worst.max(err);
            if err > tol {
                bad.push(k);
            }
        }
        r.push(name, worst, tol, bad.is_empty(), bad);
    }
    r
}

/// `Γ` points whose two nodes have a full two-node neighborhood inside the
/// two-phase set, i.e. at least two edges away from the ends of `Γ`.
pub fn interior_interface(tp: &TwoPhaseResult) -> Vec<InterfacePoint> {
    let g = *tp.grid();
    let on_gamma: Vec<bool> = {
        let mut v = vec![false; g.len()];
        for q in &tp.gamma {
            if let Some(k) = g.nearest_node(q.midpoint) {
                if g.point(k).dist(q.midpoint) < 1e-9 * g.h {
                    v[k] = true;
                }
            }
        }
        v
    };
    let inside = |k: usize| tp.d_plus.contains(k) || tp.d_minus.contains(k) || on_gamma[k];
    tp.gamma
        .iter()
        .copied()
        .filter(|q| {
            let (pi, pj) = g.ij(q.plus);
            let (mi, mj) = g.ij(q.minus);
            let clear = |i: usize, j: usize| {
                i >= 2
                    && j >= 2
                    && i + 2 < g.nx
                    && j + 2 < g.ny
                    && g.window(g.index(i, j), 2).all(inside)
            };
            clear(pi, pj) && clear(mi, mj)
        })
        .collect()
}

/// Linear extrapolation of `S` from `node` (and the next node away from
/// `other`) to `target`.
fn extrapolate(s: &SchwarzField, node: usize, other: usize, target: Point) -> Option<Complex64> {
    let g = s.values.grid();
    let (ni, nj) = g.ij(node);
    let (oi, oj) = g.ij(other);
    let di = (ni as isize - oi as isize).signum();
    let dj = (nj as isize - oj as isize).signum();
    let ii = ni as isize + di;
    let jj = nj as isize + dj;
    if ii < 0 || jj < 0 || ii as usize >= g.nx || jj as usize >= g.ny {
        return None;
    }
    let inner = g.index(ii as usize, jj as usize);
    let (a, b) = (s.get(node)?, s.get(inner)?);
    let t = g.point(node).dist(target) / g.h;
    Some(a + t * (a - b))
}

pub fn verify_schwarz_jump(tp: &TwoPhaseResult) -> Result<CheckReport> {
    verify_schwarz_jump_with(tp, DEFAULT_C, 1.0)
}

/// `S₊ - S₋ = factor·(β₊ + β₋) z̄` at interior `Γ` points; `factor = 1` is
/// the identity, other values are negative controls.
pub fn verify_schwarz_jump_with(tp: &TwoPhaseResult, c: f64, factor: f64) -> Result<CheckReport> {
    if tp.gamma.is_empty() {
        return Err(Error::EmptyInterface);
    }
    let g = *tp.grid();
    let tol = c * g.h * tp.scale();
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    let mut checked = 0usize;
    for q in interior_interface(tp) {
        let (Some(sp), Some(sm)) = (
            extrapolate(&tp.s_plus, q.plus, q.minus, q.midpoint),
            extrapolate(&tp.s_minus, q.minus, q.plus, q.midpoint),
        ) else {
            continue;
        };
        checked += 1;
        let target = factor * (tp.beta_plus + tp.beta_minus) * q.midpoint.to_complex().conj();
        let err = (sp - sm - target).norm();
        worst = worst.max(err);
        if err > tol {
            bad.push(q.plus);
        }
    }
    let mut r = CheckReport::new();
    r.push("jump", worst, tol, bad.is_empty() && checked > 0, bad);
    r.at_least("jump_points", checked as f64, 1.0);
    Ok(r)
}

/// Largest distance between two nodes of a region.
pub fn diameter(region: &RegionMask) -> f64 {
    let g = region.grid();
    let pts: Vec<Point> = region
        .boundary_nodes()
        .into_iter()
        .map(|k| g.point(k))
        .collect();
    let mut d: f64 = 0.0;
    for (n, a) in pts.iter().enumerate() {
        for b in &pts[n + 1..] {
            d = d.max(a.dist(*b));
        }
    }
    d
}

/// Per-k quadrature results.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moment {
    pub k: u32,
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    pub residual: f64,
    pub tol: f64,
}

fn moment_sum(region: &RegionMask, k: u32) -> Complex64 {
    let g = region.grid();
    let s: Complex64 = region
        .members()
        .map(|n| g.point(n).to_complex().powu(k))
        .sum();
    s * g.h * g.h
}

/// `β₊ ∫_{D₊} z^k - β₋ ∫_{D₋} z^k` against `⟨μ₊ - μ₋, z^k⟩` for `k = 0..=kmax`.
pub fn quadrature_moments(tp: &TwoPhaseResult, kmax: u32) -> Result<Vec<Moment>> {
    if kmax > 6 {
        return Err(Error::InvalidMeasure(format!("kmax = {kmax} exceeds 6")));
    }
    let h = tp.grid().h;
    let alpha: f64 = tp.mu_plus.atoms.iter().map(|a| a.weight).sum();
    let diam_all = diameter(&tp.d_plus.union(&tp.d_minus));
    let diam_plus = diameter(&tp.d_plus);
    let area_plus = integrate(&tp.d_plus);
    let mut out = Vec::new();
    for k in 0..=kmax {
        let lhs =
            tp.beta_plus * moment_sum(&tp.d_plus, k) - tp.beta_minus * moment_sum(&tp.d_minus, k);
        let atom = |a: &crate::balayage::Atom| a.weight * a.location.to_complex().powu(k);
        let rhs: Complex64 = tp.mu_plus.atoms.iter().map(atom).sum::<Complex64>()
            - tp.mu_minus.atoms.iter().map(atom).sum::<Complex64>();
        let tol = if alpha > 0.0 {
            let r = (alpha / std::f64::consts::PI).sqrt();
            let z0 = tp
                .mu_plus
                .atoms
                .iter()
                .map(|a| a.location.to_complex().norm())
                .fold(0.0, f64::max);
            0.02 * (alpha * z0.powi(k as i32) + alpha * diam_all.powi(k as i32) * h / r)
        } else {
            0.02 * area_plus * diam_plus.powi(k as i32)
        };
        out.push(Moment {
            k,
            lhs: [lhs.re, lhs.im],
            rhs: [rhs.re, rhs.im],
            residual: (lhs - rhs).norm(),
            tol,
        });
    }
    Ok(out)
}

pub fn verify_quadrature_identity(tp: &TwoPhaseResult, kmax: u32) -> Result<CheckReport> {
    let mut r = CheckReport::new();
    for m in quadrature_moments(tp, kmax)? {
        r.at_most(format!("quadrature_k{}", m.k), m.residual, m.tol);
    }
    Ok(r)
}

/// One-phase Schwarz function `z̄ - 4∂u` of a ball.
pub fn one_phase_schwarz(ball: &BallResult, exclusion_radius: f64) -> SchwarzField {
    schwarz_field(
        &ball.balayage.u,
        &ball.balayage.omega,
        1.0,
        1.0,
        exclusion_radius,
        &[ball.center],
    )
}

/// Boundary nodes of `region` (one node inside `∂D`) against the Schwarz
/// function `ā + r²/(z - a)` of the circle `|z - a| = r`.
pub fn verify_circle_identity(
    s: &SchwarzField,
    region: &RegionMask,
    center: Point,
    radius: f64,
    tol: f64,
) -> CheckReport {
    let g = *region.grid();
    let a = center.to_complex();
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for k in region.boundary_nodes() {
        let Some(v) = s.get(k) else { continue };
        let z = g.point(k).to_complex();
        let err = (v - (a.conj() + radius * radius / (z - a))).norm();
        worst = worst.max(err);
        if err > tol {
            bad.push(k);
        }
    }
    let mut r = CheckReport::new();
    r.push("circle_schwarz", worst, tol, bad.is_empty(), bad);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sym_grid(half: f64, h: f64) -> GridSpec {
        GridSpec::from_box(-half, half, -half, half, h).unwrap()
    }

    #[test]
    fn zero_potential_gives_conjugate() {
        let g = sym_grid(1.0, 0.1);
        let region = RegionMask::from_points(g, |p| p.dist(Point::new(0.0, 0.0)) < 0.5);
        let s = schwarz_field(&ScalarField::zeros(g), &region, 1.0, 1.0, 0.0, &[]);
        for k in region.members() {
            assert_eq!(s.get(k).unwrap(), g.point(k).to_complex().conj());
        }
        let r = verify_dbar_analytic(&s, &region, &[], &[], DEFAULT_C);
        assert!(!r.pass());
        assert!((r.checks[0].value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dbar_of_analytic_function_is_second_order() {
        let pole = Complex64::new(1.5, 0.0);
        let err = |h: f64| {
            let g = sym_grid(1.0, h);
            let region = RegionMask::from_points(g, |p| p.dist(Point::new(0.0, 0.0)) < 0.8);
            let values = ComplexField::from_fn(g, |p| 1.0 / (p.to_complex() - pole));
            let s = SchwarzField {
                values,
                defined: region.clone(),
            };
            assert!(verify_dbar_analytic(&s, &region, &[], &[], DEFAULT_C).pass());
            dbar_at(&s, g.nearest_node(Point::new(0.4, 0.2)).unwrap())
                .unwrap()
                .norm()
        };
        let (a, b) = (err(0.04), err(0.02));
        assert!((b / a - 0.25).abs() < 0.02, "{a} {b}");
    }

    #[test]
    fn reflection_requires_symmetric_grid() {
        let g = GridSpec::from_box(-1.0, 1.0, -0.5, 1.0, 0.05).unwrap();
        assert!(matches!(
            reflection_twophase(g, Point::new(0.0, 0.3), 0.05),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn reflection_is_odd_and_has_interface() {
        let g = sym_grid(0.6, 0.01);
        let tp = reflection_twophase(g, Point::new(0.0, 0.15), PI * 0.04).unwrap();
        let axis = (g.ny - 1) / 2;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let a = tp.u.get(g.index(i, j));
                let b = tp.u.get(g.index(i, 2 * axis - j));
                assert_eq!(a, -b);
            }
        }
        assert_eq!(tp.d_minus, tp.d_plus.mirror_rows(axis));
        assert!(tp.d_plus.intersection(&tp.d_minus).is_empty());
        assert!(!tp.gamma.is_empty());
        for q in &tp.gamma {
            assert!(q.midpoint.y.abs() < 1e-12);
        }
        assert!(verify_schwarz_jump(&tp).unwrap().pass());
        assert!(!verify_schwarz_jump_with(&tp, DEFAULT_C, -1.0)
            .unwrap()
            .pass());
        assert!(verify_schwarz_boundary(&tp).pass());
        assert!(!verify_schwarz_boundary_with(&tp, DEFAULT_C, -1.0).pass());
        // k = 1 needs a finer grid to reach its tolerance
        let q = verify_quadrature_identity(&tp, 4).unwrap();
        for c in q.checks.iter().filter(|c| c.name != "quadrature_k1") {
            assert!(c.pass, "{:?}", c);
        }
    }

    #[test]
    fn separated_reflection_has_empty_interface() {
        let g = sym_grid(0.8, 0.02);
        let tp = reflection_twophase(g, Point::new(0.0, 0.5), PI * 0.04).unwrap();
        assert!(tp.gamma.is_empty());
        assert!(matches!(
            verify_schwarz_jump(&tp),
            Err(Error::EmptyInterface)
        ));
        // decomposes into two one-phase identities
        let moments = quadrature_moments(&tp, 3).unwrap();
        for m in moments {
            let one = moment_sum(&tp.d_plus, m.k) - 0.5 * Complex64::new(m.lhs[0], m.lhs[1]);
            let other = moment_sum(&tp.d_minus, m.k) + 0.5 * Complex64::new(m.lhs[0], m.lhs[1]);
            assert!((one - other).norm() < 1e-12 + 1e-12 * one.norm());
        }
    }

    #[test]
    fn kmax_limit() {
        let g = sym_grid(0.8, 0.04);
        let tp = reflection_twophase(g, Point::new(0.0, 0.2), 0.05).unwrap();
        assert!(quadrature_moments(&tp, 7).is_err());
    }

    #[test]
    fn null_pair_disc_coarse() {
        let g = sym_grid(2.0, 0.04);
        let mask = build_domain_mask(g, DomainSpec::WholePlaneBox).unwrap();
        let dp = RegionMask::from_points(g, |p| p.dist(Point::new(0.0, 0.0)) < 1.0);
        let tp = null_quadrature_pair(&mask, &dp).unwrap();
        assert!(tp.d_plus.intersection(&tp.d_minus).is_empty());
        assert!(!tp.gamma.is_empty());
        assert_eq!(tp.source.nu.total, 0.0);
        let r = verify_quadrature_identity(&tp, 4).unwrap();
        for c in &r.checks[1..] {
            assert!(c.pass, "{:?}", c);
        }
        assert!(verify_schwarz_jump(&tp).unwrap().pass());
        assert!(verify_schwarz_boundary(&tp).pass());
    }

    #[test]
    fn null_pair_margin_and_kind() {
        let g = sym_grid(1.2, 0.05);
        let dp = RegionMask::from_points(g, |p| p.dist(Point::new(0.0, 0.0)) < 1.0);
        let mask = build_domain_mask(g, DomainSpec::WholePlaneBox).unwrap();
        assert!(matches!(
            null_quadrature_pair(&mask, &dp),
            Err(Error::MarginTooSmall(_))
        ));
        let hp = build_domain_mask(g, DomainSpec::HalfPlane { offset: -1.2 }).unwrap();
        assert!(matches!(
            null_quadrature_pair(&hp, &dp),
            Err(Error::WrongDomainKind { .. })
        ));
    }
}
