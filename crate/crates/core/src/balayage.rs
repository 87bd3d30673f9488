//! Partial balayage onto the uniform density inside `K`.
//!
//! The primary solver works with the deficiency potential `u = W_K μ` and solves
//! the complementarity problem
//!
//! ```text
//! u >= 0,   4u - Σ u_nb >= m - h²,   u * (4u - Σ u_nb - m + h²) = 0
//! ```
//!
//! on interior nodes (`m` = node masses of `μ`, `u = 0` elsewhere) by
//! projected SOR with red-black ordering. The divisible sandpile solves the
//! same lattice problem by mass toppling; its odometer divided by four equals
//! `u`, which makes it an independent oracle for the obstacle solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    interior_of_closure, region_from_field, DomainMask, DomainSpec, GridSpec, Point, RegionMask,
    ScalarField,
};
use crate::report::CheckReport;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Point,
    pub weight: f64,
}

/// Uniform density on a set of nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityComponent {
    pub region: RegionMask,
    pub density: f64,
}

/// Finite sum of point masses plus an optional uniform density component.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeasureSpec {
    pub atoms: Vec<Atom>,
    pub density: Option<DensityComponent>,
}

impl MeasureSpec {
    pub fn point_mass(location: Point, weight: f64) -> Self {
        Self {
            atoms: vec![Atom { location, weight }],
            density: None,
        }
    }

    pub fn uniform(region: RegionMask, density: f64) -> Self {
        Self {
            atoms: Vec::new(),
            density: Some(DensityComponent { region, density }),
        }
    }

    pub fn total_mass(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight).sum();
        let dens = self.density.as_ref().map_or(0.0, |d| {
            let h = d.region.grid().h;
            d.density * h * h * d.region.count() as f64
        });
        atoms + dens
    }

    /// Node masses (not densities) after bilinear splatting, with support
    /// checks against `K`.
    pub fn node_masses(&self, mask: &DomainMask) -> Result<Vec<f64>> {
        let g = *mask.grid();
        let mut m = vec![0.0; g.len()];
        for a in &self.atoms {
            if !(a.weight > 0.0) || !a.weight.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "atom weight {} must be > 0",
                    a.weight
                )));
            }
            if mask.distance_to_complement(a.location) < 2.0 * g.h * (1.0 - 1e-9) {
                return Err(Error::SupportTouchesBoundary);
            }
            for (k, w) in g.splat(a.location)? {
                m[k] += w * a.weight;
            }
        }
        if let Some(d) = &self.density {
            if d.region.grid() != &g {
                return Err(Error::GridMismatch);
            }
            if !(d.density >= 0.0) || !d.density.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "density {} must be >= 0",
                    d.density
                )));
            }
            let cell = g.h * g.h;
            for k in d.region.members() {
                if !g.window(k, 1).all(|n| mask.is_interior(n)) {
                    return Err(Error::SupportTouchesBoundary);
                }
                m[k] += d.density * cell;
            }
        }
        Ok(m)
    }
}

/// A real measure carried by the BOUNDARY nodes of `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMeasure {
    grid: GridSpec,
    /// `(node, weight)` for every BOUNDARY node.
    pub weights: Vec<(usize, f64)>,
    pub total: f64,
}

impl BoundaryMeasure {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn min_weight(&self) -> f64 {
        self.weights
            .iter()
            .map(|w| w.1)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn from_weights(grid: GridSpec, weights: Vec<(usize, f64)>) -> Self {
        let total = weights.iter().map(|w| w.1).sum();
        Self {
            grid,
            weights,
            total,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BalayageResult {
    /// Deficiency potential `W_K μ` on the grid.
    pub u: ScalarField,
    /// Node masses of `μ`.
    pub masses: ScalarField,
    /// Non-coincidence set `ω(K, μ)`.
    pub omega: RegionMask,
    /// `Ω(K, μ)`, the interior of the closure of `ω` inside `K`.
    pub omega_big: RegionMask,
    /// Density of `B_K μ` on `K` (zero off the interior).
    pub b: ScalarField,
    /// Sweeping measure left on `∂K`.
    pub nu: BoundaryMeasure,
    pub iterations: usize,
    pub residual: f64,
    pub total_mass: f64,
}

impl BalayageResult {
    fn assemble(
        mask: &DomainMask,
        u: Vec<f64>,
        masses: Vec<f64>,
        b: Vec<f64>,
        nu: Option<BoundaryMeasure>,
        iterations: usize,
        residual: f64,
    ) -> Result<Self> {
        let g = *mask.grid();
        let total_mass = masses.iter().sum();
        let u = ScalarField::from_values(g, u)?;
        let omega = region_from_field(&u, mask);
        let omega_big = interior_of_closure(&omega, mask);
        let nu = nu.unwrap_or_else(|| extract_sweep_measure(&u, mask));
        Ok(Self {
            masses: ScalarField::from_values(g, masses)?,
            b: ScalarField::from_values(g, b)?,
            u,
            omega,
            omega_big,
            nu,
            iterations,
            residual,
            total_mass,
        })
    }

    /// Worst complementarity violation `max |min(u, (1 - μ_h + Δ_h u) h²)|`
    /// over interior nodes, in potential units.
    pub fn complementarity_residual(&self, mask: &DomainMask) -> f64 {
        complementarity_residual(&self.u, &self.masses, mask)
    }
}

pub fn complementarity_residual(u: &ScalarField, masses: &ScalarField, mask: &DomainMask) -> f64 {
    let g = *mask.grid();
    let cell = g.h * g.h;
    let uv = u.values();
    let nx = g.nx;
    (0..g.len())
        .filter(|&k| mask.is_interior(k))
        .map(|k| {
            let lu = 4.0 * uv[k] - (uv[k - 1] + uv[k + 1]) - (uv[k - nx] + uv[k + nx]);
            // (1 - B) h² with B = μ_h + Δ_h u
            let slack = lu - masses.get(k) + cell;
            uv[k].min(slack).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObstacleOptions {
    pub relaxation: f64,
    /// Projected residual tolerance in units of `total mass / h²`.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Width of the strip along the grid box that must stay free of `ω` when
    /// `K` is unbounded.
    pub margin_cells: usize,
}

impl Default for ObstacleOptions {
    fn default() -> Self {
        Self {
            relaxation: 1.9,
            tol: 1e-10,
            max_sweeps: 500_000,
            margin_cells: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SandpileOptions {
    /// Stop when every node holds at most `(1 + tol) h²`.
    pub tol: f64,
    pub max_sweeps: usize,
    pub margin_cells: usize,
}

impl Default for SandpileOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_sweeps: 2_000_000,
            margin_cells: 5,
        }
    }
}

/// Inclusive index window `[i0, i1] x [j0, j1]` of nodes that can change.
#[derive(Clone, Copy, Debug)]
struct Window {
    i0: usize,
    i1: usize,
    j0: usize,
    j1: usize,
}

impl Window {
    fn around(g: &GridSpec, active: impl Fn(usize) -> bool) -> Option<Window> {
        let mut w: Option<Window> = None;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                if active(g.index(i, j)) {
                    w = Some(match w {
                        None => Window {
                            i0: i,
                            i1: i,
                            j0: j,
                            j1: j,
                        },
                        Some(w) => Window {
                            i0: w.i0.min(i),
                            i1: w.i1.max(i),
                            j0: w.j0.min(j),
                            j1: w.j1.max(j),
                        },
                    });
                }
            }
        }
        w
    }

    fn grow(self, g: &GridSpec) -> Window {
        Window {
            i0: self.i0.saturating_sub(1).max(1),
            i1: (self.i1 + 1).min(g.nx - 2),
            j0: self.j0.saturating_sub(1).max(1),
            j1: (self.j1 + 1).min(g.ny - 2),
        }
    }

    fn include(self, other: Window) -> Window {
        Window {
            i0: self.i0.min(other.i0),
            i1: self.i1.max(other.i1),
            j0: self.j0.min(other.j0),
            j1: self.j1.max(other.j1),
        }
    }
}

pub fn solve_obstacle(mask: &DomainMask, mu: &MeasureSpec) -> Result<BalayageResult> {
    solve_obstacle_with(mask, mu, &ObstacleOptions::default())
}

pub fn solve_obstacle_with(
    mask: &DomainMask,
    mu: &MeasureSpec,
    opts: &ObstacleOptions,
) -> Result<BalayageResult> {
    let g = *mask.grid();
    let masses = mu.node_masses(mask)?;
    let alpha: f64 = masses.iter().sum();
    let cell = g.h * g.h;
    let mut u = vec![0.0; g.len()];
    let nx = g.nx;
    let interior: Vec<bool> = (0..g.len()).map(|k| mask.is_interior(k)).collect();

    let Some(source_window) = Window::around(&g, |k| masses[k] > 0.0) else {
        return BalayageResult::assemble(mask, u, masses, vec![0.0; g.len()], None, 0, 0.0);
    };
    let tol = opts.tol * alpha / cell;
    let relax = opts.relaxation;
    let mut window = source_window.grow(&g);
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        for color in 0..2 {
            for j in window.j0..=window.j1 {
                let start = window.i0 + (window.i0 + j + color) % 2;
                for i in (start..=window.i1).step_by(2) {
                    let k = j * nx + i;
                    if !interior[k] {
                        continue;
                    }
                    let nb = (u[k - 1] + u[k + 1]) + (u[k - nx] + u[k + nx]);
                    let gs = 0.25 * (nb + masses[k] - cell);
                    u[k] = (u[k] + relax * (gs - u[k])).max(0.0);
                }
            }
        }
        let positive = Window::around_in(&g, window, |k| u[k] > 0.0);
        window = positive
            .map_or(source_window, |p| p.include(source_window))
            .grow(&g);
        if sweeps % 10 == 0 {
            residual = projected_residual(&g, &interior, &u, &masses, window);
            if residual <= tol {
                break;
            }
        }
    }
    if residual > tol {
        return Err(Error::NonConvergence { sweeps, residual });
    }
    check_margin(mask, &u, opts.margin_cells)?;
    let mut b = vec![0.0; g.len()];
    for k in 0..g.len() {
        if interior[k] {
            let lu = 4.0 * u[k] - (u[k - 1] + u[k + 1]) - (u[k - nx] + u[k + nx]);
            b[k] = (masses[k] - lu) / cell;
        }
    }
    BalayageResult::assemble(mask, u, masses, b, None, sweeps, residual)
}

impl Window {
    fn around_in(g: &GridSpec, within: Window, active: impl Fn(usize) -> bool) -> Option<Window> {
        let mut w: Option<Window> = None;
        for j in within.j0..=within.j1 {
            for i in within.i0..=within.i1 {
                if active(g.index(i, j)) {
                    w = Some(match w {
                        None => Window {
                            i0: i,
                            i1: i,
                            j0: j,
                            j1: j,
                        },
                        Some(w) => Window {
                            i0: w.i0.min(i),
                            i1: w.i1.max(i),
                            j0: w.j0.min(j),
                            j1: w.j1.max(j),
                        },
                    });
                }
            }
        }
        w
    }
}

/// `max |min(4u/h², (4u - Σu - m + h²)/h²)|` over interior nodes of the window.
fn projected_residual(
    g: &GridSpec,
    interior: &[bool],
    u: &[f64],
    masses: &[f64],
    w: Window,
) -> f64 {
    let nx = g.nx;
    let cell = g.h * g.h;
    let mut r: f64 = 0.0;
    for j in w.j0..=w.j1 {
        for i in w.i0..=w.i1 {
            let k = j * nx + i;
            if !interior[k] {
                continue;
            }
            let slack =
                4.0 * u[k] - (u[k - 1] + u[k + 1]) - (u[k - nx] + u[k + nx]) - masses[k] + cell;
            r = r.max((4.0 * u[k]).min(slack).abs() / cell);
        }
    }
    r
}

/// `u` must vanish on a strip along the far sides of an unbounded `K`.
fn check_margin(mask: &DomainMask, u: &[f64], margin: usize) -> Result<()> {
    let g = *mask.grid();
    let sides: &[&'static str] = match mask.domain() {
        DomainSpec::WholePlaneBox => &["left", "right", "bottom", "top"],
        DomainSpec::HalfPlane { .. } => &["left", "right", "top"],
        _ => return Ok(()),
    };
    for j in 0..g.ny {
        for i in 0..g.nx {
            if u[g.index(i, j)] <= 0.0 {
                continue;
            }
            let hit = [
                ("left", i <= margin),
                ("right", i + margin + 1 >= g.nx),
                ("bottom", j <= margin),
                ("top", j + margin + 1 >= g.ny),
            ];
            if let Some((side, _)) = hit.iter().find(|(s, on)| *on && sides.contains(s)) {
                return Err(Error::BoxTooSmall { side });
            }
        }
    }
    Ok(())
}

/// Divisible sandpile on the interior nodes with cell capacity `h²`; mass
/// pushed onto BOUNDARY or EXTERIOR nodes is frozen there.
pub fn sandpile(mask: &DomainMask, mu: &MeasureSpec) -> Result<BalayageResult> {
    sandpile_with(mask, mu, &SandpileOptions::default())
}

pub fn sandpile_with(
    mask: &DomainMask,
    mu: &MeasureSpec,
    opts: &SandpileOptions,
) -> Result<BalayageResult> {
    let g = *mask.grid();
    let masses = mu.node_masses(mask)?;
    let cell = g.h * g.h;
    let nx = g.nx;
    let interior: Vec<bool> = (0..g.len()).map(|k| mask.is_interior(k)).collect();
    let mut mass = masses.clone();
    let mut odometer = vec![0.0; g.len()];
    let mut frozen = vec![0.0; g.len()];
    let limit = cell * (1.0 + opts.tol);

    let mut window = Window::around(&g, |k| mass[k] > limit);
    let mut sweeps = 0;
    while let Some(w) = window {
        if sweeps == opts.max_sweeps {
            let excess = (0..g.len()).map(|k| mass[k] - cell).fold(0.0, f64::max);
            return Err(Error::NonConvergence {
                sweeps,
                residual: excess / cell,
            });
        }
        sweeps += 1;
        let w = w.grow(&g);
        for j in w.j0..=w.j1 {
            for i in w.i0..=w.i1 {
                let k = j * nx + i;
                if !interior[k] || mass[k] <= cell {
                    continue;
                }
                let excess = mass[k] - cell;
                mass[k] = cell;
                odometer[k] += excess;
                let share = 0.25 * excess;
                for n in [k - 1, k + 1, k - nx, k + nx] {
                    if interior[n] {
                        mass[n] += share;
                    } else {
                        frozen[n] += share;
                    }
                }
            }
        }
        window = Window::around_in(&g, w, |k| mass[k] > limit);
    }

    let u: Vec<f64> = odometer.iter().map(|o| 0.25 * o).collect();
    check_margin(mask, &u, opts.margin_cells)?;
    let b: Vec<f64> = (0..g.len())
        .map(|k| if interior[k] { mass[k] / cell } else { 0.0 })
        .collect();
    let nu =
        BoundaryMeasure::from_weights(g, mask.boundary_nodes().map(|k| (k, frozen[k])).collect());
    let excess = (0..g.len())
        .filter(|&k| interior[k])
        .map(|k| mass[k] - cell)
        .fold(0.0, f64::max);
    BalayageResult::assemble(mask, u, masses, b, Some(nu), sweeps, excess.max(0.0) / cell)
}

/// Obstacle solution against the sandpile oracle: `‖u_a - u_b‖_∞ <= c h max u`
/// and `ω_a Δ ω_b` inside the one-node layer around `∂ω_a`.
pub fn compare_oracle(a: &BalayageResult, b: &BalayageResult, c: f64) -> Result<CheckReport> {
    let h = a.u.grid().h;
    let umax = a.u.max().max(f64::MIN_POSITIVE);
    let diff = a.u.max_abs_diff(&b.u)?;
    let mut layer = RegionMask::empty(*a.u.grid());
    for k in a.omega.boundary_nodes() {
        layer.set(k, true);
    }
    let layer = layer.dilate();
    let stray: Vec<usize> = a
        .omega
        .symmetric_difference(&b.omega)
        .members()
        .filter(|&k| !layer.contains(k))
        .collect();
    let mut r = CheckReport::new();
    r.at_most("oracle_u_diff", diff / umax, c * h);
    r.push(
        "oracle_omega_layer",
        stray.len() as f64,
        0.0,
        stray.is_empty(),
        stray,
    );
    Ok(r)
}

/// Discrete Laplacian of the zero extension of `u` at BOUNDARY nodes, in mass
/// units: `ν_b = Σ_{interior neighbours j} u_j`.
pub fn extract_sweep_measure(u: &ScalarField, mask: &DomainMask) -> BoundaryMeasure {
    let g = *mask.grid();
    let weights = mask
        .boundary_nodes()
        .map(|b| {
            let w = g
                .neighbors4(b)
                .filter(|&n| mask.is_interior(n))
                .map(|n| u.get(n))
                .sum();
            (b, w)
        })
        .collect();
    BoundaryMeasure::from_weights(g, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain_mask, integrate};
    use std::f64::consts::PI;

    fn whole(half: f64, h: f64) -> DomainMask {
        let g = GridSpec::from_box(-half, half, -half, half, h).unwrap();
        build_domain_mask(g, DomainSpec::WholePlaneBox).unwrap()
    }

    #[test]
    fn empty_measure_gives_zero_solution() {
        let m = whole(1.0, 0.05);
        for r in [
            solve_obstacle(&m, &MeasureSpec::default()).unwrap(),
            sandpile(&m, &MeasureSpec::default()).unwrap(),
        ] {
            assert!(r.u.values().iter().all(|&v| v == 0.0));
            assert!(r.omega.is_empty());
            assert_eq!(r.nu.total, 0.0);
        }
    }

    #[test]
    fn subcritical_mass_does_not_topple() {
        let m = whole(1.0, 0.05);
        let mu = MeasureSpec::point_mass(Point::new(0.0, 0.0), 0.5 * 0.05 * 0.05);
        let r = sandpile(&m, &mu).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.omega.is_empty());
        let r = solve_obstacle(&m, &mu).unwrap();
        assert!(r.omega.is_empty());
    }

    #[test]
    fn atom_near_boundary_rejected() {
        let g = GridSpec::from_box(-1.0, 1.0, 0.0, 1.0, 0.05).unwrap();
        let m = build_domain_mask(g, DomainSpec::HalfPlane { offset: 0.0 }).unwrap();
        let mu = MeasureSpec::point_mass(Point::new(0.0, 0.07), 0.01);
        assert!(matches!(
            solve_obstacle(&m, &mu),
            Err(Error::SupportTouchesBoundary)
        ));
    }

    #[test]
    fn box_too_small_detected() {
        let m = whole(0.22, 0.01);
        let mu = MeasureSpec::point_mass(Point::new(0.0, 0.0), PI * 0.04);
        assert!(matches!(
            solve_obstacle(&m, &mu),
            Err(Error::BoxTooSmall { .. })
        ));
    }

    #[test]
    fn whole_plane_disc_coarse() {
        let m = whole(0.5, 0.01);
        let alpha = PI * 0.04;
        let r = solve_obstacle(&m, &MeasureSpec::point_mass(Point::new(0.0, 0.0), alpha)).unwrap();
        // {u > 0} sits about a third of a cell inside the continuum disc
        let area = integrate(&r.omega);
        assert!(
            area < alpha && area > 0.94 * alpha,
            "area {area} vs {alpha}"
        );
        assert_eq!(r.nu.total, 0.0);
        assert!(r.u.min() >= 0.0);
        // B <= 1 on K, = 1 on ω
        for k in 0..m.grid().len() {
            assert!(r.b.get(k) <= 1.0 + 1e-6);
            if r.omega.contains(k) && r.masses.get(k) == 0.0 {
                assert!((r.b.get(k) - 1.0).abs() < 1e-6);
            }
        }
        assert!(r.omega.is_subset_of(&r.omega_big));
        // discrete conservation: α = ∫ B + ν
        let h2 = m.grid().h.powi(2);
        let mass_b: f64 = r.b.values().iter().sum::<f64>() * h2;
        assert!((mass_b + r.nu.total - alpha).abs() < 1e-6 * alpha);
    }

    #[test]
    fn obstacle_and_sandpile_agree_on_contact_case() {
        let g = GridSpec::from_box(-0.5, 0.5, -0.1, 0.5, 0.01).unwrap();
        let m = build_domain_mask(g, DomainSpec::HalfPlane { offset: 0.0 }).unwrap();
        let mu = MeasureSpec::point_mass(Point::new(0.0, 0.1), PI * 0.04);
        let a = solve_obstacle(&m, &mu).unwrap();
        let b = sandpile(&m, &mu).unwrap();
        let umax = a.u.max();
        assert!(a.u.max_abs_diff(&b.u).unwrap() <= 1e-6 * umax);
        assert!(a.nu.total > 0.0);
        assert!((a.nu.total - b.nu.total).abs() <= 1e-6 * mu.total_mass());
        assert!(a.omega.symmetric_difference(&b.omega).count() <= a.omega.boundary_nodes().len());
    }

    #[test]
    fn sweep_measure_of_zero_is_zero() {
        let m = whole(1.0, 0.1);
        let nu = extract_sweep_measure(&ScalarField::zeros(*m.grid()), &m);
        assert_eq!(nu.total, 0.0);
        assert!(nu.weights.iter().all(|w| w.1 == 0.0));
    }
}
