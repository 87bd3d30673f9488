//! Logarithmic kernel and Green functions of `K`, normalized so that
//! `-Δ G(·, y) = δ_y`.
//!
//! Closed forms (method of images) cover the half-plane and the disc; any
//! other mask uses a discrete Dirichlet solve by successive over-relaxation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{DomainMask, DomainSpec, GridSpec, Point, ScalarField};

const INV_2PI: f64 = 0.5 / PI;

/// `-(1/2π) ln|x - y|`.
pub fn log_kernel(x: Point, y: Point) -> Result<f64> {
    let d = x.dist(y);
    if d == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(-INV_2PI * d.ln())
}

/// Green function of `{ y > offset }`: `(1/2π) ln(|z - w*| / |z - w|)` with
/// `w*` the mirror image of `w`.
pub fn green_halfplane(x: Point, y: Point, offset: f64) -> Result<f64> {
    let tol = 1e-12 * (1.0 + offset.abs());
    for p in [x, y] {
        if p.y < offset - tol {
            return Err(Error::PointOutsideDomain { x: p.x, y: p.y });
        }
    }
    if x == y {
        return Err(Error::CoincidentPoints);
    }
    if x.y <= offset + tol || y.y <= offset + tol {
        return Ok(0.0);
    }
    let image = Point::new(y.x, 2.0 * offset - y.y);
    Ok(INV_2PI * (x.dist(image) / x.dist(y)).ln())
}

/// Green function of the disc `|z - c| < R`:
/// `(1/2π) ln(|R² - (z-c) conj(w-c)| / (R |z - w|))`.
pub fn green_disc(x: Point, y: Point, center: Point, radius: f64) -> Result<f64> {
    let tol = 1e-12 * radius;
    for p in [x, y] {
        if p.dist(center) > radius + tol {
            return Err(Error::PointOutsideDomain { x: p.x, y: p.y });
        }
    }
    if x == y {
        return Err(Error::CoincidentPoints);
    }
    if x.dist(center) >= radius - tol || y.dist(center) >= radius - tol {
        return Ok(0.0);
    }
    let z = x.to_complex() - center.to_complex();
    let w = y.to_complex() - center.to_complex();
    let num = (radius * radius - z * w.conj()).norm();
    let val = INV_2PI * (num / (radius * (z - w).norm())).ln();
    Ok(val.max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenMode {
    Analytic,
    Numeric,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SorOptions {
    pub relaxation: f64,
    /// Residual tolerance in units of `(source mass) / h²`.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SorOptions {
    fn default() -> Self {
        Self {
            relaxation: 1.9,
            tol: 1e-10,
            max_sweeps: 200_000,
        }
    }
}

/// Discrete Green function: `g = 0` off `INTERIOR(K)` and `-Δ_h g` equals the
/// bilinear splat of a unit mass divided by `h²`.
pub fn green_numeric(mask: &DomainMask, source: Point) -> Result<ScalarField> {
    green_numeric_with(mask, source, &SorOptions::default())
}

pub fn green_numeric_with(
    mask: &DomainMask,
    source: Point,
    opts: &SorOptions,
) -> Result<ScalarField> {
    let g = *mask.grid();
    if mask.distance_to_complement(source) < 2.0 * g.h * (1.0 - 1e-9) {
        return Err(Error::SourceTooCloseToBoundary);
    }
    let mut rhs = vec![0.0; g.len()];
    for (k, w) in g.splat(source)? {
        rhs[k] += w;
    }
    let mut u = vec![0.0; g.len()];
    let tol = opts.tol / (g.h * g.h);
    let (sweeps, residual) = sor_poisson(mask, &rhs, &mut u, opts.relaxation, tol, opts.max_sweeps);
    if residual > tol {
        return Err(Error::NonConvergence { sweeps, residual });
    }
    ScalarField::from_values(g, u)
}

/// Red-black SOR for `4u_k - Σ u_nb = rhs_k` on interior nodes, `u = 0`
/// elsewhere. Returns the sweep count and the final residual in density
/// units (`|4u - Σu - rhs| / h²`).
fn sor_poisson(
    mask: &DomainMask,
    rhs: &[f64],
    u: &mut [f64],
    relax: f64,
    tol: f64,
    max_sweeps: usize,
) -> (usize, f64) {
    let g = *mask.grid();
    let nx = g.nx;
    let inv_h2 = 1.0 / (g.h * g.h);
    let interior: Vec<bool> = (0..g.len()).map(|k| mask.is_interior(k)).collect();
    let mut residual = f64::INFINITY;
    let check_every = 10;
    for sweep in 1..=max_sweeps {
        for color in 0..2 {
            for j in 1..g.ny - 1 {
                let start = 1 + (j + 1 + color) % 2;
                for i in (start..nx - 1).step_by(2) {
                    let k = j * nx + i;
                    if !interior[k] {
                        continue;
                    }
                    let nb = (u[k - 1] + u[k + 1]) + (u[k - nx] + u[k + nx]);
                    let gs = 0.25 * (nb + rhs[k]);
                    u[k] += relax * (gs - u[k]);
                }
            }
        }
        if sweep % check_every == 0 || sweep == max_sweeps {
            residual = 0.0;
            for k in 0..g.len() {
                if interior[k] {
                    let r = 4.0 * u[k] - (u[k - 1] + u[k + 1]) - (u[k - nx] + u[k + nx]) - rhs[k];
                    residual = residual.max(r.abs() * inv_h2);
                }
            }
            if residual <= tol {
                return (sweep, residual);
            }
        }
    }
    (max_sweeps, residual)
}

/// Green function of a domain, either in closed form or by discrete solve.
#[derive(Clone, Debug)]
pub struct GreenEvaluator {
    mask: DomainMask,
    mode: GreenMode,
    sor: SorOptions,
    /// Length scale of the whole-plane kernel `(1/2π) ln(L / |x - y|)`.
    whole_plane_scale: f64,
}

/// `G_K(·, x)` for one fixed second argument.
pub enum GreenColumn<'a> {
    Analytic {
        eval: &'a GreenEvaluator,
        source: Point,
    },
    Numeric(ScalarField),
}

impl GreenEvaluator {
    /// Closed-form evaluator. Available for half-planes and discs, and for the
    /// whole-plane box, where the logarithmic kernel shifted by the box
    /// diagonal stands in for the (non-existent) Green function of the plane.
    pub fn analytic(mask: &DomainMask) -> Result<Self> {
        match mask.domain() {
            DomainSpec::HalfPlane { .. } | DomainSpec::Disc { .. } | DomainSpec::WholePlaneBox => {}
            _ => return Err(Error::AnalyticUnavailable),
        }
        Ok(Self::build(
            mask,
            GreenMode::Analytic,
            SorOptions::default(),
        ))
    }

    pub fn numeric(mask: &DomainMask, sor: SorOptions) -> Self {
        Self::build(mask, GreenMode::Numeric, sor)
    }

    pub fn new(mask: &DomainMask, mode: GreenMode) -> Result<Self> {
        match mode {
            GreenMode::Analytic => Self::analytic(mask),
            GreenMode::Numeric => Ok(Self::numeric(mask, SorOptions::default())),
        }
    }

    fn build(mask: &DomainMask, mode: GreenMode, sor: SorOptions) -> Self {
        let g: &GridSpec = mask.grid();
        let diag = (g.x_max() - g.x_min).hypot(g.y_max() - g.y_min);
        Self {
            mask: mask.clone(),
            mode,
            sor,
            whole_plane_scale: diag,
        }
    }

    pub fn mode(&self) -> GreenMode {
        self.mode
    }

    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }

    /// Closed-form `G_K(x, y)`.
    pub fn eval(&self, x: Point, y: Point) -> Result<f64> {
        match self.mask.domain() {
            DomainSpec::HalfPlane { offset } => green_halfplane(x, y, *offset),
            DomainSpec::Disc { center, radius } => green_disc(x, y, *center, *radius),
            DomainSpec::WholePlaneBox => {
                Ok(log_kernel(x, y)? + INV_2PI * self.whole_plane_scale.ln())
            }
            _ => Err(Error::AnalyticUnavailable),
        }
    }

    /// `G_K(·, source)` as something evaluable at nodes and points.
    pub fn column(&self, source: Point) -> Result<GreenColumn<'_>> {
        match self.mode {
            GreenMode::Analytic => Ok(GreenColumn::Analytic { eval: self, source }),
            GreenMode::Numeric => Ok(GreenColumn::Numeric(green_numeric_with(
                &self.mask, source, &self.sor,
            )?)),
        }
    }
}

impl GreenColumn<'_> {
    pub fn at_point(&self, p: Point) -> Result<f64> {
        match self {
            GreenColumn::Analytic { eval, source } => eval.eval(p, *source),
            GreenColumn::Numeric(f) => f.interpolate(p),
        }
    }

    pub fn at_node(&self, idx: usize) -> Result<f64> {
        match self {
            GreenColumn::Analytic { eval, source } => {
                eval.eval(eval.mask.grid().point(idx), *source)
            }
            GreenColumn::Numeric(f) => Ok(f.get(idx)),
        }
    }
}
