//! Uniform planar grids, domain masks, region masks and node-level quadrature.
//!
//! Node `(i, j)` sits at `(x_min + i*h, y_min + j*h)` and is stored at flat
//! index `j * nx + i`. All set operations work on node sets; continuum sets are
//! resolved to within one cell.

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative snap tolerance (in units of `h`) used when a node sits on a
/// geometric boundary.
const SNAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn conj(self) -> Point {
        Point::new(self.x, -self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub y_min: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, y_min: f64, h: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = Self {
            x_min,
            y_min,
            h,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid covering `[x_min, x_max] x [y_min, y_max]` with spacing `h`; the
    /// upper corners are rounded to the nearest node.
    pub fn from_box(x_min: f64, x_max: f64, y_min: f64, y_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !(x_max > x_min) || !(y_max > y_min) {
            return Err(Error::InvalidGrid(format!(
                "empty box [{x_min}, {x_max}] x [{y_min}, {y_max}] or h = {h}"
            )));
        }
        let nx = ((x_max - x_min) / h).round() as usize + 1;
        let ny = ((y_max - y_min) / h).round() as usize + 1;
        Self::new(x_min, y_min, h, nx, ny)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "spacing h = {} must be > 0",
                self.h
            )));
        }
        if self.nx < 3 || self.ny < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3x3 nodes, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !self.x_min.is_finite() || !self.y_min.is_finite() {
            return Err(Error::InvalidGrid("non-finite origin".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + (self.nx - 1) as f64 * self.h
    }

    pub fn y_max(&self) -> f64 {
        self.y_min + (self.ny - 1) as f64 * self.h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn coord(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.x_min + i as f64 * self.h,
            self.y_min + j as f64 * self.h,
        )
    }

    #[inline]
    pub fn point(&self, idx: usize) -> Point {
        let (i, j) = self.ij(idx);
        self.coord(i, j)
    }

    pub fn on_box_edge(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// Fractional node coordinates of a point.
    pub fn to_grid(&self, p: Point) -> (f64, f64) {
        ((p.x - self.x_min) / self.h, (p.y - self.y_min) / self.h)
    }

    pub fn nearest_node(&self, p: Point) -> Option<usize> {
        let (gx, gy) = self.to_grid(p);
        let (i, j) = (gx.round(), gy.round());
        if i < 0.0 || j < 0.0 || i >= self.nx as f64 || j >= self.ny as f64 {
            return None;
        }
        Some(self.index(i as usize, j as usize))
    }

    /// 4-neighbors of a node that exist on the grid.
    pub fn neighbors4(&self, idx: usize) -> impl Iterator<Item = usize> {
        let (i, j) = self.ij(idx);
        let nx = self.nx;
        let ny = self.ny;
        [
            (i > 0).then(|| idx - 1),
            (i + 1 < nx).then(|| idx + 1),
            (j > 0).then(|| idx - nx),
            (j + 1 < ny).then(|| idx + nx),
        ]
        .into_iter()
        .flatten()
    }

    /// Nodes within Chebyshev distance `r` of `idx` (including `idx`).
    pub fn window(&self, idx: usize, r: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.ij(idx);
        let i0 = i.saturating_sub(r);
        let i1 = (i + r).min(self.nx - 1);
        let j0 = j.saturating_sub(r);
        let j1 = (j + r).min(self.ny - 1);
        (j0..=j1).flat_map(move |jj| (i0..=i1).map(move |ii| self.index(ii, jj)))
    }

    /// Bilinear distribution of a unit mass at `p` onto the surrounding nodes.
    /// A point on a node (to within a snap tolerance) lands on that node only.
    pub fn splat(&self, p: Point) -> Result<Vec<(usize, f64)>> {
        let (gx, gy) = self.to_grid(p);
        let snap = |v: f64| {
            let r = v.round();
            if (v - r).abs() < SNAP {
                r
            } else {
                v
            }
        };
        let (gx, gy) = (snap(gx), snap(gy));
        if gx < 0.0 || gy < 0.0 || gx > (self.nx - 1) as f64 || gy > (self.ny - 1) as f64 {
            return Err(Error::GeometryOutOfBounds(format!(
                "point ({}, {}) outside grid",
                p.x, p.y
            )));
        }
        let i0 = (gx.floor() as usize).min(self.nx - 1);
        let j0 = (gy.floor() as usize).min(self.ny - 1);
        let fx = gx - i0 as f64;
        let fy = gy - j0 as f64;
        let mut out = Vec::with_capacity(4);
        for (di, wx) in [(0usize, 1.0 - fx), (1, fx)] {
            for (dj, wy) in [(0usize, 1.0 - fy), (1, fy)] {
                let w = wx * wy;
                if w > 0.0 {
                    out.push((self.index(i0 + di, j0 + dj), w));
                }
            }
        }
        Ok(out)
    }

    /// Bilinear interpolation of nodal values at an arbitrary point in the box.
    pub fn interpolate(&self, values: &[f64], p: Point) -> Result<f64> {
        Ok(self.splat(p)?.into_iter().map(|(k, w)| w * values[k]).sum())
    }

    fn same_as(&self, other: &GridSpec) -> bool {
        self == other
    }
}

/// Geometry of the domain `K`, in grid coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DomainSpec {
    /// The whole plane, truncated to the grid box.
    WholePlaneBox,
    /// `{ y > offset }`, truncated to the grid box.
    HalfPlane {
        offset: f64,
    },
    Disc {
        center: Point,
        radius: f64,
    },
    Rectangle {
        min: Point,
        max: Point,
    },
    Polygon {
        vertices: Vec<Point>,
    },
}

impl DomainSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            DomainSpec::WholePlaneBox => "whole_plane_box",
            DomainSpec::HalfPlane { .. } => "half_plane",
            DomainSpec::Disc { .. } => "disc",
            DomainSpec::Rectangle { .. } => "rectangle",
            DomainSpec::Polygon { .. } => "polygon",
        }
    }

    /// Whether the far sides of `K` are the grid box itself.
    pub fn is_unbounded(&self) -> bool {
        matches!(
            self,
            DomainSpec::WholePlaneBox | DomainSpec::HalfPlane { .. }
        )
    }

    /// Membership in the open set `K` (ignoring the grid box), with a snap
    /// tolerance `eps` so that points on `dK` are never counted inside.
    pub fn contains(&self, p: Point, eps: f64) -> bool {
        match self {
            DomainSpec::WholePlaneBox => true,
            DomainSpec::HalfPlane { offset } => p.y > offset + eps,
            DomainSpec::Disc { center, radius } => p.dist(*center) < radius - eps,
            DomainSpec::Rectangle { min, max } => {
                p.x > min.x + eps && p.x < max.x - eps && p.y > min.y + eps && p.y < max.y - eps
            }
            DomainSpec::Polygon { vertices } => {
                polygon_boundary_distance(vertices, p) > eps && point_in_polygon(vertices, p)
            }
        }
    }

    /// Signed-agnostic distance from `p` to `dK` (ignoring the grid box).
    pub fn boundary_distance(&self, p: Point) -> f64 {
        match self {
            DomainSpec::WholePlaneBox => f64::INFINITY,
            DomainSpec::HalfPlane { offset } => (p.y - offset).abs(),
            DomainSpec::Disc { center, radius } => (p.dist(*center) - radius).abs(),
            DomainSpec::Rectangle { min, max } => {
                let v = [
                    Point::new(min.x, min.y),
                    Point::new(max.x, min.y),
                    Point::new(max.x, max.y),
                    Point::new(min.x, max.y),
                ];
                polygon_boundary_distance(&v, p)
            }
            DomainSpec::Polygon { vertices } => polygon_boundary_distance(vertices, p),
        }
    }

    fn validate(&self, grid: &GridSpec) -> Result<()> {
        let inside_box = |p: Point| {
            p.x > grid.x_min && p.x < grid.x_max() && p.y > grid.y_min && p.y < grid.y_max()
        };
        match self {
            DomainSpec::WholePlaneBox => Ok(()),
            DomainSpec::HalfPlane { offset } => {
                if *offset < grid.y_min - SNAP * grid.h || *offset >= grid.y_max() - grid.h {
                    return Err(Error::GeometryOutOfBounds(format!(
                        "half-plane offset {offset} outside [{}, {})",
                        grid.y_min,
                        grid.y_max() - grid.h
                    )));
                }
                Ok(())
            }
            DomainSpec::Disc { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidGeometry(format!(
                        "disc radius {radius} must be > 0"
                    )));
                }
                let corners = [
                    Point::new(center.x - radius, center.y - radius),
                    Point::new(center.x + radius, center.y + radius),
                ];
                if !corners.iter().all(|&c| inside_box(c)) {
                    return Err(Error::GeometryOutOfBounds(
                        "disc leaves the grid box".into(),
                    ));
                }
                Ok(())
            }
            DomainSpec::Rectangle { min, max } => {
                if !(max.x > min.x && max.y > min.y) {
                    return Err(Error::InvalidGeometry(
                        "rectangle corners out of order".into(),
                    ));
                }
                if !inside_box(*min) || !inside_box(*max) {
                    return Err(Error::GeometryOutOfBounds(
                        "rectangle leaves the grid box".into(),
                    ));
                }
                Ok(())
            }
            DomainSpec::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::InvalidGeometry(
                        "polygon needs at least 3 vertices".into(),
                    ));
                }
                if !is_simple_polygon(vertices) {
                    return Err(Error::InvalidGeometry(
                        "polygon is self-intersecting".into(),
                    ));
                }
                if !vertices.iter().all(|&v| inside_box(v)) {
                    return Err(Error::GeometryOutOfBounds(
                        "polygon leaves the grid box".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

fn point_in_polygon(v: &[Point], p: Point) -> bool {
    let mut inside = false;
    let n = v.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn segment_distance(a: Point, b: Point, p: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.dist(Point::new(a.x + t * dx, a.y + t * dy))
}

fn polygon_boundary_distance(v: &[Point], p: Point) -> f64 {
    (0..v.len())
        .map(|i| segment_distance(v[i], v[(i + 1) % v.len()], p))
        .fold(f64::INFINITY, f64::min)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on_seg = |a: Point, b: Point, c: Point| {
        c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
    };
    (d1 == 0.0 && on_seg(q1, q2, p1))
        || (d2 == 0.0 && on_seg(q1, q2, p2))
        || (d3 == 0.0 && on_seg(p1, p2, q1))
        || (d4 == 0.0 && on_seg(p1, p2, q2))
}

fn is_simple_polygon(v: &[Point]) -> bool {
    let n = v.len();
    for i in 0..n {
        let (a1, a2) = (v[i], v[(i + 1) % n]);
        if a1 == a2 {
            return false;
        }
        for j in (i + 1)..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(a1, a2, v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeClass {
    Interior,
    Boundary,
    Exterior,
}

/// Per-node classification of `K` on a grid.
#[derive(Clone, Debug)]
pub struct DomainMask {
    grid: GridSpec,
    domain: DomainSpec,
    class: Vec<NodeClass>,
}

pub fn build_domain_mask(grid: GridSpec, domain: DomainSpec) -> Result<DomainMask> {
    grid.validate()?;
    domain.validate(&grid)?;
    let eps = SNAP * grid.h;
    let mut class = vec![NodeClass::Exterior; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !grid.on_box_edge(i, j) && domain.contains(grid.coord(i, j), eps) {
                class[grid.index(i, j)] = NodeClass::Interior;
            }
        }
    }
    for idx in 0..grid.len() {
        if class[idx] != NodeClass::Interior
            && grid
                .neighbors4(idx)
                .any(|n| class[n] == NodeClass::Interior)
        {
            class[idx] = NodeClass::Boundary;
        }
    }
    let mask = DomainMask {
        grid,
        domain,
        class,
    };
    let components = mask.interior_components();
    if components != 1 {
        if components == 0 {
            return Err(Error::InvalidGeometry(
                "domain contains no interior node".into(),
            ));
        }
        return Err(Error::DisconnectedDomain { components });
    }
    Ok(mask)
}

impl DomainMask {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    #[inline]
    pub fn class(&self, idx: usize) -> NodeClass {
        self.class[idx]
    }

    #[inline]
    pub fn is_interior(&self, idx: usize) -> bool {
        self.class[idx] == NodeClass::Interior
    }

    pub fn count(&self, class: NodeClass) -> usize {
        self.class.iter().filter(|&&c| c == class).count()
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.grid.len()).filter(|&k| self.class[k] == NodeClass::Boundary)
    }

    /// The interior of `K` as a region.
    pub fn interior_region(&self) -> RegionMask {
        RegionMask::from_fn(self.grid, |k| self.is_interior(k))
    }

    /// Distance from `p` to the nearest non-interior node.
    pub fn distance_to_complement(&self, p: Point) -> f64 {
        let g = &self.grid;
        let Some(c) = g.nearest_node(p) else {
            return 0.0;
        };
        // grow a window until it contains a non-interior node, then one more ring
        let mut best = f64::INFINITY;
        let rmax = g.nx.max(g.ny);
        for r in 0..=rmax {
            let (ci, cj) = g.ij(c);
            let ring = g.window(c, r).filter(|&k| {
                let (i, j) = g.ij(k);
                i.abs_diff(ci) == r || j.abs_diff(cj) == r
            });
            for k in ring {
                if !self.is_interior(k) {
                    best = best.min(g.point(k).dist(p));
                }
            }
            if best <= (r as f64 - 1.0) * g.h {
                break;
            }
        }
        best
    }

    fn interior_components(&self) -> usize {
        let mut seen = vec![false; self.grid.len()];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.grid.len() {
            if seen[start] || !self.is_interior(start) {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(k) = queue.pop_front() {
                for n in self.grid.neighbors4(k) {
                    if !seen[n] && self.is_interior(n) {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        components
    }
}

/// A set of grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMask {
    grid: GridSpec,
    member: Vec<bool>,
}

impl RegionMask {
    pub fn empty(grid: GridSpec) -> Self {
        Self {
            grid,
            member: vec![false; grid.len()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(usize) -> bool) -> Self {
        Self {
            grid,
            member: (0..grid.len()).map(f).collect(),
        }
    }

    /// Nodes whose coordinates satisfy `pred`.
    pub fn from_points(grid: GridSpec, pred: impl Fn(Point) -> bool) -> Self {
        Self::from_fn(grid, |k| pred(grid.point(k)))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.member[idx]
    }

    pub fn set(&mut self, idx: usize, value: bool) {
        self.member[idx] = value;
    }

    pub fn count(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.member.iter().any(|&m| m)
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.member
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(k, _)| k)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.member
    }

    pub fn is_subset_of(&self, other: &RegionMask) -> bool {
        self.member
            .iter()
            .zip(&other.member)
            .all(|(&a, &b)| !a || b)
    }

    pub fn union(&self, other: &RegionMask) -> RegionMask {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &RegionMask) -> RegionMask {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &RegionMask) -> RegionMask {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn symmetric_difference(&self, other: &RegionMask) -> RegionMask {
        self.zip_with(other, |a, b| a != b)
    }

    fn zip_with(&self, other: &RegionMask, f: impl Fn(bool, bool) -> bool) -> RegionMask {
        debug_assert_eq!(self.grid, other.grid);
        RegionMask {
            grid: self.grid,
            member: self
                .member
                .iter()
                .zip(&other.member)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// One-step dilation with the 4-neighborhood.
    pub fn dilate(&self) -> RegionMask {
        RegionMask::from_fn(self.grid, |k| {
            self.member[k] || self.grid.neighbors4(k).any(|n| self.member[n])
        })
    }

    /// One-step erosion with the 4-neighborhood; off-grid counts as outside.
    pub fn erode(&self) -> RegionMask {
        let g = self.grid;
        RegionMask::from_fn(g, |k| {
            let (i, j) = g.ij(k);
            self.member[k] && !g.on_box_edge(i, j) && g.neighbors4(k).all(|n| self.member[n])
        })
    }

    /// Members with at least one 4-neighbor outside the region (or on the box edge).
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let g = self.grid;
        self.members()
            .filter(|&k| {
                let (i, j) = g.ij(k);
                g.on_box_edge(i, j) || g.neighbors4(k).any(|n| !self.member[n])
            })
            .collect()
    }

    /// Mirror image under `y -> 2*y_axis - y` where the axis is node row `j_axis`.
    pub fn mirror_rows(&self, j_axis: usize) -> RegionMask {
        let g = self.grid;
        RegionMask::from_fn(g, |k| {
            let (i, j) = g.ij(k);
            let jm = 2 * j_axis as isize - j as isize;
            jm >= 0 && (jm as usize) < g.ny && self.member[g.index(i, jm as usize)]
        })
    }

    /// Smallest distance from `p` to a member node (infinite for the empty set).
    pub fn distance_to(&self, p: Point) -> f64 {
        self.members()
            .map(|k| self.grid.point(k).dist(p))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Real nodal values.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(Point) -> f64) -> Self {
        Self {
            grid,
            values: (0..grid.len()).map(|k| f(grid.point(k))).collect(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn interpolate(&self, p: Point) -> Result<f64> {
        self.grid.interpolate(&self.values, p)
    }
}

/// Complex nodal values.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(Point) -> Complex64) -> Self {
        Self {
            grid,
            values: (0..grid.len()).map(|k| f(grid.point(k))).collect(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, idx: usize) -> Complex64 {
        self.values[idx]
    }
}

/// Lebesgue area of a region by the midpoint rule.
pub fn integrate(region: &RegionMask) -> f64 {
    let h = region.grid.h;
    h * h * region.count() as f64
}

pub fn integrate_field(f: &ScalarField, region: &RegionMask) -> Result<f64> {
    if !f.grid.same_as(&region.grid) {
        return Err(Error::GridMismatch);
    }
    let h = f.grid.h;
    Ok(h * h * region.members().map(|k| f.values[k]).sum::<f64>())
}

pub fn integrate_complex(f: &ComplexField, region: &RegionMask) -> Result<Complex64> {
    if !f.grid.same_as(&region.grid) {
        return Err(Error::GridMismatch);
    }
    let h = f.grid.h;
    Ok(region.members().map(|k| f.values[k]).sum::<Complex64>() * (h * h))
}

/// Midpoint-rule integral of a function of position.
pub fn integrate_with(region: &RegionMask, f: impl Fn(Point) -> Complex64) -> Complex64 {
    let h = region.grid.h;
    region
        .members()
        .map(|k| f(region.grid.point(k)))
        .sum::<Complex64>()
        * (h * h)
}

/// Default relative positivity threshold for `region_from_field`.
pub fn default_threshold() -> f64 {
    f64::EPSILON.sqrt()
}

/// `{ u > theta } ∩ INTERIOR(K)` with `theta = sqrt(eps_mach) * max(u)`.
pub fn region_from_field(u: &ScalarField, mask: &DomainMask) -> RegionMask {
    region_from_field_with(u, mask, default_threshold())
}

pub fn region_from_field_with(
    u: &ScalarField,
    mask: &DomainMask,
    rel_threshold: f64,
) -> RegionMask {
    let umax = u.max().max(0.0);
    let theta = rel_threshold * umax;
    RegionMask::from_fn(u.grid, |k| {
        mask.is_interior(k) && u.values[k] > theta && umax > 0.0
    })
}

/// Morphological closing (4-neighborhood) intersected with `INTERIOR(K)`.
pub fn interior_of_closure(region: &RegionMask, mask: &DomainMask) -> RegionMask {
    let closed = region.dilate().erode();
    RegionMask::from_fn(region.grid, |k| {
        (closed.member[k] && mask.is_interior(k)) || region.member[k]
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StarshapedReport {
    pub starshaped: bool,
    /// Member nodes whose segment to the center leaves the collar.
    pub violations: Vec<usize>,
}

/// Ray-sampling starshapedness test with a one-cell (8-neighborhood) collar.
pub fn is_starshaped(region: &RegionMask, center: Point) -> Result<StarshapedReport> {
    let g = region.grid;
    let c = g.nearest_node(center).ok_or(Error::CenterOutsideRegion)?;
    if !region.contains(c) {
        return Err(Error::CenterOutsideRegion);
    }
    let collar = region.dilate8();
    let step = 0.5 * g.h;
    let mut violations = Vec::new();
    for p in region.members() {
        let target = g.point(p);
        let len = center.dist(target);
        let n = (len / step).ceil() as usize;
        let ok = (1..n).all(|s| {
            let t = s as f64 / n as f64;
            let q = Point::new(
                center.x + t * (target.x - center.x),
                center.y + t * (target.y - center.y),
            );
            g.nearest_node(q).is_some_and(|k| collar.member[k])
        });
        if !ok {
            violations.push(p);
        }
    }
    Ok(StarshapedReport {
        starshaped: violations.is_empty(),
        violations,
    })
}

impl RegionMask {
    /// One-step dilation with the 8-neighborhood.
    pub fn dilate8(&self) -> RegionMask {
        RegionMask::from_fn(self.grid, |k| {
            self.grid.window(k, 1).any(|n| self.member[n])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn box_grid(half: f64, h: f64) -> GridSpec {
        GridSpec::from_box(-half, half, -half, half, h).unwrap()
    }

    #[test]
    fn half_plane_classification() {
        let g = box_grid(1.0, 0.5);
        let m = build_domain_mask(g, DomainSpec::HalfPlane { offset: 0.0 }).unwrap();
        // row y = 0.5 interior away from the box edge
        for i in 1..4 {
            assert_eq!(m.class(g.index(i, 3)), NodeClass::Interior);
            assert_eq!(m.class(g.index(i, 2)), NodeClass::Boundary);
            assert_eq!(m.class(g.index(i, 4)), NodeClass::Boundary);
            assert_eq!(m.class(g.index(i, 0)), NodeClass::Exterior);
        }
    }

    #[test]
    fn disc_classification() {
        let g = box_grid(2.0, 0.25);
        let m = build_domain_mask(
            g,
            DomainSpec::Disc {
                center: Point::new(0.0, 0.0),
                radius: 1.0,
            },
        )
        .unwrap();
        assert!(m.is_interior(g.nearest_node(Point::new(0.0, 0.0)).unwrap()));
        assert_eq!(
            m.class(g.nearest_node(Point::new(2.0, 2.0)).unwrap()),
            NodeClass::Exterior
        );
        // node exactly on the circle is not interior
        assert_eq!(
            m.class(g.nearest_node(Point::new(1.0, 0.0)).unwrap()),
            NodeClass::Boundary
        );
    }

    #[test]
    fn classification_partitions_nodes() {
        let g = box_grid(2.0, 0.1);
        let m = build_domain_mask(
            g,
            DomainSpec::Disc {
                center: Point::new(0.3, 0.0),
                radius: 1.2,
            },
        )
        .unwrap();
        let total = m.count(NodeClass::Interior)
            + m.count(NodeClass::Boundary)
            + m.count(NodeClass::Exterior);
        assert_eq!(total, g.len());
        for k in 0..g.len() {
            if m.is_interior(k) {
                assert!(g.neighbors4(k).all(|n| m.class(n) != NodeClass::Exterior));
            }
            if m.class(k) == NodeClass::Boundary {
                assert!(g.neighbors4(k).any(|n| m.is_interior(n)));
            }
        }
    }

    #[test]
    fn self_intersecting_polygon_rejected() {
        let g = box_grid(2.0, 0.1);
        let bowtie = vec![
            Point::new(-1.0, -1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, -1.0),
            Point::new(-1.0, 1.0),
        ];
        assert!(matches!(
            build_domain_mask(g, DomainSpec::Polygon { vertices: bowtie }),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn disc_out_of_box_rejected() {
        let g = box_grid(1.0, 0.1);
        let r = build_domain_mask(
            g,
            DomainSpec::Disc {
                center: Point::new(0.5, 0.0),
                radius: 0.8,
            },
        );
        assert!(matches!(r, Err(Error::GeometryOutOfBounds(_))));
    }

    #[test]
    fn disconnected_polygon_interior_detected() {
        // two squares joined by a sliver thinner than one cell
        let g = box_grid(2.0, 0.1);
        let v = vec![
            Point::new(-1.5, -0.5),
            Point::new(-0.5, -0.5),
            Point::new(-0.5, -0.02),
            Point::new(0.5, -0.02),
            Point::new(0.5, -0.5),
            Point::new(1.5, -0.5),
            Point::new(1.5, 0.5),
            Point::new(0.5, 0.5),
            Point::new(0.5, 0.02),
            Point::new(-0.5, 0.02),
            Point::new(-0.5, 0.5),
            Point::new(-1.5, 0.5),
        ];
        // the sliver contains the row y = 0, so this one is connected
        assert!(build_domain_mask(
            g,
            DomainSpec::Polygon {
                vertices: v.clone()
            }
        )
        .is_ok());
        let shifted: Vec<Point> = v.iter().map(|p| Point::new(p.x, p.y + 0.05)).collect();
        assert!(matches!(
            build_domain_mask(g, DomainSpec::Polygon { vertices: shifted }),
            Err(Error::DisconnectedDomain { components: 2 })
        ));
    }

    #[test]
    fn disc_area_within_one_percent() {
        let g = box_grid(0.3, 0.005);
        let r = RegionMask::from_points(g, |p| p.x.hypot(p.y) < 0.2);
        let a = integrate(&r);
        assert!((a - PI * 0.04).abs() <= 0.00126, "area {a}");
        assert_eq!(integrate(&RegionMask::empty(g)), 0.0);
    }

    #[test]
    fn disc_area_converges_at_first_order() {
        let exact = PI * 0.25;
        let errs: Vec<f64> = [0.02, 0.01, 0.005]
            .iter()
            .map(|&h| {
                let g = box_grid(0.6, h);
                (integrate(&RegionMask::from_points(g, |p| {
                    (p.x - 0.013).hypot(p.y + 0.007) < 0.5
                })) - exact)
                    .abs()
            })
            .collect();
        for (e, h) in errs.iter().zip([0.02, 0.01, 0.005]) {
            // perimeter * h bounds the lattice-count error
            assert!(*e <= PI * h, "err {e} at h {h}");
        }
    }

    #[test]
    fn odd_integrand_vanishes_on_symmetric_region() {
        let g = box_grid(1.0, 0.01);
        let r = RegionMask::from_points(g, |p| p.x.hypot(p.y) < 0.5);
        let v = integrate_with(&r, |p| p.to_complex());
        assert!(v.norm() < 1e-12);
        let f = ComplexField::from_fn(g, |p| p.to_complex());
        assert!(integrate_complex(&f, &r).unwrap().norm() < 1e-12);
    }

    #[test]
    fn integrate_field_rejects_grid_mismatch() {
        let f = ScalarField::zeros(box_grid(1.0, 0.1));
        let r = RegionMask::empty(box_grid(1.0, 0.2));
        assert!(matches!(integrate_field(&f, &r), Err(Error::GridMismatch)));
    }

    #[test]
    fn region_from_cone_field() {
        let g = box_grid(1.5, 0.02);
        let m = build_domain_mask(g, DomainSpec::WholePlaneBox).unwrap();
        assert!(region_from_field(&ScalarField::zeros(g), &m).is_empty());
        let u = ScalarField::from_fn(g, |p| (1.0 - p.x.hypot(p.y)).max(0.0));
        let r = region_from_field(&u, &m);
        for k in 0..g.len() {
            let d = g.point(k).x.hypot(g.point(k).y);
            if d < 1.0 - g.h {
                assert!(r.contains(k));
            }
            if d > 1.0 + g.h {
                assert!(!r.contains(k));
            }
        }
    }

    #[test]
    fn closing_fills_single_hole_and_keeps_separate_discs() {
        let g = box_grid(1.0, 0.02);
        let m = build_domain_mask(g, DomainSpec::WholePlaneBox).unwrap();
        let disc = RegionMask::from_points(g, |p| p.x.hypot(p.y) < 0.5);
        assert_eq!(interior_of_closure(&disc, &m), disc);
        let mut holed = disc.clone();
        holed.set(g.nearest_node(Point::new(0.1, 0.1)).unwrap(), false);
        assert_eq!(interior_of_closure(&holed, &m), disc);
        let two = RegionMask::from_points(g, |p| {
            (p.x + 0.3).hypot(p.y) < 0.2 || (p.x - 0.3).hypot(p.y) < 0.2
        });
        // gap between the discs is 0.2 = 10h
        assert_eq!(interior_of_closure(&two, &m), two);
    }

    #[test]
    fn starshaped_examples() {
        let g = GridSpec::from_box(-0.5, 2.5, -0.5, 2.5, 0.02).unwrap();
        let disc = RegionMask::from_points(g, |p| (p.x - 1.0).hypot(p.y - 1.0) < 0.8);
        assert!(
            is_starshaped(&disc, Point::new(1.0, 1.0))
                .unwrap()
                .starshaped
        );
        let ell = RegionMask::from_points(g, |p| {
            (p.x > 0.0 && p.x < 2.0 && p.y > 0.0 && p.y < 1.0)
                || (p.x > 0.0 && p.x < 1.0 && p.y > 0.0 && p.y < 2.0)
        });
        assert!(
            is_starshaped(&ell, Point::new(0.5, 0.5))
                .unwrap()
                .starshaped
        );
        // the far tips of the L are not visible from (1.8, 0.5)
        assert!(
            !is_starshaped(&ell, Point::new(1.8, 0.5))
                .unwrap()
                .starshaped
        );
        let annulus = RegionMask::from_points(g, |p| {
            let r = (p.x - 1.0).hypot(p.y - 1.0);
            r > 0.5 && r < 1.0
        });
        let rep = is_starshaped(&annulus, Point::new(1.75, 1.0)).unwrap();
        assert!(!rep.starshaped && !rep.violations.is_empty());
        assert!(matches!(
            is_starshaped(&annulus, Point::new(1.0, 1.0)),
            Err(Error::CenterOutsideRegion)
        ));
    }

    #[test]
    fn splat_weights_sum_to_one() {
        let g = box_grid(1.0, 0.1);
        let w = g.splat(Point::new(0.0, 0.0)).unwrap();
        assert_eq!(w.len(), 1);
        let w = g.splat(Point::new(0.033, -0.071)).unwrap();
        assert_eq!(w.len(), 4);
        assert!((w.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_region(g: GridSpec, seed: u64) -> RegionMask {
            // cheap deterministic pseudo-random blobs
            RegionMask::from_points(g, move |p| {
                let s = (p.x * 12.9898 + p.y * 78.233 + seed as f64).sin() * 43758.5453;
                s - s.floor() > 0.55 && p.x.hypot(p.y) < 0.8
            })
        }

        proptest! {
            #[test]
            fn closing_is_idempotent_and_monotone(seed in 0u64..1000) {
                let g = box_grid(1.0, 0.05);
                let m = build_domain_mask(g, DomainSpec::WholePlaneBox).unwrap();
                let a = random_region(g, seed);
                let b = a.union(&random_region(g, seed + 7));
                let ca = interior_of_closure(&a, &m);
                prop_assert!(a.is_subset_of(&ca));
                prop_assert_eq!(interior_of_closure(&ca, &m), ca.clone());
                prop_assert!(ca.is_subset_of(&interior_of_closure(&b, &m)));
            }

            #[test]
            fn integrate_is_monotone(seed in 0u64..1000) {
                let g = box_grid(1.0, 0.05);
                let a = random_region(g, seed);
                let b = a.union(&random_region(g, seed + 3));
                prop_assert!(integrate(&a) <= integrate(&b));
            }
        }
    }
}
