//! Scenario execution: compute, verify, write artifacts and the summary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use hball_core::balayage::{compare_oracle, sandpile_with, MeasureSpec, SandpileOptions};
use hball_core::balls::{
    check_halfspace_omega_equality, check_positivity_with, check_starshaped_ball,
    compute_ball_with, default_probes, verify_field_characterization_with, verify_mean_value_with,
    verify_subharmonic_inequality_with, BallResult,
};
use hball_core::export::{
    write_boundary_csv, write_complex_csv, write_pgm, write_points_csv, write_scalar_csv,
};
use hball_core::greens::{GreenEvaluator, GreenMode};
use hball_core::grid::{build_domain_mask, integrate, DomainMask, DomainSpec, RegionMask};
use hball_core::report::CheckReport;
use hball_core::twophase::{
    null_quadrature_pair_with, one_phase_schwarz, quadrature_moments, reflection_twophase_with,
    verify_circle_identity, verify_dbar_analytic, verify_schwarz_boundary_with,
    verify_schwarz_jump_with, TwoPhaseResult,
};
use hball_core::{Error, Point};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ScenarioConfig, ScenarioKind};

/// What a scenario run produced, beyond the files on disk.
pub struct Outcome {
    pub summary: Value,
    pub pass: bool,
    pub area: f64,
    pub nu_total: f64,
    /// Mean-value residual for balls, largest quadrature residual otherwise.
    pub max_residual: f64,
    pub ball: Option<BallResult>,
}

/// Collects check groups, skipped checks, results and artifact names.
#[derive(Default)]
struct Summary {
    checks: BTreeMap<String, CheckReport>,
    skipped: BTreeMap<String, String>,
    results: serde_json::Map<String, Value>,
    artifacts: Vec<String>,
}

impl Summary {
    fn check(&mut self, group: &str, report: CheckReport) {
        self.checks.insert(group.to_string(), report);
    }

    fn skip(&mut self, group: &str, reason: impl Into<String>) {
        self.skipped.insert(group.to_string(), reason.into());
    }

    fn result(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(
            key.to_string(),
            serde_json::to_value(value).expect("result serializes"),
        );
    }

    fn pass(&self) -> bool {
        self.checks.values().all(CheckReport::pass)
    }

    fn into_json(self, cfg: &ScenarioConfig) -> Value {
        let pass = self.pass();
        let checks: serde_json::Map<String, Value> = self
            .checks
            .iter()
            .map(|(k, r)| (k.clone(), r.to_json()))
            .collect();
        json!({
            "kind": cfg.kind,
            "config": cfg,
            "results": self.results,
            "checks": checks,
            "skipped": self.skipped,
            "artifacts": self.artifacts,
            "overall": pass,
        })
    }
}

/// Artifact writer rooted at an output directory; `None` writes nothing.
struct Artifacts<'a> {
    dir: Option<&'a Path>,
}

impl Artifacts<'_> {
    fn write(
        &self,
        summary: &mut Summary,
        name: &str,
        f: impl FnOnce(&Path) -> hball_core::Result<()>,
    ) -> anyhow::Result<()> {
        if let Some(dir) = self.dir {
            let path = dir.join(name);
            f(&path).with_context(|| format!("writing {}", path.display()))?;
            summary.artifacts.push(name.to_string());
        }
        Ok(())
    }
}

/// Runs one scenario. With `artifacts = true` every field and mask is written
/// to `out`; `summary.json` is written whenever `out` is given.
pub fn run(cfg: &ScenarioConfig, out: Option<&Path>, artifacts: bool) -> anyhow::Result<Outcome> {
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let files = Artifacts {
        dir: if artifacts { out } else { None },
    };
    let mut s = Summary::default();
    let grid = cfg.grid.spec()?;
    s.result("grid", json!({"nx": grid.nx, "ny": grid.ny, "h": grid.h}));

    let (area, nu_total, max_residual, ball) = match cfg.kind {
        ScenarioKind::Ball => run_ball(cfg, &mut s, &files)?,
        ScenarioKind::TwophaseReflection => run_reflection(cfg, &mut s, &files)?,
        ScenarioKind::Nullqd => run_null_pair(cfg, &mut s, &files)?,
    };
    let pass = s.pass();
    let summary = s.into_json(cfg);
    if let Some(dir) = out {
        let path = dir.join("summary.json");
        let text = serde_json::to_string_pretty(&summary)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(Outcome {
        summary,
        pass,
        area,
        nu_total,
        max_residual,
        ball,
    })
}

fn green_for(
    mask: &DomainMask,
    mode: GreenMode,
    s: &mut Summary,
) -> anyhow::Result<GreenEvaluator> {
    let green = match GreenEvaluator::new(mask, mode) {
        Err(Error::AnalyticUnavailable) => GreenEvaluator::new(mask, GreenMode::Numeric)?,
        other => other?,
    };
    s.result("green_mode", green.mode());
    Ok(green)
}

fn probes_for(cfg: &ScenarioConfig, ball: &BallResult) -> Vec<Point> {
    if let Some(points) = &cfg.probes.points {
        points.clone()
    } else if let Some(arc) = &cfg.probes.arc {
        arc.points(ball.center)
    } else {
        default_probes(ball, cfg.probes.count)
    }
}

/// Points inside the ball, halfway out from the center, that lie in `K`.
fn inner_probes(ball: &BallResult) -> Vec<Point> {
    let h = ball.mask.grid().h;
    let r = (0.5 * ball.radius()).max(3.5 * h);
    (0..4)
        .map(|s| {
            let t = std::f64::consts::FRAC_PI_2 * s as f64 + std::f64::consts::FRAC_PI_4;
            Point::new(ball.center.x + r * t.cos(), ball.center.y + r * t.sin())
        })
        .filter(|&p| ball.mask.distance_to_complement(p) > 0.0)
        .collect()
}

type Metrics = (f64, f64, f64, Option<BallResult>);

fn run_ball(
    cfg: &ScenarioConfig,
    s: &mut Summary,
    files: &Artifacts<'_>,
) -> anyhow::Result<Metrics> {
    let grid = cfg.grid.spec()?;
    let mask = build_domain_mask(grid, cfg.domain.clone())?;
    let (x0, alpha) = (cfg.x0.expect("validated"), cfg.alpha.expect("validated"));
    let ball = compute_ball_with(&mask, x0, alpha, &cfg.solver)?;
    let tol = &cfg.verify.tolerances;
    let h = grid.h;
    let area = ball.area();
    let nu = &ball.balayage.nu;
    s.result("alpha", alpha);
    s.result("area", area);
    s.result("nu_total", nu.total);
    s.result("nu_min", nu.min_weight());
    s.result("omega_nodes", ball.omega().count());
    s.result("omega_big_nodes", ball.omega_big().count());
    s.result("radius", ball.radius());
    s.result("iterations", ball.balayage.iterations);
    s.result("solver_residual", ball.balayage.residual);

    s.check(
        "field_characterization",
        verify_field_characterization_with(&ball, tol),
    );
    s.check("positivity", check_positivity_with(&ball, tol));

    let green = green_for(&mask, cfg.green, s)?;
    let probes = probes_for(cfg, &ball);
    let mut residual = f64::NAN;
    if probes.is_empty() {
        s.skip("mean_value", "no valid probes");
    } else {
        let r = verify_mean_value_with(&ball, &probes, &green, tol.mean_value)?;
        residual = r.get("mean_value_max").map_or(f64::NAN, |c| c.value);
        s.check("mean_value", r);
    }
    let mut sub = probes.clone();
    sub.extend(inner_probes(&ball));
    if !sub.is_empty() {
        s.check(
            "subharmonic",
            verify_subharmonic_inequality_with(&ball, &sub, &green, tol.subharmonic)?,
        );
    }

    match check_starshaped_ball(&ball) {
        Ok(r) => s.check("starshaped", r),
        Err(Error::DomainNotStarshaped { violations }) => s.skip(
            "starshaped",
            format!("domain is not starshaped about x0 ({violations} nodes)"),
        ),
        Err(e) => return Err(e.into()),
    }
    if matches!(mask.domain(), DomainSpec::HalfPlane { .. }) {
        s.check("halfspace_equality", check_halfspace_omega_equality(&ball)?);
    }

    // with ν = 0 the ball is the disc of area α and its Schwarz function is known
    if nu.total <= 1e-6 * alpha {
        let r = (alpha / std::f64::consts::PI).sqrt();
        let sf = one_phase_schwarz(&ball, cfg.verify.atom_exclusion_cells * h);
        let mut rep = verify_circle_identity(&sf, ball.omega(), x0, r, cfg.verify.c * h);
        let ex = cfg.verify.dbar_exclusion.unwrap_or(0.5 * r);
        rep.extend(verify_dbar_analytic(
            &sf,
            ball.omega(),
            &[(x0, ex)],
            &[],
            cfg.verify.c,
        ));
        s.check("schwarz_circle", rep);
        files.write(s, "S.csv", |p| {
            write_complex_csv(&sf.values, &sf.defined, p)
        })?;
    } else {
        s.skip(
            "schwarz_circle",
            "sweeping measure is nonzero; the ball is not a disc",
        );
    }

    if cfg.verify.sandpile {
        let opts = SandpileOptions {
            margin_cells: cfg.solver.margin_cells,
            ..SandpileOptions::default()
        };
        let sand = sandpile_with(&mask, &MeasureSpec::point_mass(x0, alpha), &opts)?;
        s.result("sandpile_sweeps", sand.iterations);
        s.check(
            "oracle",
            compare_oracle(&ball.balayage, &sand, cfg.verify.c)?,
        );
    }

    files.write(s, "omega.pgm", |p| write_pgm(ball.omega(), p))?;
    files.write(s, "omega_big.pgm", |p| write_pgm(ball.omega_big(), p))?;
    files.write(s, "u.csv", |p| write_scalar_csv(&ball.balayage.u, p))?;
    files.write(s, "nu.csv", |p| write_boundary_csv(nu, p))?;
    files.write(s, "probes.csv", |p| write_points_csv(&probes, p))?;
    Ok((area, nu.total, residual, Some(ball)))
}

fn odd_symmetry(tp: &TwoPhaseResult) -> CheckReport {
    let g = *tp.grid();
    let axis = (g.ny - 1) / 2;
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.index(i, j);
            let d = (tp.u.get(k) + tp.u.get(g.index(i, 2 * axis - j))).abs();
            worst = worst.max(d);
            if d != 0.0 && j > axis {
                bad.push(k);
            }
        }
    }
    let mirror = tp
        .d_minus
        .symmetric_difference(&tp.d_plus.mirror_rows(axis))
        .count();
    let mut r = CheckReport::new();
    r.push("u_odd", worst, 0.0, bad.is_empty(), bad);
    r.at_most("mirror_phases", mirror as f64, 0.0);
    r
}

/// Jump, boundary, `∂̄` and quadrature checks shared by both two-phase kinds.
fn twophase_checks(
    cfg: &ScenarioConfig,
    tp: &TwoPhaseResult,
    s: &mut Summary,
    dbar_exclusion: f64,
) -> anyhow::Result<f64> {
    let c = cfg.verify.c;
    s.result("gamma_points", tp.gamma.len());
    s.result("area_plus", integrate(&tp.d_plus));
    s.result("area_minus", integrate(&tp.d_minus));
    s.check("schwarz_boundary", verify_schwarz_boundary_with(tp, c, 1.0));
    match verify_schwarz_jump_with(tp, c, 1.0) {
        Ok(r) => s.check("schwarz_jump", r),
        Err(Error::EmptyInterface) => s.skip("schwarz_jump", "interface is empty"),
        Err(e) => return Err(e.into()),
    }
    s.check("dbar", tp.verify_dbar(dbar_exclusion, c));
    let moments = quadrature_moments(tp, cfg.verify.kmax)?;
    let mut q = CheckReport::new();
    for m in &moments {
        q.at_most(format!("quadrature_k{}", m.k), m.residual, m.tol);
    }
    s.check("quadrature", q);
    s.result("moments", &moments);
    Ok(moments.iter().map(|m| m.residual).fold(0.0, f64::max))
}

fn twophase_artifacts(
    tp: &TwoPhaseResult,
    s: &mut Summary,
    files: &Artifacts<'_>,
) -> anyhow::Result<()> {
    files.write(s, "d_plus.pgm", |p| write_pgm(&tp.d_plus, p))?;
    files.write(s, "d_minus.pgm", |p| write_pgm(&tp.d_minus, p))?;
    files.write(s, "omega.pgm", |p| write_pgm(&tp.source.omega, p))?;
    files.write(s, "u.csv", |p| write_scalar_csv(&tp.u, p))?;
    files.write(s, "nu.csv", |p| write_boundary_csv(&tp.source.nu, p))?;
    files.write(s, "S_plus.csv", |p| {
        write_complex_csv(&tp.s_plus.values, &tp.s_plus.defined, p)
    })?;
    files.write(s, "S_minus.csv", |p| {
        write_complex_csv(&tp.s_minus.values, &tp.s_minus.defined, p)
    })?;
    let mids: Vec<Point> = tp.gamma.iter().map(|q| q.midpoint).collect();
    files.write(s, "gamma.csv", |p| write_points_csv(&mids, p))?;
    Ok(())
}

fn run_reflection(
    cfg: &ScenarioConfig,
    s: &mut Summary,
    files: &Artifacts<'_>,
) -> anyhow::Result<Metrics> {
    let grid = cfg.grid.spec()?;
    let (x0, alpha) = (cfg.x0.expect("validated"), cfg.alpha.expect("validated"));
    let tp = reflection_twophase_with(
        grid,
        x0,
        alpha,
        &cfg.solver,
        cfg.verify.atom_exclusion_cells * grid.h,
    )?;
    s.result("alpha", alpha);
    s.result("iterations", tp.source.iterations);
    s.result("nu_total", tp.source.nu.total);
    s.check("symmetry", odd_symmetry(&tp));
    let ball = BallResult {
        center: x0,
        alpha,
        balayage: tp.source.clone(),
        mask: tp.mask.clone(),
    };
    s.check(
        "field_characterization",
        verify_field_characterization_with(&ball, &cfg.verify.tolerances),
    );
    let ex = cfg
        .verify
        .dbar_exclusion
        .unwrap_or(0.5 * (alpha / std::f64::consts::PI).sqrt());
    let residual = twophase_checks(cfg, &tp, s, ex)?;
    twophase_artifacts(&tp, s, files)?;
    Ok((
        integrate(&tp.d_plus),
        tp.source.nu.total,
        residual,
        Some(ball),
    ))
}

fn run_null_pair(
    cfg: &ScenarioConfig,
    s: &mut Summary,
    files: &Artifacts<'_>,
) -> anyhow::Result<Metrics> {
    let grid = cfg.grid.spec()?;
    let mask = build_domain_mask(grid, DomainSpec::WholePlaneBox)?;
    let shape = cfg.dplus.clone().expect("validated");
    let eps = 1e-9 * grid.h;
    let dplus = RegionMask::from_points(grid, |p| shape.contains(p, eps));
    let tp = null_quadrature_pair_with(&mask, &dplus, &cfg.solver)?;
    let tol = &cfg.verify.tolerances;
    let (a_plus, a_minus, a_omega) = (
        integrate(&tp.d_plus),
        integrate(&tp.d_minus),
        integrate(&tp.source.omega),
    );
    s.result("iterations", tp.source.iterations);
    s.result("area_omega", a_omega);
    s.result("nu_total", tp.source.nu.total);
    let mut m = CheckReport::new();
    m.at_most(
        "mass_conservation",
        (a_omega - 2.0 * a_plus).abs() / (2.0 * a_plus),
        tol.mass,
    );
    m.at_most("phase_balance", (a_minus - a_plus).abs() / a_plus, tol.mass);
    m.at_most("nu_zero", tp.source.nu.total / (2.0 * a_plus), 1e-6);
    if let DomainSpec::Disc { center, radius } = shape {
        let r_omega = tp
            .source
            .omega
            .members()
            .map(|k| grid.point(k).dist(center))
            .fold(0.0, f64::max);
        s.result("omega_radius", r_omega);
        m.at_most(
            "omega_radius",
            (r_omega - std::f64::consts::SQRT_2 * radius).abs(),
            2.0 * grid.h,
        );
    }
    s.check("balance", m);
    let residual = twophase_checks(cfg, &tp, s, 0.0)?;
    twophase_artifacts(&tp, s, files)?;
    Ok((a_omega, tp.source.nu.total, residual, None))
}

/// Output directory: `--out` wins over the config, then `hball-out`.
pub fn output_dir(cfg: &ScenarioConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("hball-out"))
}
