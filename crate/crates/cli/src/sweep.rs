//! Parameter sweeps over `alpha`, `h` or `x0_y`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use hball_core::balls::{check_monotonicity, BallResult};
use serde_json::{json, Value};

use crate::config::{apply_override, ScenarioConfig};
use crate::scenario::run;

/// Config path that a sweep parameter overrides.
pub fn parameter_path(name: &str) -> anyhow::Result<&'static str> {
    Ok(match name {
        "alpha" => "alpha",
        "h" => "grid.h",
        "x0_y" => "x0.1",
        other => bail!("unknown sweep parameter {other:?} (expected alpha, h or x0_y)"),
    })
}

pub struct SweepOutcome {
    pub pass: bool,
    pub table: String,
    pub summary: Value,
}

/// Runs the scenario once per value in `out/<param>_<n>/` and writes
/// `sweep.csv` and `sweep.json` to `out`.
pub fn sweep(doc: &Value, param: &str, values: &[f64], out: &Path) -> anyhow::Result<SweepOutcome> {
    let path = parameter_path(param)?;
    if values.is_empty() {
        bail!("sweep needs at least one value");
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut table = String::from("value,area,nu_total,max_residual,pass,monotone\n");
    let mut rows = Vec::new();
    let mut pass = true;
    let mut prev: Option<BallResult> = None;
    for (n, &v) in values.iter().enumerate() {
        let mut d = doc.clone();
        apply_override(&mut d, &format!("{path}={v}"))?;
        let cfg = ScenarioConfig::from_value(d)?;
        let dir = out.join(format!("{param}_{n:02}"));
        let o = run(&cfg, Some(&dir), true)?;
        // consecutive alpha values: the smaller ball sits inside the larger one
        let monotone = match (param, &prev, &o.ball) {
            ("alpha", Some(p), Some(b)) => {
                let (small, large) = if p.alpha <= b.alpha { (p, b) } else { (b, p) };
                Some(check_monotonicity(small, large)?.pass())
            }
            _ => None,
        };
        pass &= o.pass && monotone.unwrap_or(true);
        let mono = monotone.map_or(String::new(), |m| m.to_string());
        writeln!(
            table,
            "{v},{},{},{},{},{mono}",
            o.area, o.nu_total, o.max_residual, o.pass
        )
        .expect("string write");
        rows.push(json!({
            "value": v,
            "area": o.area,
            "nu_total": o.nu_total,
            "max_residual": o.max_residual,
            "pass": o.pass,
            "monotone": monotone,
            "dir": dir.file_name().map(|f| f.to_string_lossy().into_owned()),
        }));
        prev = o.ball;
    }
    fs::write(out.join("sweep.csv"), &table).context("writing sweep.csv")?;
    let summary = json!({"parameter": param, "rows": rows, "overall": pass});
    fs::write(
        out.join("sweep.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )
    .context("writing sweep.json")?;
    Ok(SweepOutcome {
        pass,
        table,
        summary,
    })
}
