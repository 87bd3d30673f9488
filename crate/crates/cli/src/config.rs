//! JSON scenario documents and `--set` overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use hball_core::balayage::ObstacleOptions;
use hball_core::balls::VerifyTolerances;
use hball_core::greens::GreenMode;
use hball_core::grid::{DomainSpec, GridSpec};
use hball_core::Point;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Ball,
    TwophaseReflection,
    Nullqd,
}

/// Grid box `[x_min, x_max] x [y_min, y_max]` with spacing `h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub h: f64,
}

impl GridBox {
    pub fn spec(&self) -> hball_core::Result<GridSpec> {
        GridSpec::from_box(self.x_min, self.x_max, self.y_min, self.y_max, self.h)
    }
}

/// Probe placement for the mean-value and subharmonic checks. Explicit
/// `points` win over `arc`, which wins over the default two-circle layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub count: usize,
    pub points: Option<Vec<Point>>,
    pub arc: Option<ProbeArc>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            count: 16,
            points: None,
            arc: None,
        }
    }
}

/// `count` probes at angle midpoints of `[start_deg, end_deg]` on a circle of
/// `radius` around `x0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeArc {
    pub radius: f64,
    pub count: usize,
    #[serde(default)]
    pub start_deg: f64,
    #[serde(default = "full_turn")]
    pub end_deg: f64,
}

fn full_turn() -> f64 {
    360.0
}

impl ProbeArc {
    pub fn points(&self, center: Point) -> Vec<Point> {
        let span = (self.end_deg - self.start_deg).to_radians();
        (0..self.count)
            .map(|s| {
                let t = self.start_deg.to_radians() + span * (s as f64 + 0.5) / self.count as f64;
                Point::new(
                    center.x + self.radius * t.cos(),
                    center.y + self.radius * t.sin(),
                )
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub tolerances: VerifyTolerances,
    /// Constant `C` in the `C h · scale` Schwarz tolerances.
    pub c: f64,
    /// Radius of the discs around atoms skipped by the `∂̄` check; defaults
    /// to half the equivalent-disc radius `sqrt(α/π)`.
    pub dbar_exclusion: Option<f64>,
    /// Radius around atoms where Schwarz functions are left undefined, in
    /// units of `h`.
    pub atom_exclusion_cells: f64,
    pub kmax: u32,
    /// Also run the divisible sandpile and compare.
    pub sandpile: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            tolerances: VerifyTolerances::default(),
            c: 5.0,
            dbar_exclusion: None,
            atom_exclusion_cells: 3.0,
            kmax: 4,
            sandpile: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub grid: GridBox,
    /// Domain `K` for ball scenarios.
    #[serde(default = "whole_plane")]
    pub domain: DomainSpec,
    #[serde(default)]
    pub x0: Option<Point>,
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Positive phase of a null quadrature pair (disc, rectangle or polygon).
    #[serde(default)]
    pub dplus: Option<DomainSpec>,
    #[serde(default)]
    pub solver: ObstacleOptions,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub probes: ProbeConfig,
    #[serde(default = "analytic")]
    pub green: GreenMode,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn whole_plane() -> DomainSpec {
    DomainSpec::WholePlaneBox
}

fn analytic() -> GreenMode {
    GreenMode::Analytic
}

impl ScenarioConfig {
    /// Reads a config, applying `key=value` overrides to the raw JSON first.
    pub fn load(path: &Path, overrides: &[String]) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut doc: Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        Self::from_value(doc)
    }

    pub fn from_value(doc: Value) -> anyhow::Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_value(doc).context("invalid scenario config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.grid.spec()?;
        let positive = |name: &str, v: f64| -> anyhow::Result<()> {
            if !(v > 0.0) || !v.is_finite() {
                bail!("{name} must be positive, got {v}");
            }
            Ok(())
        };
        positive("verify.c", self.verify.c)?;
        positive("solver.relaxation", self.solver.relaxation)?;
        positive("solver.tol", self.solver.tol)?;
        if self.verify.kmax > 6 {
            bail!("verify.kmax must be at most 6");
        }
        match self.kind {
            ScenarioKind::Ball | ScenarioKind::TwophaseReflection => {
                if self.x0.is_none() {
                    bail!("{:?} scenario needs x0", self.kind);
                }
                positive("alpha", self.alpha.unwrap_or(f64::NAN))?;
            }
            ScenarioKind::Nullqd => match &self.dplus {
                Some(
                    DomainSpec::Disc { .. }
                    | DomainSpec::Rectangle { .. }
                    | DomainSpec::Polygon { .. },
                ) => {}
                Some(other) => bail!(
                    "dplus must be a disc, rectangle or polygon, got {}",
                    other.kind()
                ),
                None => bail!("nullqd scenario needs dplus"),
            },
        }
        if let Some(arc) = &self.probes.arc {
            positive("probes.arc.radius", arc.radius)?;
        }
        Ok(())
    }
}

/// `a.b.c=value`; the value is parsed as JSON and falls back to a string.
/// Numeric path segments index arrays.
pub fn apply_override(doc: &mut Value, spec: &str) -> anyhow::Result<()> {
    let Some((path, raw)) = spec.split_once('=') else {
        bail!("override {spec:?} is not of the form key=value");
    };
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        bail!("override key {path:?} has an empty segment");
    }
    let mut cur = doc;
    for (n, key) in keys.iter().enumerate() {
        let last = n + 1 == keys.len();
        cur = match cur {
            Value::Array(items) => {
                let idx: usize = key
                    .parse()
                    .with_context(|| format!("{path}: {key:?} is not an array index"))?;
                let len = items.len();
                items
                    .get_mut(idx)
                    .with_context(|| format!("{path}: index {idx} out of range ({len})"))?
            }
            Value::Object(map) => {
                if last {
                    map.insert((*key).to_string(), Value::Null);
                }
                map.entry((*key).to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Null => {
                *cur = Value::Object(Default::default());
                let map = cur.as_object_mut().expect("just created");
                map.entry((*key).to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            _ => bail!("{path}: cannot descend into a scalar at {key:?}"),
        };
    }
    *cur = value;
    Ok(())
}
