//! Helpers for the acceptance suite: repository paths, config loading and
//! one-line verdicts.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use hball_cli::ScenarioConfig;

/// Wall-clock budget for one scenario.
pub const SCENARIO_BUDGET: Duration = Duration::from_secs(120);

/// Largest grid side allowed.
pub const MAX_SIDE: usize = 1024;

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

pub fn load(name: &str, overrides: &[&str]) -> anyhow::Result<ScenarioConfig> {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ScenarioConfig::load(&config_path(name), &o)
}

/// Named sub-checks of one criterion.
#[derive(Default)]
pub struct Verdict {
    items: Vec<(String, bool, String)>,
    slowest: Duration,
}

impl Verdict {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `value <= tol`.
    pub fn at_most(&mut self, name: &str, value: f64, tol: f64) -> bool {
        let ok = value <= tol && !value.is_nan();
        self.items
            .push((name.to_string(), ok, format!("{value:.4e} <= {tol:.4e}")));
        ok
    }

    pub fn flag(&mut self, name: &str, ok: bool, detail: impl Into<String>) -> bool {
        self.items.push((name.to_string(), ok, detail.into()));
        ok
    }

    /// Runs one scenario, recording its wall time against the budget.
    pub fn timed<T>(
        &mut self,
        name: &str,
        f: impl FnOnce() -> anyhow::Result<T>,
    ) -> anyhow::Result<T> {
        let t = Instant::now();
        let out = f()?;
        let dt = t.elapsed();
        self.slowest = self.slowest.max(dt);
        if dt > SCENARIO_BUDGET {
            self.flag(
                &format!("{name}_time"),
                false,
                format!("{:.1}s", dt.as_secs_f64()),
            );
        }
        Ok(out)
    }

    pub fn pass(&self) -> bool {
        !self.items.is_empty() && self.items.iter().all(|(_, ok, _)| *ok)
    }

    /// `name=ok(detail)` pairs, failing items first.
    pub fn details(&self) -> String {
        let mut s = String::new();
        let mut items: Vec<_> = self.items.iter().collect();
        items.sort_by_key(|(_, ok, _)| *ok);
        for (name, ok, detail) in items {
            let mark = if *ok { "ok" } else { "FAIL" };
            let _ = write!(s, " {name}={mark}({detail})");
        }
        s
    }

    pub fn slowest(&self) -> Duration {
        self.slowest
    }
}
