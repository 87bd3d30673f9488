//! Named pass/fail checks with measured values and tolerances.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
    /// Offending nodes (flat grid indices), if any were recorded.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckReport {
    pub checks: Vec<Check>,
}

/// JSON shape of one check: `{value, tol, pass}`.
#[derive(Serialize)]
struct CheckJson<'a> {
    value: f64,
    tol: f64,
    pass: bool,
    #[serde(skip_serializing_if = "<[usize]>::is_empty")]
    violations: &'a [usize],
}

impl CheckReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Passes when `value <= tol`.
    pub fn at_most(&mut self, name: impl Into<String>, value: f64, tol: f64) -> &mut Self {
        self.push(name, value, tol, value <= tol, Vec::new())
    }

    /// Passes when `value >= tol`.
    pub fn at_least(&mut self, name: impl Into<String>, value: f64, tol: f64) -> &mut Self {
        self.push(name, value, tol, value >= tol, Vec::new())
    }

    pub fn push(
        &mut self,
        name: impl Into<String>,
        value: f64,
        tol: f64,
        pass: bool,
        violations: Vec<usize>,
    ) -> &mut Self {
        // NaN never passes
        let pass = pass && !value.is_nan();
        self.checks.push(Check {
            name: name.into(),
            value,
            tol,
            pass,
            violations,
        });
        self
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn extend(&mut self, other: CheckReport) {
        self.checks.extend(other.checks);
    }

    /// `{check_name: {value, tol, pass}, ..., "overall": bool}`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = BTreeMap::new();
        for c in &self.checks {
            let v = CheckJson {
                value: c.value,
                tol: c.tol,
                pass: c.pass,
                violations: &c.violations,
            };
            map.insert(
                c.name.clone(),
                serde_json::to_value(v).expect("check serializes"),
            );
        }
        let mut obj = serde_json::Map::from_iter(map);
        obj.insert("overall".into(), serde_json::Value::Bool(self.pass()));
        serde_json::Value::Object(obj)
    }
}
