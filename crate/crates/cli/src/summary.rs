//! Key-value summary document.
//!
//! One `key = value` line per entry, sorted by key. Acceptance checks are
//! written as `check.<name> = pass` or `fail`, each followed by a
//! `check.<name>.detail` line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    values: BTreeMap<String, String>,
    checks: BTreeMap<String, (bool, String)>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(&mut self, key: impl Into<String>, value: f64) {
        self.values.insert(key.into(), format!("{value:.16e}"));
    }

    pub fn int(&mut self, key: impl Into<String>, value: u64) {
        self.values.insert(key.into(), value.to_string());
    }

    pub fn text(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.values.insert(key.into(), value.into());
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.insert(name.into(), (passed, detail.into()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn check_passed(&self, name: &str) -> Option<bool> {
        self.checks.get(name).map(|c| c.0)
    }

    pub fn checks(&self) -> impl Iterator<Item = (&str, bool, &str)> {
        self.checks
            .iter()
            .map(|(k, (p, d))| (k.as_str(), *p, d.as_str()))
    }

    pub fn failed(&self) -> usize {
        self.checks.values().filter(|c| !c.0).count()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            writeln!(out, "{k} = {v}").unwrap();
        }
        for (k, (passed, detail)) in &self.checks {
            writeln!(out, "check.{k} = {}", if *passed { "pass" } else { "fail" }).unwrap();
            writeln!(out, "check.{k}.detail = {detail}").unwrap();
        }
        out
    }

    /// Inverse of [`Summary::render`].
    pub fn parse(text: &str) -> Option<Self> {
        let mut s = Summary::new();
        let mut pending: BTreeMap<String, bool> = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once(" = ")?;
            if let Some(name) = k.strip_prefix("check.") {
                if let Some(name) = name.strip_suffix(".detail") {
                    let passed = pending.remove(name)?;
                    s.check(name, passed, v);
                } else {
                    pending.insert(name.to_string(), v == "pass");
                }
            } else {
                s.text(k, v);
            }
        }
        pending.is_empty().then_some(s)
    }
}
