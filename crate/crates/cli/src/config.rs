//! Experiment configuration, read from and written to TOML.
//!
//! A minimal config:
//!
//! ```toml
//! kind = "fixation"
//! n = [200]
//! replicas = 1000
//! seed = 7
//!
//! [law]
//! family = "finite"
//! atoms = [[1.0, 1.0]]
//!
//! [init]
//! rule = "same-fraction"
//! s0 = 0.3
//!
//! [tolerances]
//! fixation_abs = 0.045
//! ```
//!
//! Acceptance tolerances live under `[tolerances]`; a check runs only when
//! its tolerance is present.

use std::path::{Path, PathBuf};

use moran_core::engine::InitRule;
use moran_core::rate_law::LawSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simulate,
    Collapse,
    CompareFw,
    Fixation,
    AssumptionCheck,
    DiagnoseLaw,
    ProbeVariance,
}

impl Kind {
    pub fn tag(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::Collapse => "collapse",
            Kind::CompareFw => "compare-fw",
            Kind::Fixation => "fixation",
            Kind::AssumptionCheck => "assumption-check",
            Kind::DiagnoseLaw => "diagnose-law",
            Kind::ProbeVariance => "probe-variance",
        }
    }
}

/// How the environment for each `N` is produced from the law.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvMode {
    /// i.i.d. draws from the law.
    #[default]
    Draw,
    /// Counts `N mu_k` rounded by largest remainder; no randomness.
    Proportional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitSpec {
    SameFraction { s0: f64 },
    Fractions { values: Vec<f64> },
    WholeClasses { classes: Vec<usize> },
    Uniform { s0: f64 },
}

impl InitSpec {
    pub fn rule(&self) -> InitRule {
        match self {
            InitSpec::SameFraction { s0 } => InitRule::SameFraction(*s0),
            InitSpec::Fractions { values } => InitRule::Fractions(values.clone()),
            InitSpec::WholeClasses { classes } => InitRule::WholeClasses(classes.clone()),
            InitSpec::Uniform { s0 } => InitRule::Uniform(*s0),
        }
    }

    /// True when the initial point lies (up to rounding) on the line `s n`.
    pub fn on_line(&self) -> bool {
        matches!(self, InitSpec::SameFraction { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    /// `start + i step` for `i = 0, 1, ...` up to `stop` (inclusive within
    /// a relative slack of 1e-9 steps).
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FwSpec {
    /// Reference diffusion constant; defaults to the law's `D`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    /// Starting value; defaults to the mean initial weighted mass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
    pub dt: f64,
    pub samples: usize,
    /// Time at which the particle and reference laws are compared.
    pub t_compare: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_threshold: Option<f64>,
}

/// Settings for the collapse study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseSpec {
    /// Window for the heterozygosity log-slope regression.
    pub slope_window: [f64; 2],
    /// Integration window for the term1 integral.
    pub mz_window: [f64; 2],
    /// Grid times before this are skipped by the Lyapunov-bound check.
    pub bound_from: f64,
}

impl Default for CollapseSpec {
    fn default() -> Self {
        Self {
            slope_window: [0.2, 1.0],
            mz_window: [0.1, 1.0],
            bound_from: 0.05,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Martingale check: `|mean - start| <= k SE` at every grid time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_sigma: Option<f64>,
    /// Relative error of the heterozygosity slope against `-2 D_N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_rel: Option<f64>,
    /// Mean `h` must stay below this multiple of the Lyapunov bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_bound_factor: Option<f64>,
    /// Each term1 integral must be at most this multiple of the previous `N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mz_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixation_abs: Option<f64>,
    /// `|D_N - D|` bound for every environment drawn by `diagnose-law`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_abs: Option<f64>,
    /// Relative error of the short-time variance slope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_rel: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub n: Vec<u64>,
    pub replicas: usize,
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub env_mode: EnvMode,
    pub law: LawSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fw: Option<FwSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumption: Option<AssumptionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collapse: Option<CollapseSpec>,
    /// Probe time for `probe-variance`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_small: Option<f64>,
    /// Time cap for `fixation` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Record per-class counts at grid times (`simulate` only).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub snapshots: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.n.is_empty() {
            return bad("`n` must list at least one population size".into());
        }
        if let Some(n) = self.n.iter().find(|&&n| n < 2) {
            return bad(format!("population size {n} is below 2"));
        }
        if self.replicas < 1 {
            return bad("`replicas` must be at least 1".into());
        }
        self.law
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(g) = &self.grid {
            if !(g.step > 0.0 && g.step.is_finite()) {
                return bad(format!("grid step {} must be positive", g.step));
            }
            if !(g.start > 0.0 && g.stop >= g.start && g.stop.is_finite()) {
                return bad(format!(
                    "grid [{}, {}] must satisfy 0 < start <= stop",
                    g.start, g.stop
                ));
            }
        }
        let need = |present: bool, what: &str| {
            if present {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "kind `{}` needs {what}",
                    self.kind.tag()
                )))
            }
        };
        match self.kind {
            Kind::Simulate | Kind::Collapse => {
                need(self.init.is_some(), "[init]")?;
                need(self.grid.is_some(), "[grid]")?;
            }
            Kind::CompareFw => {
                need(self.init.is_some(), "[init]")?;
                need(self.fw.is_some(), "[fw]")?;
            }
            Kind::Fixation => need(self.init.is_some(), "[init]")?,
            Kind::AssumptionCheck => need(self.assumption.is_some(), "[assumption]")?,
            Kind::DiagnoseLaw => {}
            Kind::ProbeVariance => {
                need(
                    matches!(self.init, Some(InitSpec::SameFraction { .. })),
                    "a same-fraction [init]",
                )?;
                need(self.t_small.is_some(), "`t_small`")?;
            }
        }
        Ok(())
    }
}
