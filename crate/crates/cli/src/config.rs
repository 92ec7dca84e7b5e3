//! Run configuration: JSON file plus command-line overrides.

use std::fmt;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use atomchain::eigen::DispersionMode;
use atomchain::momentum::SumMode;
use atomchain::pumped::Limit;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::parse::{Scalar, Sweep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Rates,
    Dispersion,
    Eigen,
    Momdist,
    Pattern,
    Pump1,
    Pump2,
    Spectrum,
    G2,
    Sums,
    Verify,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_possible_value().expect("no skipped variants").get_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Snap {
    /// Round off-grid wavenumbers to the nearest grid point with a warning.
    #[default]
    Nearest,
    /// Reject off-grid wavenumbers.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FormName {
    Exact,
    #[default]
    Asymptotic,
    Windowed,
}

/// How angle sweeps over `beta_1` are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Every Bragg angle of every grid wavenumber.
    #[default]
    Grid,
    /// A continuous angle grid through the large-M formulas.
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LimitName {
    FiniteM,
    LargeM,
}

impl From<LimitName> for Limit {
    fn from(l: LimitName) -> Limit {
        match l {
            LimitName::FiniteM => Limit::FiniteM,
            LimitName::LargeM => Limit::LargeM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    TightBinding,
    FullRange,
}

impl From<ModeName> for DispersionMode {
    fn from(m: ModeName) -> DispersionMode {
        match m {
            ModeName::TightBinding => DispersionMode::TightBinding,
            ModeName::FullRange => DispersionMode::FullRange,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SumModeName {
    Finite,
    Limit,
    Both,
}

impl SumModeName {
    pub fn modes(self) -> Vec<SumMode> {
        match self {
            SumModeName::Finite => vec![SumMode::Finite],
            SumModeName::Limit => vec![SumMode::Limit],
            SumModeName::Both => vec![SumMode::Finite, SumMode::Limit],
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub m: Option<Sweep>,
    pub lambda_over_a: Option<Sweep>,
    pub theta: Option<Scalar>,
    pub u: Option<Sweep>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Every key a run may carry. Which task-specific keys are allowed depends on
/// the task; see [`allowed`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Option<Task>,
    #[serde(default)]
    pub chain: ChainSpec,
    pub snap: Option<Snap>,
    pub output: Option<OutputSpec>,

    pub state: Option<String>,
    pub k_cm: Option<String>,
    pub k_pump: Option<String>,
    pub beta_exc: Option<String>,
    pub k_bar: Option<String>,
    pub beta_det: Option<String>,
    pub beta2: Option<String>,
    pub xi: Option<f64>,
    pub epsilon: Option<f64>,
    pub t_ret: Option<f64>,
    pub form: Option<FormName>,
    pub limit: Option<LimitName>,
    pub mode: Option<ModeName>,
    pub sum_mode: Option<SumModeName>,
    pub sampling: Option<Sampling>,
    pub betas: Option<Sweep>,
    pub omega: Option<Sweep>,
    pub q: Option<Sweep>,
    pub x_max: Option<usize>,
}

/// Error located in the config file.
#[derive(Debug)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{}:{}: {}", self.source, l, c, self.message),
            (Some(l), None) => write!(f, "{}:{}: {}", self.source, l, self.message),
            _ => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parsed config with the text it came from, for locating keys.
pub struct Loaded {
    pub config: RunConfig,
    pub source: String,
    pub text: Option<String>,
}

impl Loaded {
    pub fn from_file(path: &std::path::Path) -> Result<Loaded> {
        let source = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| anyhow!("{source}: cannot read config: {e}"))?;
        let config = serde_json::from_str(&text).map_err(|e| ConfigError {
            source: source.clone(),
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string(),
        })?;
        Ok(Loaded { config, source, text: Some(text) })
    }

    pub fn empty() -> Loaded {
        Loaded { config: RunConfig::default(), source: "command line".into(), text: None }
    }

    /// Error pointing at the first line that mentions `key`.
    pub fn error(&self, key: &str, message: impl fmt::Display) -> anyhow::Error {
        let needle = format!("\"{key}\"");
        let found = self.text.as_deref().and_then(|t| {
            t.lines().enumerate().find_map(|(i, l)| l.find(&needle).map(|c| (i + 1, c + 1)))
        });
        ConfigError {
            source: self.source.clone(),
            line: found.map(|f| f.0),
            column: found.map(|f| f.1),
            message: format!("`{key}`: {message}"),
        }
        .into()
    }
}

impl RunConfig {
    /// Task-specific keys that are set.
    pub fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut add = |set: bool, name: &'static str| {
            if set {
                out.push(name);
            }
        };
        add(self.state.is_some(), "state");
        add(self.k_cm.is_some(), "k_cm");
        add(self.k_pump.is_some(), "k_pump");
        add(self.beta_exc.is_some(), "beta_exc");
        add(self.k_bar.is_some(), "k_bar");
        add(self.beta_det.is_some(), "beta_det");
        add(self.beta2.is_some(), "beta2");
        add(self.xi.is_some(), "xi");
        add(self.epsilon.is_some(), "epsilon");
        add(self.t_ret.is_some(), "t_ret");
        add(self.form.is_some(), "form");
        add(self.limit.is_some(), "limit");
        add(self.mode.is_some(), "mode");
        add(self.sum_mode.is_some(), "sum_mode");
        add(self.sampling.is_some(), "sampling");
        add(self.betas.is_some(), "betas");
        add(self.omega.is_some(), "omega");
        add(self.q.is_some(), "q");
        add(self.x_max.is_some(), "x_max");
        out
    }
}

/// Task-specific keys accepted by each task.
pub fn allowed(task: Task) -> &'static [&'static str] {
    match task {
        Task::Rates => &["x_max"],
        Task::Dispersion => &["mode"],
        Task::Eigen => &["k_cm"],
        Task::Momdist => &["state", "k_cm", "form"],
        Task::Pattern => &["state", "t_ret", "betas", "form"],
        Task::Pump1 => &["k_pump", "beta_exc", "xi", "form"],
        Task::Pump2 => &["beta2", "epsilon", "limit", "sampling", "betas"],
        Task::Spectrum => &["k_pump", "beta_exc", "k_bar", "beta_det", "xi", "omega", "form"],
        Task::G2 => &["beta2", "limit", "sampling", "betas"],
        Task::Sums => &["q", "sum_mode"],
        Task::Verify => &[],
    }
}

/// Reject keys the task does not use, and conflicting pairs.
pub fn validate(loaded: &Loaded, task: Task) -> Result<()> {
    let c = &loaded.config;
    let ok = allowed(task);
    for key in c.present() {
        if !ok.contains(&key) {
            let hint = if ok.is_empty() { "it takes none".to_string() } else { format!("it accepts {}", ok.join(", ")) };
            return Err(loaded.error(key, format!("not used by task `{task}`; {hint}")));
        }
    }
    for (a, b) in [("k_pump", "beta_exc"), ("k_bar", "beta_det"), ("state", "k_cm")] {
        let present = c.present();
        if present.contains(&a) && present.contains(&b) {
            return Err(loaded.error(b, format!("give either `{a}` or `{b}`, not both")));
        }
    }
    if let Some(xi) = c.xi {
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(loaded.error("xi", format!("{xi} must be positive")));
        }
    }
    if let Some(e) = c.epsilon {
        if !(e >= 0.0 && e.is_finite()) {
            return Err(loaded.error("epsilon", format!("{e} must be >= 0")));
        }
    }
    if let Some(t) = c.t_ret {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(loaded.error("t_ret", format!("{t} must be >= 0")));
        }
    }
    if task == Task::Momdist && c.state.is_none() && c.k_cm.is_none() {
        bail!("task `momdist` needs `state` or `k_cm`");
    }
    if task == Task::Pattern && c.state.is_none() {
        bail!("task `pattern` needs `state`");
    }
    Ok(())
}
