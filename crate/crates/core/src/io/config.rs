//! Flat `key=value` run configuration.
//!
//! One setting per line; `#` starts a comment; blank lines are ignored.
//! Relative paths resolve against the directory holding the config file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::synthetic::SyntheticSpec;
use crate::attack::{AttackConfig, EtaRule};
use crate::error::{Error, Result};
use crate::predictor::TrainingConfig;
use crate::selection::SelectionStrategy;

/// Nominal budgets swept by default.
pub const DEFAULT_BUDGETS: [f64; 5] = [20.0, 50.0, 100.0, 150.0, 200.0];

/// Splits config text into ordered `(key, value)` pairs, rejecting lines
/// without `=` and repeated keys.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {line:?}", k + 1)))?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", k + 1)));
        }
        if !seen.insert(key.clone()) {
            return Err(Error::Config(format!("line {}: duplicate key {key:?}", k + 1)));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

/// Accepts `n/10`, `proportional:0.1` or `constant:5`.
fn parse_eta(value: &str) -> Result<EtaRule> {
    let v = value.replace(' ', "");
    if let Some(d) = v.strip_prefix("n/") {
        let d: f64 = parse("eta", d)?;
        return Ok(EtaRule::Proportional(1.0 / d));
    }
    match v.split_once(':') {
        Some(("proportional", f)) => Ok(EtaRule::Proportional(parse("eta", f)?)),
        Some(("constant", f)) => Ok(EtaRule::Constant(parse("eta", f)?)),
        _ => Err(Error::Config(format!(
            "eta: expected n/<d>, proportional:<f> or constant:<f>, got {value:?}"
        ))),
    }
}

fn set_attack_key(cfg: &mut AttackConfig, key: &str, value: &str) -> Result<bool> {
    match key {
        "eps_minus" => cfg.eps_minus = parse(key, value)?,
        "eps_plus" => cfg.eps_plus = parse(key, value)?,
        "a" => cfg.a = parse(key, value)?,
        "c" => cfg.c = parse(key, value)?,
        "alpha" => cfg.alpha = parse(key, value)?,
        "gamma" => cfg.gamma = parse(key, value)?,
        "eta" => cfg.eta = parse_eta(value)?,
        "max_iter" => cfg.max_iter = parse(key, value)?,
        "probe_iter" => cfg.probe_iter = parse(key, value)?,
        "objective" => cfg.objective = parse(key, value)?,
        "node_weights" => cfg.node_weights = Some(parse_list(key, value)?),
        _ => return Ok(false),
    }
    Ok(true)
}

/// Builds an [`AttackConfig`] from `key=value` text holding only attack keys.
pub fn attack_config_from_str(text: &str) -> Result<AttackConfig> {
    let mut cfg = AttackConfig::default();
    for (key, value) in parse_key_values(text)? {
        if key == "seed" {
            cfg.seed = parse(&key, &value)?;
        } else if !set_attack_key(&mut cfg, &key, &value)? {
            return Err(Error::Config(format!("unknown attack key {key:?}")));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// How nominal budgets map onto this graph's degree costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetScale {
    /// `total_cost / 200`, so B = 50 buys a quarter of the total cost.
    Auto,
    Factor(f64),
}

impl BudgetScale {
    pub fn factor(self, total_cost: f64) -> f64 {
        match self {
            BudgetScale::Auto => total_cost / 200.0,
            BudgetScale::Factor(f) => f,
        }
    }
}

/// Everything a CLI run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub adjacency: Option<PathBuf>,
    pub positions: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    /// Extra checkpoints compared alongside `checkpoint` in reports.
    pub variant_checkpoints: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub window: usize,
    pub horizon: usize,
    pub hidden: Vec<usize>,
    pub training: TrainingConfig,
    pub attack: AttackConfig,
    /// Nominal budget for attack, select and evaluate.
    pub budget: f64,
    pub budget_scale: BudgetScale,
    pub budgets: Vec<f64>,
    pub strategy: SelectionStrategy,
    pub strategies: Vec<SelectionStrategy>,
    /// Explicit attack set; overrides strategy selection in `attack`.
    pub attack_set: Option<Vec<usize>>,
    pub windows: usize,
    /// Window attacked by `attack` and `select`; `None` takes the first
    /// sampled test window.
    pub window_start: Option<usize>,
    /// Node attacked for the hop curve; `None` picks the highest-degree node.
    pub hop_node: Option<usize>,
    pub plots: bool,
    pub synthetic: SyntheticSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            adjacency: None,
            positions: None,
            checkpoint: None,
            variant_checkpoints: Vec::new(),
            out: None,
            seed: 0,
            window: 12,
            horizon: 3,
            hidden: vec![16, 16],
            training: TrainingConfig::default(),
            attack: AttackConfig::default(),
            budget: 50.0,
            budget_scale: BudgetScale::Auto,
            budgets: DEFAULT_BUDGETS.to_vec(),
            strategy: SelectionStrategy::KgSpsa,
            strategies: SelectionStrategy::ALL.to_vec(),
            attack_set: None,
            windows: 50,
            window_start: None,
            hop_node: None,
            plots: true,
            synthetic: SyntheticSpec::default(),
        }
    }
}

impl RunConfig {
    /// Reads and validates a config file; referenced input files must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let cfg = Self::parse(&text, base)?;
        cfg.check_files()?;
        Ok(cfg)
    }

    /// Parses config text, resolving relative paths against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (key, value) in parse_key_values(text)? {
            cfg.set(&key, &value, base)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one setting. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = || base.join(value);
        if set_attack_key(&mut self.attack, key, value)? {
            return Ok(());
        }
        match key {
            "data" => self.data = Some(path()),
            "adjacency" => self.adjacency = Some(path()),
            "positions" => self.positions = Some(path()),
            "checkpoint" => self.checkpoint = Some(path()),
            "variant_checkpoints" => {
                self.variant_checkpoints = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| base.join(s))
                    .collect()
            }
            "out" => self.out = Some(path()),
            "seed" => self.seed = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "horizon" => self.horizon = parse(key, value)?,
            "hidden" => self.hidden = parse_list(key, value)?,
            "learning_rate" => self.training.learning_rate = parse(key, value)?,
            "batch_size" => self.training.batch_size = parse(key, value)?,
            "epochs" => self.training.epochs = parse(key, value)?,
            "drop_mode" => self.training.drop_mode = parse(key, value)?,
            "drop_prob" => self.training.drop_prob = parse(key, value)?,
            "train_fraction" => self.training.train_fraction = parse(key, value)?,
            "budget" => self.budget = parse(key, value)?,
            "budget_scale" => {
                self.budget_scale = if value.eq_ignore_ascii_case("auto") {
                    BudgetScale::Auto
                } else {
                    BudgetScale::Factor(parse(key, value)?)
                }
            }
            "budgets" => self.budgets = parse_list(key, value)?,
            "strategy" => self.strategy = parse(key, value)?,
            "strategies" => self.strategies = parse_list(key, value)?,
            "attack_set" => self.attack_set = Some(parse_list(key, value)?),
            "windows" => self.windows = parse(key, value)?,
            "window_start" => self.window_start = Some(parse(key, value)?),
            "hop_node" => {
                self.hop_node = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "plots" => self.plots = parse_bool(key, value)?,
            "n_nodes" => self.synthetic.n_nodes = parse(key, value)?,
            "graph_model" => self.synthetic.graph_model = parse(key, value)?,
            "mean_speed" => self.synthetic.mean_speed = parse(key, value)?,
            "amplitude" => self.synthetic.amplitude = parse(key, value)?,
            "noise_std" => self.synthetic.noise_std = parse(key, value)?,
            "speed_spread" => self.synthetic.speed_spread = parse(key, value)?,
            "target_degree" => self.synthetic.target_degree = parse(key, value)?,
            "noise_persistence" => self.synthetic.noise_persistence = parse(key, value)?,
            "days" => self.synthetic.days = parse(key, value)?,
            "interval_minutes" => self.synthetic.interval_minutes = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        self.attack.validate()?;
        self.synthetic.validate()?;
        if self.window == 0 || self.horizon == 0 {
            return Err(Error::Config("window and horizon must be at least 1".into()));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Config("hidden needs at least one positive layer width".into()));
        }
        if !(self.budget.is_finite() && self.budget >= 0.0) {
            return Err(Error::Config(format!("budget must be non-negative, got {}", self.budget)));
        }
        if let BudgetScale::Factor(f) = self.budget_scale {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::Config(format!("budget_scale must be positive, got {f}")));
            }
        }
        if self.budgets.iter().any(|b| b.is_nan() || *b < 0.0) {
            return Err(Error::Config("budgets must be non-negative".into()));
        }
        if self.budgets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config("budgets must be sorted ascending".into()));
        }
        if self.windows == 0 {
            return Err(Error::Config("windows must be at least 1".into()));
        }
        Ok(())
    }

    /// Every input file named by the config must exist.
    pub fn check_files(&self) -> Result<()> {
        let inputs = [&self.data, &self.adjacency, &self.positions, &self.checkpoint];
        for p in inputs.into_iter().flatten().chain(&self.variant_checkpoints) {
            if !p.is_file() {
                return Err(Error::Config(format!("file not found: {}", p.display())));
            }
        }
        Ok(())
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            seed: self.seed,
            ..self.synthetic.clone()
        }
    }

    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig {
            seed: self.seed,
            ..self.training.clone()
        }
    }

    pub fn attack_config(&self) -> AttackConfig {
        self.attack.with_seed(self.seed)
    }
}
