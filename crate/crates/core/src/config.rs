//! Experiment configuration: named presets and a flat `key = value` text
//! format with optional `[section]` headers, one experiment per section.
//!
//! ```text
//! # keys before the first section are shared by every section
//! seeds = 0..20
//!
//! [po]
//! preset = po-static-desk
//! episodes = 5000
//!
//! [pono-tuned]
//! preset = pono-static-desk
//! switch_rate = 2000
//! ```
//!
//! Within a section the preset is applied first, then shared keys, then the
//! section's own keys. A file without sections describes one experiment.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::{AgentConfig, AtrCountMode};
use crate::atr::{AblationMode, ThresholdMode};
use crate::error::{Error, Result};
use crate::maze::{format_goals, parse_goals, MazeTask, TaskKind, Topology, DEFAULT_MAZE_SIZE};
use crate::network::BootstrapSign;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(Error::Config(format!("unknown precision `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub task: TaskKind,
    #[serde(flatten)]
    pub agent: AgentConfig,
    pub signals: Vec<String>,
    /// `goals[context][signal]`
    pub goals: Vec<Vec<usize>>,
    pub episodes: usize,
    pub max_steps: usize,
    pub switch_rate: usize,
    pub maze_size: usize,
    pub topology: Topology,
    pub seeds: Vec<u64>,
    pub precision: Precision,
    /// Also write the per-episode CSV.
    pub episode_log: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Preset names accepted by `preset = ...` and `presets list`.
pub const PRESETS: &[(&str, &str)] = &[
    ("po-static", "PO task, static threshold, full scale"),
    ("po-dynamic", "PO task, dynamic threshold, full scale"),
    ("no-static", "NO task (5 goals), static threshold, full scale"),
    ("no-dynamic", "NO task (5 goals), dynamic threshold, full scale"),
    ("no3-static", "NO task with 3 goals (0, 5, 10), static threshold, full scale"),
    ("pono-static", "PONO task, static threshold, switch rate 1000, full scale"),
    ("pono-dynamic", "PONO task, dynamic threshold, switch rate 1000, full scale"),
    ("pono-static-tuned", "PONO task, static threshold, switch rate 2000, full scale"),
    ("pono-dynamic-tuned", "PONO task, dynamic threshold, tuned rates, full scale"),
    ("td-sanity", "one goal, no signal, single context; critic sanity check"),
];

/// Suffix selecting the desk-scale variant of a preset: HRR length / 4,
/// episodes / 10, 20 seeds.
pub const DESK_SUFFIX: &str = "-desk";

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        if let Some(base) = name.strip_suffix(DESK_SUFFIX) {
            let mut cfg = Self::preset(base)?;
            cfg.name = name.to_string();
            cfg.agent.hrr_length /= 4;
            cfg.episodes /= 10;
            cfg.seeds = (0..20).collect();
            return Ok(cfg);
        }
        let po = |n: usize, mode: ThresholdMode| {
            let task = MazeTask::po_default();
            Self {
                name: name.to_string(),
                task: TaskKind::Po,
                agent: AgentConfig {
                    hrr_length: n,
                    gamma: 0.9,
                    alpha_train: 0.3,
                    alpha_test: 0.01,
                    lambda: 0.0,
                    threshold_mode: mode,
                    threshold: if mode == ThresholdMode::Static { 0.3 } else { 1.0 },
                    atr_alpha: 0.0,
                    atr_count_mode: AtrCountMode::Static,
                    atrs: 1,
                    ..AgentConfig::default()
                },
                signals: task.signals,
                goals: task.goals,
                episodes: 100_000,
                max_steps: task.max_steps,
                switch_rate: 500,
                maze_size: DEFAULT_MAZE_SIZE,
                topology: Topology::Cycle,
                seeds: (0..100).collect(),
                precision: Precision::F64,
                episode_log: false,
                output: None,
            }
        };
        let no = |n: usize, mode: ThresholdMode, atr_alpha: f64, goals: Vec<Vec<usize>>| {
            let mut cfg = po(n, mode);
            cfg.task = TaskKind::No;
            cfg.signals = Vec::new();
            cfg.agent.atrs = goals.len();
            cfg.goals = goals;
            cfg.agent.gamma = 0.7;
            cfg.agent.alpha_train = 0.1;
            cfg.agent.atr_alpha = atr_alpha;
            cfg
        };
        let pono = |mode: ThresholdMode, switch_rate: usize, atr_alpha: f64, lambda: f64| {
            let task = MazeTask::pono_default();
            let mut cfg = no(25_600, mode, atr_alpha, task.goals);
            cfg.task = TaskKind::Pono;
            cfg.signals = task.signals;
            cfg.switch_rate = switch_rate;
            cfg.agent.lambda = lambda;
            cfg
        };
        let five = MazeTask::no_default().goals;
        let cfg = match name {
            "po-static" => po(10_240, ThresholdMode::Static),
            "po-dynamic" => po(15_360, ThresholdMode::Dynamic),
            "no-static" => no(6_144, ThresholdMode::Static, 0.00065, five),
            "no-dynamic" => no(7_168, ThresholdMode::Dynamic, 0.00063, five),
            "no3-static" => no(
                6_144,
                ThresholdMode::Static,
                0.00065,
                vec![vec![0], vec![5], vec![10]],
            ),
            "pono-static" => pono(ThresholdMode::Static, 1000, 0.00011, 0.01),
            "pono-dynamic" => pono(ThresholdMode::Dynamic, 1000, 0.00011, 0.01),
            "pono-static-tuned" => pono(ThresholdMode::Static, 2000, 0.00011, 0.01),
            "pono-dynamic-tuned" => pono(ThresholdMode::Dynamic, 2000, 0.000105, 0.05),
            "td-sanity" => {
                let mut cfg = no(1024, ThresholdMode::Static, 0.0, vec![vec![0]]);
                cfg.episodes = 5000;
                cfg.agent.epsilon_train = 0.1;
                cfg.agent.ablation_mode = AblationMode::None;
                cfg.seeds = vec![0];
                cfg
            }
            other => return Err(Error::Config(format!("unknown preset `{other}`"))),
        };
        Ok(cfg)
    }

    pub fn maze(&self) -> Result<MazeTask> {
        let task = MazeTask {
            kind: self.task,
            size: self.maze_size,
            topology: self.topology,
            signals: self.signals.clone(),
            goals: self.goals.clone(),
            switch_rate: self.switch_rate,
            max_steps: self.max_steps,
        };
        task.validate()?;
        Ok(task)
    }

    /// Episodes at the end of a run that form the test phase and the
    /// accuracy window: `ceil(episodes / 10)`.
    pub fn test_episodes(&self) -> usize {
        self.episodes.div_ceil(10)
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config(format!("{}: episodes must be at least 1", self.name)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config(format!("{}: seed list is empty", self.name)));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("{}: duplicate seeds", self.name)));
        }
        let scoped = |e: Error| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", self.name)),
            other => Error::Config(format!("{}: {other}", self.name)),
        };
        self.agent.validate().map_err(scoped)?;
        self.maze().map_err(scoped)?;
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let a = &mut self.agent;
        match key {
            "name" => self.name = v.to_string(),
            "task" => self.task = v.parse()?,
            "hrr_length" => a.hrr_length = num(key, v)?,
            "gamma" => a.gamma = num(key, v)?,
            "alpha_train" => a.alpha_train = num(key, v)?,
            "alpha_test" => a.alpha_test = num(key, v)?,
            "epsilon_train" | "epsilon" => a.epsilon_train = num(key, v)?,
            "epsilon_test" => a.epsilon_test = num(key, v)?,
            "lambda" => a.lambda = num(key, v)?,
            "threshold" => a.threshold = num(key, v)?,
            "threshold_mode" => a.threshold_mode = v.parse()?,
            "threshold_alpha" => a.threshold_alpha = num(key, v)?,
            "atr_alpha" => a.atr_alpha = num(key, v)?,
            "growth_floor" => a.growth_floor = num(key, v)?,
            "growth_method" => a.growth_method = v.parse()?,
            "atr_count_mode" => a.atr_count_mode = v.parse()?,
            "atrs" => a.atrs = num(key, v)?,
            "ablation_mode" => a.ablation_mode = v.parse()?,
            "freeze_threshold_on_switch" => a.freeze_threshold_on_switch = boolean(key, v)?,
            "bootstrap_sign" => {
                a.bootstrap_sign = match v {
                    "plus" => BootstrapSign::Plus,
                    "minus" => BootstrapSign::Minus,
                    _ => return Err(Error::Config(format!("bootstrap_sign: `{v}` is not plus|minus"))),
                }
            }
            "signals" => {
                self.signals = if v.is_empty() || v == "-" {
                    Vec::new()
                } else {
                    v.split(',').map(|s| s.trim().to_string()).collect()
                }
            }
            "goals" => self.goals = parse_goals(v)?,
            "episodes" => self.episodes = num(key, v)?,
            "max_steps" => self.max_steps = num(key, v)?,
            "switch_rate" => self.switch_rate = num(key, v)?,
            "maze_size" => self.maze_size = num(key, v)?,
            "topology" => self.topology = v.parse()?,
            "seeds" => self.seeds = parse_seeds(v)?,
            "precision" => self.precision = v.parse()?,
            "episode_log" => self.episode_log = boolean(key, v)?,
            "output" => self.output = Some(PathBuf::from(v)),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Renders the resolved config as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} task, n={}, goals {}, {} episodes, {} seeds)",
            self.name,
            self.task,
            self.agent.hrr_length,
            format_goals(&self.goals),
            self.episodes,
            self.seeds.len()
        )
    }
}

fn num<N: FromStr>(key: &str, v: &str) -> Result<N> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{v}`")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: `{v}` is not a boolean"))),
    }
}

/// `"1,2,5"`, `"0..20"` (half-open) or `"1..=20"`, and comma-joined mixes.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..=") {
            let (a, b): (u64, u64) = (num("seeds", a)?, num("seeds", b)?);
            out.extend(a..=b);
        } else if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (num("seeds", a)?, num("seeds", b)?);
            out.extend(a..b);
        } else {
            out.push(num("seeds", part)?);
        }
    }
    Ok(out)
}

/// Lines of a `key = value` file grouped by section. Keys before the first
/// header land in the unnamed section.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValueFile {
    pub shared: Vec<(String, String)>,
    pub sections: Vec<(String, Vec<(String, String)>)>,
}

impl KeyValueFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut file = KeyValueFile::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {}: unterminated section header", lineno + 1)))?
                    .trim();
                if name.is_empty() {
                    return Err(Error::Config(format!("line {}: empty section name", lineno + 1)));
                }
                file.sections.push((name.to_string(), Vec::new()));
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let pair = (k.trim().to_string(), v.trim().to_string());
            match file.sections.last_mut() {
                Some((_, kv)) => kv.push(pair),
                None => file.shared.push(pair),
            }
        }
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// Resolves every experiment described by a config file.
pub fn load_experiments(text: &str) -> Result<Vec<ExperimentConfig>> {
    let file = KeyValueFile::parse(text)?;
    let shared_preset = lookup(&file.shared, "preset");
    let build = |name: Option<&str>, own: &[(String, String)]| -> Result<ExperimentConfig> {
        let preset = lookup(own, "preset").or(shared_preset).ok_or_else(|| {
            Error::Config(format!(
                "{}: no `preset` given",
                name.unwrap_or("config")
            ))
        })?;
        let mut cfg = ExperimentConfig::preset(preset)?;
        if let Some(n) = name {
            cfg.name = n.to_string();
        }
        for (k, v) in file.shared.iter().chain(own) {
            if k != "preset" {
                cfg.set(k, v)?;
            }
        }
        if let Some(n) = name {
            cfg.name = n.to_string();
        }
        cfg.validate()?;
        Ok(cfg)
    };
    if file.sections.is_empty() {
        Ok(vec![build(None, &[])?])
    } else {
        file.sections
            .iter()
            .map(|(name, kv)| build(Some(name), kv))
            .collect()
    }
}

pub fn load_experiments_from(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_experiments(&text)
}

fn lookup<'a>(kv: &'a [(String, String)], key: &str) -> Option<&'a str> {
    kv.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}
