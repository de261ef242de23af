//! `key = value` benchmark configuration files.

use std::path::PathBuf;

use omt_core::harness::{ExperimentConfig, Method};

/// Everything a benchmark run needs besides the loaded data.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSettings {
    pub datasets: Vec<String>,
    pub data_dir: Option<PathBuf>,
    pub out: PathBuf,
    pub experiment: ExperimentConfig,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        BenchmarkSettings {
            datasets: Vec::new(),
            data_dir: None,
            out: PathBuf::from("results"),
            experiment: ExperimentConfig::default(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "datasets",
    "data_dir",
    "out",
    "methods",
    "folds",
    "repeats",
    "seed",
    "alpha",
    "workers",
    "scouts",
    "selected",
    "elite",
    "nep",
    "osp",
    "ngh",
    "patch_decay",
    "max_iterations",
    "epsilon",
    "mlp_hidden",
    "mlp_rate",
    "mlp_momentum",
    "mlp_epochs",
    "mt_c",
    "mt_prune",
    "mt_k",
    "mt_t",
];

fn list(v: &str) -> Vec<String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("{key}: cannot parse '{v}'"))
}

fn flag(key: &str, v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got '{v}'")),
    }
}

impl BenchmarkSettings {
    /// Applies one setting. Unknown keys are an error naming the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let e = &mut self.experiment;
        match key {
            "datasets" => self.datasets = list(value),
            "data_dir" => self.data_dir = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "methods" => {
                e.methods = list(value)
                    .iter()
                    .map(|m| m.parse::<Method>())
                    .collect::<Result<_, _>>()
                    .map_err(|err| format!("methods: {err}"))?
            }
            "folds" => e.k = num(key, value)?,
            "repeats" => e.repeats = num(key, value)?,
            "seed" => e.base_seed = num(key, value)?,
            "alpha" => e.alpha = num(key, value)?,
            "workers" => e.workers = num(key, value)?,
            "scouts" => e.bees.scouts = num(key, value)?,
            "selected" => e.bees.selected = num(key, value)?,
            "elite" => e.bees.elite = num(key, value)?,
            "nep" => e.bees.elite_recruits = num(key, value)?,
            "osp" => e.bees.other_recruits = num(key, value)?,
            "ngh" => e.bees.ngh = num(key, value)?,
            "patch_decay" => e.bees.patch_decay = num(key, value)?,
            "max_iterations" => e.bees.max_iterations = num(key, value)?,
            "epsilon" => e.bees.epsilon = num(key, value)?,
            "mlp_hidden" => e.mlp.hidden = Some(num(key, value)?),
            "mlp_rate" => e.mlp.learning_rate = num(key, value)?,
            "mlp_momentum" => e.mlp.momentum = num(key, value)?,
            "mlp_epochs" => e.mlp.epochs = num(key, value)?,
            "mt_c" => e.mt_default.min_instances = num(key, value)?,
            "mt_prune" => e.mt_default.prune = flag(key, value)?,
            "mt_k" => e.mt_default.smoothing = num(key, value)?,
            "mt_t" => e.mt_default.split_threshold = num(key, value)?,
            other => {
                return Err(format!(
                    "unknown configuration key '{other}' (known: {})",
                    KEYS.join(", ")
                ))
            }
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut s = BenchmarkSettings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value, got '{line}'", i + 1))?;
            s.set(k.trim(), v.trim()).map_err(|e| format!("line {}: {e}", i + 1))?;
        }
        Ok(s)
    }
}
