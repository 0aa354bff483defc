//! Flat `key = value` experiment files.
//!
//! Blank lines and `#` comments are ignored. List-valued keys take
//! comma-separated values. Unknown keys and malformed values are reported with
//! their 1-based line number.
//!
//! Denoising keys: `signal`, `n`, `snr`, `snr_unit` (`db` or `linear`),
//! `noise_shape`, `replications`, `seed`, `methods`, `filter`, `levels`,
//! `alpha`, `eta`, `mode`, `include_approx`, `center`, `oracle_sigma`,
//! `budget` (`ln` or `log2`). `signal`, `n`, `snr` and `noise_shape` accept
//! lists; the plan is their Cartesian product.
//!
//! Convergence keys: `shape`, `factor_ratio`, `n`, `alpha`, `eta`,
//! `replications`, `seed`, `sigma`.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::convergence::ConvergenceConfig;
use super::experiment::{ExperimentConfig, Method, Snr};
use super::signals::Benchmark;
use crate::error::{Error, Result};
use crate::peeling::IterationBudget;

/// One parsed entry with the line it came from.
#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: String,
}

/// Parsed `key = value` pairs.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, Entry>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| Error::Config { line, msg: format!("expected key = value, got '{body}'") })?;
            let key = k.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(Error::Config { line, msg: "empty key".into() });
            }
            let entry = Entry { line, value: v.trim().to_string() };
            if let Some(prev) = entries.insert(key.clone(), entry) {
                return Err(Error::Config { line, msg: format!("'{key}' already set on line {}", prev.line) });
            }
        }
        Ok(Self { entries })
    }

    fn check_known(&self, known: &[&str]) -> Result<()> {
        for (k, e) in &self.entries {
            if !known.contains(&k.as_str()) {
                return Err(Error::Config { line: e.line, msg: format!("unknown key '{k}'") });
            }
        }
        Ok(())
    }

    fn scalar<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.entries
            .get(key)
            .map(|e| {
                e.value
                    .parse::<T>()
                    .map_err(|err| Error::Config { line: e.line, msg: format!("{key}: {err}") })
            })
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(e) = self.entries.get(key) else { return Ok(None) };
        let items = e
            .value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|err| Error::Config { line: e.line, msg: format!("{key}: '{s}': {err}") })
            })
            .collect::<Result<Vec<T>>>()?;
        if items.is_empty() {
            return Err(Error::Config { line: e.line, msg: format!("{key}: empty list") });
        }
        Ok(Some(items))
    }

    fn boolean(&self, key: &str) -> Result<Option<bool>> {
        self.entries
            .get(key)
            .map(|e| match e.value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" | "on" => Ok(true),
                "false" | "no" | "0" | "off" => Ok(false),
                other => Err(Error::Config { line: e.line, msg: format!("{key}: expected a boolean, got '{other}'") }),
            })
            .transpose()
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrUnit {
    #[default]
    Db,
    Linear,
}

impl FromStr for SnrUnit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "db" => Ok(SnrUnit::Db),
            "linear" => Ok(SnrUnit::Linear),
            other => Err(Error::InvalidInput(format!("unknown SNR unit '{other}'"))),
        }
    }
}

impl FromStr for IterationBudget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ln" | "natural" => Ok(IterationBudget::NaturalLog),
            "log2" => Ok(IterationBudget::Log2),
            other => Err(Error::InvalidInput(format!("unknown iteration budget '{other}'"))),
        }
    }
}

/// A grid of denoising experiments sharing everything but the swept keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPlan {
    pub base: ExperimentConfig,
    pub signals: Vec<Benchmark>,
    pub sizes: Vec<usize>,
    pub snr_values: Vec<f64>,
    pub snr_unit: SnrUnit,
    pub noise_shapes: Vec<f64>,
}

impl Default for BenchPlan {
    fn default() -> Self {
        let base = ExperimentConfig::default();
        Self {
            signals: vec![base.signal],
            sizes: vec![base.n],
            snr_values: vec![base.snr.db()],
            snr_unit: SnrUnit::Db,
            noise_shapes: vec![base.noise_shape],
            base,
        }
    }
}

const BENCH_KEYS: &[&str] = &[
    "signal",
    "n",
    "snr",
    "snr_unit",
    "noise_shape",
    "replications",
    "seed",
    "methods",
    "filter",
    "levels",
    "alpha",
    "eta",
    "mode",
    "include_approx",
    "center",
    "oracle_sigma",
    "budget",
];

const CONVERGE_KEYS: &[&str] = &["shape", "factor_ratio", "n", "alpha", "eta", "replications", "seed", "sigma"];

impl BenchPlan {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        kv.check_known(BENCH_KEYS)?;
        let mut plan = BenchPlan::default();
        let b = &mut plan.base;
        if let Some(v) = kv.list("signal")? {
            plan.signals = v;
        }
        if let Some(v) = kv.list("n")? {
            plan.sizes = v;
        }
        if let Some(v) = kv.scalar("snr_unit")? {
            plan.snr_unit = v;
        }
        if let Some(v) = kv.list("snr")? {
            plan.snr_values = v;
        } else if plan.snr_unit == SnrUnit::Linear {
            plan.snr_values = vec![b.snr.linear()];
        }
        if let Some(v) = kv.list("noise_shape")? {
            plan.noise_shapes = v;
        }
        if let Some(v) = kv.scalar("replications")? {
            b.replications = v;
        }
        if let Some(v) = kv.scalar("seed")? {
            b.base_seed = v;
        }
        if let Some(v) = kv.list::<Method>("methods")? {
            b.methods = v;
        }
        if let Some(v) = kv.scalar("filter")? {
            b.filter = v;
        }
        if let Some(v) = kv.scalar("levels")? {
            b.levels = Some(v);
        }
        if let Some(v) = kv.scalar("alpha")? {
            b.alpha = v;
        }
        if let Some(v) = kv.scalar("eta")? {
            b.eta = v;
        }
        if let Some(v) = kv.scalar("mode")? {
            b.mode = v;
        }
        if let Some(v) = kv.boolean("include_approx")? {
            b.include_approx = v;
        }
        if let Some(v) = kv.boolean("center")? {
            b.center = v;
        }
        if let Some(v) = kv.boolean("oracle_sigma")? {
            b.oracle_sigma = v;
        }
        if let Some(v) = kv.scalar("budget")? {
            b.budget = v;
        }
        for cfg in plan.configs() {
            cfg.validate().map_err(|e| {
                let line = ["n", "noise_shape", "snr", "replications", "methods", "filter"]
                    .iter()
                    .map(|k| kv.line_of(k))
                    .find(|&l| l > 0)
                    .unwrap_or(0);
                Error::Config { line, msg: e.to_string() }
            })?;
        }
        Ok(plan)
    }

    /// Expands the grid in the order signal, N, noise shape, SNR.
    pub fn configs(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &signal in &self.signals {
            for &n in &self.sizes {
                for &noise_shape in &self.noise_shapes {
                    for &v in &self.snr_values {
                        let snr = match self.snr_unit {
                            SnrUnit::Db => Snr::Db(v),
                            SnrUnit::Linear => Snr::Linear(v),
                        };
                        out.push(ExperimentConfig { signal, n, noise_shape, snr, ..self.base.clone() });
                    }
                }
            }
        }
        out
    }
}

pub fn parse_convergence_config(text: &str) -> Result<ConvergenceConfig> {
    let kv = KeyValues::parse(text)?;
    kv.check_known(CONVERGE_KEYS)?;
    let mut c = ConvergenceConfig::default();
    if let Some(v) = kv.scalar("shape")? {
        c.shape = v;
    }
    if let Some(v) = kv.scalar("factor_ratio")? {
        c.factor_ratio = v;
    }
    if let Some(v) = kv.list("n")? {
        c.n_grid = v;
    }
    if let Some(v) = kv.scalar("alpha")? {
        c.alpha = v;
    }
    if let Some(v) = kv.scalar("eta")? {
        c.eta = v;
    }
    if let Some(v) = kv.scalar("replications")? {
        c.replications = v;
    }
    if let Some(v) = kv.scalar("seed")? {
        c.base_seed = v;
    }
    if let Some(v) = kv.scalar("sigma")? {
        c.sigma = v;
    }
    Ok(c)
}
