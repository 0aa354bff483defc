//! The stochastic peeling iteration on a coefficient vector.
//!
//! In squared coordinates `U_k = T_k²`, `Y(q) = z(q)²` the algorithm is the
//! fixed-point iteration `U_{k+1} = g_N(U_k)` from `U_0 = +∞` with
//! `g_N(x) = (F²/N) Σ_q Y(q) 1{Y(q) < x}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::detmap::{critical_constant, fm_bound, supercritical_structure, ReducedMap};
use crate::error::{domain, Error, Result};
use crate::numeric::CompensatedSum;

/// `g_N` prepared for repeated evaluation: sorted squares and their
/// compensated prefix sums. Each evaluation is a binary search, and the
/// value depends only on how many squares lie below `x`, so it is
/// independent of the input order.
#[derive(Debug, Clone)]
pub struct EmpiricalMap {
    factor_sq: f64,
    len: f64,
    squares: Vec<f64>,
    prefix: Vec<f64>,
}

impl EmpiricalMap {
    pub fn new(coeffs: &[f64], factor: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("empirical map needs at least one coefficient".into()));
        }
        if !(factor.is_finite() && factor > 0.0) {
            return domain(format!("peeling factor must be finite and > 0, got {factor}"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        let mut squares: Vec<f64> = coeffs.iter().map(|c| c * c).collect();
        squares.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(squares.len() + 1);
        let mut acc = CompensatedSum::new();
        prefix.push(0.0);
        for &y in &squares {
            acc.add(y);
            prefix.push(acc.value());
        }
        Ok(Self { factor_sq: factor * factor, len: coeffs.len() as f64, squares, prefix })
    }

    pub fn len(&self) -> usize {
        self.squares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    /// `g_N(x)`; `x = +∞` gives `F²` times the mean square.
    pub fn value(&self, x: f64) -> f64 {
        let below = self.squares.partition_point(|&y| y < x);
        self.factor_sq * (self.prefix[below] / self.len)
    }

    /// Energy `Σ Y(q) 1{Y(q) < x}` left below the threshold.
    pub fn energy_below(&self, x: f64) -> f64 {
        self.prefix[self.squares.partition_point(|&y| y < x)]
    }
}

pub fn empirical_g(coeffs: &[f64], factor: f64, x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return domain(format!("g_N is evaluated at x >= 0, got {x}"));
    }
    Ok(EmpiricalMap::new(coeffs, factor)?.value(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Exactly n steps.
    FixedIterations(usize),
    /// Stop once `‖n_k‖² - ‖n_{k+1}‖² ≤ ε`.
    EnergyDrop(f64),
    /// Stop when `U_{k+1} = U_k` exactly.
    ExactFixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeelingConfig {
    pub factor: f64,
    pub stop_rule: StopRule,
    pub max_iterations: usize,
}

impl PeelingConfig {
    pub fn new(factor: f64, stop_rule: StopRule, max_iterations: usize) -> Result<Self> {
        let cfg = Self { factor, stop_rule, max_iterations };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.factor.is_finite() && self.factor > 0.0) {
            return domain(format!("peeling factor must be finite and > 0, got {}", self.factor));
        }
        if self.max_iterations == 0 {
            return domain("max_iterations must be at least 1");
        }
        match self.stop_rule {
            StopRule::EnergyDrop(eps) if !(eps >= 0.0) => {
                domain(format!("energy tolerance must be >= 0, got {eps}"))
            }
            StopRule::FixedIterations(n) if n > self.max_iterations => domain(format!(
                "fixed iteration count {n} exceeds max_iterations {}",
                self.max_iterations
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CompletedIterations,
    EnergyDrop,
    FixedPoint,
}

/// Full record of one run. `u[0]` is `+∞` and serializes as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeelingTrace {
    #[serde(rename = "u", serialize_with = "serialize_sequence")]
    pub u_sequence: Vec<f64>,
    pub t_final: f64,
    #[serde(rename = "iterations")]
    pub iterations_run: usize,
    pub stop_reason: StopReason,
    pub fluctuations: Option<Vec<f64>>,
}

fn serialize_sequence<S: serde::Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        if x.is_finite() {
            seq.serialize_element(x)?;
        } else {
            seq.serialize_element(&None::<f64>)?;
        }
    }
    seq.end()
}

impl PeelingTrace {
    pub fn final_u(&self) -> f64 {
        *self.u_sequence.last().expect("trace always holds U_0")
    }
}

/// Runs the peeling iteration. With `reference = Some((σ, map))` (the map's
/// factor must equal the config's) each step also records
/// `ε_{k,N} = g_N(U_k) - g_{σ,u}(U_k)`.
pub fn run_peeling(
    coeffs: &[f64],
    config: &PeelingConfig,
    reference: Option<(f64, &ReducedMap)>,
) -> Result<PeelingTrace> {
    config.validate()?;
    let map = EmpiricalMap::new(coeffs, config.factor)?;
    run_peeling_on(&map, config, reference)
}

/// As [`run_peeling`], reusing a prepared [`EmpiricalMap`].
pub fn run_peeling_on(
    map: &EmpiricalMap,
    config: &PeelingConfig,
    reference: Option<(f64, &ReducedMap)>,
) -> Result<PeelingTrace> {
    config.validate()?;
    if (map.factor_sq - config.factor * config.factor).abs() > 1e-12 * map.factor_sq {
        return domain("empirical map was built with a different factor");
    }
    if let Some((sigma, det)) = reference {
        if !(sigma.is_finite() && sigma > 0.0) {
            return domain(format!("reference sigma must be > 0, got {sigma}"));
        }
        if (det.factor() - config.factor).abs() > 1e-12 * config.factor {
            return domain(format!(
                "reference map factor {} differs from config factor {}",
                det.factor(),
                config.factor
            ));
        }
    }
    let scale = config.factor * config.factor / map.len;

    let mut u_sequence = vec![f64::INFINITY];
    let mut fluctuations = reference.map(|_| Vec::new());
    let mut current = f64::INFINITY;
    let mut steps = 0usize;
    let reason = loop {
        if let StopRule::FixedIterations(n) = config.stop_rule {
            if steps == n {
                break StopReason::CompletedIterations;
            }
        }
        if steps == config.max_iterations {
            return Err(Error::IterationLimit(config.max_iterations));
        }
        let next = map.value(current);
        if let (Some(fl), Some((sigma, det))) = (fluctuations.as_mut(), reference) {
            let s2 = sigma * sigma;
            fl.push(next - s2 * det.value_unchecked(current / s2));
        }
        u_sequence.push(next);
        steps += 1;
        let prev = current;
        current = next;
        match config.stop_rule {
            StopRule::FixedIterations(_) => {}
            StopRule::EnergyDrop(eps) => {
                // N (U_k - U_{k+1}) / F² is the energy peeled off this step
                if current == 0.0 || (prev - current) / scale <= eps {
                    break StopReason::EnergyDrop;
                }
            }
            StopRule::ExactFixedPoint => {
                // 0 is absorbing: g_N(0) = 0
                if current == prev || current == 0.0 {
                    break StopReason::FixedPoint;
                }
            }
        }
    };
    Ok(PeelingTrace {
        t_final: current.sqrt(),
        u_sequence,
        iterations_run: steps,
        stop_reason: reason,
        fluctuations,
    })
}

/// Iteration budget for the fixed-count peeling variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationBudget {
    /// `⌈ln N⌉`
    #[default]
    NaturalLog,
    /// `⌈log₂ N⌉`
    Log2,
}

impl IterationBudget {
    pub fn steps(self, n: usize) -> usize {
        let n = n.max(2) as f64;
        let v = match self {
            IterationBudget::NaturalLog => n.ln(),
            IterationBudget::Log2 => n.log2(),
        };
        (v.ceil() as usize).max(1)
    }
}

/// The seven peeling thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ThresholdKind {
    /// σ√x* at F = 1.05 F_c
    C05,
    /// σ√x* at F = 1.15 F_c
    C15,
    /// σ√x* at F = F_m
    Cm,
    /// ⌈ln N⌉ peeling steps at F = 1.05 F_c
    HatC05,
    HatC15,
    HatCm,
    /// Peeling to an exact fixed point at F = F_m
    M,
}

impl ThresholdKind {
    pub const ALL: [ThresholdKind; 7] = [
        ThresholdKind::C05,
        ThresholdKind::C15,
        ThresholdKind::Cm,
        ThresholdKind::HatC05,
        ThresholdKind::HatC15,
        ThresholdKind::HatCm,
        ThresholdKind::M,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ThresholdKind::C05 => "T_c05",
            ThresholdKind::C15 => "T_c15",
            ThresholdKind::Cm => "T_cm",
            ThresholdKind::HatC05 => "That_c05",
            ThresholdKind::HatC15 => "That_c15",
            ThresholdKind::HatCm => "That_cm",
            ThresholdKind::M => "T_m",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }

    pub fn is_data_driven(self) -> bool {
        matches!(self, ThresholdKind::HatC05 | ThresholdKind::HatC15 | ThresholdKind::HatCm | ThresholdKind::M)
    }

    /// The deterministic counterpart sharing this kind's factor.
    pub fn deterministic(self) -> Self {
        match self {
            ThresholdKind::HatC05 => ThresholdKind::C05,
            ThresholdKind::HatC15 => ThresholdKind::C15,
            ThresholdKind::HatCm | ThresholdKind::M => ThresholdKind::Cm,
            k => k,
        }
    }
}

/// Peeling factors for a given shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeelingFactors {
    pub shape: f64,
    pub critical: f64,
    pub f05: f64,
    pub f15: f64,
    pub fm: f64,
}

impl PeelingFactors {
    pub fn for_shape(u: f64) -> Result<Self> {
        let critical = critical_constant(u)?.factor;
        let fm = fm_bound(u)?;
        assert!(fm > critical, "F_m must exceed F_c (u={u})");
        Ok(Self { shape: u, critical, f05: 1.05 * critical, f15: 1.15 * critical, fm })
    }

    pub fn factor(&self, kind: ThresholdKind) -> f64 {
        match kind.deterministic() {
            ThresholdKind::C05 => self.f05,
            ThresholdKind::C15 => self.f15,
            _ => self.fm,
        }
    }
}

/// `σ √x*` for a deterministic kind.
pub fn deterministic_threshold(sigma: f64, u: f64, kind: ThresholdKind) -> Result<f64> {
    let crit = critical_constant(u)?;
    let factors = PeelingFactors::for_shape(u)?;
    deterministic_with(sigma, &crit, &factors, kind)
}

fn deterministic_with(
    sigma: f64,
    crit: &crate::detmap::CriticalSolution,
    factors: &PeelingFactors,
    kind: ThresholdKind,
) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return domain(format!("sigma must be finite and > 0, got {sigma}"));
    }
    let map = ReducedMap::new(factors.factor(kind), factors.shape)?;
    let s = supercritical_structure(&map, crit)?;
    Ok(sigma * s.stable.sqrt())
}

/// Data-driven threshold of a hatted kind or `T_m`.
pub fn iterative_threshold(
    coeffs: &[f64],
    factors: &PeelingFactors,
    kind: ThresholdKind,
    budget: IterationBudget,
) -> Result<f64> {
    Ok(iterative_trace(coeffs, factors, kind, budget)?.t_final)
}

/// As [`iterative_threshold`], returning the whole trace.
pub fn iterative_trace(
    coeffs: &[f64],
    factors: &PeelingFactors,
    kind: ThresholdKind,
    budget: IterationBudget,
) -> Result<PeelingTrace> {
    let factor = factors.factor(kind);
    let cfg = match kind {
        ThresholdKind::M => PeelingConfig::new(factor, StopRule::ExactFixedPoint, coeffs.len() + 1)?,
        ThresholdKind::HatC05 | ThresholdKind::HatC15 | ThresholdKind::HatCm => {
            let n = budget.steps(coeffs.len());
            PeelingConfig::new(factor, StopRule::FixedIterations(n), n)?
        }
        other => return domain(format!("{} is not a data-driven threshold", other.name())),
    };
    run_peeling(coeffs, &cfg, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCatalog {
    pub sigma: f64,
    pub shape: f64,
    pub factors: PeelingFactors,
    pub values: BTreeMap<ThresholdKind, f64>,
}

impl ThresholdCatalog {
    pub fn get(&self, kind: ThresholdKind) -> Option<f64> {
        self.values.get(&kind).copied()
    }
}

/// The three deterministic thresholds, plus the four data-driven ones when
/// `coeffs` is given.
pub fn threshold_catalog(
    sigma: f64,
    u: f64,
    coeffs: Option<&[f64]>,
    budget: IterationBudget,
) -> Result<ThresholdCatalog> {
    let crit = critical_constant(u)?;
    let factors = PeelingFactors::for_shape(u)?;
    let mut values = BTreeMap::new();
    for kind in [ThresholdKind::C05, ThresholdKind::C15, ThresholdKind::Cm] {
        values.insert(kind, deterministic_with(sigma, &crit, &factors, kind)?);
    }
    if let Some(c) = coeffs {
        for kind in [ThresholdKind::HatC05, ThresholdKind::HatC15, ThresholdKind::HatCm, ThresholdKind::M] {
            values.insert(kind, iterative_threshold(c, &factors, kind, budget)?);
        }
    }
    Ok(ThresholdCatalog { sigma, shape: u, factors, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    Hard,
    #[default]
    Soft,
}

impl std::str::FromStr for ThresholdMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hard" => Ok(ThresholdMode::Hard),
            "soft" => Ok(ThresholdMode::Soft),
            other => Err(Error::InvalidInput(format!("unknown threshold mode '{other}'"))),
        }
    }
}

/// Hard keeps `|z| ≥ T` untouched; soft maps z to `sign(z) max(|z| - T, 0)`.
pub fn apply_threshold(coeffs: &[f64], threshold: f64, mode: ThresholdMode) -> Vec<f64> {
    coeffs.iter().map(|&z| threshold_one(z, threshold, mode)).collect()
}

pub fn threshold_one(z: f64, threshold: f64, mode: ThresholdMode) -> f64 {
    match mode {
        ThresholdMode::Hard => {
            if z.abs() >= threshold {
                z
            } else {
                0.0
            }
        }
        ThresholdMode::Soft => {
            let shrunk = z.abs() - threshold;
            if shrunk > 0.0 {
                shrunk.copysign(z)
            } else {
                0.0
            }
        }
    }
}
