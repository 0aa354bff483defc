//! Monte Carlo checks of the peeling iteration against its deterministic limit.
//!
//! Supercritical runs use `n = ⌊(−1/ln M_{x*} + η) α ln N⌋ + 1` steps and count
//! how often `|U_n − σ²x*| ≥ σ² N^{−α}`. Subcritical runs use
//! `n = ⌈max(1 + (α ln N + ln 2g_∞)/ln(1/κ), 1)⌉` with `κ = sup g(x)/x`, and
//! count how often `U_n ≥ σ² N^{−α}`.
//!
//! Replication `r` at size `N` draws from ChaCha8 seeded with `base_seed + r`
//! on stream `N`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::worker_pool;
use crate::detmap::{classify_against, critical_constant, iteration_count, supercritical_structure, ReducedMap, Regime};
use crate::error::{Error, Result};
use crate::ggd::GgdParams;
use crate::numeric::compensated_sum;
use crate::peeling::{run_peeling, PeelingConfig, StopRule};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub shape: f64,
    /// F / F_c
    pub factor_ratio: f64,
    pub n_grid: Vec<usize>,
    pub alpha: f64,
    pub eta: f64,
    pub replications: usize,
    pub base_seed: u64,
    pub sigma: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            shape: 2.0,
            factor_ratio: 1.15,
            n_grid: vec![1 << 10, 1 << 12, 1 << 14],
            alpha: 0.25,
            eta: 0.5,
            replications: 200,
            base_seed: 0,
            sigma: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub iterations: usize,
    /// σ² N^{−α}
    pub tolerance: f64,
    pub exceedance_frequency: f64,
    /// Mean of `|U_n − σ²x*|` (σ²x* = 0 when subcritical).
    pub mean_abs_error: f64,
    /// Median over replications of `|ε_{k,N}|` for each recorded step k.
    pub median_abs_fluctuation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub config: ConvergenceConfig,
    pub regime: Regime,
    pub factor: f64,
    pub critical_factor: f64,
    /// σ² x* (supercritical) or 0.
    pub target: f64,
    /// `M_{x*}` when supercritical, `κ` when subcritical.
    pub rate: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn row(&self, n: usize) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// `Q_N = max(1 + (α ln N + ln 2g_∞) / ln(1/κ), 1)`.
pub fn subcritical_iterations(n: usize, alpha: f64, g_inf: f64, kappa: f64) -> Result<usize> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::Domain(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    let q = (1.0 + (alpha * (n as f64).ln() + (2.0 * g_inf).ln()) / (1.0 / kappa).ln()).max(1.0);
    Ok(q.ceil() as usize)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn run_convergence_experiment(config: &ConvergenceConfig, workers: usize) -> Result<ConvergenceTable> {
    if config.replications == 0 || config.n_grid.is_empty() {
        return Err(Error::InvalidInput("need at least one replication and one N".into()));
    }
    if config.n_grid.iter().any(|&n| n < 2) {
        return Err(Error::InvalidInput("every N must be at least 2".into()));
    }
    if !(config.alpha > 0.0 && config.alpha < 0.5) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1/2), got {}", config.alpha)));
    }
    let crit = critical_constant(config.shape)?;
    let factor = config.factor_ratio * crit.factor;
    let map = ReducedMap::new(factor, config.shape)?;
    let regime = classify_against(factor, &crit);
    let s2 = config.sigma * config.sigma;
    let (target, rate) = match regime {
        Regime::Critical => {
            return Err(Error::Regime("the critical case F = F_c is not covered".into()))
        }
        Regime::Supercritical => {
            let s = supercritical_structure(&map, &crit)?;
            (s2 * s.stable, s.contraction)
        }
        Regime::Subcritical => (0.0, map.max_slope_ratio()),
    };
    let law = GgdParams::new(config.sigma, config.shape)?;
    let pool = worker_pool(workers)?;

    let mut rows = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let iterations = match regime {
            Regime::Supercritical => iteration_count(n, rate, config.alpha, config.eta)?,
            _ => subcritical_iterations(n, config.alpha, map.sup(), rate)?,
        };
        let tolerance = s2 * (n as f64).powf(-config.alpha);
        let peel = PeelingConfig::new(factor, StopRule::FixedIterations(iterations), iterations)?;
        let runs: Vec<Result<(f64, Vec<f64>)>> = pool.install(|| {
            (0..config.replications)
                .into_par_iter()
                .map(|r| {
                    let seed = config.base_seed.wrapping_add(r as u64);
                    let mut rng = rng::seeded_stream(seed, n as u64);
                    let z = law.sample_with(&mut rng, n);
                    let trace = run_peeling(&z, &peel, Some((config.sigma, &map)))
                        .map_err(|e| Error::Replication { seed, source: Box::new(e) })?;
                    let fl = trace.fluctuations.clone().unwrap_or_default();
                    Ok((trace.final_u(), fl))
                })
                .collect()
        });
        let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
        let exceed = runs
            .iter()
            .filter(|(u, _)| match regime {
                Regime::Supercritical => (u - target).abs() >= tolerance,
                _ => *u >= tolerance,
            })
            .count();
        let mean_abs_error =
            compensated_sum(runs.iter().map(|(u, _)| (u - target).abs())) / runs.len() as f64;
        let median_abs_fluctuation = (0..iterations)
            .map(|k| median(runs.iter().map(|(_, f)| f[k].abs()).collect()))
            .collect();
        rows.push(ConvergenceRow {
            n,
            iterations,
            tolerance,
            exceedance_frequency: exceed as f64 / runs.len() as f64,
            mean_abs_error,
            median_abs_fluctuation,
        });
    }
    Ok(ConvergenceTable {
        config: config.clone(),
        regime,
        factor,
        critical_factor: crit.factor,
        target,
        rate,
        rows,
    })
}
