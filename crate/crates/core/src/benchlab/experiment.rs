//! Seeded Monte Carlo denoising comparisons.
//!
//! Replication `r` draws its noise from seed `base_seed + r`. Replications run
//! on a rayon pool and are aggregated in replication order, so reports do not
//! depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{add_noise_to_coeffs, db_to_linear, linear_to_db, snr_den, sure_threshold, universal_threshold};
use super::signals::{make_benchmark, Benchmark};
use crate::error::{Error, Result};
use crate::ggd::{estimate_params, EmpiricalMoments, GgdParams};
use crate::numeric::compensated_sum;
use crate::peeling::{
    deterministic_threshold, iterative_threshold, threshold_one, IterationBudget, PeelingFactors,
    ThresholdKind, ThresholdMode,
};
use crate::wavelet::{default_levels, dwt, idwt, FilterPair, WaveletCoeffs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Universal,
    Sure,
    Peeling(ThresholdKind),
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Universal => "Universal",
            Method::Sure => "SURE",
            Method::Peeling(k) => k.name(),
        }
    }

    pub fn all() -> Vec<Method> {
        let mut v = vec![Method::Universal, Method::Sure];
        v.extend(ThresholdKind::ALL.into_iter().map(Method::Peeling));
        v
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("universal") {
            return Ok(Method::Universal);
        }
        if s.eq_ignore_ascii_case("sure") {
            return Ok(Method::Sure);
        }
        ThresholdKind::from_name(s)
            .map(Method::Peeling)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method '{s}'")))
    }
}

/// Input signal-to-noise ratio, either as a power ratio or in decibels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Snr {
    Linear(f64),
    Db(f64),
}

impl Snr {
    pub fn linear(self) -> f64 {
        match self {
            Snr::Linear(v) => v,
            Snr::Db(db) => db_to_linear(db),
        }
    }

    pub fn db(self) -> f64 {
        match self {
            Snr::Linear(v) => linear_to_db(v),
            Snr::Db(db) => db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub signal: Benchmark,
    pub n: usize,
    pub snr: Snr,
    pub noise_shape: f64,
    pub replications: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    pub filter: String,
    /// `None` selects `log2(N) - 4`.
    pub levels: Option<usize>,
    pub alpha: f64,
    pub eta: f64,
    pub mode: ThresholdMode,
    /// Whether the coarse approximation block is estimated on and thresholded.
    pub include_approx: bool,
    /// Subtract the empirical mean before estimation and thresholding.
    pub center: bool,
    /// Use the injected noise's σ for the Universal/SURE baselines.
    pub oracle_sigma: bool,
    pub budget: IterationBudget,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            signal: Benchmark::Blocks,
            n: 2048,
            snr: Snr::Db(3.0),
            noise_shape: 1.0,
            replications: 100,
            base_seed: 0,
            methods: Method::all(),
            filter: "sym8".into(),
            levels: None,
            alpha: 0.25,
            eta: 0.5,
            mode: ThresholdMode::Soft,
            include_approx: true,
            center: false,
            oracle_sigma: false,
            budget: IterationBudget::NaturalLog,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidInput("replications must be at least 1".into()));
        }
        if !self.n.is_power_of_two() {
            return Err(Error::InvalidInput(format!("N must be a power of two, got {}", self.n)));
        }
        if !(self.noise_shape.is_finite() && self.noise_shape > 0.0) {
            return Err(Error::InvalidInput(format!("noise shape must be > 0, got {}", self.noise_shape)));
        }
        if !(self.snr.linear() > 0.0 && self.snr.linear().is_finite()) {
            return Err(Error::InvalidInput("input SNR must be positive and finite".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidInput("at least one method is required".into()));
        }
        FilterPair::by_name(&self.filter)?;
        Ok(())
    }

    pub fn resolved_levels(&self) -> Result<usize> {
        let f = FilterPair::by_name(&self.filter)?;
        Ok(self.levels.unwrap_or_else(|| default_levels(self.n, &f)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub threshold: f64,
    pub snr_den: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub seed: u64,
    pub sigma_hat: f64,
    pub shape_hat: f64,
    pub mean_hat: f64,
    /// Kolmogorov–Smirnov distance between the coefficients and the fitted law.
    pub ks_distance: f64,
    pub outcomes: Vec<MethodOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_snr_den: f64,
    /// Sample standard deviation; absent for a single replication.
    pub std_snr_den: Option<f64>,
    pub mean_threshold: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseReport {
    pub config: ExperimentConfig,
    pub levels: usize,
    pub input_snr_db: f64,
    pub summaries: Vec<MethodSummary>,
    pub mean_sigma_hat: f64,
    pub mean_shape_hat: f64,
    pub mean_ks_distance: f64,
    pub replications: Vec<ReplicationRecord>,
}

impl DenoiseReport {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }
}

/// Builds a pool with `workers` threads; 0 picks rayon's default.
pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))
}

struct Prepared {
    signal: Vec<f64>,
    coeffs: WaveletCoeffs,
    filter: FilterPair,
    levels: usize,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let filter = FilterPair::by_name(&config.filter)?;
    let levels = config.resolved_levels()?;
    let signal = make_benchmark(config.signal, config.n)?;
    let coeffs = dwt(&signal, &filter, levels)?;
    Ok(Prepared { signal, coeffs, filter, levels })
}

pub fn run_denoise_experiment(config: &ExperimentConfig, workers: usize) -> Result<DenoiseReport> {
    let prep = prepare(config)?;
    let pool = worker_pool(workers)?;
    let records: Vec<Result<ReplicationRecord>> = pool.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|r| {
                let seed = config.base_seed.wrapping_add(r as u64);
                run_replication(config, &prep, r, seed)
                    .map_err(|e| Error::Replication { seed, source: Box::new(e) })
            })
            .collect()
    });
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(aggregate(config, prep.levels, records))
}

fn run_replication(
    config: &ExperimentConfig,
    prep: &Prepared,
    replication: usize,
    seed: u64,
) -> Result<ReplicationRecord> {
    let (clean_flat, layout) = prep.coeffs.flatten(true);
    let (noisy_flat, noise) = add_noise_to_coeffs(&clean_flat, config.noise_shape, config.snr.linear(), seed)?;
    let start = if config.include_approx { 0 } else { layout.approx_len };
    let observed = &noisy_flat[start..];

    let moments = EmpiricalMoments::of(observed);
    let shift = if config.center { moments.mean } else { 0.0 };
    let z: Vec<f64> = observed.iter().map(|v| v - shift).collect();
    let fit = estimate_params(&z)?;
    let ks_distance = ks_distance(&z, &fit);
    let baseline_sigma = if config.oracle_sigma {
        (compensated_sum(noise.iter().map(|v| v * v)) / noise.len() as f64).sqrt()
    } else {
        fit.sigma()
    };

    let mut factors: Option<PeelingFactors> = None;
    let mut outcomes = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let threshold = match method {
            Method::Universal => universal_threshold(z.len(), baseline_sigma)?,
            Method::Sure => sure_threshold(&z, baseline_sigma)?,
            Method::Peeling(kind) if kind.is_data_driven() => {
                if factors.is_none() {
                    factors = Some(PeelingFactors::for_shape(fit.shape())?);
                }
                iterative_threshold(&z, factors.as_ref().expect("set above"), kind, config.budget)?
            }
            Method::Peeling(kind) => deterministic_threshold(fit.sigma(), fit.shape(), kind)?,
        };
        let mut flat = noisy_flat.clone();
        for (dst, &v) in flat[start..].iter_mut().zip(&z) {
            *dst = threshold_one(v, threshold, config.mode) + shift;
        }
        let rebuilt = WaveletCoeffs::unflatten(&flat, &layout)?;
        let estimate = idwt(&rebuilt, &prep.filter)?;
        outcomes.push(MethodOutcome { method, threshold, snr_den: snr_den(&prep.signal, &estimate)? });
    }
    Ok(ReplicationRecord {
        replication,
        seed,
        sigma_hat: fit.sigma(),
        shape_hat: fit.shape(),
        mean_hat: moments.mean,
        ks_distance,
        outcomes,
    })
}

/// Two-sided KS statistic of `samples` against `law`.
pub fn ks_distance(samples: &[f64], law: &GgdParams) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = law.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn mean_std(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    let std = (values.len() > 1).then(|| {
        (compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0)).sqrt()
    });
    (mean, std)
}

fn aggregate(config: &ExperimentConfig, levels: usize, records: Vec<ReplicationRecord>) -> DenoiseReport {
    let summaries = config
        .methods
        .iter()
        .enumerate()
        .map(|(i, &method)| {
            let snrs: Vec<f64> = records.iter().map(|r| r.outcomes[i].snr_den).collect();
            let thresholds: Vec<f64> = records.iter().map(|r| r.outcomes[i].threshold).collect();
            let (mean, std) = mean_std(&snrs);
            MethodSummary {
                method,
                mean_snr_den: mean,
                std_snr_den: std,
                mean_threshold: mean_std(&thresholds).0,
                replications: records.len(),
            }
        })
        .collect();
    let col = |f: fn(&ReplicationRecord) -> f64| mean_std(&records.iter().map(f).collect::<Vec<_>>()).0;
    DenoiseReport {
        config: config.clone(),
        levels,
        input_snr_db: config.snr.db(),
        summaries,
        mean_sigma_hat: col(|r| r.sigma_hat),
        mean_shape_hat: col(|r| r.shape_hat),
        mean_ks_distance: col(|r| r.ks_distance),
        replications: records,
    }
}
