//! CSV and JSON renderings of experiment results.
//!
//! CSV files open with `# key=value` lines carrying the resolved configuration
//! and seed, followed by a tidy table. Floats use Rust's shortest round-trip
//! formatting, so output bytes depend only on the values.

use std::fmt::Write as _;

use serde::Serialize;

use super::convergence::ConvergenceTable;
use super::experiment::{DenoiseReport, ExperimentConfig};
use crate::error::Result;

pub const BENCH_COLUMNS: &str = "signal,n,noise_shape,snr_in_db,method,mean_snr_den,std_snr_den,replications";
pub const CONVERGE_COLUMNS: &str = "n,iterations,tolerance,exceedance_frequency,mean_abs_error";
pub const FLUCTUATION_COLUMNS: &str = "n,k,median_abs_fluctuation";

/// Writes `# key=value` lines.
pub fn header_lines(pairs: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "# {k}={v}");
    }
    out
}

fn methods_list(cfg: &ExperimentConfig) -> String {
    cfg.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(";")
}

/// Shared settings of a bench run; the swept keys appear as columns instead.
pub fn bench_header(cfg: &ExperimentConfig) -> Vec<(&'static str, String)> {
    vec![
        ("command", "bench".into()),
        ("seed", cfg.base_seed.to_string()),
        ("replications", cfg.replications.to_string()),
        ("methods", methods_list(cfg)),
        ("filter", cfg.filter.clone()),
        ("levels", cfg.levels.map_or("default".into(), |l| l.to_string())),
        ("alpha", cfg.alpha.to_string()),
        ("eta", cfg.eta.to_string()),
        ("mode", format!("{:?}", cfg.mode).to_ascii_lowercase()),
        ("include_approx", cfg.include_approx.to_string()),
        ("center", cfg.center.to_string()),
        ("oracle_sigma", cfg.oracle_sigma.to_string()),
        ("budget", format!("{:?}", cfg.budget).to_ascii_lowercase()),
    ]
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// Table rows for one or more reports, without header lines.
pub fn bench_rows(reports: &[DenoiseReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{BENCH_COLUMNS}");
    for r in reports {
        for s in &r.summaries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.config.signal.name(),
                r.config.n,
                r.config.noise_shape,
                r.input_snr_db,
                s.method.name(),
                s.mean_snr_den,
                opt(s.std_snr_den),
                s.replications
            );
        }
    }
    out
}

pub fn bench_csv(reports: &[DenoiseReport]) -> String {
    let mut out = reports.first().map(|r| header_lines(&bench_header(&r.config))).unwrap_or_default();
    out.push_str(&bench_rows(reports));
    out
}

pub fn convergence_header(t: &ConvergenceTable) -> Vec<(&'static str, String)> {
    let c = &t.config;
    vec![
        ("command", "converge".into()),
        ("seed", c.base_seed.to_string()),
        ("shape", c.shape.to_string()),
        ("factor_ratio", c.factor_ratio.to_string()),
        ("factor", t.factor.to_string()),
        ("critical_factor", t.critical_factor.to_string()),
        ("regime", format!("{:?}", t.regime).to_ascii_lowercase()),
        ("target", t.target.to_string()),
        ("rate", t.rate.to_string()),
        ("alpha", c.alpha.to_string()),
        ("eta", c.eta.to_string()),
        ("sigma", c.sigma.to_string()),
        ("replications", c.replications.to_string()),
    ]
}

pub fn convergence_csv(t: &ConvergenceTable) -> String {
    let mut out = header_lines(&convergence_header(t));
    let _ = writeln!(out, "{CONVERGE_COLUMNS}");
    for r in &t.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.n, r.iterations, r.tolerance, r.exceedance_frequency, r.mean_abs_error
        );
    }
    out
}

pub fn fluctuation_csv(t: &ConvergenceTable) -> String {
    let mut out = header_lines(&convergence_header(t));
    let _ = writeln!(out, "{FLUCTUATION_COLUMNS}");
    for r in &t.rows {
        for (k, v) in r.median_abs_fluctuation.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", r.n, k + 1, v);
        }
    }
    out
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchlab::convergence::{run_convergence_experiment, ConvergenceConfig};
    use crate::benchlab::experiment::{run_denoise_experiment, Method};

    #[test]
    fn bench_csv_shape() {
        let cfg = ExperimentConfig {
            n: 256,
            replications: 2,
            methods: vec![Method::Universal, Method::Sure],
            ..Default::default()
        };
        let rep = run_denoise_experiment(&cfg, 1).unwrap();
        let csv = bench_csv(&[rep]);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# command=bench"));
        let head = lines.iter().position(|l| *l == BENCH_COLUMNS).unwrap();
        assert_eq!(lines.len() - head - 1, 2);
        assert!(lines[head + 1].starts_with("Blocks,256,1,3,Universal,"));
        assert_eq!(lines[head + 1].split(',').count(), 8);
    }

    #[test]
    fn convergence_csv_shape() {
        let cfg = ConvergenceConfig { replications: 4, n_grid: vec![256], ..Default::default() };
        let t = run_convergence_experiment(&cfg, 1).unwrap();
        let csv = convergence_csv(&t);
        assert!(csv.contains("# regime=supercritical"));
        assert!(csv.lines().any(|l| l == CONVERGE_COLUMNS));
        let fl = fluctuation_csv(&t);
        assert_eq!(fl.lines().filter(|l| l.starts_with("256,")).count(), t.rows[0].iterations);
    }

    #[test]
    fn empty_bench_is_header_only() {
        assert_eq!(bench_csv(&[]), format!("{BENCH_COLUMNS}\n"));
    }
}
