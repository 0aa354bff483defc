//! `wavepeel` command-line driver.
//!
//! Every subcommand writes its primary output under `--out-dir`. CSV files
//! start with `# key=value` lines holding the resolved configuration and seed.
//! Wall-clock information goes only to `<out-dir>/wavepeel.log`, so primary
//! outputs are byte-identical across reruns and worker counts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use wavepeel::benchlab::config::{parse_convergence_config, BenchPlan};
use wavepeel::benchlab::metrics::{add_noise_to_coeffs, db_to_linear, sure_threshold, universal_threshold};
use wavepeel::benchlab::report::{
    bench_csv, convergence_csv, fluctuation_csv, header_lines, to_json,
};
use wavepeel::benchlab::{make_benchmark, run_convergence_experiment, run_denoise_experiment, Benchmark};
use wavepeel::detmap::{critical_constant, fm_bound};
use wavepeel::ggd::{estimate_params, EmpiricalMoments, GgdParams};
use wavepeel::io::{read_signal, signal_to_csv, signal_to_json, write_coeffs};
use wavepeel::peeling::{
    apply_threshold, deterministic_threshold, iterative_trace, threshold_catalog, IterationBudget, PeelingFactors,
    ThresholdKind, ThresholdMode,
};
use wavepeel::wavelet::{default_levels, dwt, idwt, FilterPair, WaveletCoeffs};
use wavepeel::Error;

mod exit;

use exit::Failure;

#[derive(Parser, Debug)]
#[command(name = "wavepeel", version, about = "Wavelet denoising by iterative threshold peeling")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Base seed; overrides the seed in a config file when given.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo runs (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Critical constant, critical fixed point and F_m for a list of shapes.
    FcTable {
        /// Comma-separated shapes; an empty string gives a header-only table.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1,2,3,4")]
        u: Vec<String>,
    },
    /// The seven-threshold catalog, with data-driven values per seed.
    Thresholds {
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 2.0)]
        u: f64,
        #[arg(long, default_value_t = 10000)]
        n: usize,
        /// Number of seeds, starting at --seed.
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long, value_enum, default_value_t = Budget::Ln)]
        budget: Budget,
    },
    /// Denoise a signal file.
    Denoise(DenoiseArgs),
    /// Denoising comparison from a key=value config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
    /// Convergence-rate experiment from a key=value config file.
    Converge {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a benchmark signal (optionally noisy) or GGD draws.
    Sample(SampleArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Budget {
    Ln,
    Log2,
}

impl From<Budget> for IterationBudget {
    fn from(b: Budget) -> Self {
        match b {
            Budget::Ln => IterationBudget::NaturalLog,
            Budget::Log2 => IterationBudget::Log2,
        }
    }
}

#[derive(Args, Debug)]
struct DenoiseArgs {
    /// Signal file: single-column CSV or JSON array (by extension).
    #[arg(long)]
    input: PathBuf,
    /// universal, sure, fixed, hard, soft, or a peeling threshold
    /// (T_c05, T_c15, T_cm, That_c05, That_c15, That_cm, T_m, or peel-c15 style).
    #[arg(long, default_value = "That_c15")]
    method: String,
    /// Threshold for the fixed/hard/soft methods.
    #[arg(long)]
    threshold: Option<f64>,
    /// Shrinkage rule; `hard` and `soft` methods imply it.
    #[arg(long, default_value = "soft")]
    mode: String,
    /// Known noise σ; estimated from the coefficients when absent.
    #[arg(long)]
    sigma: Option<f64>,
    /// Known shape u; estimated from the coefficients when absent.
    #[arg(long)]
    shape: Option<f64>,
    #[arg(long, default_value = "sym8")]
    filter: String,
    #[arg(long)]
    levels: Option<usize>,
    /// Leave the approximation block out of estimation and thresholding.
    #[arg(long)]
    exclude_approx: bool,
    #[arg(long, value_enum, default_value_t = Budget::Ln)]
    budget: Budget,
    /// Also dump the noisy coefficients as JSON.
    #[arg(long)]
    dump_coeffs: bool,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// blocks, bumps, heavisine, doppler or ggd.
    #[arg(long, default_value = "blocks")]
    kind: String,
    #[arg(long, default_value_t = 2048)]
    n: usize,
    /// GGD shape for `ggd`, noise shape for benchmark signals.
    #[arg(long, default_value_t = 2.0)]
    shape: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Input SNR in dB; adds GGD noise to the wavelet coefficients of a benchmark signal.
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long, default_value = "sym8")]
    filter: String,
    #[arg(long)]
    levels: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(exit::VALIDATION) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, Failure> {
    let c = &cli.common;
    fs::create_dir_all(&c.out_dir).map_err(|e| Failure::io(&c.out_dir, e))?;
    let started = SystemTime::now();
    let files = match &cli.command {
        Command::FcTable { u } => cmd_fc_table(c, u)?,
        Command::Thresholds { sigma, u, n, seeds, budget } => {
            cmd_thresholds(c, *sigma, *u, *n, *seeds, (*budget).into())?
        }
        Command::Denoise(args) => cmd_denoise(c, args)?,
        Command::Bench { config } => cmd_bench(c, config)?,
        Command::Converge { config } => cmd_converge(c, config)?,
        Command::Sample(args) => cmd_sample(c, args)?,
    };
    write_log(c, cli, started, &files)?;
    Ok(files)
}

fn write_log(c: &Common, cli: &Cli, started: SystemTime, files: &[PathBuf]) -> Result<(), Failure> {
    let secs = |t: SystemTime| t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let elapsed = started.elapsed().map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let line = json!({
        "started_unix": secs(started),
        "elapsed_s": elapsed,
        "args": std::env::args().collect::<Vec<_>>(),
        "command": format!("{:?}", cli.command),
        "outputs": files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>(),
    });
    let path = c.out_dir.join("wavepeel.log");
    let mut text = fs::read_to_string(&path).unwrap_or_default();
    text.push_str(&line.to_string());
    text.push('\n');
    fs::write(&path, text).map_err(|e| Failure::io(&path, e))
}

fn write_out(path: PathBuf, body: &str) -> Result<PathBuf, Failure> {
    fs::write(&path, body).map_err(|e| Failure::io(&path, e))?;
    Ok(path)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn cmd_fc_table(c: &Common, u_list: &[String]) -> Result<Vec<PathBuf>, Failure> {
    let mut shapes = Vec::new();
    for s in u_list.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let u: f64 = s.parse().map_err(|_| Failure::validation(format!("not a number: '{s}'")))?;
        shapes.push(u);
    }
    let mut rows = Vec::new();
    for &u in &shapes {
        let row = critical_constant(u).and_then(|crit| Ok((crit.factor, crit.fixed_point, fm_bound(u)?)));
        rows.push((u, row));
    }
    let path = c.out_dir.join(format!("fc_table.{}", c.format.ext()));
    let body = match c.format {
        Format::Csv => {
            let mut s = header_lines(&[("command", "fc-table".into())]);
            s.push_str("u,F_c,x_c,F_m,error\n");
            for (u, row) in &rows {
                match row {
                    Ok((fc, xc, fm)) => s.push_str(&format!("{u},{fc},{xc},{fm},\n")),
                    Err(e) => s.push_str(&format!("{u},,,,{}\n", e.to_string().replace(',', ";"))),
                }
            }
            s
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(u, row)| match row {
                    Ok((fc, xc, fm)) => json!({"u": u, "F_c": fc, "x_c": xc, "F_m": fm}),
                    Err(e) => json!({"u": u, "error": e.to_string()}),
                })
                .collect();
            to_json(&json!({"command": "fc-table", "rows": rows}))?
        }
    };
    Ok(vec![write_out(path, &body)?])
}

fn cmd_thresholds(
    c: &Common,
    sigma: f64,
    u: f64,
    n: usize,
    seeds: usize,
    budget: IterationBudget,
) -> Result<Vec<PathBuf>, Failure> {
    if n < 2 {
        return Err(Failure::validation("n must be at least 2"));
    }
    let base_seed = c.seed.unwrap_or(0);
    let law = GgdParams::new(sigma, u)?;
    let catalog = threshold_catalog(sigma, u, None, budget)?;
    let factors = PeelingFactors::for_shape(u)?;
    let kinds = [ThresholdKind::HatC05, ThresholdKind::HatC15, ThresholdKind::HatCm, ThresholdKind::M];
    let mut per_seed = Vec::with_capacity(seeds);
    for i in 0..seeds {
        let seed = base_seed.wrapping_add(i as u64);
        let z = law.sample(seed, n);
        let mut vals = Vec::with_capacity(kinds.len());
        for kind in kinds {
            vals.push(iterative_trace(&z, &factors, kind, budget)?.t_final);
        }
        per_seed.push((seed, vals));
    }
    let path = c.out_dir.join(format!("thresholds.{}", c.format.ext()));
    let body = match c.format {
        Format::Csv => {
            let mut s = header_lines(&[
                ("command", "thresholds".into()),
                ("seed", base_seed.to_string()),
                ("seeds", seeds.to_string()),
                ("sigma", sigma.to_string()),
                ("u", u.to_string()),
                ("n", n.to_string()),
                ("budget", format!("{budget:?}").to_ascii_lowercase()),
            ]);
            s.push_str("seed,threshold,value\n");
            for (kind, v) in &catalog.values {
                s.push_str(&format!(",{},{v}\n", kind.name()));
            }
            for (seed, vals) in &per_seed {
                for (kind, v) in kinds.iter().zip(vals) {
                    s.push_str(&format!("{seed},{},{v}\n", kind.name()));
                }
            }
            s
        }
        Format::Json => {
            let det: serde_json::Map<String, Value> =
                catalog.values.iter().map(|(k, v)| (k.name().to_string(), json!(v))).collect();
            let runs: Vec<Value> = per_seed
                .iter()
                .map(|(seed, vals)| {
                    let mut m = serde_json::Map::new();
                    m.insert("seed".into(), json!(seed));
                    for (kind, v) in kinds.iter().zip(vals) {
                        m.insert(kind.name().into(), json!(v));
                    }
                    Value::Object(m)
                })
                .collect();
            to_json(&json!({
                "command": "thresholds", "seed": base_seed, "sigma": sigma, "u": u, "n": n,
                "factors": catalog.factors, "deterministic": det, "per_seed": runs,
            }))?
        }
    };
    Ok(vec![write_out(path, &body)?])
}

enum Choice {
    Universal,
    Sure,
    Fixed,
    Peel(ThresholdKind),
}

fn parse_method(name: &str) -> Result<(Choice, Option<ThresholdMode>), Failure> {
    let lower = name.trim().to_ascii_lowercase();
    let choice = match lower.as_str() {
        "universal" => (Choice::Universal, None),
        "sure" => (Choice::Sure, None),
        "fixed" => (Choice::Fixed, None),
        "hard" => (Choice::Fixed, Some(ThresholdMode::Hard)),
        "soft" => (Choice::Fixed, Some(ThresholdMode::Soft)),
        _ => {
            let alias = match lower.strip_prefix("peel-") {
                Some("c05") => Some("T_c05"),
                Some("c15") => Some("T_c15"),
                Some("cm") => Some("T_cm"),
                Some("hat-c05") => Some("That_c05"),
                Some("hat-c15") => Some("That_c15"),
                Some("hat-cm") => Some("That_cm"),
                Some("m") => Some("T_m"),
                _ => None,
            };
            let kind = ThresholdKind::from_name(alias.unwrap_or(name.trim()))
                .ok_or_else(|| Failure::validation(format!("unknown method '{name}'")))?;
            (Choice::Peel(kind), None)
        }
    };
    Ok(choice)
}

fn cmd_denoise(c: &Common, a: &DenoiseArgs) -> Result<Vec<PathBuf>, Failure> {
    let signal = read_signal(&a.input).map_err(|e| match e {
        Error::Io(io) => Failure::io(&a.input, io),
        other => Failure::validation(format!("{}: {other}", a.input.display())),
    })?;
    if signal.len() < 2 || !signal.len().is_power_of_two() {
        return Err(Failure::validation(format!(
            "signal length must be a power of two, got {}",
            signal.len()
        )));
    }
    let (choice, implied_mode) = parse_method(&a.method)?;
    let mode = match implied_mode {
        Some(m) => m,
        None => a.mode.parse::<ThresholdMode>()?,
    };
    let filter = FilterPair::by_name(&a.filter)?;
    let levels = a.levels.unwrap_or_else(|| default_levels(signal.len(), &filter));
    let coeffs = dwt(&signal, &filter, levels)?;
    let include_approx = !a.exclude_approx;
    let (flat, layout) = coeffs.flatten(include_approx);

    let needs_fit = a.sigma.is_none() || a.shape.is_none();
    let fit = if needs_fit { Some(estimate_params(&flat)?) } else { None };
    let sigma = a.sigma.unwrap_or_else(|| fit.as_ref().expect("fitted").sigma());
    let shape = a.shape.unwrap_or_else(|| fit.as_ref().expect("fitted").shape());
    GgdParams::new(sigma, shape)?;

    let budget: IterationBudget = a.budget.into();
    let mut iterations: Option<usize> = None;
    let mut stop_reason: Option<Value> = None;
    let threshold = match choice {
        Choice::Universal => universal_threshold(flat.len(), sigma)?,
        Choice::Sure => sure_threshold(&flat, sigma)?,
        Choice::Fixed => {
            let t = a.threshold.ok_or_else(|| Failure::validation("--threshold is required for this method"))?;
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Failure::validation(format!("threshold must be finite and >= 0, got {t}")));
            }
            t
        }
        Choice::Peel(kind) if kind.is_data_driven() => {
            let trace = iterative_trace(&flat, &PeelingFactors::for_shape(shape)?, kind, budget)?;
            iterations = Some(trace.iterations_run);
            stop_reason = Some(serde_json::to_value(trace.stop_reason).map_err(Error::from)?);
            trace.t_final
        }
        Choice::Peel(kind) => deterministic_threshold(sigma, shape, kind)?,
    };
    let cleaned = apply_threshold(&flat, threshold, mode);
    let rebuilt = WaveletCoeffs::unflatten(&cleaned, &layout)?;
    let estimate = idwt(&rebuilt, &filter)?;

    let stem = a.input.file_stem().and_then(|s| s.to_str()).unwrap_or("signal");
    let out = c.out_dir.join(format!("{stem}_denoised.{}", c.format.ext()));
    let body = match c.format {
        Format::Csv => signal_to_csv(&estimate),
        Format::Json => signal_to_json(&estimate)?,
    };
    let mut files = vec![write_out(out, &body)?];
    let moments = EmpiricalMoments::of(&flat);
    let sidecar = json!({
        "command": "denoise",
        "input": a.input.display().to_string(),
        "method": a.method,
        "mode": format!("{mode:?}").to_ascii_lowercase(),
        "threshold": threshold,
        "sigma": sigma,
        "shape": shape,
        "sigma_source": if a.sigma.is_some() { "given" } else { "estimated" },
        "shape_source": if a.shape.is_some() { "given" } else { "estimated" },
        "mean_hat": moments.mean,
        "iterations": iterations,
        "stop_reason": stop_reason,
        "budget": format!("{budget:?}").to_ascii_lowercase(),
        "filter": filter.name(),
        "levels": levels,
        "include_approx": include_approx,
        "coefficients": flat.len(),
    });
    files.push(write_out(c.out_dir.join(format!("{stem}_denoised.meta.json")), &to_json(&sidecar)?)?);
    if a.dump_coeffs {
        let p = c.out_dir.join(format!("{stem}_coeffs.json"));
        write_coeffs(&p, &coeffs).map_err(|e| Failure::from_core(e, &p))?;
        files.push(p);
    }
    Ok(files)
}

fn cmd_bench(c: &Common, config: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut plan = BenchPlan::parse(&read_text(config)?)?;
    if let Some(seed) = c.seed {
        plan.base.base_seed = seed;
    }
    let mut reports = Vec::new();
    for cfg in plan.configs() {
        reports.push(run_denoise_experiment(&cfg, c.workers)?);
    }
    let path = c.out_dir.join(format!("bench.{}", c.format.ext()));
    let body = match c.format {
        Format::Csv => bench_csv(&reports),
        Format::Json => to_json(&json!({"command": "bench", "plan": plan, "reports": reports}))?,
    };
    Ok(vec![write_out(path, &body)?])
}

fn cmd_converge(c: &Common, config: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut cfg = parse_convergence_config(&read_text(config)?)?;
    if let Some(seed) = c.seed {
        cfg.base_seed = seed;
    }
    let table = run_convergence_experiment(&cfg, c.workers)?;
    match c.format {
        Format::Csv => Ok(vec![
            write_out(c.out_dir.join("converge.csv"), &convergence_csv(&table))?,
            write_out(c.out_dir.join("converge_fluctuations.csv"), &fluctuation_csv(&table))?,
        ]),
        Format::Json => Ok(vec![write_out(c.out_dir.join("converge.json"), &to_json(&table)?)?]),
    }
}

fn cmd_sample(c: &Common, a: &SampleArgs) -> Result<Vec<PathBuf>, Failure> {
    let seed = c.seed.unwrap_or(0);
    let kind = a.kind.to_ascii_lowercase();
    let (values, label) = if kind == "ggd" {
        if a.snr_db.is_some() {
            return Err(Failure::validation("--snr-db applies to benchmark signals only"));
        }
        (GgdParams::new(a.sigma, a.shape)?.sample(seed, a.n), "ggd".to_string())
    } else {
        let bench: Benchmark = a.kind.parse()?;
        let clean = make_benchmark(bench, a.n)?;
        match a.snr_db {
            None => (clean, bench.name().to_ascii_lowercase()),
            Some(db) => {
                let filter = FilterPair::by_name(&a.filter)?;
                let levels = a.levels.unwrap_or_else(|| default_levels(a.n, &filter));
                let coeffs = dwt(&clean, &filter, levels)?;
                let (flat, layout) = coeffs.flatten(true);
                let (noisy, _) = add_noise_to_coeffs(&flat, a.shape, db_to_linear(db), seed)?;
                let x = idwt(&WaveletCoeffs::unflatten(&noisy, &layout)?, &filter)?;
                (x, format!("{}_noisy", bench.name().to_ascii_lowercase()))
            }
        }
    };
    let path = c.out_dir.join(format!("{label}.{}", c.format.ext()));
    let body = match c.format {
        Format::Csv => signal_to_csv(&values),
        Format::Json => signal_to_json(&values)?,
    };
    Ok(vec![write_out(path, &body)?])
}
