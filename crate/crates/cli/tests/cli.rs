use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wavepeel"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wavepeel-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().arg("--out-dir").arg(dir).args(args).output().unwrap()
}

fn table(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn read_floats(path: &Path) -> Vec<f64> {
    fs::read_to_string(path).unwrap().lines().map(|l| l.parse().unwrap()).collect()
}

#[test]
fn fc_table_matches_known_constants() {
    let dir = scratch("fc");
    let out = run(&dir, &["fc-table"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = table(&fs::read_to_string(dir.join("fc_table.csv")).unwrap());
    let want = [4.0215, 2.7830, 2.42537, 2.16169, 2.0472, 1.98181];
    assert_eq!(rows.len(), want.len());
    for (row, fc) in rows.iter().zip(want) {
        let got: f64 = row[1].parse().unwrap();
        assert!((got - fc).abs() < 1e-3, "{row:?}");
    }
    let u2 = &rows[3];
    let fm: f64 = u2[3].parse().unwrap();
    assert!((fm - 2.4898).abs() < 1e-4 && fm > u2[1].parse::<f64>().unwrap());
}

#[test]
fn fc_table_empty_list_is_header_only() {
    let dir = scratch("fc-empty");
    assert!(run(&dir, &["fc-table", "--u", ""]).status.success());
    let text = fs::read_to_string(dir.join("fc_table.csv")).unwrap();
    assert!(table(&text).is_empty());
    assert!(text.lines().any(|l| l == "u,F_c,x_c,F_m,error"));
}

#[test]
fn fc_table_reports_per_row_failures_and_json() {
    let dir = scratch("fc-json");
    assert!(run(&dir, &["--format", "json", "fc-table", "--u", "2,0.001"]).status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("fc_table.json")).unwrap()).unwrap();
    assert!(v["rows"][0]["F_c"].as_f64().is_some());
    assert!(v["rows"][1]["error"].as_str().is_some());
}

#[test]
fn thresholds_rows_per_seed() {
    let dir = scratch("thr");
    let out = run(&dir, &["--seed", "4", "thresholds", "--u", "2", "--n", "2000", "--seeds", "3"]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.join("thresholds.csv")).unwrap();
    assert!(text.contains("# seed=4"));
    let rows = table(&text);
    assert_eq!(rows.len(), 3 + 4 * 3);
    assert_eq!(rows[3][0], "4");
    assert_eq!(rows.last().unwrap()[0], "6");
}

#[test]
fn hard_zero_threshold_is_identity() {
    let dir = scratch("hard0");
    assert!(run(&dir, &["--seed", "2", "sample", "--kind", "doppler", "--n", "256", "--snr-db", "3"]).status.success());
    let input = dir.join("doppler_noisy.csv");
    let out = run(&dir, &["denoise", "--input", input.to_str().unwrap(), "--method", "hard", "--threshold", "0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let x = read_floats(&input);
    let y = read_floats(&dir.join("doppler_noisy_denoised.csv"));
    assert_eq!(x.len(), y.len());
    for (a, b) in x.iter().zip(&y) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}

#[test]
fn peeling_sidecar_matches_deterministic_threshold() {
    let dir = scratch("peel");
    assert!(run(&dir, &["--seed", "8", "sample", "--kind", "ggd", "--shape", "2", "--n", "8192"]).status.success());
    let input = dir.join("ggd.csv");
    let out = run(&dir, &["denoise", "--input", input.to_str().unwrap(), "--method", "peel-c15", "--shape", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("ggd_denoised.meta.json")).unwrap()).unwrap();
    let t = meta["threshold"].as_f64().unwrap();
    // √x* at 1.15 F_c for the Gaussian shape
    assert!((t / 2.282306848 - 1.0).abs() < 0.02, "{t}");
    assert_eq!(meta["shape_source"], "given");
    assert_eq!(meta["sigma_source"], "estimated");
}

#[test]
fn data_driven_sidecar_reports_iterations() {
    let dir = scratch("hat");
    assert!(run(&dir, &["sample", "--kind", "ggd", "--shape", "1", "--n", "4096", "--format", "json"]).status.success());
    let input = dir.join("ggd.json");
    let out = run(&dir, &["denoise", "--input", input.to_str().unwrap(), "--method", "That_c15", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("ggd_denoised.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["iterations"], 9);
    let y: Vec<f64> = serde_json::from_str(&fs::read_to_string(dir.join("ggd_denoised.json")).unwrap()).unwrap();
    assert_eq!(y.len(), 4096);
}

#[test]
fn non_power_of_two_is_validation_error() {
    let dir = scratch("npow");
    let input = dir.join("odd.csv");
    fs::write(&input, "1\n2\n3\n").unwrap();
    let out = run(&dir, &["denoise", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_is_io_error() {
    let dir = scratch("missing");
    let out = run(&dir, &["denoise", "--input", dir.join("nope.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let out = run(&dir, &["bench", "--config", dir.join("nope.cfg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn bad_flags_and_config_lines_are_validation_errors() {
    let dir = scratch("badcfg");
    assert_eq!(run(&dir, &["frobnicate"]).status.code(), Some(2));
    let cfg = dir.join("bad.cfg");
    fs::write(&cfg, "n = 256\nreplications = 2\nwidgets = 3\n").unwrap();
    let out = run(&dir, &["bench", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn bench_rerun_is_byte_identical() {
    let a = scratch("bench-a");
    let b = scratch("bench-b");
    let cfg = a.join("b.cfg");
    fs::write(&cfg, "signal = Blocks, Doppler\nn = 512\nsnr = 3\nnoise_shape = 1\nreplications = 6\n").unwrap();
    let c = cfg.to_str().unwrap();
    assert!(run(&a, &["--workers", "1", "--seed", "3", "bench", "--config", c]).status.success());
    assert!(run(&b, &["--workers", "4", "--seed", "3", "bench", "--config", c]).status.success());
    let x = fs::read(a.join("bench.csv")).unwrap();
    assert_eq!(x, fs::read(b.join("bench.csv")).unwrap());
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("# command=bench\n# seed=3\n"));
    assert_eq!(table(&text).len(), 2 * 9);
    // the wall-clock stream lives in its own file
    assert!(fs::read_to_string(a.join("wavepeel.log")).unwrap().contains("started_unix"));
    assert!(!text.contains("started_unix"));
}

#[test]
fn converge_subcritical_collapses() {
    let dir = scratch("conv");
    let cfg = dir.join("c.cfg");
    fs::write(&cfg, "shape = 2\nfactor_ratio = 0.9\nn = 16384\nreplications = 200\n").unwrap();
    let out = run(&dir, &["converge", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.join("converge.csv")).unwrap();
    assert!(text.contains("# regime=subcritical"));
    let rows = table(&text);
    let freq: f64 = rows[0][3].parse().unwrap();
    assert!(freq <= 0.05, "{freq}");
    assert!(dir.join("converge_fluctuations.csv").exists());
}

#[test]
fn converge_critical_ratio_is_rejected() {
    let dir = scratch("conv-crit");
    let cfg = dir.join("c.cfg");
    fs::write(&cfg, "factor_ratio = 1\nn = 256\nreplications = 2\n").unwrap();
    assert_eq!(run(&dir, &["converge", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}
