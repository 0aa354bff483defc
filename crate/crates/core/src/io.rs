//! Signal and coefficient files.
//!
//! Signals are single-column CSV (blank lines and `#` comments skipped) or a
//! JSON array of numbers. The format follows the extension; `.json` means JSON,
//! anything else CSV.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet::{Layout, WaveletCoeffs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    Csv,
    Json,
}

impl SignalFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => SignalFormat::Json,
            _ => SignalFormat::Csv,
        }
    }
}

pub fn parse_signal_csv(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::InvalidInput(format!("line {}: not a number: '{line}'", i + 1)))?;
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("line {}: non-finite value", i + 1)));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn parse_signal_json(text: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = serde_json::from_str(text)?;
    Ok(v)
}

pub fn signal_to_csv(signal: &[f64]) -> String {
    let mut s = String::with_capacity(signal.len() * 20);
    for v in signal {
        s.push_str(&v.to_string());
        s.push('\n');
    }
    s
}

pub fn signal_to_json(signal: &[f64]) -> Result<String> {
    Ok(serde_json::to_string(signal)? + "\n")
}

pub fn read_signal(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    match SignalFormat::from_path(path) {
        SignalFormat::Csv => parse_signal_csv(&text),
        SignalFormat::Json => parse_signal_json(&text),
    }
}

pub fn write_signal(path: &Path, signal: &[f64]) -> Result<()> {
    let body = match SignalFormat::from_path(path) {
        SignalFormat::Csv => signal_to_csv(signal),
        SignalFormat::Json => signal_to_json(signal)?,
    };
    fs::write(path, body)?;
    Ok(())
}

/// JSON coefficient dump: `{approx, details, layout}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffDump {
    pub approx: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    pub layout: Layout,
}

impl CoeffDump {
    pub fn from_coeffs(c: &WaveletCoeffs) -> Self {
        let (_, layout) = c.flatten(true);
        Self { approx: c.approx.clone(), details: c.details.clone(), layout }
    }
}

pub fn write_coeffs(path: &Path, c: &WaveletCoeffs) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(&CoeffDump::from_coeffs(c))? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let x = vec![1.5, -0.25, 1e-300, 3.0];
        assert_eq!(parse_signal_csv(&signal_to_csv(&x)).unwrap(), x);
        assert_eq!(parse_signal_csv("# c\n1\n\n2 # two\n").unwrap(), vec![1.0, 2.0]);
        assert!(parse_signal_csv("1\nabc\n").is_err());
        assert!(parse_signal_csv("nan\n").is_err());
    }

    #[test]
    fn json_round_trip() {
        let x = vec![0.1, 0.2, -7.0];
        assert_eq!(parse_signal_json(&signal_to_json(&x).unwrap()).unwrap(), x);
        assert!(parse_signal_json("{\"a\":1}").is_err());
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(SignalFormat::from_path(Path::new("a.JSON")), SignalFormat::Json);
        assert_eq!(SignalFormat::from_path(Path::new("a.txt")), SignalFormat::Csv);
    }
}
