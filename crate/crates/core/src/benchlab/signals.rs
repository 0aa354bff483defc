//! The four classical test signals, sampled at `t = i/N`, `i = 1..N`, and
//! normalized to unit mean power.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BREAKPOINTS: [f64; 11] = [0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
const BLOCK_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BUMP_HEIGHTS: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMP_WIDTHS: [f64; 11] =
    [0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Benchmark {
    Blocks,
    Bumps,
    HeaviSine,
    Doppler,
}

impl Benchmark {
    pub const ALL: [Benchmark; 4] =
        [Benchmark::Blocks, Benchmark::Bumps, Benchmark::HeaviSine, Benchmark::Doppler];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Blocks => "Blocks",
            Benchmark::Bumps => "Bumps",
            Benchmark::HeaviSine => "HeaviSine",
            Benchmark::Doppler => "Doppler",
        }
    }

    fn raw(self, t: f64) -> f64 {
        match self {
            Benchmark::Blocks => BREAKPOINTS
                .iter()
                .zip(BLOCK_HEIGHTS)
                .map(|(&p, h)| h * (1.0 + sign(t - p)) / 2.0)
                .sum(),
            Benchmark::Bumps => BREAKPOINTS
                .iter()
                .zip(BUMP_HEIGHTS.iter().zip(BUMP_WIDTHS))
                .map(|(&p, (&h, w))| h / (1.0 + ((t - p) / w).abs()).powi(4))
                .sum(),
            Benchmark::HeaviSine => {
                4.0 * (4.0 * std::f64::consts::PI * t).sin() - sign(t - 0.3) - sign(0.72 - t)
            }
            Benchmark::Doppler => {
                (t * (1.0 - t)).sqrt() * (2.0 * std::f64::consts::PI * 1.05 / (t + 0.05)).sin()
            }
        }
    }
}

impl std::str::FromStr for Benchmark {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown benchmark signal '{s}'")))
    }
}

/// sign with sign(0) = 0
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn make_benchmark(kind: Benchmark, n: usize) -> Result<Vec<f64>> {
    if !n.is_power_of_two() || n < 64 {
        return Err(Error::InvalidInput(format!("benchmark length must be a power of two >= 64, got {n}")));
    }
    let raw: Vec<f64> = (1..=n).map(|i| kind.raw(i as f64 / n as f64)).collect();
    let power = crate::numeric::compensated_sum(raw.iter().map(|x| x * x)) / n as f64;
    let scale = power.sqrt().recip();
    Ok(raw.into_iter().map(|x| x * scale).collect())
}
