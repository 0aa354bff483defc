//! Output quality and the two classical threshold baselines.

use crate::error::{domain, Error, Result};
use crate::ggd::GgdParams;
use crate::numeric::compensated_sum;
use crate::rng;

/// `10 log10(Σx² / Σ(x - x̂)²)` in dB; `+∞` when the residual vanishes.
pub fn snr_den(x: &[f64], xhat: &[f64]) -> Result<f64> {
    if x.len() != xhat.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            x.len(),
            xhat.len()
        )));
    }
    let signal = compensated_sum(x.iter().map(|v| v * v));
    let residual = compensated_sum(x.iter().zip(xhat).map(|(a, b)| (a - b) * (a - b)));
    if residual == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / residual).log10())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// `σ √(2 ln N)`.
pub fn universal_threshold(n: usize, sigma: f64) -> Result<f64> {
    if n < 2 {
        return domain(format!("universal threshold needs N >= 2, got {n}"));
    }
    Ok(sigma * (2.0 * (n as f64).ln()).sqrt())
}

/// Minimiser of Stein's unbiased risk estimate for soft thresholding,
/// `SURE(t) = N - 2 #{|c_i| ≤ t} + Σ min(c_i², t²)` on σ-standardized
/// coefficients, searched over `{0} ∪ {|c_i|}` (smallest argmin wins ties).
/// Returned on the original scale.
pub fn sure_threshold(coeffs: &[f64], sigma: f64) -> Result<f64> {
    if coeffs.is_empty() {
        return Err(Error::InvalidInput("SURE needs at least one coefficient".into()));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return domain(format!("sigma must be finite and > 0, got {sigma}"));
    }
    let n = coeffs.len();
    let mut mags: Vec<f64> = coeffs.iter().map(|c| (c / sigma).abs()).collect();
    mags.sort_by(f64::total_cmp);

    let risk_at = |t: f64, at_or_below: usize, sq_below: f64| {
        n as f64 - 2.0 * at_or_below as f64 + sq_below + (n - at_or_below) as f64 * t * t
    };

    let zeros = mags.partition_point(|&m| m <= 0.0);
    let mut best_t = 0.0;
    let mut best_risk = risk_at(0.0, zeros, 0.0);
    let mut sq = crate::numeric::CompensatedSum::new();
    let mut i = 0;
    while i < n {
        let t = mags[i];
        // absorb the whole tie group so the count uses "≤ t"
        let mut j = i;
        while j < n && mags[j] == t {
            sq.add(t * t);
            j += 1;
        }
        let risk = risk_at(t, j, sq.value());
        if risk < best_risk {
            best_risk = risk;
            best_t = t;
        }
        i = j;
    }
    Ok(sigma * best_t)
}

/// Adds generalized Gaussian noise of shape `u_n` to `clean`, rescaled so
/// that `Σ clean² / Σ noise² = snr` exactly. Returns `(noisy, noise)`.
pub fn add_noise_to_coeffs(
    clean: &[f64],
    noise_shape: f64,
    snr: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(snr.is_finite() && snr > 0.0) {
        return domain(format!("linear SNR must be > 0, got {snr}"));
    }
    let signal = compensated_sum(clean.iter().map(|v| v * v));
    if signal <= 0.0 {
        return Err(Error::InvalidInput("clean coefficients carry no energy".into()));
    }
    let law = GgdParams::new(1.0, noise_shape)?;
    let mut rng = rng::seeded(seed);
    let raw = law.sample_with(&mut rng, clean.len());
    let raw_energy = compensated_sum(raw.iter().map(|v| v * v));
    if raw_energy <= 0.0 {
        return Err(Error::InvalidInput("drawn noise has zero energy".into()));
    }
    let scale = (signal / (snr * raw_energy)).sqrt();
    let noise: Vec<f64> = raw.into_iter().map(|v| v * scale).collect();
    let noisy = clean.iter().zip(&noise).map(|(c, e)| c + e).collect();
    Ok((noisy, noise))
}
