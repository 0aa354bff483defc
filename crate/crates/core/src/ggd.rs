//! Zero-mean generalized Gaussian law `p(x) = α exp(-|βx|^u)` with standard
//! deviation σ and shape u.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{bisect, compensated_sum};
use crate::rng;
use crate::specfun::{ln_gamma_unchecked, lower_unchecked};

/// Smallest shape accepted; below it the gamma arguments 1/u, 3/u explode.
pub const MIN_SHAPE: f64 = 1e-3;
/// Shape bracket for moment inversion.
pub const ESTIMATION_SHAPE_RANGE: (f64, f64) = (0.05, 20.0);
const MIN_ESTIMATION_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GgdParams {
    sigma: f64,
    u: f64,
    beta: f64,
    alpha: f64,
}

impl GgdParams {
    pub fn new(sigma: f64, u: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return domain(format!("sigma must be finite and > 0, got {sigma}"));
        }
        if !(u.is_finite() && u > 0.0) {
            return domain(format!("shape must be finite and > 0, got {u}"));
        }
        if u < MIN_SHAPE {
            return Err(Error::Overflow(format!(
                "shape {u} below {MIN_SHAPE}: Γ(1/u), Γ(3/u) out of range"
            )));
        }
        let (ln_beta_unit, ln_alpha_unit) = unit_log_constants(u);
        let beta = (ln_beta_unit).exp() / sigma;
        let alpha = (ln_alpha_unit).exp() / sigma;
        if !(beta.is_finite() && alpha.is_finite() && beta > 0.0 && alpha > 0.0) {
            return Err(Error::Overflow(format!(
                "derived constants not representable for sigma={sigma}, u={u}"
            )));
        }
        Ok(Self { sigma, u, beta, alpha })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn shape(&self) -> f64 {
        self.u
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.alpha * (-(self.beta * x).abs().powf(self.u)).exp()
    }

    /// Density of `Y = Z²` for `Z` with this law.
    pub fn squared_pdf(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        let root = w.sqrt();
        self.alpha / root * (-(self.beta * root).powf(self.u)).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let half_mass = 0.5 * lower_unchecked((self.beta * x).abs().powf(self.u), 1.0 / self.u);
        if x >= 0.0 {
            0.5 + half_mass
        } else {
            0.5 - half_mass
        }
    }

    /// Excess-free kurtosis `Γ(5/u)Γ(1/u)/Γ(3/u)²`.
    pub fn kurtosis(&self) -> f64 {
        let u = self.u;
        (ln_gamma_unchecked(5.0 / u) + ln_gamma_unchecked(1.0 / u)
            - 2.0 * ln_gamma_unchecked(3.0 / u))
        .exp()
    }

    /// `n` i.i.d. draws, reproducible per `seed`.
    pub fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        let mut rng = rng::seeded(seed);
        self.sample_with(&mut rng, n)
    }

    /// Draws `S·G^{1/u}/β` with `G ~ Gamma(1/u, 1)` and `S` a fair sign.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let gamma = Gamma::new(1.0 / self.u, 1.0).expect("shape validated at construction");
        let inv_u = 1.0 / self.u;
        (0..n)
            .map(|_| {
                let g: f64 = gamma.sample(rng);
                let magnitude = g.powf(inv_u) / self.beta;
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            })
            .collect()
    }
}

/// `(ln β, ln α)` at σ = 1.
fn unit_log_constants(u: f64) -> (f64, f64) {
    let lg1 = ln_gamma_unchecked(1.0 / u);
    let ln_beta = 0.5 * (ln_gamma_unchecked(3.0 / u) - lg1);
    let ln_alpha = ln_beta + u.ln() - std::f64::consts::LN_2 - lg1;
    (ln_beta, ln_alpha)
}

/// `m1 / √m2 = Γ(2/u) / √(Γ(1/u) Γ(3/u))`, strictly increasing in u.
pub fn moment_ratio(u: f64) -> f64 {
    (ln_gamma_unchecked(2.0 / u)
        - 0.5 * (ln_gamma_unchecked(1.0 / u) + ln_gamma_unchecked(3.0 / u)))
    .exp()
}

/// Sample mean, absolute first moment and second moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMoments {
    pub mean: f64,
    pub abs_first: f64,
    pub second: f64,
    pub std_dev: f64,
}

impl EmpiricalMoments {
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = compensated_sum(samples.iter().copied()) / n;
        let abs_first = compensated_sum(samples.iter().map(|x| x.abs())) / n;
        let second = compensated_sum(samples.iter().map(|x| x * x)) / n;
        let var = compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean))) / n;
        Self { mean, abs_first, second, std_dev: var.sqrt() }
    }
}

/// Moment-based fit: σ̂ is the empirical standard deviation, û inverts the
/// absolute-moment ratio `m1/√m2` by bisection on `[0.05, 20]`.
pub fn estimate_params(samples: &[f64]) -> Result<GgdParams> {
    if samples.len() < MIN_ESTIMATION_SAMPLES {
        return Err(Error::Estimation(format!(
            "need at least {MIN_ESTIMATION_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Estimation("samples contain non-finite values".into()));
    }
    let m = EmpiricalMoments::of(samples);
    if m.std_dev <= 0.0 || m.second <= 0.0 {
        return Err(Error::Estimation("samples are constant".into()));
    }
    let shape = invert_moment_ratio(m.abs_first / m.second.sqrt())?;
    GgdParams::new(m.std_dev, shape)
}

pub fn invert_moment_ratio(ratio: f64) -> Result<f64> {
    let (lo, hi) = ESTIMATION_SHAPE_RANGE;
    let (r_lo, r_hi) = (moment_ratio(lo), moment_ratio(hi));
    assert!(r_lo < r_hi, "moment ratio must increase with the shape");
    if !(r_lo..=r_hi).contains(&ratio) {
        return Err(Error::Estimation(format!(
            "moment ratio {ratio:.6} outside [{r_lo:.6}, {r_hi:.6}] covered by u in [{lo}, {hi}]"
        )));
    }
    // R is smooth with derivative O(1); a 1e-12 bracket on u keeps |R - ratio| far below 1e-8
    bisect(|u| moment_ratio(u) - ratio, lo, hi, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_constants() {
        let p = GgdParams::new(1.0, 2.0).unwrap();
        assert!((p.beta() - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        assert!((p.alpha() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-14);
        for &x in &[-3.0f64, -0.4, 0.0, 1.2, 2.5] {
            let normal = (-(x * x) / 2.0).exp() / (2.0 * PI).sqrt();
            assert!((p.pdf(x) - normal).abs() < 1e-14);
        }
    }

    #[test]
    fn laplace_constants() {
        let p = GgdParams::new(1.0, 1.0).unwrap();
        assert!((p.beta() - 2f64.sqrt()).abs() < 1e-14);
        assert!((p.alpha() - 2f64.sqrt() / 2.0).abs() < 1e-14);
        assert!((p.pdf(0.0) - 0.707_106_781_186_547_5).abs() < 1e-14);
    }

    #[test]
    fn beta_scales_inversely_with_sigma() {
        let one = GgdParams::new(1.0, 2.0).unwrap();
        let two = GgdParams::new(2.0, 2.0).unwrap();
        assert!((two.beta() - one.beta() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn constants_recompute() {
        for &(s, u) in &[(0.3, 0.4), (1.0, 1.7), (5.0, 3.5)] {
            let p = GgdParams::new(s, u).unwrap();
            let g = |z: f64| ln_gamma_unchecked(z).exp();
            let beta = (g(3.0 / u) / g(1.0 / u)).sqrt() / s;
            let alpha = beta * u / (2.0 * g(1.0 / u));
            assert!((p.beta() / beta - 1.0).abs() < 1e-12);
            assert!((p.alpha() / alpha - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(GgdParams::new(0.0, 2.0), Err(Error::Domain(_))));
        assert!(matches!(GgdParams::new(1.0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(GgdParams::new(1.0, 5e-4), Err(Error::Overflow(_))));
    }

    #[test]
    fn squared_density_relations() {
        let p = GgdParams::new(1.0, 2.0).unwrap();
        assert_eq!(p.squared_pdf(0.0), 0.0);
        assert_eq!(p.squared_pdf(-1.0), 0.0);
        for &w in &[0.01f64, 0.5, 1.0, 4.0, 9.0] {
            // chi-square(1): w^{-1/2} e^{-w/2} / √(2π)
            let chi2 = (-w / 2.0).exp() / (2.0 * PI * w).sqrt();
            assert!((p.squared_pdf(w) - chi2).abs() < 1e-13 * chi2);
        }
        let q = GgdParams::new(1.3, 0.7).unwrap();
        for &w in &[0.02, 0.3, 2.0, 7.0] {
            assert!((q.squared_pdf(w) - q.pdf(w.sqrt()) / w.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn moment_ratio_gaussian_anchor() {
        assert!((moment_ratio(2.0) - (2.0 / PI).sqrt()).abs() < 1e-14);
        assert!((invert_moment_ratio((2.0 / PI).sqrt()).unwrap() - 2.0).abs() < 1e-9);
        // R(u) < √3/2 for every u
        assert!(invert_moment_ratio(0.95).is_err());
        assert!(invert_moment_ratio(1e-9).is_err());
    }

    #[test]
    fn estimation_input_checks() {
        assert!(matches!(estimate_params(&[1.0; 50]), Err(Error::Estimation(_))));
        assert!(matches!(estimate_params(&[1.0; 500]), Err(Error::Estimation(_))));
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = GgdParams::new(1.0, 0.8).unwrap();
        assert_eq!(p.sample(7, 1000), p.sample(7, 1000));
        assert_ne!(p.sample(7, 1000), p.sample(8, 1000));
        assert!(p.sample(7, 0).is_empty());
    }

    #[test]
    fn kurtosis_reference_values() {
        assert!((GgdParams::new(1.0, 2.0).unwrap().kurtosis() - 3.0).abs() < 1e-12);
        assert!((GgdParams::new(1.0, 1.0).unwrap().kurtosis() - 6.0).abs() < 1e-12);
    }
}
