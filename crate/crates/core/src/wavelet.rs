//! Orthogonal periodized discrete wavelet transform (Mallat pyramid).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SYM8_LOWPASS: [f64; 16] = [
    -0.003_382_415_951_006_125_6,
    -0.000_542_132_331_791_148_1,
    0.031_695_087_811_492_98,
    0.007_607_487_324_917_605,
    -0.143_294_238_350_809_7,
    -0.061_273_359_067_658_524,
    0.481_359_651_258_372_2,
    0.777_185_751_700_523_5,
    0.364_441_894_835_331_4,
    -0.051_945_838_107_709_04,
    -0.027_219_029_917_056_003,
    0.049_137_179_673_607_506,
    0.003_808_752_013_890_615,
    -0.014_952_258_337_048_23,
    -0.000_302_920_514_721_366_8,
    0.001_889_950_332_759_460_9,
];

/// Orthonormal decomposition filters. The highpass is the quadrature mirror
/// `g[k] = (-1)^k h[L-1-k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    name: String,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl FilterPair {
    pub fn from_lowpass(name: impl Into<String>, lowpass: Vec<f64>) -> Result<Self> {
        if lowpass.len() < 2 || !lowpass.len().is_multiple_of(2) {
            return Err(Error::InvalidInput("filter length must be even and >= 2".into()));
        }
        let l = lowpass.len();
        let highpass = (0..l)
            .map(|k| if k % 2 == 0 { lowpass[l - 1 - k] } else { -lowpass[l - 1 - k] })
            .collect();
        Ok(Self { name: name.into(), lowpass, highpass })
    }

    pub fn haar() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_lowpass("haar", vec![h, h]).expect("valid filter")
    }

    pub fn sym8() -> Self {
        Self::from_lowpass("sym8", SYM8_LOWPASS.to_vec()).expect("valid filter")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(Self::haar()),
            "sym8" => Ok(Self::sym8()),
            other => Err(Error::InvalidInput(format!("unknown wavelet filter '{other}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletCoeffs {
    /// Coarsest-scale approximation block.
    pub approx: Vec<f64>,
    /// Detail blocks ordered coarsest first.
    pub details: Vec<Vec<f64>>,
    pub original_length: usize,
    pub levels: usize,
    pub filter_name: String,
}

/// Block layout of a flattened coefficient vector: `[approx?, details coarse→fine]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub approx_len: usize,
    pub detail_lens: Vec<usize>,
    pub include_approx: bool,
    /// Approximation block kept aside when it is not part of the flat vector.
    pub held_out_approx: Vec<f64>,
    pub original_length: usize,
    pub filter_name: String,
}

impl Layout {
    pub fn flat_len(&self) -> usize {
        let details: usize = self.detail_lens.iter().sum();
        details + if self.include_approx { self.approx_len } else { 0 }
    }
}

fn log2_exact(n: usize) -> Option<usize> {
    (n.is_power_of_two()).then(|| n.trailing_zeros() as usize)
}

/// Deepest decomposition for a power-of-two `len`: the coarsest level still
/// sees an input at least as long as the filter (haar reaches full depth).
pub fn max_levels(len: usize, filter: &FilterPair) -> usize {
    let Some(j) = log2_exact(len) else { return 0 };
    let filter_bits = (filter.len() as f64).log2().ceil() as usize;
    (j + 1).saturating_sub(filter_bits).min(j)
}

/// `log2(N) - 4`, leaving an approximation block of 16, clamped to `[1, max]`.
pub fn default_levels(len: usize, filter: &FilterPair) -> usize {
    let j = log2_exact(len).unwrap_or(0);
    j.saturating_sub(4).clamp(1, max_levels(len, filter).max(1))
}

fn analysis_step(input: &[f64], filter: &FilterPair) -> (Vec<f64>, Vec<f64>) {
    let m = input.len();
    let half = m / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for (n, (&h, &g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            let x = input[(2 * k + n) % m];
            a += h * x;
            d += g * x;
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

fn synthesis_step(approx: &[f64], detail: &[f64], filter: &FilterPair) -> Vec<f64> {
    let m = 2 * approx.len();
    let mut out = vec![0.0; m];
    for k in 0..approx.len() {
        for (n, (&h, &g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            out[(2 * k + n) % m] += h * approx[k] + g * detail[k];
        }
    }
    out
}

pub fn dwt(signal: &[f64], filter: &FilterPair, levels: usize) -> Result<WaveletCoeffs> {
    if log2_exact(signal.len()).is_none() || signal.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "signal length {} is not a power of two >= 2",
            signal.len()
        )));
    }
    let max = max_levels(signal.len(), filter);
    if levels == 0 || levels > max {
        return Err(Error::InvalidInput(format!(
            "levels must be in [1, {max}] for length {} with {} ({} taps), got {levels}",
            signal.len(),
            filter.name,
            filter.len()
        )));
    }
    let mut current = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analysis_step(&current, filter);
        details.push(d);
        current = a;
    }
    details.reverse();
    Ok(WaveletCoeffs {
        approx: current,
        details,
        original_length: signal.len(),
        levels,
        filter_name: filter.name.clone(),
    })
}

pub fn idwt(coeffs: &WaveletCoeffs, filter: &FilterPair) -> Result<Vec<f64>> {
    if coeffs.filter_name != filter.name {
        return Err(Error::InvalidInput(format!(
            "coefficients were produced with '{}', not '{}'",
            coeffs.filter_name, filter.name
        )));
    }
    coeffs.check_shape()?;
    let mut current = coeffs.approx.clone();
    for d in &coeffs.details {
        current = synthesis_step(&current, d, filter);
    }
    Ok(current)
}

impl WaveletCoeffs {
    fn check_shape(&self) -> Result<()> {
        if self.details.len() != self.levels {
            return Err(Error::InvalidInput(format!(
                "{} detail blocks for {} levels",
                self.details.len(),
                self.levels
            )));
        }
        let mut expected = self.approx.len();
        for (i, d) in self.details.iter().enumerate() {
            if d.len() != expected {
                return Err(Error::InvalidInput(format!(
                    "detail block {i} has length {}, expected {expected}",
                    d.len()
                )));
            }
            expected *= 2;
        }
        if expected != self.original_length {
            return Err(Error::InvalidInput(format!(
                "blocks reconstruct length {expected}, expected {}",
                self.original_length
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.approx.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten(&self, include_approx: bool) -> (Vec<f64>, Layout) {
        let mut flat = Vec::with_capacity(self.len());
        if include_approx {
            flat.extend_from_slice(&self.approx);
        }
        for d in &self.details {
            flat.extend_from_slice(d);
        }
        let layout = Layout {
            approx_len: self.approx.len(),
            detail_lens: self.details.iter().map(Vec::len).collect(),
            include_approx,
            held_out_approx: if include_approx { Vec::new() } else { self.approx.clone() },
            original_length: self.original_length,
            filter_name: self.filter_name.clone(),
        };
        (flat, layout)
    }

    pub fn unflatten(flat: &[f64], layout: &Layout) -> Result<Self> {
        if flat.len() != layout.flat_len() {
            return Err(Error::InvalidInput(format!(
                "flat vector has {} entries, layout expects {}",
                flat.len(),
                layout.flat_len()
            )));
        }
        let mut rest = flat;
        let approx = if layout.include_approx {
            let (a, r) = rest.split_at(layout.approx_len);
            rest = r;
            a.to_vec()
        } else {
            if layout.held_out_approx.len() != layout.approx_len {
                return Err(Error::InvalidInput("layout lost its approximation block".into()));
            }
            layout.held_out_approx.clone()
        };
        let mut details = Vec::with_capacity(layout.detail_lens.len());
        for &len in &layout.detail_lens {
            let (d, r) = rest.split_at(len);
            details.push(d.to_vec());
            rest = r;
        }
        let out = Self {
            approx,
            details,
            original_length: layout.original_length,
            levels: layout.detail_lens.len(),
            filter_name: layout.filter_name.clone(),
        };
        out.check_shape()?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn energy(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum()
    }

    #[test]
    fn sym8_has_eight_vanishing_moments() {
        let f = FilterPair::sym8();
        for p in 0..8 {
            let (mut m, mut scale) = (0.0, 0.0);
            for (k, g) in f.highpass().iter().enumerate() {
                let kp = (k as f64).powi(p);
                m += kp * g;
                scale += kp * g.abs();
            }
            assert!(m.abs() <= 1e-9 * scale, "moment {p}: {m}");
        }
    }

    #[test]
    fn filter_invariants() {
        for f in [FilterPair::haar(), FilterPair::sym8()] {
            let h = f.lowpass();
            assert!((h.iter().sum::<f64>() - 2f64.sqrt()).abs() < 1e-10, "{}", f.name());
            assert!((energy(h) - 1.0).abs() < 1e-10);
            for m in 1..h.len() / 2 {
                let dot: f64 = (0..h.len() - 2 * m).map(|k| h[k] * h[k + 2 * m]).sum();
                assert!(dot.abs() < 1e-10, "{} shift {m}", f.name());
            }
            // highpass annihilates constants
            assert!(f.highpass().iter().sum::<f64>().abs() < 1e-10);
        }
    }

    #[test]
    fn haar_hand_example() {
        let c = dwt(&[1.0, 1.0, 1.0, 1.0], &FilterPair::haar(), 2).unwrap();
        assert!((c.approx[0] - 2.0).abs() < 1e-15);
        assert_eq!(c.details.len(), 2);
        assert_eq!(c.details[0].len(), 1);
        assert_eq!(c.details[1].len(), 2);
        assert!(c.details.iter().flatten().all(|d| d.abs() < 1e-15));
    }

    #[test]
    fn haar_level_one_closed_form() {
        let x = [3.0, -1.0, 2.5, 0.5, 7.0, 1.0, -2.0, 4.0];
        let c = dwt(&x, &FilterPair::haar(), 1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for k in 0..4 {
            assert!((c.approx[k] - (x[2 * k] + x[2 * k + 1]) * s).abs() < 1e-14);
            assert!((c.details[0][k] - (x[2 * k] - x[2 * k + 1]) * s).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_signal_has_no_detail() {
        let x = vec![3.7; 256];
        let c = dwt(&x, &FilterPair::sym8(), 5).unwrap();
        assert!(c.details.iter().flatten().all(|d| d.abs() < 1e-10));
    }

    #[test]
    fn haar_round_trip_small() {
        let x: Vec<f64> = (1..=8).map(f64::from).collect();
        let f = FilterPair::haar();
        let back = idwt(&dwt(&x, &f, 3).unwrap(), &f).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coefficients_give_zero_signal() {
        let f = FilterPair::sym8();
        let c = dwt(&vec![0.0; 64], &f, 2).unwrap();
        assert!(idwt(&c, &f).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn level_limits() {
        let h = FilterPair::haar();
        let s = FilterPair::sym8();
        assert_eq!(max_levels(4, &h), 2);
        assert_eq!(max_levels(256, &s), 5);
        assert_eq!(max_levels(2048, &s), 8);
        assert_eq!(default_levels(2048, &s), 7);
        assert!(dwt(&[1.0; 6], &h, 1).is_err());
        assert!(dwt(&[1.0; 8], &h, 0).is_err());
        assert!(dwt(&[1.0; 8], &h, 4).is_err());
        assert!(dwt(&[1.0; 64], &s, 4).is_err());
    }

    #[test]
    fn idwt_rejects_mismatch() {
        let h = FilterPair::haar();
        let mut c = dwt(&[1.0; 8], &h, 2).unwrap();
        assert!(idwt(&c, &FilterPair::sym8()).is_err());
        c.details[1].pop();
        assert!(idwt(&c, &h).is_err());
    }

    #[test]
    fn flatten_layouts() {
        let x: Vec<f64> = (0..2048).map(|i| (i as f64 * 0.37).sin()).collect();
        let c = dwt(&x, &FilterPair::sym8(), 5).unwrap();
        let (flat, layout) = c.flatten(true);
        assert_eq!(flat.len(), 2048);
        assert_eq!(WaveletCoeffs::unflatten(&flat, &layout).unwrap(), c);
        let (flat, layout) = c.flatten(false);
        assert_eq!(flat.len(), 2048 - c.approx.len());
        assert_eq!(WaveletCoeffs::unflatten(&flat, &layout).unwrap(), c);
        assert!(WaveletCoeffs::unflatten(&flat[1..], &layout).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_and_parseval(x in prop::collection::vec(-100.0f64..100.0, 256), levels in 1usize..=5, sym in any::<bool>()) {
            let f = if sym { FilterPair::sym8() } else { FilterPair::haar() };
            let c = dwt(&x, &f, levels).unwrap();
            let (flat, _) = c.flatten(true);
            let e = energy(&x);
            prop_assert!((energy(&flat) - e).abs() <= 1e-9 * e.max(1e-300));
            let back = idwt(&c, &f).unwrap();
            let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            for (a, b) in x.iter().zip(&back) {
                prop_assert!((a - b).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn linear(x in prop::collection::vec(-5.0f64..5.0, 64), y in prop::collection::vec(-5.0f64..5.0, 64), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let f = FilterPair::sym8();
            let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let (cm, _) = dwt(&mix, &f, 3).unwrap().flatten(true);
            let (cx, _) = dwt(&x, &f, 3).unwrap().flatten(true);
            let (cy, _) = dwt(&y, &f, 3).unwrap().flatten(true);
            for i in 0..64 {
                prop_assert!((cm[i] - (a * cx[i] + b * cy[i])).abs() < 1e-10);
            }
        }
    }
}
