//! The deterministic peeling map `g(x) = F² Γ_inc((β√x)^u, 3/u)` in its
//! σ = 1 reduced form, the critical factor F_c and the fixed-point structure.
//!
//! A general σ enters only through `g_σ(x) = σ² g(x/σ²)`, so every solver
//! here works at σ = 1 and callers rescale at the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{bisect, golden_max, safeguarded_newton};
use crate::specfun::{ln_gamma_unchecked, ln_reg_lower_inc_gamma, lower_unchecked};

/// Relative half-width of the band reported as [`Regime::Critical`].
pub const CRITICAL_BAND: f64 = 1e-6;
/// Below `F / F_c` of this, fixed points are near-tangent and ill-conditioned.
pub const TANGENCY_RATIO: f64 = 1.001;
const RESIDUAL_TOL: f64 = 1e-9;
const ROOT_REL_TOL: f64 = 1e-14;
const MAX_DOUBLINGS: i32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedMap {
    factor: f64,
    shape: f64,
    beta: f64,
    alpha: f64,
}

impl ReducedMap {
    pub fn new(factor: f64, shape: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return domain(format!("peeling factor must be finite and > 0, got {factor}"));
        }
        let law = crate::ggd::GgdParams::new(1.0, shape)?;
        Ok(Self { factor, shape, beta: law.beta(), alpha: law.alpha() })
    }

    pub fn with_factor(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return domain(format!("peeling factor must be finite and > 0, got {factor}"));
        }
        Ok(Self { factor, ..*self })
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `g_∞ = F²`.
    pub fn sup(&self) -> f64 {
        self.factor * self.factor
    }

    /// `β^{-2} u^{-2/u}`: g is convex before this point and concave after.
    pub fn inflection_point(&self) -> f64 {
        (-2.0 * self.beta.ln() - 2.0 / self.shape * self.shape.ln()).exp()
    }

    fn gamma_argument(&self, x: f64) -> f64 {
        (self.beta * x.sqrt()).powf(self.shape)
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return domain(format!("g is defined for x >= 0, got {x}"));
        }
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            return self.sup();
        }
        self.sup() * lower_unchecked(self.gamma_argument(x), 3.0 / self.shape)
    }

    /// `g_σ(x) = σ² g(x / σ²)`.
    pub fn value_scaled(&self, sigma: f64, x: f64) -> Result<f64> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return domain(format!("sigma must be finite and > 0, got {sigma}"));
        }
        let s2 = sigma * sigma;
        Ok(s2 * self.value(x / s2)?)
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return domain(format!("g' is evaluated for x > 0, got {x}"));
        }
        Ok(self.derivative_unchecked(x))
    }

    pub(crate) fn derivative_unchecked(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            return 0.0;
        }
        self.sup() * self.alpha * x.sqrt() * (-self.gamma_argument(x)).exp()
    }

    /// `sup_{x>0} g(x)/x`, which is below one exactly in the subcritical regime.
    ///
    /// Maximised on a log grid of 10^4 points then refined by golden section.
    pub fn max_slope_ratio(&self) -> f64 {
        let ratio = |ln_x: f64| {
            let x = ln_x.exp();
            self.value_unchecked(x) / x
        };
        let lo = self.inflection_point().ln() - 40.0;
        let hi = self.sup().max(self.inflection_point()).ln() + 10.0;
        const GRID: usize = 10_000;
        let step = (hi - lo) / (GRID - 1) as f64;
        let (best, _) = (0..GRID)
            .map(|i| lo + step * i as f64)
            .map(|t| (t, ratio(t)))
            .fold((lo, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        let (_, refined) = golden_max(ratio, best - step, best + step, 1e-13);
        refined
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalSolution {
    pub shape: f64,
    /// F_c
    pub factor: f64,
    /// Tangent fixed point x*_c.
    pub fixed_point: f64,
}

impl CriticalSolution {
    pub fn map(&self) -> Result<ReducedMap> {
        ReducedMap::new(self.factor, self.shape)
    }

    /// `(g(x*_c) - x*_c, g'(x*_c) - 1)` at F = F_c.
    pub fn residuals(&self) -> Result<(f64, f64)> {
        let map = self.map()?;
        let x = self.fixed_point;
        Ok((map.value(x)? - x, map.derivative(x)? - 1.0))
    }
}

/// Solves `{g'(r) = 1, g(r) = r}` for `(F_c, x*_c)`.
///
/// Eliminating F² through the first equation leaves a scalar equation in r,
/// whose sign is carried by
/// `ψ(r) = ln Γ_inc((β√r)^u, 3/u) + (β√r)^u - ln α - (3/2) ln r`.
/// ψ < 0 at the inflection point; the bracket is doubled from there until ψ
/// changes sign.
pub fn critical_constant(u: f64) -> Result<CriticalSolution> {
    if !(0.05..=20.0).contains(&u) {
        return domain(format!("critical constant is supported for u in [0.05, 20], got {u}"));
    }
    let map = ReducedMap::new(1.0, u)?;
    let a = 3.0 / u;
    let ln_beta = map.beta.ln();
    let ln_alpha = map.alpha.ln();
    let gamma_arg = |ln_r: f64| (u * (ln_beta + 0.5 * ln_r)).exp();
    let psi = |ln_r: f64| -> f64 {
        let s = gamma_arg(ln_r);
        ln_reg_lower_inc_gamma(s, a).expect("arguments validated") + s - ln_alpha - 1.5 * ln_r
    };

    let ln_lo = map.inflection_point().ln();
    if psi(ln_lo) >= 0.0 {
        return Err(Error::Convergence(format!(
            "critical equation already non-negative at the inflection point {:e} (u={u})",
            ln_lo.exp()
        )));
    }
    let mut ln_hi = ln_lo;
    let mut found = false;
    for _ in 0..MAX_DOUBLINGS {
        ln_hi += std::f64::consts::LN_2;
        if psi(ln_hi) > 0.0 {
            found = true;
            break;
        }
    }
    if !found {
        return Err(Error::Convergence(format!(
            "no sign change of the critical equation on [{:e}, {:e}] (u={u})",
            ln_lo.exp(),
            ln_hi.exp()
        )));
    }

    let ln_r = bisect(psi, ln_lo, ln_hi, 1e-15)?;
    let r = ln_r.exp();
    let factor = (0.5 * (gamma_arg(ln_r) - ln_alpha - 0.5 * ln_r)).exp();
    let sol = CriticalSolution { shape: u, factor, fixed_point: r };
    let (fixed, slope) = sol.residuals()?;
    if fixed.abs() > RESIDUAL_TOL || slope.abs() > RESIDUAL_TOL {
        return Err(Error::Convergence(format!(
            "critical residuals too large for u={u}: g(r)-r={fixed:e}, g'(r)-1={slope:e}"
        )));
    }
    Ok(sol)
}

/// The earlier sufficient bound `F_m = √((3Γ(1/u)/u) (ue)^{1/u})`.
pub fn fm_bound(u: f64) -> Result<f64> {
    if !(u.is_finite() && u > 0.0) {
        return domain(format!("F_m requires u > 0, got {u}"));
    }
    let ln_sq = 3f64.ln() + ln_gamma_unchecked(1.0 / u) - u.ln() + (u.ln() + 1.0) / u;
    let fm = (0.5 * ln_sq).exp();
    if !fm.is_finite() {
        return Err(Error::Overflow(format!("F_m overflows for u={u}")));
    }
    Ok(fm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupercriticalStructure {
    /// Unstable fixed point l1.
    pub unstable: f64,
    /// Stable fixed point x*.
    pub stable: f64,
    /// `M_{x*} = g'(x*)`.
    pub contraction: f64,
}

/// Locates `l1 < x*_c < x*` for a map with `F > F_c`.
pub fn supercritical_structure(
    map: &ReducedMap,
    crit: &CriticalSolution,
) -> Result<SupercriticalStructure> {
    if (map.shape - crit.shape).abs() > 1e-12 * crit.shape {
        return domain(format!(
            "map shape {} does not match critical solution shape {}",
            map.shape, crit.shape
        ));
    }
    if map.factor <= crit.factor {
        return Err(Error::Regime(format!(
            "supercritical structure needs F > F_c, got F={} <= F_c={}",
            map.factor, crit.factor
        )));
    }
    if map.factor < TANGENCY_RATIO * crit.factor {
        log::warn!(
            "F/F_c = {:.6} is below {TANGENCY_RATIO}; fixed points are near-tangent",
            map.factor / crit.factor
        );
    }
    let d = |x: f64| (map.value_unchecked(x) - x, map.derivative_unchecked(x) - 1.0);
    let xc = crit.fixed_point;

    let mut lo = 0.5 * xc;
    while d(lo).0 >= 0.0 {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::Convergence("could not bracket the unstable fixed point".into()));
        }
    }
    let unstable = safeguarded_newton(d, lo, xc, ROOT_REL_TOL)?;
    let stable = safeguarded_newton(d, xc, map.sup(), ROOT_REL_TOL)?;
    for (name, root) in [("l1", unstable), ("x*", stable)] {
        let res = map.value_unchecked(root) - root;
        if res.abs() > RESIDUAL_TOL {
            return Err(Error::Convergence(format!("{name} residual {res:e} above tolerance")));
        }
    }
    let contraction = map.derivative_unchecked(stable);
    if !(contraction > 0.0 && contraction < 1.0) {
        return Err(Error::Convergence(format!(
            "stable fixed point has slope {contraction}, expected (0, 1)"
        )));
    }
    Ok(SupercriticalStructure { unstable, stable, contraction })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

pub fn classify_regime(factor: f64, u: f64) -> Result<Regime> {
    let crit = critical_constant(u)?;
    Ok(classify_against(factor, &crit))
}

pub fn classify_against(factor: f64, crit: &CriticalSolution) -> Regime {
    let rel = factor / crit.factor - 1.0;
    if rel.abs() <= CRITICAL_BAND {
        Regime::Critical
    } else if rel < 0.0 {
        Regime::Subcritical
    } else {
        Regime::Supercritical
    }
}

/// `n(N) = ⌊C α ln N⌋ + 1` with `C = -1/ln(M_{x*}) + η`.
pub fn iteration_count(n: usize, contraction: f64, alpha: f64, eta: f64) -> Result<usize> {
    if n < 2 {
        return domain(format!("iteration count needs N >= 2, got {n}"));
    }
    if !(contraction > 0.0 && contraction < 1.0) {
        return domain(format!("contraction must lie in (0, 1), got {contraction}"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return domain(format!("alpha must be finite and > 0, got {alpha}"));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return domain(format!("eta must be finite and >= 0, got {eta}"));
    }
    let c = -1.0 / contraction.ln() + eta;
    Ok((c * alpha * (n as f64).ln()).floor() as usize + 1)
}

/// Orbit `x_0 = ∞, x_{k+1} = g(x_k)` for `steps` steps (first entry is ∞).
pub fn deterministic_orbit(map: &ReducedMap, steps: usize) -> Vec<f64> {
    let mut orbit = Vec::with_capacity(steps + 1);
    let mut x = f64::INFINITY;
    orbit.push(x);
    for _ in 0..steps {
        x = map.value_unchecked(x);
        orbit.push(x);
    }
    orbit
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route to F_c: the smallest F for which `g(x) = x` has a
    /// positive root is `min_x x / Γ_inc((β√x)^u, 3/u)`.
    fn critical_by_minimisation(u: f64) -> (f64, f64) {
        let map = ReducedMap::new(1.0, u).unwrap();
        let neg = |t: f64| {
            let x = t.exp();
            -(x / map.value_unchecked(x))
        };
        let lo = map.inflection_point().ln() - 5.0;
        let hi = map.inflection_point().ln() + 30.0;
        let steps = 20_000;
        let h = (hi - lo) / steps as f64;
        let best = (0..=steps)
            .map(|i| lo + h * i as f64)
            .max_by(|a, b| neg(*a).partial_cmp(&neg(*b)).unwrap())
            .unwrap();
        let (t, v) = golden_max(neg, best - h, best + h, 1e-12);
        ((-v).sqrt(), t.exp())
    }

    #[test]
    fn g_endpoints() {
        let map = ReducedMap::new(1.7, 1.3).unwrap();
        assert_eq!(map.value(0.0).unwrap(), 0.0);
        assert_eq!(map.value(f64::INFINITY).unwrap(), 1.7 * 1.7);
        assert!(map.value(-1.0).is_err());
    }

    #[test]
    fn g_gaussian_example() {
        let map = ReducedMap::new(1.0, 2.0).unwrap();
        assert!((map.value(2.0).unwrap() - 0.427_593_295_529_120_2).abs() < 1e-10);
        let scaled = map.value_scaled(2.0, 8.0).unwrap();
        assert!((scaled - 4.0 * 0.427_593_295_529_120_2).abs() < 1e-9);
        assert_eq!(map.value_scaled(1.0, 3.3).unwrap(), map.value(3.3).unwrap());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let map = ReducedMap::new(2.0, 2.0).unwrap();
        let h = 1e-5;
        let fd = (map.value(1.0 + h).unwrap() - map.value(1.0 - h).unwrap()) / (2.0 * h);
        let d = map.derivative(1.0).unwrap();
        assert!((fd / d - 1.0).abs() < 1e-6);
        assert!(map.derivative(1e-14).unwrap() < 1e-6);
        assert!(map.derivative(1e4).unwrap() < 1e-300);
        assert!(map.derivative(0.0).is_err());
    }

    #[test]
    fn table_values() {
        for &(u, fc) in &[(0.1, 4.0215), (0.5, 2.7830), (1.0, 2.42537), (2.0, 2.16169), (3.0, 2.0472), (4.0, 1.98181)] {
            let sol = critical_constant(u).unwrap();
            assert!((sol.factor - fc).abs() < 1e-3, "u={u}: {}", sol.factor);
            let (a, b) = sol.residuals().unwrap();
            assert!(a.abs() <= 1e-9 && b.abs() <= 1e-9);
            assert!(sol.fixed_point > sol.map().unwrap().inflection_point());
        }
    }

    #[test]
    fn critical_agrees_with_minimisation_route() {
        for &u in &[0.1, 0.3, 0.7, 1.0, 2.0, 3.5, 6.0, 15.0] {
            let sol = critical_constant(u).unwrap();
            let (fc, xc) = critical_by_minimisation(u);
            assert!((sol.factor / fc - 1.0).abs() < 1e-8, "u={u}: {} vs {fc}", sol.factor);
            assert!((sol.fixed_point / xc - 1.0).abs() < 1e-3, "u={u}");
        }
    }

    #[test]
    fn critical_rejects_out_of_range() {
        assert!(critical_constant(0.01).is_err());
        assert!(critical_constant(25.0).is_err());
    }

    #[test]
    fn fm_closed_forms() {
        let e = std::f64::consts::E;
        let pi = std::f64::consts::PI;
        let want2 = ((3.0 * pi.sqrt() / 2.0) * (2.0 * e).sqrt()).sqrt();
        assert!((fm_bound(2.0).unwrap() - want2).abs() < 1e-12);
        assert!((want2 - 2.48982).abs() < 3e-5);
        assert!((fm_bound(1.0).unwrap() - (3.0 * e).sqrt()).abs() < 1e-12);
        assert!(fm_bound(0.0).is_err());
    }

    #[test]
    fn supercritical_example() {
        let crit = critical_constant(2.0).unwrap();
        let map = ReducedMap::new(1.15 * crit.factor, 2.0).unwrap();
        let s = supercritical_structure(&map, &crit).unwrap();
        assert!(s.unstable < crit.fixed_point && crit.fixed_point < s.stable);
        assert!((map.value(s.unstable).unwrap() - s.unstable).abs() <= 1e-9);
        assert!((map.value(s.stable).unwrap() - s.stable).abs() <= 1e-9);
        assert!(s.contraction < 1.0);
        let below = ReducedMap::new(0.99 * crit.factor, 2.0).unwrap();
        assert!(matches!(supercritical_structure(&below, &crit), Err(Error::Regime(_))));
    }

    #[test]
    fn fixed_points_merge_at_tangency() {
        let crit = critical_constant(2.0).unwrap();
        let mut last: Option<SupercriticalStructure> = None;
        for ratio in [1.01, 1.001, 1.0001] {
            let map = ReducedMap::new(ratio * crit.factor, 2.0).unwrap();
            let s = supercritical_structure(&map, &crit).unwrap();
            if let Some(prev) = last {
                assert!(s.unstable > prev.unstable);
                assert!(s.stable < prev.stable);
            }
            last = Some(s);
        }
        let s = last.unwrap();
        assert!((s.stable - crit.fixed_point) / crit.fixed_point < 0.05);
        assert!((crit.fixed_point - s.unstable) / crit.fixed_point < 0.05);
        // near a tangency the gap between the two roots scales like √(F - F_c)
        let gap = |r: f64| {
            let m = ReducedMap::new(r * crit.factor, 2.0).unwrap();
            let s = supercritical_structure(&m, &crit).unwrap();
            s.stable - s.unstable
        };
        let ratio = gap(1.001) / gap(1.0001);
        assert!((ratio - 10f64.sqrt()).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn regimes() {
        let fc = critical_constant(2.0).unwrap().factor;
        assert_eq!(classify_regime(0.9 * fc, 2.0).unwrap(), Regime::Subcritical);
        assert_eq!(classify_regime(fc, 2.0).unwrap(), Regime::Critical);
        assert_eq!(classify_regime(1.15 * fc, 2.0).unwrap(), Regime::Supercritical);
    }

    #[test]
    fn iteration_count_formula() {
        let inv_e = (-1.0f64).exp();
        assert_eq!(iteration_count(55, inv_e, 0.5, 0.0).unwrap(), 3);
        assert!(iteration_count(1, inv_e, 0.5, 0.0).is_err());
        assert!(iteration_count(100, 1.0, 0.25, 0.5).is_err());
        assert!(iteration_count(100, 0.5, 0.0, 0.5).is_err());

        let crit = critical_constant(2.0).unwrap();
        let map = ReducedMap::new(1.15 * crit.factor, 2.0).unwrap();
        let s = supercritical_structure(&map, &crit).unwrap();
        let n = iteration_count(10_000, s.contraction, 0.25, 0.5).unwrap();
        let c = -1.0 / s.contraction.ln() + 0.5;
        assert_eq!(n, (c * 0.25 * 10_000f64.ln()).floor() as usize + 1);
        assert!((1..=20).contains(&n));
    }

    #[test]
    fn convex_then_concave() {
        for &(f, u) in &[(2.0, 2.0), (3.0, 0.7), (2.0, 3.5)] {
            let map = ReducedMap::new(f, u).unwrap();
            let infl = map.inflection_point();
            let second = |x: f64| {
                let h = 1e-3 * x;
                (map.value_unchecked(x + h) - 2.0 * map.value_unchecked(x) + map.value_unchecked(x - h))
                    / (h * h)
            };
            for k in 1..10 {
                let x = infl * k as f64 / 10.0;
                assert!(second(x) > 0.0, "f={f} u={u} x={x}");
                let y = infl * (1.0 + k as f64 / 2.0);
                assert!(second(y) < 0.0, "f={f} u={u} y={y}");
            }
        }
    }

    #[test]
    fn trichotomy_root_counts() {
        let count_roots = |map: &ReducedMap| {
            let lo = 1e-12f64.ln();
            let hi = map.sup().ln();
            let n = 20_000;
            let mut last = map.value_unchecked(lo.exp()) - lo.exp();
            let mut roots = 0;
            for i in 1..=n {
                let x = (lo + (hi - lo) * i as f64 / n as f64).exp();
                let d = map.value_unchecked(x) - x;
                if d.signum() != last.signum() {
                    roots += 1;
                }
                last = d;
            }
            roots
        };
        let crit = critical_constant(2.0).unwrap();
        let sub = ReducedMap::new(0.9 * crit.factor, 2.0).unwrap();
        let sup = ReducedMap::new(1.15 * crit.factor, 2.0).unwrap();
        assert_eq!(count_roots(&sub), 0);
        assert_eq!(count_roots(&sup), 2);
    }

    #[test]
    fn orbit_converges_geometrically() {
        let crit = critical_constant(2.0).unwrap();
        let map = ReducedMap::new(1.15 * crit.factor, 2.0).unwrap();
        let s = supercritical_structure(&map, &crit).unwrap();
        let orbit = deterministic_orbit(&map, 40);
        for n in 1..orbit.len() {
            let err = orbit[n] - s.stable;
            assert!(err >= -1e-12);
            let bound = s.contraction.powi(n as i32 - 1) * (map.sup() - s.stable);
            assert!(err <= bound + 1e-12, "n={n}: {err} > {bound}");
            if n > 1 {
                assert!(orbit[n] <= orbit[n - 1]);
            }
        }
    }

    #[test]
    fn fixed_points_scale_with_variance() {
        let crit = critical_constant(1.0).unwrap();
        let map = ReducedMap::new(1.15 * crit.factor, 1.0).unwrap();
        let s = supercritical_structure(&map, &crit).unwrap();
        for &sigma in &[0.5, 3.0] {
            let x = sigma * sigma * s.stable;
            let gx = map.value_scaled(sigma, x).unwrap();
            assert!((gx - x).abs() <= 1e-10 * x.max(1.0));
        }
    }

    #[test]
    fn subcritical_slope_ratio_below_one() {
        let crit = critical_constant(2.0).unwrap();
        let sub = ReducedMap::new(0.9 * crit.factor, 2.0).unwrap();
        let kappa = sub.max_slope_ratio();
        // at F = c F_c the sup of g(x)/x is exactly c²
        assert!((kappa - 0.81).abs() < 1e-8, "{kappa}");
    }
}
