//! Small numeric building blocks shared across modules: compensated
//! summation, a safeguarded Newton/bisection root finder and golden-section
//! maximisation.

use crate::error::{Error, Result};

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Finds a root of `f` inside `[lo, hi]`, where `f(lo)` and `f(hi)` have
/// opposite signs. `f` returns the value and derivative; Newton steps that
/// leave the current bracket (or fail to shrink it fast enough) fall back to
/// bisection. Stops once the bracket is narrower than `rel_tol * |x|`.
pub fn safeguarded_newton<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (fa, _) = f(a);
    let (fb, _) = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Convergence(format!(
            "no sign change on bracket [{a:e}, {b:e}] (f = {fa:e}, {fb:e})"
        )));
    }
    // orient so that f(a) < 0 < f(b) along the bracket
    let increasing = fa < 0.0;
    let mut x = 0.5 * (a + b);
    let mut last_width = b - a;
    for _ in 0..400 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == increasing {
            a = x;
        } else {
            b = x;
        }
        let width = b - a;
        if width <= rel_tol * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(0.5 * (a + b));
        }
        let newton = x - fx / dfx;
        let shrinking = width < 0.5 * last_width;
        x = if dfx != 0.0 && newton.is_finite() && newton > a && newton < b && shrinking {
            newton
        } else {
            0.5 * (a + b)
        };
        last_width = width;
        // a Newton step landing on a bracket end yields no information
        if x <= a || x >= b {
            x = 0.5 * (a + b);
        }
    }
    Err(Error::Convergence(format!(
        "bracket [{a:e}, {b:e}] did not shrink below tolerance in 400 steps"
    )))
}

/// Plain bisection for a sign change of `f` on `[lo, hi]`, to an absolute
/// tolerance `abs_tol`.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, abs_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Convergence(format!(
            "no sign change on bracket [{a:e}, {b:e}]"
        )));
    }
    let neg_at_a = fa < 0.0;
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= abs_tol || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmax, max)`.
pub fn golden_max<F>(mut f: F, lo: f64, hi: f64, abs_tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > abs_tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if c == d {
            break;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    let mut best = (x, fx);
    for (xx, ff) in [(c, fc), (d, fd)] {
        if ff > best.1 {
            best = (xx, ff);
        }
    }
    best
}
