//! Bracketed scalar root finding.

use serde::Serialize;

use crate::error::{Error, Result};

/// A root together with an interval on which the defining function changes
/// sign (or vanishes at an endpoint).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootBracket {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    /// True when the sign change (or a proven one-sided bound) across
    /// `[lo, hi]` has been checked.
    pub certified: bool,
}

impl RootBracket {
    pub fn exact(value: f64) -> Self {
        Self { value, lo: value, hi: value, certified: true }
    }

    pub fn new(value: f64, lo: f64, hi: f64, certified: bool) -> Self {
        Self { value, lo, hi, certified }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Safeguarded Newton iteration for a strictly decreasing function `f`
/// with `f(lo) > 0 >= f(hi)` (or the reverse sign convention when
/// `increasing` is set).  `df` is the derivative; Newton steps that leave
/// the current bracket are replaced by bisection.  Returns the final
/// bracket in the iteration variable.
pub(crate) fn newton_bisect(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    increasing: bool,
) -> Result<RootBracket> {
    let sgn = if increasing { -1.0 } else { 1.0 };
    let g = |x: f64| sgn * f(x);
    let (glo, ghi) = (g(lo), g(hi));
    if !(glo >= 0.0 && ghi <= 0.0) || glo.is_nan() || ghi.is_nan() {
        return Err(Error::Structural(format!(
            "no sign change on [{lo}, {hi}]: f(lo) = {}, f(hi) = {}",
            sgn * glo,
            sgn * ghi
        )));
    }
    if glo == 0.0 {
        return Ok(RootBracket::exact(lo));
    }
    if ghi == 0.0 {
        return Ok(RootBracket::exact(hi));
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let gx = g(x);
        if gx == 0.0 {
            return Ok(RootBracket::exact(x));
        }
        if gx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
        let step = gx / (sgn * df(x));
        let newton = x - step;
        x = if step.is_finite() && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if x == lo || x == hi {
            x = 0.5 * (lo + hi);
            if x == lo || x == hi {
                break;
            }
        }
    }
    let value = if g(x).abs() <= g(lo).abs().min(g(hi).abs()) { x } else if g(lo).abs() < g(hi).abs() { lo } else { hi };
    Ok(RootBracket::new(value.clamp(lo, hi), lo, hi, true))
}

/// Plain bisection on `[lo, hi]` for a function with `f(lo)` and `f(hi)` of
/// opposite signs, run until the bracket is at most `width` wide.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> Result<RootBracket> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(RootBracket::exact(lo));
    }
    if fhi == 0.0 {
        return Ok(RootBracket::exact(hi));
    }
    if !(flo * fhi < 0.0) {
        return Err(Error::Structural(format!(
            "no sign change on [{lo}, {hi}]: f(lo) = {flo}, f(hi) = {fhi}"
        )));
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(RootBracket::exact(mid));
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(RootBracket::new(0.5 * (lo + hi), lo, hi, true))
}
