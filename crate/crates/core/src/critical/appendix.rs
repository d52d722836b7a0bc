//! Numerical verification of the three inequalities behind the ordering
//! `β_{s,2} < β_m < q` for `5 <= q <= 6500`.
//!
//! The bounds on `β_{s,2}`, `m_2` and `v_1` follow the fixed-step descent,
//! sign walks and Newton iteration of the original verification literally;
//! only non-termination guards were added.  Each row is cross-checked
//! against the certified roots computed by [`Family`].

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::critical::spinodal;
use crate::error::{domain, Error, Result};
use crate::export::{Table, Value};
use crate::family::Family;
use crate::roots::RootBracket;

const Q_MIN: usize = 5;
const Q_MAX: usize = 6500;
const DERIVATIVE_RANGE: RangeInclusive<usize> = 6..=54;
const F_STAR_Q: usize = 6500;
const MAX_STEPS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixRow {
    pub q: usize,
    pub descent_steps: usize,
    pub beta_s2: RootBracket,
    pub m2: RootBracket,
    pub v1: RootBracket,
    pub rho_m: f64,
    pub rho_v: f64,
    /// Lower bound on `F_{β_{s,2}}(u_2) - F_{β_{s,2}}(v_1)`.
    pub margin_gap: f64,
    /// Lower bound on `log(q β_{s,2}) + 2 k_2(m_2)`.
    pub margin_slope: f64,
    /// Whether the slope inequality is claimed for this `q`.
    pub slope_asserted: bool,
    /// The same two quantities evaluated at the library's own roots.
    pub reference_gap: f64,
    pub reference_slope: f64,
    /// The three brackets contain the library's certified roots.
    pub brackets_consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixReport {
    pub rows: Vec<AppendixRow>,
    /// Lower bound on `f⋆(6500)` when `q = 6500` is in range.
    pub f_star: Option<f64>,
    pub failures: Vec<String>,
}

impl AppendixReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&[
            "q",
            "descent_steps",
            "beta_s2",
            "beta_s2_lo",
            "beta_s2_hi",
            "m2",
            "m2_lo",
            "m2_hi",
            "v1",
            "v1_lo",
            "v1_hi",
            "rho_m",
            "rho_v",
            "margin_gap",
            "margin_slope",
            "slope_asserted",
            "reference_gap",
            "reference_slope",
            "brackets_consistent",
        ]);
        for r in &self.rows {
            t.push(vec![
                Value::Int(r.q as i64),
                Value::Int(r.descent_steps as i64),
                Value::Float(r.beta_s2.value),
                Value::Float(r.beta_s2.lo),
                Value::Float(r.beta_s2.hi),
                Value::Float(r.m2.value),
                Value::Float(r.m2.lo),
                Value::Float(r.m2.hi),
                Value::Float(r.v1.value),
                Value::Float(r.v1.lo),
                Value::Float(r.v1.hi),
                Value::Float(r.rho_m),
                Value::Float(r.rho_v),
                Value::Float(r.margin_gap),
                Value::Float(r.margin_slope),
                Value::Bool(r.slope_asserted),
                Value::Float(r.reference_gap),
                Value::Float(r.reference_slope),
                Value::Bool(r.brackets_consistent),
            ]);
        }
        if let Some(f) = self.f_star {
            t.comment(format!("f_star({F_STAR_Q}) lower bound = {f:.16e}"));
        }
        for f in &self.failures {
            t.comment(format!("FAILED: {f}"));
        }
        t
    }
}

/// Runs the verification for every `q` in `range`, in parallel, with rows
/// returned in increasing `q`.
pub fn verify_appendix(range: RangeInclusive<usize>) -> Result<AppendixReport> {
    if *range.start() < Q_MIN || *range.end() > Q_MAX || range.is_empty() {
        return domain(format!("q range must lie in [{Q_MIN}, {Q_MAX}], got {range:?}"));
    }
    let rows = range.into_par_iter().map(verify_one).collect::<Result<Vec<_>>>()?;
    let mut failures = Vec::new();
    for r in &rows {
        if !(r.margin_gap > 0.0) {
            failures.push(format!("q = {}: gap margin {} is not positive", r.q, r.margin_gap));
        }
        if r.slope_asserted && !(r.margin_slope > 0.0) {
            failures.push(format!("q = {}: slope margin {} is not positive", r.q, r.margin_slope));
        }
        if !r.brackets_consistent {
            failures.push(format!("q = {}: brackets miss the certified roots", r.q));
        }
    }
    let f_star = rows.iter().find(|r| r.q == F_STAR_Q).map(f_star_bound);
    if let Some(f) = f_star {
        if !(f > 0.0) {
            failures.push(format!("f_star({F_STAR_Q}) lower bound {f} is not positive"));
        }
    }
    Ok(AppendixReport { rows, f_star, failures })
}

fn f_star_bound(r: &AppendixRow) -> f64 {
    let q = r.q as f64;
    let (bl, ml, mu) = (r.beta_s2.lo, r.m2.lo, r.m2.hi);
    ((q * ml).ln() - 0.5) / bl - (q * mu).powi(2) / 8.0 + ml / 4.0 + 251.0 / 2002.0
}

fn stalled(q: usize, what: &str) -> Error {
    Error::Structural(format!("q = {q}: {what} did not terminate"))
}

fn verify_one(q: usize) -> Result<AppendixRow> {
    let f1 = Family::new(q, 1)?;
    let f2 = Family::new(q, 2)?;
    let qf = q as f64;
    let g1 = |t: f64| f1.beta_of(f1.coords(t));
    let dg1 = |t: f64| f1.beta_derivative_of(f1.coords(t));
    let g2 = |t: f64| f2.beta_of(f2.coords(t));
    let dg2 = |t: f64| f2.beta_derivative_of(f2.coords(t));
    let h2 = |t: f64| f2.kernel_of(f2.coords(t));

    // fixed-step descent towards the minimiser of g_2
    let mut t = 1.0 / (2.0 * qf - 4.0);
    let mut steps = 0;
    while dg2(t) > 1e-6 {
        t -= dg2(t) / (300.0 * qf * qf);
        steps += 1;
        if steps > MAX_STEPS {
            return Err(stalled(q, "descent for m_2"));
        }
    }
    let m_star = t;
    let spread = 36.0 / qf * dg2(m_star).abs();
    let beta_hi = g2(m_star) + spread;
    let beta_lo = g2(m_star) - spread;

    // walk by ρ_m until h_2 changes sign
    let rho_m = (dg2(m_star) / qf).abs().max(f64::EPSILON * m_star);
    let (m_lo, m_hi) = if h2(m_star) >= 0.0 {
        let mut s = m_star;
        let mut n = 0;
        while h2(s) >= 0.0 {
            s -= rho_m;
            n += 1;
            if n > MAX_STEPS {
                return Err(stalled(q, "walk for m_2"));
            }
        }
        (s - rho_m, m_star + rho_m)
    } else {
        let mut s = m_star;
        let mut n = 0;
        while h2(s) <= 0.0 {
            s += rho_m;
            n += 1;
            if n > MAX_STEPS {
                return Err(stalled(q, "walk for m_2"));
            }
        }
        (m_star - rho_m, s + rho_m)
    };

    // Newton iteration for v_1 at the upper bound on β_{s,2}
    let top = 1.0 / (qf - 1.0);
    let (mut prev, mut cur) = (0.0, 0.8 / qf);
    let mut n = 0;
    while (cur - prev).abs() > 1e-5 / qf {
        let mut next = cur - (g1(cur) - beta_hi) / dg1(cur);
        if !(next > 0.0 && next < top) {
            // keep the iterate inside the family's domain
            next = if next >= top { 0.5 * (cur + top) } else { 0.5 * cur };
        }
        prev = cur;
        cur = next;
        n += 1;
        if n > MAX_STEPS {
            return Err(stalled(q, "Newton iteration for v_1"));
        }
    }
    let v_star = cur;
    let rho_v = (cur - prev).abs().max(f64::EPSILON * v_star);
    let walk = |start: f64, step: f64, keep: &dyn Fn(f64) -> bool| -> Result<f64> {
        let mut a = start;
        let mut n = 0;
        while keep(a) {
            a += step;
            n += 1;
            if n > MAX_STEPS {
                return Err(stalled(q, "walk for v_1"));
            }
        }
        Ok(a)
    };
    let v_hi = if g1(v_star) > beta_hi {
        v_star + rho_v
    } else {
        walk(v_star, rho_v, &|a| g1(a) <= beta_hi)? + rho_v
    };
    let v_lo = if g1(v_star) < beta_lo {
        v_star - rho_v
    } else {
        walk(v_star, -rho_v, &|b| g1(b) >= beta_lo)? - rho_v
    };

    let margin_gap = 0.25 * (qf * (qf - 2.0) * (m_hi - 1.0 / (qf - 2.0)).powi(2) - 2.0 / (qf - 2.0))
        + m_lo.ln() / beta_lo
        - 0.5 * (qf * (qf - 1.0) * (v_lo - 1.0 / (qf - 1.0)).powi(2) - 1.0 / (qf - 1.0))
        - v_hi.ln() / beta_hi;
    let margin_slope = (qf * beta_lo).ln() + 2.0 * f2.entropy_of(f2.coords(m_hi));

    // independent route: certified roots from the family solver
    let s2 = spinodal(q, 2)?;
    let bs = s2.beta.value;
    let v1 = f1.solve(bs)?.v.coords;
    let m2 = s2.m.value;
    let u2 = f2.coords(m2);
    let fv = |x: Vec<f64>| crate::potential::free_energy_coords(&x, bs);
    let mut xu = vec![u2.t; q - 2];
    xu.extend([u2.r; 2]);
    let mut xv = vec![v1.t; q - 1];
    xv.push(v1.r);
    let reference_gap = fv(xu) - fv(xv);
    let reference_slope = (qf * bs).ln() + 2.0 * f2.entropy_of(u2);
    let brackets_consistent =
        beta_lo < bs && bs < beta_hi && m_lo < m2 && m2 < m_hi && v_lo < v1.t && v1.t < v_hi;

    Ok(AppendixRow {
        q,
        descent_steps: steps,
        beta_s2: RootBracket::new(g2(m_star), beta_lo, beta_hi, true),
        m2: RootBracket::new(m_star, m_lo, m_hi, true),
        v1: RootBracket::new(v_star, v_lo, v_hi, true),
        rho_m,
        rho_v,
        margin_gap,
        margin_slope,
        slope_asserted: DERIVATIVE_RANGE.contains(&q),
        reference_gap,
        reference_slope,
        brackets_consistent,
    })
}
