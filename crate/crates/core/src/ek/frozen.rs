use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::chain::{jump_rate, Lattice};
use crate::critical::TemperatureProfile;
use crate::ek::{matrix_a, saddle, SaddleKind};
use crate::error::{domain, Error, Result};
use crate::potential::{check_beta, hessian};

/// Comparison of the generator with its frozen-weight linearisation on the
/// box `|x - s| <= N^{-2/5}` around a saddle `s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrozenWeightCheck {
    pub q: usize,
    pub beta: f64,
    pub n: usize,
    pub saddle: SaddleKind,
    pub radius: f64,
    pub points: usize,
    /// `max |L_N f - L^s f|` over the box.
    pub absolute: f64,
    /// `absolute / max |L^s f|`.
    pub relative: f64,
}

/// Applies both operators to `f(y) = g·y + ½|y|²`, `y` the chart offset from
/// `s`, with `g_k = (-1)^k / (k + 1)`.
///
/// The frozen operator is
/// `L^s f(x) = tr(A(s) ∇²f) / N² - (β/N) ∇f(x) · A(s) ∇²F_β(s) (x - s)`.
pub fn frozen_weight_discrepancy(q: usize, beta: f64, at: SaddleKind, n: usize) -> Result<FrozenWeightCheck> {
    check_beta(beta)?;
    TemperatureProfile::new(q)?;
    if n < 2 {
        return domain("N must be at least 2");
    }
    let Some((s, _)) = saddle(q, beta, at)? else {
        return Err(Error::Regime(format!("{at} is not a saddle point at q = {q}, β = {beta}")));
    };
    let d = q - 1;
    let a = matrix_a(&s)?;
    let drift = &a * hessian(&s, beta)?;
    let g = DVector::from_fn(d, |k, _| if k % 2 == 0 { 1.0 } else { -1.0 } / (k + 1) as f64);
    let hess_f = DMatrix::<f64>::identity(d, d);
    let trace_term = (&a * &hess_f).trace();
    let sc = DVector::from_column_slice(s.chart());
    let f = |y: &DVector<f64>| g.dot(y) + 0.5 * y.dot(y);

    let nf = n as f64;
    let radius = nf.powf(-0.4);
    let lat = Lattice::new(q, n);
    let mut c = vec![0u32; q];
    let (mut points, mut absolute, mut scale) = (0usize, 0.0f64, 0.0f64);
    for idx in 0..lat.len() {
        lat.unrank_into(idx, &mut c);
        let y = DVector::from_fn(d, |k, _| c[k] as f64 / nf) - &sc;
        let dist2 = y.norm_squared() + y.sum().powi(2);
        if dist2 > radius * radius {
            continue;
        }
        points += 1;
        let fy = f(&y);
        let mut exact = 0.0;
        for i in 0..q {
            for j in 0..q {
                let r = jump_rate(&c, n, beta, i, j);
                if r == 0.0 {
                    continue;
                }
                let mut z = y.clone();
                if i < d {
                    z[i] -= 1.0 / nf;
                }
                if j < d {
                    z[j] += 1.0 / nf;
                }
                exact += r * (f(&z) - fy);
            }
        }
        let grad = &g + &hess_f * &y;
        let frozen = trace_term / (nf * nf) - beta / nf * grad.dot(&(&drift * &y));
        absolute = absolute.max((exact - frozen).abs());
        scale = scale.max(frozen.abs());
    }
    if points == 0 {
        return Err(Error::Resolution(format!("no lattice point of N = {n} within {radius} of the saddle")));
    }
    Ok(FrozenWeightCheck { q, beta, n, saddle: at, radius, points, absolute, relative: absolute / scale })
}
