//! Eyring–Kramers constants, leading-order mean transition times and the
//! limiting chains of the metastable order process.

mod frozen;
mod reduced;

pub use frozen::{frozen_weight_discrepancy, FrozenWeightCheck};
pub use reduced::{reduced_chain, ReducedChain, ReducedRegime, ReducedState};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::critical::{Regime, TemperatureProfile};
use crate::error::{domain, Error, Result};
use crate::export::{Table, Value};
use crate::family::Family;
use crate::landscape::{barycenter_is_minimum, depths_with};
use crate::potential::{check_beta, hessian, spectrum_at_barycenter, HessianSpectrum};
use crate::simplex::SimplexPoint;

/// Largest imaginary part tolerated in the spectrum of `∇²F_β · A`.
pub const IMAG_TOL: f64 = 1e-10;

/// `A(x) = Σ_{i<j} √(x_i x_j) (e_j - e_i)(e_j - e_i)ᵀ` in the chart
/// `(x_1, ..., x_{q-1})`, where `e_q = 0`.
pub fn matrix_a(x: &SimplexPoint) -> Result<DMatrix<f64>> {
    if !x.is_interior() {
        return domain("A(x) needs an interior point");
    }
    let q = x.q();
    let c = x.coords();
    let mut a = DMatrix::zeros(q - 1, q - 1);
    for i in 0..q {
        for j in i + 1..q {
            let w = (c[i] * c[j]).sqrt();
            let mut d = vec![0.0; q - 1];
            if i < q - 1 {
                d[i] -= 1.0;
            }
            if j < q - 1 {
                d[j] += 1.0;
            }
            for r in 0..q - 1 {
                for s in 0..q - 1 {
                    a[(r, s)] += w * d[r] * d[s];
                }
            }
        }
    }
    Ok(a)
}

/// The saddle families that carry Eyring–Kramers constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SaddleKind {
    /// `u_2`, the gate between two ordered wells for `q >= 4`.
    U2,
    /// `v_1`, the gate between the barycentre and an ordered well.
    V1,
}

impl std::fmt::Display for SaddleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SaddleKind::U2 => write!(f, "u2"),
            SaddleKind::V1 => write!(f, "v1"),
        }
    }
}

/// `μ` with `-μ` the only negative eigenvalue of `∇²F_β(x) A(x)ᵀ`.
pub fn negative_eigenvalue_at(x: &SimplexPoint, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let m = hessian(x, beta)? * matrix_a(x)?.transpose();
    let eig = m.complex_eigenvalues();
    let scale = eig.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if let Some(z) = eig.iter().find(|z| z.im.abs() > IMAG_TOL * scale) {
        return Err(Error::Structural(format!("∇²F·A has a complex eigenvalue {z} at β = {beta}")));
    }
    let neg: Vec<f64> = eig.iter().map(|z| z.re).filter(|&r| r < 0.0).collect();
    match neg.as_slice() {
        [l] => Ok(-l),
        _ => Err(Error::Structural(format!(
            "∇²F·A has {} negative eigenvalues at β = {beta}, expected exactly one",
            neg.len()
        ))),
    }
}

/// Representative point of a saddle family with its closed-form spectrum;
/// `None` when the point does not exist at `β` or is not a nondegenerate
/// saddle of index one.
pub(crate) fn saddle(q: usize, beta: f64, at: SaddleKind) -> Result<Option<(SimplexPoint, HessianSpectrum)>> {
    let i = match at {
        SaddleKind::U2 if q < 4 => return Ok(None),
        SaddleKind::U2 => 2,
        SaddleKind::V1 => 1,
    };
    let fam = Family::new(q, i)?;
    let roots = match fam.solve(beta) {
        Ok(r) => r,
        Err(Error::NoSolution(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let c = match at {
        SaddleKind::U2 => roots.u.coords,
        SaddleKind::V1 => roots.v.coords,
    };
    let spec = fam.spectrum_of(c);
    if spec.index != 1 || spec.degenerate {
        return Ok(None);
    }
    Ok(Some((fam.point_of(c)?, spec)))
}

/// `μ` at the representative of `u_2` or `v_1`.
pub fn negative_eigenvalue(q: usize, beta: f64, at: SaddleKind) -> Result<f64> {
    check_beta(beta)?;
    match saddle(q, beta, at)? {
        Some((x, _)) => negative_eigenvalue_at(&x, beta),
        None => Err(Error::Regime(format!("{at} is not a saddle point at q = {q}, β = {beta}"))),
    }
}

fn inv_sqrt_product(x: &SimplexPoint) -> f64 {
    // e^{-β G_β(x)} with G_β = log(x_1 ⋯ x_q) / (2β)
    (-0.5 * x.coords().iter().map(|c| c.ln()).sum::<f64>()).exp()
}

/// `ω` at a saddle point: `μ e^{-βG_β(s)} / √(-det ∇²F_β(s))`.
fn omega(x: &SimplexPoint, spec: &HessianSpectrum, beta: f64) -> Result<(f64, f64)> {
    let mu = negative_eigenvalue_at(x, beta)?;
    Ok((mu, mu * inv_sqrt_product(x) / (-spec.determinant()).sqrt()))
}

/// `ν` at a local minimum: `e^{-βG_β(m)} / √(β² det ∇²F_β(m))`.
fn nu(x: &SimplexPoint, spec: &HessianSpectrum, beta: f64) -> Result<f64> {
    let det = spec.determinant();
    if !(det > 0.0) || spec.index != 0 {
        return Err(Error::Structural(format!("expected a local minimum at β = {beta}, det = {det}")));
    }
    Ok(inv_sqrt_product(x) / (beta * beta * det).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EkConstants {
    pub q: usize,
    pub beta: f64,
    /// `μ` at `u_2`.
    pub mu_1: Option<f64>,
    /// `μ` at `v_1`.
    pub mu_o: Option<f64>,
    pub omega_1: Option<f64>,
    pub omega_o: Option<f64>,
    pub nu_1: f64,
    pub nu_o: Option<f64>,
    pub theta_1: f64,
    pub theta_o: Option<f64>,
}

impl EkConstants {
    fn require(v: Option<f64>, name: &str, q: usize, beta: f64) -> Result<f64> {
        v.ok_or_else(|| Error::Regime(format!("{name} is not defined at q = {q}, β = {beta}")))
    }

    pub fn omega_o(&self) -> Result<f64> {
        Self::require(self.omega_o, "ω_o", self.q, self.beta)
    }

    pub fn omega_1(&self) -> Result<f64> {
        Self::require(self.omega_1, "ω_1", self.q, self.beta)
    }

    pub fn nu_o(&self) -> Result<f64> {
        Self::require(self.nu_o, "ν_o", self.q, self.beta)
    }

    pub fn theta_o(&self) -> Result<f64> {
        Self::require(self.theta_o, "θ_o", self.q, self.beta)
    }
}

fn check_metastable(prof: &TemperatureProfile, beta: f64) -> Result<()> {
    check_beta(beta)?;
    if matches!(prof.regime(beta), Regime::BelowFirst | Regime::AtFirst) {
        return Err(Error::Regime(format!(
            "no metastability for β = {beta} <= β_1 = {}",
            prof.beta1()
        )));
    }
    Ok(())
}

pub fn ek_constants(q: usize, beta: f64) -> Result<EkConstants> {
    let prof = TemperatureProfile::new(q)?;
    ek_constants_with(&prof, beta)
}

pub(crate) fn ek_constants_with(prof: &TemperatureProfile, beta: f64) -> Result<EkConstants> {
    check_metastable(prof, beta)?;
    let q = prof.q;
    let d = depths_with(prof, beta)?;
    let (mu_o, omega_o) = match saddle(q, beta, SaddleKind::V1)? {
        Some((x, s)) => {
            let (m, w) = omega(&x, &s, beta)?;
            (Some(m), Some(w))
        }
        None => (None, None),
    };
    let (mu_1, omega_1) = match saddle(q, beta, SaddleKind::U2)? {
        Some((x, s)) => {
            let (m, w) = omega(&x, &s, beta)?;
            (Some(m), Some(w))
        }
        None => (None, None),
    };
    let f1 = Family::new(q, 1)?;
    let u1 = f1.solve(beta)?.u.coords;
    let nu_1 = nu(&f1.point_of(u1)?, &f1.spectrum_of(u1), beta)?;
    let nu_o = if barycenter_is_minimum(prof, beta) {
        Some(nu(&SimplexPoint::barycenter(q)?, &spectrum_at_barycenter(q, beta)?, beta)?)
    } else {
        None
    };
    Ok(EkConstants { q, beta, mu_1, mu_o, omega_1, omega_o, nu_1, nu_o, theta_1: d.theta_1, theta_o: d.theta_o })
}

/// The three transitions with sharp asymptotics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Transition {
    /// From `u_1^k` to `p`, for `β_1 < β <= β_2`.
    OrderedToBarycenter,
    /// From `p` to `U_1`, for `β_2 <= β < q`.
    BarycenterToOrdered,
    /// From `u_1^k` to `U_1 ∖ {u_1^k}`, for `β > β_3`.
    OrderedToOrdered,
}

impl std::fmt::Display for Transition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Transition::OrderedToBarycenter => write!(f, "u1->p"),
            Transition::BarycenterToOrdered => write!(f, "p->U1"),
            Transition::OrderedToOrdered => write!(f, "u1->U1"),
        }
    }
}

/// Leading-order mean transition time `prefactor · 2πN · e^{Nθ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EkPrediction {
    pub transition: Transition,
    pub n: usize,
    pub prefactor: f64,
    pub theta: f64,
    pub time: f64,
}

pub fn ek_prediction(q: usize, beta: f64, n: usize, transition: Transition) -> Result<EkPrediction> {
    let prof = TemperatureProfile::new(q)?;
    check_metastable(&prof, beta)?;
    if n == 0 {
        return domain("N must be at least 1");
    }
    let r = prof.regime(beta);
    let ok = match transition {
        Transition::OrderedToBarycenter => matches!(r, Regime::FirstToSecond | Regime::AtSecond),
        Transition::BarycenterToOrdered => {
            matches!(r, Regime::AtSecond | Regime::SecondToThird | Regime::AtThird | Regime::ThirdToFourth)
                && barycenter_is_minimum(&prof, beta)
        }
        Transition::OrderedToOrdered => {
            matches!(r, Regime::ThirdToFourth | Regime::AtFourth | Regime::AboveFourth)
        }
    };
    if !ok {
        return Err(Error::Regime(format!("transition {transition} is not covered at q = {q}, β = {beta} ({})", r.label())));
    }
    let c = ek_constants_with(&prof, beta)?;
    let qf = q as f64;
    let (prefactor, theta) = match transition {
        Transition::OrderedToBarycenter => (c.nu_1 / c.omega_o()?, c.theta_1),
        Transition::BarycenterToOrdered => (c.nu_o()? / (qf * c.omega_o()?), c.theta_o()?),
        Transition::OrderedToOrdered if q == 3 => (c.nu_1 / ((qf - 1.0) * c.omega_o()?), c.theta_1),
        Transition::OrderedToOrdered => (c.nu_1 / ((qf - 1.0) * c.omega_1()?), c.theta_1),
    };
    let nf = n as f64;
    let time = prefactor * 2.0 * std::f64::consts::PI * nf * (nf * theta).exp();
    Ok(EkPrediction { transition, n, prefactor, theta, time })
}

/// One row of constants per `β`; entries undefined in a regime are left
/// empty, and `β <= β_1` rows carry only the regime.
pub fn ek_sweep(q: usize, betas: &[f64]) -> Result<Table> {
    let prof = TemperatureProfile::new(q)?;
    let mut t = Table::new(&["q", "beta", "regime", "omega_o", "omega_1", "nu_o", "nu_1", "theta_o", "theta_1"]);
    for &beta in betas {
        check_beta(beta)?;
        let regime = prof.regime(beta);
        let mut row: Vec<Value> = vec![q.into(), beta.into(), regime.label().into()];
        match ek_constants_with(&prof, beta) {
            Ok(c) => row.extend([
                Value::opt(c.omega_o),
                Value::opt(c.omega_1),
                Value::opt(c.nu_o),
                c.nu_1.into(),
                Value::opt(c.theta_o),
                c.theta_1.into(),
            ]),
            Err(Error::Regime(_)) => row.extend(std::iter::repeat_n(Value::Missing, 6)),
            Err(e) => return Err(e),
        }
        t.push(row);
    }
    Ok(t)
}
