//! Critical temperatures, enumeration and classification of the critical
//! points of `F_β`, and the numerical verification of the inequalities the
//! landscape analysis depends on.

mod appendix;

pub use appendix::{verify_appendix, AppendixReport, AppendixRow};

use serde::Serialize;

use crate::error::{domain, Result};
use crate::family::{binomial, Family, FamilyCoords};
use crate::potential::{free_energy_coords, spectrum_at_barycenter, HessianSpectrum};
use crate::roots::{bisect, RootBracket};
use crate::simplex::SimplexPoint;

/// Relative tolerance used when deciding that `β` sits exactly on one of
/// the critical temperatures.
pub const BETA_TOL: f64 = 1e-9;

/// Offset from the ends of `(β_{s,2}, q)` where the bisection for `β_m`
/// starts.
const BETA_M_EPS: f64 = 1e-8;

pub(crate) fn check_q(q: usize) -> Result<()> {
    if q < 3 {
        return domain(format!("q must be at least 3, got {q}"));
    }
    Ok(())
}

/// `β_c = 2(q-1)/(q-2) · log(q-1)`.
pub fn beta_c(q: usize) -> Result<f64> {
    check_q(q)?;
    let qf = q as f64;
    Ok(2.0 * (qf - 1.0) / (qf - 2.0) * (qf - 1.0).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spinodal {
    pub i: usize,
    /// Minimiser of `g_i`.
    pub m: RootBracket,
    /// `β_{s,i} = g_i(m_i)`.
    pub beta: RootBracket,
}

/// Minimiser `m_i` of `g_i` and the spinodal temperature `β_{s,i}`.
pub fn spinodal(q: usize, i: usize) -> Result<Spinodal> {
    let fam = Family::new(q, i)?;
    let m = fam.minimizer();
    let value = fam.beta_of(fam.coords(m.value));
    let beta = if m.width() == 0.0 {
        RootBracket::exact(value)
    } else {
        // g' is monotone across the tiny bracket, so the mean value theorem
        // bounds the distance between g(m̂) and min g
        let slope = fam.beta_derivative_of(fam.coords(m.lo)).abs().max(fam.beta_derivative_of(fam.coords(m.hi)).abs());
        let round = 8.0 * f64::EPSILON * value;
        RootBracket::new(value, value - slope * m.width() - round, value + round, m.certified)
    };
    Ok(Spinodal { i, m, beta })
}

/// `D(β) = F_β(u_2) - F_β(v_1)`, defined for `β >= β_{s,2}` and `q >= 4`.
pub fn saddle_gap(q: usize, beta: f64) -> Result<f64> {
    let u2 = Family::new(q, 2)?.solve(beta)?.u.coords;
    let v1 = Family::new(q, 1)?.solve(beta)?.v.coords;
    Ok(family_free_energy(q, 2, u2, beta) - family_free_energy(q, 1, v1, beta))
}

/// `β² dD/dβ = k_1(v_1) - k_2(u_2)`.
pub fn saddle_gap_slope(q: usize, beta: f64) -> Result<f64> {
    let f1 = Family::new(q, 1)?;
    let f2 = Family::new(q, 2)?;
    let v1 = f1.solve(beta)?.v.coords;
    let u2 = f2.solve(beta)?.u.coords;
    Ok(f1.entropy_of(v1) - f2.entropy_of(u2))
}

fn family_free_energy(q: usize, i: usize, c: FamilyCoords, beta: f64) -> f64 {
    let mut x = vec![c.t; q - i];
    x.extend(std::iter::repeat_n(c.r, i));
    free_energy_coords(&x, beta)
}

/// `β_m`: equal to `q` for `q <= 4`, otherwise the unique root of
/// `D(β)` in `(β_{s,2}, q)`.
pub fn beta_m(q: usize) -> Result<RootBracket> {
    check_q(q)?;
    if q <= 4 {
        return Ok(RootBracket::exact(q as f64));
    }
    let lo = spinodal(q, 2)?.beta.value + BETA_M_EPS;
    let hi = q as f64 - BETA_M_EPS;
    let f = |b: f64| saddle_gap(q, b).unwrap_or(f64::NAN);
    bisect(f, lo, hi, 4.0 * f64::EPSILON * hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    U,
    V,
}

/// `F_β` at `u_i(β)` or `v_i(β)` through the one-dimensional formula
/// `(q j t² - 2 q t + 1)/(2i) + log t / β`.
pub fn free_energy_family_value(q: usize, i: usize, beta: f64, branch: Branch) -> Result<f64> {
    let fam = Family::new(q, i)?;
    let roots = fam.solve(beta)?;
    let t = match branch {
        Branch::U => roots.u.coords.t,
        Branch::V => roots.v.coords.t,
    };
    let (qf, i, j) = (q as f64, i as f64, (q - i) as f64);
    Ok((qf * j * t * t - 2.0 * qf * t + 1.0) / (2.0 * i) + t.ln() / beta)
}

/// The critical temperatures of the model for a fixed `q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemperatureProfile {
    pub q: usize,
    /// `β_{s,i}` for `i = 1..=q/2`.
    pub spinodal: Vec<Spinodal>,
    pub beta_c: f64,
    pub beta_m: RootBracket,
}

/// Position of `β` relative to `β_1 < β_2 < β_3 <= β_4`.  When `β_3 = β_4`
/// (that is `q <= 4`) the common value is reported as [`Regime::AtThird`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    BelowFirst,
    AtFirst,
    FirstToSecond,
    AtSecond,
    SecondToThird,
    AtThird,
    ThirdToFourth,
    AtFourth,
    AboveFourth,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::BelowFirst => "beta<beta1",
            Regime::AtFirst => "beta=beta1",
            Regime::FirstToSecond => "beta1<beta<beta2",
            Regime::AtSecond => "beta=beta2",
            Regime::SecondToThird => "beta2<beta<beta3",
            Regime::AtThird => "beta=beta3",
            Regime::ThirdToFourth => "beta3<beta<beta4",
            Regime::AtFourth => "beta=beta4",
            Regime::AboveFourth => "beta>beta4",
        }
    }
}

impl TemperatureProfile {
    pub fn new(q: usize) -> Result<Self> {
        check_q(q)?;
        let spinodal = (1..=q / 2).map(|i| spinodal(q, i)).collect::<Result<Vec<_>>>()?;
        Ok(Self { q, spinodal, beta_c: beta_c(q)?, beta_m: beta_m(q)? })
    }

    pub fn beta_s(&self, i: usize) -> Option<f64> {
        self.spinodal.get(i.checked_sub(1)?).map(|s| s.beta.value)
    }

    pub fn beta1(&self) -> f64 {
        self.spinodal[0].beta.value
    }

    pub fn beta2(&self) -> f64 {
        self.beta_c
    }

    pub fn beta3(&self) -> f64 {
        self.beta_m.value
    }

    pub fn beta4(&self) -> f64 {
        self.q as f64
    }

    pub fn regime(&self, beta: f64) -> Regime {
        let near = |b: f64| (beta - b).abs() <= BETA_TOL * b.max(1.0);
        let (b1, b2, b3, b4) = (self.beta1(), self.beta2(), self.beta3(), self.beta4());
        if near(b1) {
            Regime::AtFirst
        } else if beta < b1 {
            Regime::BelowFirst
        } else if near(b2) {
            Regime::AtSecond
        } else if beta < b2 {
            Regime::FirstToSecond
        } else if near(b3) {
            Regime::AtThird
        } else if beta < b3 {
            Regime::SecondToThird
        } else if near(b4) {
            Regime::AtFourth
        } else if beta < b4 {
            Regime::ThirdToFourth
        } else {
            Regime::AboveFourth
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PointFamily {
    P,
    U(usize),
    V(usize),
}

impl std::fmt::Display for PointFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PointFamily::P => write!(f, "p"),
            PointFamily::U(i) => write!(f, "u{i}"),
            PointFamily::V(i) => write!(f, "v{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    OnlyMinimum,
    LocalMinimum,
    Saddle,
    Degenerate,
    HigherIndex(usize),
    LocalMaximum,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Classification::OnlyMinimum => write!(f, "only minimum"),
            Classification::LocalMinimum => write!(f, "local minimum"),
            Classification::Saddle => write!(f, "saddle"),
            Classification::Degenerate => write!(f, "degenerate"),
            Classification::HigherIndex(k) => write!(f, "index {k}"),
            Classification::LocalMaximum => write!(f, "local maximum"),
        }
    }
}

impl Classification {
    fn from_spectrum(s: &HessianSpectrum) -> Self {
        if s.degenerate {
            Classification::Degenerate
        } else if s.index == 0 {
            Classification::LocalMinimum
        } else if s.index == s.dimension() {
            Classification::LocalMaximum
        } else if s.index == 1 {
            Classification::Saddle
        } else {
            Classification::HigherIndex(s.index)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub family: PointFamily,
    /// Family coordinates; `t = r = 1/q` for the barycentre.
    pub coords: FamilyCoords,
    /// Representative with the `i` distinguished coordinates last.
    pub location: SimplexPoint,
    pub spectrum: HessianSpectrum,
    pub orbit_size: usize,
    pub free_energy: f64,
    pub classification: Classification,
}

impl CriticalPoint {
    pub fn index(&self) -> usize {
        self.spectrum.index
    }

    /// Every permutation image of the representative.
    pub fn orbit(&self) -> Vec<Vec<f64>> {
        match self.family {
            PointFamily::P => vec![self.location.coords().to_vec()],
            PointFamily::U(i) | PointFamily::V(i) => {
                Family::new(self.location.q(), i).map(|f| f.orbit(self.coords)).unwrap_or_default()
            }
        }
    }
}

/// All critical points of `F_β` up to permutation, with spectra and the
/// classification labels of the landscape tables.
///
/// At `β = β_{s,i}` the two solutions on family `i` merge; the merged point
/// is reported once as `U(i)` and is degenerate.  `V_i` coincides with the
/// barycentre at `β = q` and is then omitted, and for `i = q/2` the set
/// `V_i` is a relabelling of `U_i`, so only `U_i` is listed.
pub fn enumerate_critical_points(q: usize, beta: f64) -> Result<Vec<CriticalPoint>> {
    check_q(q)?;
    crate::potential::check_beta(beta)?;
    let qf = q as f64;
    let centre = 1.0 / qf;
    let p_spec = spectrum_at_barycenter(q, beta)?;
    let mut points = vec![CriticalPoint {
        family: PointFamily::P,
        coords: FamilyCoords { t: centre, r: centre },
        location: SimplexPoint::barycenter(q)?,
        classification: Classification::from_spectrum(&p_spec),
        spectrum: p_spec,
        orbit_size: 1,
        free_energy: -0.5 / qf - qf.ln() / beta,
    }];
    for i in 1..=q / 2 {
        let fam = Family::new(q, i)?;
        let Ok(roots) = fam.solve(beta) else { continue };
        let merged = roots.u.coords.t == roots.v.coords.t;
        let mut candidates = vec![(PointFamily::U(i), roots.u.coords)];
        if !merged && 2 * i < q {
            candidates.push((PointFamily::V(i), roots.v.coords));
        }
        for (family, c) in candidates {
            if (c.t - centre).abs() <= 1e-9 * centre {
                continue;
            }
            let location = fam.point_of(c)?;
            let spectrum = fam.spectrum_of(c);
            points.push(CriticalPoint {
                family,
                coords: c,
                free_energy: free_energy_coords(location.coords(), beta),
                location,
                classification: Classification::from_spectrum(&spectrum),
                spectrum,
                orbit_size: binomial(q, i),
            });
        }
    }
    let minima = points.iter().filter(|p| p.classification == Classification::LocalMinimum).count();
    if minima == 1 && points[0].classification == Classification::LocalMinimum {
        points[0].classification = Classification::OnlyMinimum;
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::potential;

    #[test]
    fn beta_c_closed_form() {
        assert!((beta_c(3).unwrap() - 4.0 * 2f64.ln()).abs() < 1e-15);
        assert!((beta_c(4).unwrap() - 3.0 * 3f64.ln()).abs() < 1e-15);
        assert!((beta_c(3).unwrap() - 2.7725887).abs() < 1e-7);
        assert!((beta_c(4).unwrap() - 3.2958369).abs() < 1e-7);
    }

    #[test]
    fn beta_c_between_spinodals() {
        for q in 4..=50 {
            let bc = beta_c(q).unwrap();
            assert!(spinodal(q, 1).unwrap().beta.value < bc);
            assert!(bc < spinodal(q, 2).unwrap().beta.value, "q = {q}");
        }
    }

    #[test]
    fn critical_points_at_beta_c() {
        let bc = beta_c(3).unwrap();
        let roots = Family::new(3, 1).unwrap().solve(bc).unwrap();
        assert!((roots.u.coords.t - 1.0 / 6.0).abs() < 1e-12);
        assert!((roots.v.coords.t - 0.25).abs() < 1e-12);
    }

    #[test]
    fn spinodals_increase() {
        for q in 3..=20 {
            let prof = TemperatureProfile::new(q).unwrap();
            let b: Vec<f64> = prof.spinodal.iter().map(|s| s.beta.value).collect();
            assert!(b.windows(2).all(|w| w[0] < w[1]), "q = {q}: {b:?}");
            let last = *b.last().unwrap();
            if q % 2 == 0 {
                assert!((last - q as f64).abs() < 1e-12);
            } else {
                assert!(last < q as f64);
            }
            for s in &prof.spinodal {
                assert!(s.beta.lo <= s.beta.value && s.beta.value <= s.beta.hi);
            }
        }
    }

    #[test]
    fn profile_ordering() {
        for q in 3..=12 {
            let p = TemperatureProfile::new(q).unwrap();
            assert!(p.beta1() < p.beta2());
            if q >= 4 {
                assert!(p.beta2() < p.beta_s(2).unwrap());
            }
            if q <= 4 {
                assert_eq!(p.beta3(), q as f64);
            } else {
                assert!(p.beta_s(2).unwrap() < p.beta3() && p.beta3() < p.beta4());
                assert!(saddle_gap(q, p.beta3()).unwrap().abs() < 1e-10);
                assert!(p.beta_m.width() <= 1e-9 * p.beta3());
            }
        }
    }

    #[test]
    fn saddle_gap_slope_decreases() {
        for q in [5, 7, 10] {
            let lo = spinodal(q, 2).unwrap().beta.value;
            let hi = q as f64;
            let slopes: Vec<f64> =
                (1..50).map(|k| saddle_gap_slope(q, lo + (hi - lo) * k as f64 / 50.0).unwrap()).collect();
            assert!(slopes.windows(2).all(|w| w[1] < w[0]), "q = {q}");
            // the closed form matches a difference quotient of D
            let b = 0.5 * (lo + hi);
            let h = 1e-5;
            let fd = (saddle_gap(q, b + h).unwrap() - saddle_gap(q, b - h).unwrap()) / (2.0 * h);
            assert!((fd * b * b - saddle_gap_slope(q, b).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn family_value_matches_potential() {
        for q in 3..9 {
            for i in 1..=q / 2 {
                let fam = Family::new(q, i).unwrap();
                let bs = fam.spinodal_beta();
                for beta in [bs, bs + 0.1, bs + 1.0, q as f64 + 0.7] {
                    for branch in [Branch::U, Branch::V] {
                        let roots = fam.solve(beta).unwrap();
                        let c = if branch == Branch::U { roots.u.coords } else { roots.v.coords };
                        let direct = potential(&fam.point_of(c).unwrap(), beta).unwrap().f;
                        let reduced = free_energy_family_value(q, i, beta, branch).unwrap();
                        assert!((direct - reduced).abs() < 1e-12, "q={q} i={i} β={beta}");
                    }
                }
            }
        }
    }

    #[test]
    fn family_value_beta_derivative() {
        // dF_β(c_i)/dβ = -k_i(t)/β² at fixed t
        let fam = Family::new(5, 2).unwrap();
        let t = 0.05;
        let x = fam.point(t).unwrap();
        let b = 4.0;
        let h = 1e-5;
        let fd = (potential(&x, b + h).unwrap().f - potential(&x, b - h).unwrap().f) / (2.0 * h);
        let k = fam.entropy(t).unwrap();
        assert!((fd + k / (b * b)).abs() < 1e-5 * fd.abs());
    }

    #[test]
    fn height_order_flips_at_beta_c() {
        for q in 3..8 {
            let bc = beta_c(q).unwrap();
            let gap = |b: f64| {
                let u1 = free_energy_family_value(q, 1, b, Branch::U).unwrap();
                -0.5 / q as f64 - (q as f64).ln() / b - u1
            };
            assert!(gap(bc - 1e-9) < 0.0 && gap(bc + 1e-9) > 0.0, "q = {q}");
        }
    }

    #[test]
    fn v1_above_p_below_q() {
        for q in 3..8 {
            let b1 = spinodal(q, 1).unwrap().beta.value;
            let qf = q as f64;
            for k in 1..20 {
                let b = b1 + (qf - b1) * k as f64 / 20.0;
                let fp = -0.5 / qf - qf.ln() / b;
                assert!(free_energy_family_value(q, 1, b, Branch::V).unwrap() > fp);
            }
            let b = qf + 0.5;
            let fp = -0.5 / qf - qf.ln() / b;
            assert!(free_energy_family_value(q, 1, b, Branch::V).unwrap() < fp);
        }
    }

    fn labels(q: usize, beta: f64) -> Vec<(PointFamily, Classification)> {
        enumerate_critical_points(q, beta).unwrap().iter().map(|p| (p.family, p.classification)).collect()
    }

    #[test]
    fn classification_tables() {
        use Classification::*;
        use PointFamily::*;
        let p3 = TemperatureProfile::new(3).unwrap();
        assert_eq!(labels(3, p3.beta1() - 0.1), vec![(P, OnlyMinimum)]);
        assert_eq!(labels(3, p3.beta1()), vec![(P, OnlyMinimum), (U(1), Degenerate)]);
        assert_eq!(labels(3, 2.9), vec![(P, LocalMinimum), (U(1), LocalMinimum), (V(1), Saddle)]);
        assert_eq!(labels(3, 3.0), vec![(P, Degenerate), (U(1), LocalMinimum)]);
        assert_eq!(labels(3, 3.5), vec![(P, LocalMaximum), (U(1), LocalMinimum), (V(1), Saddle)]);

        assert_eq!(labels(4, 4.5), vec![(P, LocalMaximum), (U(1), LocalMinimum), (V(1), HigherIndex(2)), (U(2), Saddle)]);
        assert_eq!(labels(4, 4.0), vec![(P, Degenerate), (U(1), LocalMinimum)]);

        let p5 = TemperatureProfile::new(5).unwrap();
        let b = 0.5 * (p5.beta_s(2).unwrap() + 5.0);
        assert_eq!(
            labels(5, b),
            vec![(P, LocalMinimum), (U(1), LocalMinimum), (V(1), Saddle), (U(2), Saddle), (V(2), HigherIndex(2))]
        );
        assert_eq!(
            labels(5, p5.beta_s(2).unwrap()),
            vec![(P, LocalMinimum), (U(1), LocalMinimum), (V(1), Saddle), (U(2), Degenerate)]
        );
        // at β = q the representative of U_2 stays a nondegenerate saddle
        for q in 5..9 {
            let pts = enumerate_critical_points(q, q as f64).unwrap();
            let u2 = pts.iter().find(|p| p.family == U(2)).unwrap();
            assert_eq!(u2.classification, Saddle);
            assert!(u2.spectrum.groups.iter().all(|g| g.0.abs() > 0.1));
        }
        let pts = enumerate_critical_points(5, 7.0).unwrap();
        assert!(pts.iter().all(|p| !p.spectrum.degenerate));
        assert_eq!(pts[0].classification, LocalMaximum);
    }

    #[test]
    fn orbit_sizes_and_layout() {
        let pts = enumerate_critical_points(5, 6.0).unwrap();
        for p in &pts {
            assert_eq!(p.orbit().len(), p.orbit_size);
            match p.family {
                PointFamily::P => assert_eq!(p.orbit_size, 1),
                PointFamily::U(1) | PointFamily::V(1) => assert_eq!(p.orbit_size, 5),
                PointFamily::U(2) | PointFamily::V(2) => assert_eq!(p.orbit_size, 10),
                _ => unreachable!(),
            }
            if let PointFamily::U(1) = p.family {
                let c = p.location.coords();
                assert!(c[4] > c[0]);
            }
        }
    }

    #[test]
    fn regimes() {
        let p = TemperatureProfile::new(5).unwrap();
        assert_eq!(p.regime(1.0), Regime::BelowFirst);
        assert_eq!(p.regime(p.beta1()), Regime::AtFirst);
        assert_eq!(p.regime(p.beta2()), Regime::AtSecond);
        assert_eq!(p.regime(p.beta3()), Regime::AtThird);
        assert_eq!(p.regime(0.5 * (p.beta3() + 5.0)), Regime::ThirdToFourth);
        assert_eq!(p.regime(5.0), Regime::AtFourth);
        assert_eq!(p.regime(9.0), Regime::AboveFourth);
        let p = TemperatureProfile::new(3).unwrap();
        assert_eq!(p.regime(3.0), Regime::AtThird);
        assert_eq!(p.regime(3.5), Regime::AboveFourth);
    }
}

