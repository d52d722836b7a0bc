//! One-parameter families of candidate critical points.
//!
//! Every critical point of `F_β` is, up to permutation, of the form
//! `c(i, t) = (t, ..., t, r, ..., r)` with `j = q - i` copies of `t`,
//! `i` copies of `r = (1 - jt)/i` and `1 <= i <= q/2`.  Such a point is
//! critical exactly at `β = g_i(t) = log(r/t) / (r - t)`.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::potential::{check_beta, HessianSpectrum, TOL_ZERO};
use crate::roots::{newton_bisect, RootBracket};
use crate::simplex::SimplexPoint;

const SERIES_CUTOFF: f64 = 1e-3;

/// The family `c(i, ·)` for a given `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Family {
    q: usize,
    i: usize,
}

/// A member of a family, stored through both coordinate values so that
/// points close to a face keep full relative precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyCoords {
    /// Value of the `j = q - i` leading coordinates.
    pub t: f64,
    /// Value of the `i` trailing coordinates.
    pub r: f64,
}

/// A solution of `g_i(t) = β` on one branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyRoot {
    pub coords: FamilyCoords,
    /// Bracket on `t` across which `g_i - β` changes sign.
    pub bracket: RootBracket,
}

/// The two solutions `u_i(β) <= m_i <= v_i(β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyRoots {
    pub u: FamilyRoot,
    pub v: FamilyRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    fn of(v: f64, scale: f64) -> Self {
        if v.abs() <= TOL_ZERO * scale {
            Sign::Zero
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }
}

/// Signs of the spectral building blocks `a`, `b` and `ia + jb` along a
/// family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SignRow {
    pub a: Sign,
    pub b: Sign,
    pub ia_jb: Sign,
    /// Sign of `b (ia + jb)`, the product of the two quadratic roots.
    pub product: Sign,
}

impl Family {
    pub fn new(q: usize, i: usize) -> Result<Self> {
        if q < 3 {
            return domain(format!("q must be at least 3, got {q}"));
        }
        if i == 0 || 2 * i > q {
            return domain(format!("family index must satisfy 1 <= i <= q/2, got i = {i}, q = {q}"));
        }
        Ok(Self { q, i })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> usize {
        self.q - self.i
    }

    /// Number of distinct permutations of a non-central family point.
    pub fn orbit_size(&self) -> usize {
        binomial(self.q, self.i)
    }

    fn check_t(&self, t: f64) -> Result<FamilyCoords> {
        let top = 1.0 / self.j() as f64;
        if !(t > 0.0 && t < top) {
            return domain(format!("family parameter t = {t} outside (0, {top})"));
        }
        Ok(self.coords(t))
    }

    pub fn coords(&self, t: f64) -> FamilyCoords {
        FamilyCoords { t, r: (1.0 - self.j() as f64 * t) / self.i as f64 }
    }

    /// Coordinates from `ε = 1 - jt = i r`, accurate when `r` is tiny.
    pub fn coords_from_eps(&self, eps: f64) -> FamilyCoords {
        FamilyCoords { t: (1.0 - eps) / self.j() as f64, r: eps / self.i as f64 }
    }

    pub fn point(&self, t: f64) -> Result<SimplexPoint> {
        let c = self.check_t(t)?;
        self.point_of(c)
    }

    pub fn point_of(&self, c: FamilyCoords) -> Result<SimplexPoint> {
        let mut coords = vec![c.t; self.j()];
        coords.extend(std::iter::repeat_n(c.r, self.i));
        let sum: f64 = coords.iter().sum();
        // absorb the rounding of r into the sum so the point validates
        if (sum - 1.0).abs() > 1e-12 {
            return domain(format!("family coordinates {c:?} do not lie on the simplex"));
        }
        SimplexPoint::new(coords)
    }

    /// All `C(q, i)` permutations of a family point; the set of positions
    /// carrying `r` runs over the `i`-subsets of `0..q`.
    pub fn orbit(&self, c: FamilyCoords) -> Vec<Vec<f64>> {
        subsets(self.q, self.i)
            .into_iter()
            .map(|s| {
                let mut x = vec![c.t; self.q];
                for k in s {
                    x[k] = c.r;
                }
                x
            })
            .collect()
    }

    /// `g_i(t)`: the inverse temperature at which `c(i, t)` is critical.
    pub fn beta_at(&self, t: f64) -> Result<f64> {
        Ok(self.beta_of(self.check_t(t)?))
    }

    pub fn beta_of(&self, c: FamilyCoords) -> f64 {
        let d = c.r - c.t;
        let x = d / c.t;
        if x.abs() < SERIES_CUTOFF {
            log1p_over_x(x) / c.t
        } else if x > -0.5 {
            x.ln_1p() / d
        } else {
            (c.r.ln() - c.t.ln()) / d
        }
    }

    /// `g_i'(t)`.
    pub fn beta_derivative(&self, t: f64) -> Result<f64> {
        Ok(self.beta_derivative_of(self.check_t(t)?))
    }

    pub fn beta_derivative_of(&self, c: FamilyCoords) -> f64 {
        let (i, j) = (self.i as f64, self.j() as f64);
        let x = (c.r - c.t) / c.t;
        let dx = (-(j / i) * c.t - c.r) / (c.t * c.t);
        let (l, dl) = if x.abs() < SERIES_CUTOFF {
            (log1p_over_x(x), log1p_over_x_derivative(x))
        } else {
            let ln1 = if x > -0.5 { x.ln_1p() } else { c.r.ln() - c.t.ln() };
            (ln1 / x, ((c.r - c.t) / c.r - ln1) / (x * x))
        };
        dl * dx / c.t - l / (c.t * c.t)
    }

    /// `h_i(t)`, which has the sign of `g_i'(t)`:
    /// `g_i' = q i / (1 - qt)² · h_i`.
    pub fn kernel(&self, t: f64) -> Result<f64> {
        Ok(self.kernel_of(self.check_t(t)?))
    }

    pub fn kernel_of(&self, c: FamilyCoords) -> f64 {
        let (q, j) = (self.q as f64, self.j() as f64);
        let d = c.r - c.t;
        let x = d / c.t;
        if x.abs() < 0.5 {
            let lm = if x.abs() < SERIES_CUTOFF { log1p_minus_x(x) } else { x.ln_1p() - x };
            lm + x * x * j * c.t / (q * c.r)
        } else {
            (c.r.ln() - c.t.ln()) - d / (q * c.t * c.r)
        }
    }

    /// `h_i'(t) = (qt - 1)(2jt - 1) / (q (1 - jt)² t²)`.
    pub fn kernel_derivative(&self, t: f64) -> Result<f64> {
        let c = self.check_t(t)?;
        let (q, i, j) = (self.q as f64, self.i as f64, self.j() as f64);
        let e = i * c.r;
        Ok((q * t - 1.0) * (2.0 * j * t - 1.0) / (q * e * e * t * t))
    }

    /// `k_i(t) = S(c(i, t))`, the negative entropy along the family.
    pub fn entropy(&self, t: f64) -> Result<f64> {
        Ok(self.entropy_of(self.check_t(t)?))
    }

    pub fn entropy_of(&self, c: FamilyCoords) -> f64 {
        let i = self.i as f64;
        let x = (c.r - c.t) / c.t;
        let ln_ratio = if x > -0.5 { x.ln_1p() } else { c.r.ln() - c.t.ln() };
        i * c.r * ln_ratio + c.t.ln()
    }

    /// The minimiser `m_i` of `g_i`: the root of `h_i` in `(0, 1/(2j))` for
    /// `i < q/2`, and `1/q` when `i = q/2`.
    pub fn minimizer(&self) -> RootBracket {
        if 2 * self.i == self.q {
            return RootBracket::exact(1.0 / self.q as f64);
        }
        let hi = 0.5 / self.j() as f64;
        let mut lo = 0.5 * hi;
        while self.kernel_of(self.coords(lo)) >= 0.0 {
            lo *= 0.5;
        }
        let f = |t: f64| self.kernel_of(self.coords(t));
        let df = |t: f64| self.kernel_derivative(t).unwrap_or(f64::NAN);
        let b = newton_bisect(f, df, lo, hi, true).expect("h_i changes sign on (0, 1/(2j))");
        certify(&|t| self.kernel_of(self.coords(t)), b, true)
    }

    /// `β_{s,i} = g_i(m_i)`, the smallest inverse temperature at which the
    /// family carries a critical point.
    pub fn spinodal_beta(&self) -> f64 {
        let m = self.minimizer().value;
        self.beta_of(self.coords(m))
    }

    /// Solves `g_i(t) = β` on both branches.
    pub fn solve(&self, beta: f64) -> Result<FamilyRoots> {
        check_beta(beta)?;
        let m = self.minimizer().value;
        let mc = self.coords(m);
        let bs = self.beta_of(mc);
        if beta < bs {
            if bs - beta <= 1e-12 * bs {
                let root = FamilyRoot { coords: mc, bracket: RootBracket::exact(m) };
                return Ok(FamilyRoots { u: root, v: root });
            }
            return Err(Error::NoSolution(format!(
                "g_{} = {beta} has no solution below the spinodal value {bs} (q = {})",
                self.i, self.q
            )));
        }
        Ok(FamilyRoots { u: self.solve_u(beta, m)?, v: self.solve_v(beta, m)? })
    }

    fn solve_u(&self, beta: f64, m: f64) -> Result<FamilyRoot> {
        let phi = |t: f64| self.beta_of(self.coords(t)) - beta;
        if phi(m) >= 0.0 {
            return Ok(FamilyRoot { coords: self.coords(m), bracket: RootBracket::exact(m) });
        }
        let mut lo = 0.5 * m;
        while phi(lo) <= 0.0 {
            lo *= 0.5;
            if lo < f64::MIN_POSITIVE {
                return Err(Error::NoSolution(format!("u_{} underflows at β = {beta}", self.i)));
            }
        }
        let dphi = |t: f64| self.beta_derivative_of(self.coords(t));
        let b = newton_bisect(phi, dphi, lo, m, false)?;
        let b = certify(&phi, b, false);
        Ok(FamilyRoot { coords: self.coords(b.value), bracket: b })
    }

    fn solve_v(&self, beta: f64, m: f64) -> Result<FamilyRoot> {
        let j = self.j() as f64;
        let phi_t = |t: f64| self.beta_of(self.coords(t)) - beta;
        if phi_t(m) >= 0.0 {
            return Ok(FamilyRoot { coords: self.coords(m), bracket: RootBracket::exact(m) });
        }
        // parametrise by ε = 1 - jt, which resolves points close to the face
        let eps_m = 1.0 - j * m;
        let phi = |e: f64| self.beta_of(self.coords_from_eps(e)) - beta;
        let dphi = |e: f64| -self.beta_derivative_of(self.coords_from_eps(e)) / j;
        let mut lo = 0.5 * eps_m;
        while phi(lo) <= 0.0 {
            lo *= 0.5;
            if lo < f64::MIN_POSITIVE {
                return Err(Error::NoSolution(format!("v_{} reaches the face at β = {beta}", self.i)));
            }
        }
        let b = newton_bisect(phi, dphi, lo, eps_m, false)?;
        let coords = self.coords_from_eps(b.value);
        let tb = RootBracket::new(coords.t, (1.0 - b.hi) / j, (1.0 - b.lo) / j, false);
        let tb = certify(&phi_t, tb, true);
        Ok(FamilyRoot { coords, bracket: RootBracket { value: coords.t, ..tb } })
    }

    /// `(a, b)` with `a = -1 + 1/(βt)` and `b = -1 + 1/(βr)`, `β = g_i(t)`.
    pub fn spectral_coefficients(&self, c: FamilyCoords) -> (f64, f64) {
        let beta = self.beta_of(c);
        (-1.0 + 1.0 / (beta * c.t), -1.0 + 1.0 / (beta * c.r))
    }

    /// Closed-form spectrum of the chart Hessian of `F_{g_i(t)}` at
    /// `c(i, t)`.
    pub fn spectrum(&self, t: f64) -> Result<HessianSpectrum> {
        Ok(self.spectrum_of(self.check_t(t)?))
    }

    pub fn spectrum_of(&self, c: FamilyCoords) -> HessianSpectrum {
        let (a, b) = self.spectral_coefficients(c);
        let (q, i, j) = (self.q as f64, self.i as f64, self.j() as f64);
        if self.i == 1 {
            return HessianSpectrum::from_groups(vec![(a, self.q - 2), (a + (q - 1.0) * b, 1)])
                .with_coefficients(a, b);
        }
        let s = a + q * b;
        let p = b * (i * a + j * b);
        let disc = (s * s - 4.0 * p).max(0.0);
        let big = 0.5 * (s + s.signum() * disc.sqrt());
        let small = if big != 0.0 { p / big } else { 0.0 };
        HessianSpectrum::from_groups(vec![
            (a, self.j() - 1),
            (b, self.i - 2),
            (big, 1),
            (small, 1),
        ])
        .with_coefficients(a, b)
    }

    pub fn signs(&self, t: f64) -> Result<SignRow> {
        let c = self.check_t(t)?;
        let (a, b) = self.spectral_coefficients(c);
        let (i, j) = (self.i as f64, self.j() as f64);
        let scale = 1.0 + a.abs() + b.abs();
        let s = i * a + j * b;
        Ok(SignRow {
            a: Sign::of(a, scale),
            b: Sign::of(b, scale),
            ia_jb: Sign::of(s, scale),
            product: Sign::of(b * s, scale * scale),
        })
    }
}

/// Widens a bracket by a few ulps until the sign change is visible when
/// the function is evaluated at the reported endpoints.
fn certify(f: &dyn Fn(f64) -> f64, b: RootBracket, increasing: bool) -> RootBracket {
    if b.lo == b.hi {
        return b;
    }
    let ok = |lo: f64, hi: f64| {
        let (fl, fh) = (f(lo), f(hi));
        if increasing {
            fl <= 0.0 && fh >= 0.0
        } else {
            fl >= 0.0 && fh <= 0.0
        }
    };
    let (mut lo, mut hi) = (b.lo, b.hi);
    let mut pad = f64::EPSILON * lo.abs().max(hi.abs());
    let mut certified = ok(lo, hi);
    for _ in 0..60 {
        if certified {
            break;
        }
        lo -= pad;
        hi += pad;
        pad *= 2.0;
        certified = ok(lo, hi);
    }
    RootBracket::new(b.value.clamp(lo, hi), lo, hi, certified)
}

/// `log(1 + x) / x`, continued by 1 at the origin.
fn log1p_over_x(x: f64) -> f64 {
    (0..12).rev().fold(0.0, |acc, n| acc * -x + 1.0 / (n as f64 + 1.0))
}

/// Derivative of `log(1 + x) / x` near the origin.
fn log1p_over_x_derivative(x: f64) -> f64 {
    (1..12).rev().fold(0.0, |acc, n| {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        acc * x + sign * n as f64 / (n as f64 + 1.0)
    })
}

/// `log(1 + x) - x` near the origin.
fn log1p_minus_x(x: f64) -> f64 {
    let tail = (2..14).rev().fold(0.0, |acc, n| {
        let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
        acc * x + sign / n as f64
    });
    tail * x * x
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, m| acc * (n - m) / (m + 1))
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(pos) = (0..k).rev().find(|&p| cur[p] < n - k + p) else {
            return out;
        };
        cur[pos] += 1;
        for p in pos + 1..k {
            cur[p] = cur[p - 1] + 1;
        }
    }
}
