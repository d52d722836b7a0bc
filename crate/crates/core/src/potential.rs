//! The mean-field free energy `F_β = H + S/β` on the simplex, its
//! derivatives in the reduced chart, and closed-form Hessian spectra.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::simplex::SimplexPoint;

/// Eigenvalues closer to zero than this are reported as degenerate.
pub const TOL_ZERO: f64 = 1e-8;

/// Interaction energy `H(x) = -½ Σ x_k²` (zero external field).
pub fn energy(x: &SimplexPoint) -> f64 {
    -0.5 * x.coords().iter().map(|c| c * c).sum::<f64>()
}

/// `H(x) = -½ Σ x_k² - h·x` for an external field `h`.  Everything else in
/// the crate works at zero field.
pub fn energy_in_field(x: &SimplexPoint, h: &[f64]) -> Result<f64> {
    if h.len() != x.q() {
        return domain(format!("field has {} components, point has {}", h.len(), x.q()));
    }
    Ok(energy(x) - x.coords().iter().zip(h).map(|(a, b)| a * b).sum::<f64>())
}

/// Negative Shannon entropy `S(x) = Σ x_k log x_k`, with `0 log 0 = 0`.
pub fn entropy(x: &SimplexPoint) -> f64 {
    x.coords().iter().map(|&c| xlogx(c)).sum()
}

pub(crate) fn xlogx(c: f64) -> f64 {
    if c > 0.0 {
        c * c.ln()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialValue {
    /// `F_β(x)`.
    pub f: f64,
    pub energy: f64,
    pub entropy: f64,
    /// `G_β(x) = log(x_1 ⋯ x_q) / (2β)`; `None` on the boundary where it
    /// diverges.
    pub g: Option<f64>,
}

pub fn potential(x: &SimplexPoint, beta: f64) -> Result<PotentialValue> {
    check_beta(beta)?;
    let energy = energy(x);
    let entropy = entropy(x);
    let g = x
        .is_interior()
        .then(|| x.coords().iter().map(|c| c.ln()).sum::<f64>() / (2.0 * beta));
    Ok(PotentialValue { f: energy + entropy / beta, energy, entropy, g })
}

/// `F_β(x)` alone.
pub fn free_energy(x: &SimplexPoint, beta: f64) -> Result<f64> {
    Ok(potential(x, beta)?.f)
}

pub(crate) fn free_energy_coords(coords: &[f64], beta: f64) -> f64 {
    coords.iter().map(|&c| -0.5 * c * c + xlogx(c) / beta).sum()
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return domain(format!("inverse temperature must be positive and finite, got {beta}"));
    }
    Ok(())
}

fn check_interior(x: &SimplexPoint) -> Result<()> {
    if !x.is_interior() {
        return domain("derivatives of the free energy need an interior point");
    }
    Ok(())
}

/// Gradient of `F_β` in the chart `(x_1, ..., x_{q-1})`.
pub fn gradient(x: &SimplexPoint, beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    check_interior(x)?;
    let xq = x.coords()[x.q() - 1];
    Ok(x.chart().iter().map(|&xk| -(xk - xq) + (xk.ln() - xq.ln()) / beta).collect())
}

/// Hessian of `F_β` in the chart `(x_1, ..., x_{q-1})`.
pub fn hessian(x: &SimplexPoint, beta: f64) -> Result<DMatrix<f64>> {
    check_beta(beta)?;
    check_interior(x)?;
    let n = x.q() - 1;
    let last = -1.0 + 1.0 / (beta * x.coords()[n]);
    let mut h = DMatrix::from_element(n, n, last);
    for (k, &xk) in x.chart().iter().enumerate() {
        h[(k, k)] += -1.0 + 1.0 / (beta * xk);
    }
    Ok(h)
}

/// Eigenvalues of a chart Hessian with their multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianSpectrum {
    /// `(a, b)` building blocks when the spectrum comes from a closed form.
    pub coefficients: Option<(f64, f64)>,
    /// Distinct eigenvalues with multiplicities, in ascending order.
    pub groups: Vec<(f64, usize)>,
    /// Number of negative eigenvalues (below `-TOL_ZERO`).
    pub index: usize,
    /// True when some eigenvalue is within `TOL_ZERO` of zero.
    pub degenerate: bool,
}

impl HessianSpectrum {
    pub fn from_groups(mut groups: Vec<(f64, usize)>) -> Self {
        groups.retain(|&(_, m)| m > 0);
        groups.sort_by(|a, b| a.0.total_cmp(&b.0));
        let index = groups.iter().filter(|g| g.0 < -TOL_ZERO).map(|g| g.1).sum();
        let degenerate = groups.iter().any(|g| g.0.abs() <= TOL_ZERO);
        Self { coefficients: None, groups, index, degenerate }
    }

    pub fn with_coefficients(mut self, a: f64, b: f64) -> Self {
        self.coefficients = Some((a, b));
        self
    }

    /// Dense symmetric eigen-decomposition of a chart Hessian.
    pub fn from_matrix(h: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(h.clone());
        Self::from_groups(eig.eigenvalues.iter().map(|&l| (l, 1)).collect())
    }

    /// All eigenvalues repeated by multiplicity, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.groups.iter().flat_map(|&(l, m)| std::iter::repeat_n(l, m)).collect()
    }

    pub fn dimension(&self) -> usize {
        self.groups.iter().map(|g| g.1).sum()
    }

    pub fn determinant(&self) -> f64 {
        self.groups.iter().map(|&(l, m)| l.powi(m as i32)).product()
    }
}

/// Spectrum of the Hessian at the barycentre: `(q-β)/β` with multiplicity
/// `q-2` and `q(q-β)/β` once.
pub fn spectrum_at_barycenter(q: usize, beta: f64) -> Result<HessianSpectrum> {
    check_beta(beta)?;
    if q < 3 {
        return domain(format!("q must be at least 3, got {q}"));
    }
    let lam = (q as f64 - beta) / beta;
    Ok(HessianSpectrum::from_groups(vec![(lam, q - 2), (q as f64 * lam, 1)]).with_coefficients(lam, lam))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> SimplexPoint {
        SimplexPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn barycenter_values() {
        for q in 3..8 {
            let p = SimplexPoint::barycenter(q).unwrap();
            let v = potential(&p, 2.0).unwrap();
            let qf = q as f64;
            assert!((v.energy + 0.5 / qf).abs() < 1e-15);
            assert!((v.entropy + qf.ln()).abs() < 1e-14);
            assert!((v.g.unwrap() + qf * qf.ln() / 4.0).abs() < 1e-13);
            assert!(gradient(&p, 2.0).unwrap().iter().all(|g| g.abs() < 1e-15));
        }
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy(&pt(&[1.0, 0.0, 0.0])), -0.5);
        assert!((energy(&pt(&[0.4, 0.3, 0.2, 0.1])) + 0.15).abs() < 1e-15);
        let x = pt(&[0.5, 0.25, 0.25]);
        assert!((energy_in_field(&x, &[1.0, 0.0, 2.0]).unwrap() - (energy(&x) - 1.0)).abs() < 1e-15);
        let e = entropy(&pt(&[0.5, 0.125, 0.125, 0.125, 0.125]));
        assert!((e - (0.5 * 0.5f64.ln() + 0.5 * 0.125f64.ln())).abs() < 1e-15);
        let v = potential(&SimplexPoint::barycenter(3).unwrap(), 3.0).unwrap();
        assert!((v.f - (-1.0 / 6.0 - 3f64.ln() / 3.0)).abs() < 1e-15);
        assert!((v.g.unwrap() - (1.0f64 / 27.0).ln() / 6.0).abs() < 1e-15);
        let g = gradient(&pt(&[0.5, 0.3, 0.2]), 2.0).unwrap();
        assert!((g[0] - (-0.3 + 2.5f64.ln() / 2.0)).abs() < 1e-15);
        assert!((g[1] - (-0.1 + 1.5f64.ln() / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn boundary_is_flagged() {
        let x = pt(&[0.5, 0.5, 0.0]);
        let v = potential(&x, 3.0).unwrap();
        assert!(v.f.is_finite());
        assert!(v.g.is_none());
        assert!(gradient(&x, 3.0).is_err());
        assert!(potential(&x, 0.0).is_err());
    }

    fn fd_gradient(x: &SimplexPoint, beta: f64, h: f64) -> Vec<f64> {
        let c = x.chart();
        (0..c.len())
            .map(|k| {
                let mut a = c.to_vec();
                let mut b = c.to_vec();
                a[k] += h;
                b[k] -= h;
                let fa = free_energy(&SimplexPoint::from_chart(&a).unwrap(), beta).unwrap();
                let fb = free_energy(&SimplexPoint::from_chart(&b).unwrap(), beta).unwrap();
                (fa - fb) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = pt(&[0.1, 0.2, 0.3, 0.4]);
        let g = gradient(&x, 3.3).unwrap();
        let fd = fd_gradient(&x, 3.3, 1e-6);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let x = pt(&[0.15, 0.25, 0.35, 0.25]);
        let beta = 2.7;
        let h = hessian(&x, beta).unwrap();
        let eps = 1e-5;
        let c = x.chart();
        for l in 0..c.len() {
            let mut a = c.to_vec();
            let mut b = c.to_vec();
            a[l] += eps;
            b[l] -= eps;
            let ga = gradient(&SimplexPoint::from_chart(&a).unwrap(), beta).unwrap();
            let gb = gradient(&SimplexPoint::from_chart(&b).unwrap(), beta).unwrap();
            for k in 0..c.len() {
                let fd = (ga[k] - gb[k]) / (2.0 * eps);
                assert!((h[(k, l)] - fd).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn barycenter_spectrum_matches_dense() {
        for q in 3..7 {
            for beta in [1.0, 2.5, q as f64 + 0.5] {
                let p = SimplexPoint::barycenter(q).unwrap();
                let dense = HessianSpectrum::from_matrix(&hessian(&p, beta).unwrap()).eigenvalues();
                let closed = spectrum_at_barycenter(q, beta).unwrap().eigenvalues();
                for (a, b) in dense.iter().zip(&closed) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }
}
