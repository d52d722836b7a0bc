//! Points of the probability simplex and the reduced chart used for
//! derivatives.

use serde::Serialize;

use crate::error::{domain, Result};

const SUM_TOL: f64 = 1e-12;

/// A point of the simplex `{x ∈ R^q : x_k ≥ 0, Σ x_k = 1}` with `q ≥ 3`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 3 {
            return domain(format!("simplex points need q >= 3, got q = {}", coords.len()));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return domain(format!("coordinate {c} is not a finite non-negative number"));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return domain(format!("coordinates sum to {sum}, expected 1"));
        }
        Ok(Self { coords })
    }

    /// The barycentre `(1/q, ..., 1/q)`.
    pub fn barycenter(q: usize) -> Result<Self> {
        Self::new(vec![1.0 / q as f64; q])
    }

    /// Builds a point from its first `q - 1` coordinates, the last one being
    /// fixed by the simplex constraint.
    pub fn from_chart(chart: &[f64]) -> Result<Self> {
        let mut coords = chart.to_vec();
        coords.push(1.0 - chart.iter().sum::<f64>());
        Self::new(coords)
    }

    pub fn q(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn chart(&self) -> &[f64] {
        &self.coords[..self.coords.len() - 1]
    }

    pub fn is_interior(&self) -> bool {
        self.coords.iter().all(|&c| c > 0.0)
    }

    /// Returns the point `y` with `y[k] = x[perm[k]]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let q = self.q();
        let mut seen = vec![false; q];
        if perm.len() != q || perm.iter().any(|&p| p >= q || std::mem::replace(&mut seen[p], true)) {
            return domain(format!("{perm:?} is not a permutation of 0..{q}"));
        }
        Ok(Self { coords: perm.iter().map(|&p| self.coords[p]).collect() })
    }

    /// Euclidean distance to another point of the same dimension.
    pub fn distance(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest coordinate-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coords.iter().zip(&other.coords).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_points() {
        assert!(SimplexPoint::new(vec![0.5, 0.5]).is_err());
        assert!(SimplexPoint::new(vec![0.5, 0.6, -0.1]).is_err());
        assert!(SimplexPoint::new(vec![0.5, 0.5, 0.1]).is_err());
        assert!(SimplexPoint::new(vec![0.5, f64::NAN, 0.5]).is_err());
    }

    #[test]
    fn chart_round_trip() {
        let x = SimplexPoint::new(vec![0.2, 0.3, 0.1, 0.4]).unwrap();
        let y = SimplexPoint::from_chart(x.chart()).unwrap();
        assert!(x.max_abs_diff(&y) < 1e-15);
    }

    #[test]
    fn permutation() {
        let x = SimplexPoint::new(vec![0.2, 0.3, 0.5]).unwrap();
        let y = x.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(y.coords(), &[0.5, 0.2, 0.3]);
        assert!(x.permuted(&[0, 0, 1]).is_err());
    }
}
