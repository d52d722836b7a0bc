use serde::Serialize;

use crate::critical::{beta_c, check_q, free_energy_family_value, Branch};
use crate::error::{domain, Result};
use crate::landscape::SimplexGrid;
use crate::potential::{check_beta, entropy};
use crate::simplex::SimplexPoint;

/// Step of the symmetric differences taken at `β_2`.
const FD_STEP: f64 = 1e-5;

fn barycenter_value(q: usize, beta: f64) -> f64 {
    let qf = q as f64;
    -0.5 / qf - qf.ln() / beta
}

/// `ψ(β)`: the smallest value of `F_β` over its local minima.
pub fn mean_field_free_energy(q: usize, beta: f64) -> Result<f64> {
    check_q(q)?;
    check_beta(beta)?;
    let fp = if beta < q as f64 { barycenter_value(q, beta) } else { f64::INFINITY };
    let fu = free_energy_family_value(q, 1, beta, Branch::U).unwrap_or(f64::INFINITY);
    Ok(fp.min(fu))
}

/// `min_x F_β(x)` over the nodes of a grid of resolution `M`.
pub fn grid_free_energy(q: usize, beta: f64, m: usize) -> Result<f64> {
    check_beta(beta)?;
    let grid = SimplexGrid::new(q, m)?;
    Ok(grid.free_energies(beta).into_iter().fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeEnergyCurve {
    pub q: usize,
    pub betas: Vec<f64>,
    pub psi: Vec<f64>,
    pub beta_c: f64,
    /// `|F_{β_2}(p) - F_{β_2}(u_1)|`.
    pub gap_at_beta_c: f64,
    /// Slopes of the two branches at `β_2` by symmetric differences.
    pub psi_prime_left: f64,
    pub psi_prime_right: f64,
    /// `(S(u_1) - S(p)) / β_2²`, the drop of `ψ'` across `β_2`.
    pub analytic_jump: f64,
}

impl FreeEnergyCurve {
    pub fn numeric_jump(&self) -> f64 {
        self.psi_prime_left - self.psi_prime_right
    }
}

pub fn free_energy_curve(q: usize, betas: &[f64]) -> Result<FreeEnergyCurve> {
    check_q(q)?;
    if betas.is_empty() {
        return domain("empty β grid");
    }
    let psi = betas.iter().map(|&b| mean_field_free_energy(q, b)).collect::<Result<Vec<_>>>()?;
    let b2 = beta_c(q)?;
    let fu = |b: f64| free_energy_family_value(q, 1, b, Branch::U);
    let h = FD_STEP;
    let left = (barycenter_value(q, b2 + h) - barycenter_value(q, b2 - h)) / (2.0 * h);
    let right = (fu(b2 + h)? - fu(b2 - h)?) / (2.0 * h);
    let gap = (barycenter_value(q, b2) - fu(b2)?).abs();
    let f1 = crate::family::Family::new(q, 1)?;
    let u1 = f1.point_of(f1.solve(b2)?.u.coords)?;
    let sp = entropy(&SimplexPoint::barycenter(q)?);
    let analytic_jump = (entropy(&u1) - sp) / (b2 * b2);
    Ok(FreeEnergyCurve {
        q,
        betas: betas.to_vec(),
        psi,
        beta_c: b2,
        gap_at_beta_c: gap,
        psi_prime_left: left,
        psi_prime_right: right,
        analytic_jump,
    })
}
