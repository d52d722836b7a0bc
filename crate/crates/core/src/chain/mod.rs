//! The empirical magnetization chain on `Ξ_N`: state indexing, jump rates,
//! invariant measure, exact hitting times, simulation and a spin-level
//! reference simulator.

mod cyclic;
mod hitting;
mod lattice;
mod order;
mod simulate;
mod spin;

pub use cyclic::{cyclic_decomposition_check, cyclic_decomposition_residual};
pub use hitting::{exact_mean_hitting_time, mean_hitting_times, HittingSolver};
pub use lattice::Lattice;
pub use order::{order_process, DeltaRule, MetastableSets, OrderJump, OrderProcess, OrderSymbol};
pub use simulate::{
    monte_carlo_hitting_times, occupation, sample_hitting_times, simulate, stream_rng, HittingEstimate, StopRule,
    Trajectory,
};
pub use spin::{spin_gibbs_marginal, spin_level_oracle, SpinRateEntry, SpinRateTable};

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::potential::check_beta;
use crate::simplex::SimplexPoint;

/// Default cap on `|Ξ_N|`.
pub const DEFAULT_STATE_CAP: u128 = 2_000_000;

/// Rate of moving one spin from value `i` to value `j` at counts `c`:
/// `(n_i/N) exp(β (n_j - n_i + 1) / (2N))`.
pub fn jump_rate(c: &[u32], n: usize, beta: f64, i: usize, j: usize) -> f64 {
    if i == j || c[i] == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let (ni, nj) = (c[i] as f64, c[j] as f64);
    ni / nf * (beta * (nj - ni + 1.0) / (2.0 * nf)).exp()
}

/// A point of `Ξ_N` stored through its spin counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CountVector {
    counts: Vec<u32>,
}

impl CountVector {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.len() < 3 {
            return domain(format!("count vectors need q >= 3 entries, got {}", counts.len()));
        }
        if counts.iter().map(|&c| c as u64).sum::<u64>() == 0 {
            return domain("count vectors need N >= 1");
        }
        Ok(Self { counts })
    }

    pub fn q(&self) -> usize {
        self.counts.len()
    }

    pub fn n(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn to_point(&self) -> SimplexPoint {
        let n = self.n() as f64;
        let mut x: Vec<f64> = self.counts.iter().map(|&c| c as f64 / n).collect();
        // division can leave the sum a few ulps from one
        let s: f64 = x.iter().sum();
        let k = self.counts.iter().enumerate().max_by_key(|(_, &c)| c).map(|(k, _)| k).unwrap_or(0);
        x[k] += 1.0 - s;
        SimplexPoint::new(x).expect("count vectors lie on the simplex")
    }

    /// The nearest lattice point `[x]_N`: `N x` is floored and the missing
    /// mass goes to the largest fractional parts, ties to the lowest index.
    pub fn nearest(x: &SimplexPoint, n: usize) -> Result<Self> {
        if n == 0 {
            return domain("N must be at least 1");
        }
        let scaled: Vec<f64> = x.coords().iter().map(|&c| c * n as f64).collect();
        let mut counts: Vec<u32> = scaled.iter().map(|s| s.floor() as u32).collect();
        let have: usize = counts.iter().map(|&c| c as usize).sum();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = scaled[a] - scaled[a].floor();
            let fb = scaled[b] - scaled[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &k in order.iter().take(n.saturating_sub(have)) {
            counts[k] += 1;
        }
        Self::new(counts)
    }

    /// The corner with all `N` spins equal to `k`.
    pub fn corner(q: usize, n: usize, k: usize) -> Result<Self> {
        if k >= q {
            return domain(format!("spin {k} out of range for q = {q}"));
        }
        let mut c = vec![0; q];
        c[k] = n as u32;
        Self::new(c)
    }
}

/// The continuous-time chain `r_N(t)` for fixed `(q, N, β)`.
#[derive(Debug, Clone)]
pub struct MagnetizationChain {
    q: usize,
    n: usize,
    beta: f64,
    lattice: Lattice,
    counts: Vec<u32>,
    log_pi: Vec<f64>,
    log_factorial: Vec<f64>,
}

/// Builds the chain with the default state cap.
pub fn build_chain(q: usize, n: usize, beta: f64) -> Result<MagnetizationChain> {
    MagnetizationChain::with_cap(q, n, beta, DEFAULT_STATE_CAP)
}

impl MagnetizationChain {
    pub fn with_cap(q: usize, n: usize, beta: f64, cap: u128) -> Result<Self> {
        if q < 3 {
            return domain(format!("q must be at least 3, got {q}"));
        }
        if n == 0 {
            return domain("N must be at least 1");
        }
        check_beta(beta)?;
        let needed = Lattice::count(q, n);
        if needed > cap {
            return Err(Error::Size { what: format!("state space for q = {q}, N = {n}"), needed, cap });
        }
        let lattice = Lattice::new(q, n);
        let len = lattice.len();
        let mut counts = vec![0u32; len * q];
        for (idx, chunk) in counts.chunks_mut(q).enumerate() {
            lattice.unrank_into(idx, chunk);
        }
        let mut log_factorial = vec![0.0; n + 2];
        for k in 1..log_factorial.len() {
            log_factorial[k] = log_factorial[k - 1] + (k as f64).ln();
        }
        let nf = n as f64;
        let mut log_pi: Vec<f64> = counts
            .chunks(q)
            .map(|c| {
                let mult = log_factorial[n] - c.iter().map(|&k| log_factorial[k as usize]).sum::<f64>();
                let sq: f64 = c.iter().map(|&k| (k as f64) * (k as f64)).sum();
                mult + beta * sq / (2.0 * nf)
            })
            .collect();
        let top = log_pi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + log_pi.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
        log_pi.iter_mut().for_each(|l| *l -= lse);
        Ok(Self { q, n, beta, lattice, counts, log_pi, log_factorial })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn counts(&self, idx: usize) -> &[u32] {
        &self.counts[idx * self.q..(idx + 1) * self.q]
    }

    pub fn state(&self, idx: usize) -> CountVector {
        CountVector { counts: self.counts(idx).to_vec() }
    }

    pub fn index_of(&self, x: &CountVector) -> Result<usize> {
        if x.q() != self.q || x.n() != self.n {
            return domain(format!(
                "state with q = {}, N = {} does not belong to the chain (q = {}, N = {})",
                x.q(),
                x.n(),
                self.q,
                self.n
            ));
        }
        Ok(self.lattice.rank(x.counts()))
    }

    /// Index of `x + e_j/N - e_i/N`, if that is a state.
    pub fn neighbor(&self, idx: usize, i: usize, j: usize) -> Option<usize> {
        let c = self.counts(idx);
        if i == j || c[i] == 0 {
            return None;
        }
        let mut y = c.to_vec();
        y[i] -= 1;
        y[j] += 1;
        Some(self.lattice.rank(&y))
    }

    /// `R_N(x, x + e_j/N - e_i/N) = (n_i/N) exp(β (n_j - n_i + 1) / (2N))`.
    pub fn rate(&self, idx: usize, i: usize, j: usize) -> f64 {
        let c = self.counts(idx);
        jump_rate(c, self.n, self.beta, i, j)
    }

    /// Outgoing moves of a state as `(i, j, target, rate)`.
    pub fn moves(&self, idx: usize) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        let q = self.q;
        (0..q).flat_map(move |i| (0..q).map(move |j| (i, j))).filter_map(move |(i, j)| {
            let y = self.neighbor(idx, i, j)?;
            Some((i, j, y, self.rate(idx, i, j)))
        })
    }

    pub fn exit_rate(&self, idx: usize) -> f64 {
        self.moves(idx).map(|m| m.3).sum()
    }

    /// Logarithm of the invariant measure `ν_N^β`, normalised.
    pub fn log_pi(&self) -> &[f64] {
        &self.log_pi
    }

    pub fn pi(&self) -> Vec<f64> {
        self.log_pi.iter().map(|l| l.exp()).collect()
    }

    /// `log N! - Σ log n_k!`.
    pub fn log_multinomial(&self, idx: usize) -> f64 {
        self.log_factorial[self.n] - self.counts(idx).iter().map(|&k| self.log_factorial[k as usize]).sum::<f64>()
    }

    /// `F_{β,N}(x) = H(x) - [(q-1)/2 · log(2πN) + log multinomial] / (βN)`.
    pub fn free_energy_n(&self, idx: usize) -> f64 {
        let nf = self.n as f64;
        let h: f64 = -0.5 * self.counts(idx).iter().map(|&k| (k as f64 / nf).powi(2)).sum::<f64>();
        let norm = 0.5 * (self.q as f64 - 1.0) * (2.0 * std::f64::consts::PI * nf).ln();
        h - (norm + self.log_multinomial(idx)) / (self.beta * nf)
    }

    /// Largest relative violation of `π(x) R(x,y) = π(y) R(y,x)` over all
    /// edges.
    pub fn detailed_balance_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..self.len() {
            for (i, j, y, r) in self.moves(x) {
                let fwd = self.log_pi[x] + r.ln();
                let bwd = self.log_pi[y] + self.rate(y, j, i).ln();
                worst = worst.max((fwd - bwd).exp_m1().abs());
            }
        }
        worst
    }

    /// `max_y |(πᵀ Q)_y|`.
    pub fn stationarity_residual(&self) -> f64 {
        let pi = self.pi();
        let mut flow = vec![0.0; self.len()];
        for x in 0..self.len() {
            for (_, _, y, r) in self.moves(x) {
                flow[y] += pi[x] * r;
                flow[x] -= pi[x] * r;
            }
        }
        flow.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Mask over states selecting the given count vectors.
    pub fn mask(&self, states: &[CountVector]) -> Result<Vec<bool>> {
        let mut m = vec![false; self.len()];
        for s in states {
            m[self.index_of(s)?] = true;
        }
        Ok(m)
    }
}
