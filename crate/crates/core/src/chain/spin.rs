use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::chain::stream_rng;
use crate::error::{domain, Result};
use crate::potential::check_beta;

const MAX_SPIN_SITES: usize = 16;
const MAX_ENUMERATION_SITES: usize = 8;

/// Observed jumps of the projected spin dynamics out of one magnetization
/// state along one `i -> j` move.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinRateEntry {
    pub state: Vec<u32>,
    pub from: usize,
    pub to: usize,
    pub jumps: u64,
    /// Total time the projection spent in `state`.
    pub holding: f64,
}

impl SpinRateEntry {
    pub fn empirical_rate(&self) -> f64 {
        self.jumps as f64 / self.holding
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinRateTable {
    pub q: usize,
    pub n: usize,
    pub beta: f64,
    pub horizon: f64,
    pub total_jumps: u64,
    pub entries: Vec<SpinRateEntry>,
}

/// `H_N(σ) = -(1/2N) Σ_{u,w} 1{σ_u = σ_w}`.
fn spin_energy(sigma: &[usize]) -> f64 {
    let n = sigma.len();
    let mut same = 0usize;
    for u in 0..n {
        for w in 0..n {
            same += (sigma[u] == sigma[w]) as usize;
        }
    }
    -(same as f64) / (2.0 * n as f64)
}

fn check_sites(q: usize, n: usize, cap: usize) -> Result<()> {
    if q < 3 {
        return domain(format!("q must be at least 3, got {q}"));
    }
    if n == 0 || n > cap {
        return domain(format!("spin-level computations need 1 <= N <= {cap}, got {n}"));
    }
    Ok(())
}

/// Simulates all `N` spins, flipping site `v` to `k` at rate
/// `(1/N) exp(-β/2 [H_N(σ^{v,k}) - H_N(σ)])`, and tabulates the jumps of
/// the spin-count projection.
pub fn spin_level_oracle(q: usize, n: usize, beta: f64, horizon: f64, seed: u64) -> Result<SpinRateTable> {
    check_sites(q, n, MAX_SPIN_SITES)?;
    check_beta(beta)?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return domain(format!("horizon must be positive and finite, got {horizon}"));
    }
    let mut rng = stream_rng(seed, 0);
    let mut sigma: Vec<usize> = (0..n).map(|_| rng.gen_range(0..q)).collect();
    let nf = n as f64;
    let mut holding: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    let mut jumps: BTreeMap<(Vec<u32>, usize, usize), u64> = BTreeMap::new();
    let mut flips: Vec<(usize, usize, f64)> = Vec::with_capacity(n * (q - 1));
    let mut t = 0.0;
    let mut total_jumps = 0;
    loop {
        let mut counts = vec![0u32; q];
        sigma.iter().for_each(|&s| counts[s] += 1);
        let h0 = spin_energy(&sigma);
        flips.clear();
        let mut total = 0.0;
        for v in 0..n {
            let old = sigma[v];
            for k in (0..q).filter(|&k| k != old) {
                sigma[v] = k;
                let rate = (-beta / 2.0 * (spin_energy(&sigma) - h0)).exp() / nf;
                sigma[v] = old;
                total += rate;
                flips.push((v, k, rate));
            }
        }
        let hold = rng.sample::<f64, _>(Exp1) / total;
        let stay = hold.min(horizon - t);
        *holding.entry(counts.clone()).or_insert(0.0) += stay;
        if t + hold >= horizon {
            break;
        }
        t += hold;
        let mut u = rng.gen::<f64>() * total;
        let mut pick = flips[flips.len() - 1];
        for &f in &flips {
            if u < f.2 {
                pick = f;
                break;
            }
            u -= f.2;
        }
        let (v, k, _) = pick;
        *jumps.entry((counts, sigma[v], k)).or_insert(0) += 1;
        sigma[v] = k;
        total_jumps += 1;
    }
    let mut entries = Vec::new();
    for (state, &time) in &holding {
        for i in (0..q).filter(|&i| state[i] > 0) {
            for j in (0..q).filter(|&j| j != i) {
                let c = jumps.get(&(state.clone(), i, j)).copied().unwrap_or(0);
                entries.push(SpinRateEntry { state: state.clone(), from: i, to: j, jumps: c, holding: time });
            }
        }
    }
    Ok(SpinRateTable { q, n, beta, horizon, total_jumps, entries })
}

/// Law of the spin counts under the spin Gibbs measure
/// `μ(σ) ∝ exp(-β H_N(σ))`, by enumeration of all `q^N` configurations.
/// Returns `(counts, probability)` pairs sorted by counts.
pub fn spin_gibbs_marginal(q: usize, n: usize, beta: f64) -> Result<Vec<(Vec<u32>, f64)>> {
    check_sites(q, n, MAX_ENUMERATION_SITES)?;
    check_beta(beta)?;
    let total = q.pow(n as u32);
    let mut log_w: BTreeMap<Vec<u32>, Vec<f64>> = BTreeMap::new();
    let mut sigma = vec![0usize; n];
    for code in 0..total {
        let mut c = code;
        for s in sigma.iter_mut() {
            *s = c % q;
            c /= q;
        }
        let mut counts = vec![0u32; q];
        sigma.iter().for_each(|&s| counts[s] += 1);
        log_w.entry(counts).or_default().push(-beta * spin_energy(&sigma));
    }
    let per_state: Vec<(Vec<u32>, f64)> = log_w
        .into_iter()
        .map(|(k, v)| {
            let top = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (k, top + v.iter().map(|l| (l - top).exp()).sum::<f64>().ln())
        })
        .collect();
    let top = per_state.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let z = top + per_state.iter().map(|p| (p.1 - top).exp()).sum::<f64>().ln();
    Ok(per_state.into_iter().map(|(k, l)| (k, (l - z).exp())).collect())
}
