use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use std::collections::HashSet;

use crate::chain::{jump_rate, CountVector, Lattice, MagnetizationChain};
use crate::critical::check_q;
use crate::potential::check_beta;
use crate::error::{domain, Result};

/// When a simulation stops.
#[derive(Debug, Clone, PartialEq)]
pub enum StopRule {
    /// On entering a state whose mask entry is set.
    Hit(Vec<bool>),
    /// At a fixed time.
    Horizon(f64),
    /// After a fixed number of jumps.
    Jumps(usize),
}

/// A simulated path.  `times[k]` is the time at which `states[k]` was
/// entered; the path ends at `end_time`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub q: usize,
    pub n: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    pub states: Vec<usize>,
    pub end_time: f64,
}

impl Trajectory {
    pub fn jumps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn count_vector(&self, k: usize) -> CountVector {
        CountVector::new(Lattice::new(self.q, self.n).unrank(self.states[k])).expect("stored states are valid")
    }

    /// Time spent in `states[k]`.
    pub fn holding_time(&self, k: usize) -> f64 {
        let next = self.times.get(k + 1).copied().unwrap_or(self.end_time);
        next - self.times[k]
    }
}

/// RNG for run `stream` of a seeded experiment.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn step(chain: &MagnetizationChain, x: usize, rng: &mut ChaCha8Rng) -> (f64, usize) {
    let total = chain.exit_rate(x);
    let hold: f64 = rng.sample::<f64, _>(Exp1) / total;
    let mut u = rng.gen::<f64>() * total;
    let mut last = x;
    for (_, _, y, r) in chain.moves(x) {
        last = y;
        if u < r {
            return (hold, y);
        }
        u -= r;
    }
    (hold, last)
}

/// Standard continuous-time jump simulation from `start`.
pub fn simulate(chain: &MagnetizationChain, start: &CountVector, stop: &StopRule, seed: u64) -> Result<Trajectory> {
    let mut x = chain.index_of(start)?;
    match stop {
        StopRule::Hit(mask) if mask.len() != chain.len() => {
            return domain(format!("hit mask has {} entries, chain has {} states", mask.len(), chain.len()))
        }
        StopRule::Hit(mask) if !mask.iter().any(|&m| m) => return domain("hit set is empty"),
        StopRule::Horizon(t) if !(t.is_finite() && *t >= 0.0) => {
            return domain(format!("horizon must be finite and non-negative, got {t}"))
        }
        _ => {}
    }
    let mut rng = stream_rng(seed, 0);
    let mut times = vec![0.0];
    let mut states = vec![x];
    let mut t = 0.0;
    loop {
        match stop {
            StopRule::Hit(mask) if mask[x] => break,
            StopRule::Jumps(j) if states.len() > *j => break,
            _ => {}
        }
        let (hold, y) = step(chain, x, &mut rng);
        if let StopRule::Horizon(h) = stop {
            if t + hold >= *h {
                t = *h;
                break;
            }
        }
        t += hold;
        x = y;
        times.push(t);
        states.push(x);
    }
    Ok(Trajectory { q: chain.q(), n: chain.n(), seed, times, states, end_time: t })
}

/// Fraction of time spent in each state.
pub fn occupation(chain: &MagnetizationChain, traj: &Trajectory) -> Vec<f64> {
    let mut occ = vec![0.0; chain.len()];
    for k in 0..traj.states.len() {
        occ[traj.states[k]] += traj.holding_time(k);
    }
    if traj.end_time > 0.0 {
        occ.iter_mut().for_each(|o| *o /= traj.end_time);
    }
    occ
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingEstimate {
    pub runs: usize,
    pub mean: f64,
    pub std_error: f64,
    pub samples: Vec<f64>,
}

/// Independent hitting-time samples; run `k` draws from stream `k + 1`
/// of `seed`.
pub fn monte_carlo_hitting_times(
    chain: &MagnetizationChain,
    start: &CountVector,
    target: &[bool],
    runs: usize,
    seed: u64,
) -> Result<HittingEstimate> {
    let s = chain.index_of(start)?;
    if target.len() != chain.len() || !target.iter().any(|&t| t) {
        return domain("target mask must match the chain and be non-empty");
    }
    let samples: Vec<f64> = (0..runs)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64 + 1);
            let mut x = s;
            let mut t = 0.0;
            while !target[x] {
                let (hold, y) = step(chain, x, &mut rng);
                t += hold;
                x = y;
            }
            t
        })
        .collect();
    Ok(summarize(runs, samples))
}

/// Same move order and random draws as the chain-based step, on raw counts.
fn step_counts(c: &mut [u32], n: usize, beta: f64, rng: &mut ChaCha8Rng) -> f64 {
    let q = c.len();
    let moves = || (0..q).flat_map(move |i| (0..q).map(move |j| (i, j)));
    let total: f64 = moves().map(|(i, j)| jump_rate(c, n, beta, i, j)).filter(|&r| r > 0.0).sum();
    let hold: f64 = rng.sample::<f64, _>(Exp1) / total;
    let mut u = rng.gen::<f64>() * total;
    let mut last = None;
    for (i, j) in moves() {
        let r = jump_rate(c, n, beta, i, j);
        if r == 0.0 {
            continue;
        }
        last = Some((i, j));
        if u < r {
            break;
        }
        u -= r;
    }
    let (i, j) = last.expect("every state has a move");
    c[i] -= 1;
    c[j] += 1;
    hold
}

/// Monte Carlo hitting times without building the state space, for chains
/// above the size cap.  Draws match [`monte_carlo_hitting_times`] exactly.
pub fn sample_hitting_times(
    beta: f64,
    start: &CountVector,
    target: &[CountVector],
    runs: usize,
    seed: u64,
) -> Result<HittingEstimate> {
    let (q, n) = (start.q(), start.n());
    check_q(q)?;
    check_beta(beta)?;
    if target.is_empty() || target.iter().any(|t| t.q() != q || t.n() != n) {
        return domain("target must be a non-empty set of count vectors with the start's q and N");
    }
    let target: HashSet<&[u32]> = target.iter().map(|t| t.counts()).collect();
    let samples: Vec<f64> = (0..runs)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64 + 1);
            let mut c = start.counts().to_vec();
            let mut t = 0.0;
            while !target.contains(c.as_slice()) {
                t += step_counts(&mut c, n, beta, &mut rng);
            }
            t
        })
        .collect();
    Ok(summarize(runs, samples))
}

fn summarize(runs: usize, samples: Vec<f64>) -> HittingEstimate {
    let nf = runs as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = if runs > 1 { samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0) } else { 0.0 };
    HittingEstimate { runs, mean: if runs > 0 { mean } else { f64::NAN }, std_error: (var / nf).sqrt(), samples }
}
