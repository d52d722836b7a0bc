use serde::Serialize;

use crate::chain::{CountVector, Lattice, MagnetizationChain, Trajectory};
use crate::critical::{free_energy_family_value, Branch, TemperatureProfile};
use crate::error::{domain, Result};
use crate::landscape::{barycenter_is_minimum, default_resolution, depths_with, wells, WellLabel};
use crate::potential::free_energy_coords;

/// How far below the saddle levels the metastable sets are cut, in units of
/// `F_β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DeltaRule {
    /// Half of the smallest well depth, `min θ / (2β)`.
    HalfMinDepth,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrderSymbol {
    Well(WellLabel),
    Transient,
}

impl std::fmt::Display for OrderSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrderSymbol::Well(l) => write!(f, "{l}"),
            OrderSymbol::Transient => write!(f, "N"),
        }
    }
}

/// The sets `E_N^k = W_k ∩ {F_β < level_k - δ} ∩ Ξ_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetastableSets {
    pub q: usize,
    pub n: usize,
    pub beta: f64,
    pub delta: f64,
    /// Resolution of the grid the wells were computed on; a multiple of
    /// `N`.
    pub resolution: usize,
    labels: Vec<Option<WellLabel>>,
}

impl MetastableSets {
    pub fn new(q: usize, n: usize, beta: f64, rule: DeltaRule) -> Result<Self> {
        let base = default_resolution(q)?;
        if n == 0 {
            return domain("N must be at least 1");
        }
        let scale = base.div_ceil(n).max(1);
        let m = n * scale;
        let prof = TemperatureProfile::new(q)?;
        let d = depths_with(&prof, beta)?;
        let delta = match rule {
            DeltaRule::HalfMinDepth => 0.5 * d.min() / beta,
            DeltaRule::Fixed(x) if x > 0.0 && x.is_finite() => x,
            DeltaRule::Fixed(x) => return domain(format!("δ must be positive, got {x}")),
        };
        let dec = wells(q, beta, m)?;
        let level_o = if barycenter_is_minimum(&prof, beta) {
            Some(free_energy_family_value(q, 1, beta, Branch::V)?)
        } else {
            None
        };
        let lat = Lattice::new(q, n);
        let mut labels = vec![None; lat.len()];
        for (idx, slot) in labels.iter_mut().enumerate() {
            let c = lat.unrank(idx);
            let node = dec.grid.node(&c.iter().map(|&k| k * scale as u32).collect::<Vec<_>>());
            let Some(comp) = dec.component_of(node) else { continue };
            let comp = &dec.components[comp];
            if comp.labels.len() != 1 {
                continue;
            }
            let label = comp.labels[0];
            let cut = match (label, level_o) {
                (WellLabel::O, Some(lo)) => lo,
                _ => dec.level,
            } - delta;
            let x: Vec<f64> = c.iter().map(|&k| k as f64 / n as f64).collect();
            if free_energy_coords(&x, beta) < cut {
                *slot = Some(label);
            }
        }
        Ok(Self { q, n, beta, delta, resolution: m, labels })
    }

    pub fn label(&self, idx: usize) -> Option<WellLabel> {
        self.labels[idx]
    }

    pub fn symbol(&self, idx: usize) -> OrderSymbol {
        self.labels[idx].map_or(OrderSymbol::Transient, OrderSymbol::Well)
    }

    pub fn states(&self, label: WellLabel) -> Vec<CountVector> {
        let lat = Lattice::new(self.q, self.n);
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == Some(label))
            .map(|i| CountVector::new(lat.unrank(i)).expect("lattice states are valid"))
            .collect()
    }

    pub fn mask(&self, chain: &MagnetizationChain, labels: &[WellLabel]) -> Vec<bool> {
        assert_eq!(chain.len(), self.labels.len(), "chain and metastable sets differ in N or q");
        self.labels.iter().map(|l| l.is_some_and(|l| labels.contains(&l))).collect()
    }

    pub fn present(&self) -> Vec<WellLabel> {
        let mut v: Vec<WellLabel> = self.labels.iter().flatten().copied().collect();
        v.sort();
        v.dedup();
        v
    }
}

/// A change of metastable set, ignoring visits to the transient region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderJump {
    pub time: f64,
    pub from: WellLabel,
    pub to: WellLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderProcess {
    pub delta: f64,
    /// Symbol of each trajectory state.
    pub symbols: Vec<OrderSymbol>,
    pub jumps: Vec<OrderJump>,
}

/// Projects a trajectory onto metastable labels.
pub fn order_process(traj: &Trajectory, q: usize, beta: f64, rule: DeltaRule) -> Result<OrderProcess> {
    if traj.q != q {
        return domain(format!("trajectory has q = {}, expected {q}", traj.q));
    }
    let sets = MetastableSets::new(q, traj.n, beta, rule)?;
    let symbols: Vec<OrderSymbol> = traj.states.iter().map(|&s| sets.symbol(s)).collect();
    let mut jumps = Vec::new();
    let mut last: Option<WellLabel> = None;
    for (k, s) in symbols.iter().enumerate() {
        if let OrderSymbol::Well(l) = *s {
            if let Some(prev) = last.filter(|&p| p != l) {
                jumps.push(OrderJump { time: traj.times[k], from: prev, to: l });
            }
            last = Some(l);
        }
    }
    Ok(OrderProcess { delta: sets.delta, symbols, jumps })
}
