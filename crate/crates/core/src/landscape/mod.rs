//! Global structure of `F_β` on a discretised simplex: sublevel-set wells,
//! saddle gates, minimax heights and well depths, plus the mean-field free
//! energy.

mod free_energy;
mod grid;

pub use free_energy::{free_energy_curve, grid_free_energy, mean_field_free_energy, FreeEnergyCurve};
pub use grid::SimplexGrid;

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Ordering;

use serde::Serialize;

use crate::critical::{free_energy_family_value, Branch, Regime, TemperatureProfile};
use crate::error::{domain, Error, Result};
use crate::export::{Table, Value};
use crate::family::Family;
use crate::potential::{check_beta, free_energy_coords};
use crate::simplex::SimplexPoint;

/// Smallest grid resolution accepted by [`wells`].
pub const MIN_RESOLUTION: usize = 20;
/// Largest `q` for which grids are built.
pub const MAX_GRID_Q: usize = 5;

/// Default `M` per `q`.
pub fn default_resolution(q: usize) -> Result<usize> {
    match q {
        3 => Ok(200),
        4 => Ok(120),
        5 => Ok(60),
        _ => domain(format!("grid computations support 3 <= q <= {MAX_GRID_Q}, got q = {q}")),
    }
}

/// The index of a minimum of `F_β`: `O` for the barycentre and `K(k)` for
/// the ordered minimum dominated by spin `k` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum WellLabel {
    O,
    K(usize),
}

impl std::fmt::Display for WellLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WellLabel::O => write!(f, "o"),
            WellLabel::K(k) => write!(f, "{}", k + 1),
        }
    }
}

/// `H_β`: `F_β(v_1)` on `(β_1, β_3)` and `F_β(u_2)` from `β_3` on, except
/// for `q = 3` where it is `F_β(v_1)` for every `β > β_1`.
pub fn saddle_height(q: usize, beta: f64) -> Result<f64> {
    let prof = TemperatureProfile::new(q)?;
    saddle_height_with(&prof, beta)
}

fn saddle_height_with(prof: &TemperatureProfile, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let q = prof.q;
    match prof.regime(beta) {
        Regime::BelowFirst | Regime::AtFirst => {
            return Err(Error::Regime(format!("no saddle point for β = {beta} <= β_1 = {}", prof.beta1())))
        }
        _ => {}
    }
    let at_or_above_third = beta >= prof.beta3() || prof.regime(beta) == Regime::AtThird;
    if q >= 4 && at_or_above_third {
        free_energy_family_value(q, 2, beta, Branch::U)
    } else {
        free_energy_family_value(q, 1, beta, Branch::V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Depths {
    /// `θ_1 = β (H_β - F_β(u_1))`.
    pub theta_1: f64,
    /// `θ_o = β (F_β(v_1) - F_β(p))`, only for `β < q`.
    pub theta_o: Option<f64>,
}

impl Depths {
    pub fn min(&self) -> f64 {
        self.theta_o.map_or(self.theta_1, |t| t.min(self.theta_1))
    }
}

pub fn depths(q: usize, beta: f64) -> Result<Depths> {
    let prof = TemperatureProfile::new(q)?;
    depths_with(&prof, beta)
}

pub(crate) fn depths_with(prof: &TemperatureProfile, beta: f64) -> Result<Depths> {
    let q = prof.q;
    let h = saddle_height_with(prof, beta)?;
    let fu1 = free_energy_family_value(q, 1, beta, Branch::U)?;
    let theta_o = if barycenter_is_minimum(prof, beta) {
        let fv1 = free_energy_family_value(q, 1, beta, Branch::V)?;
        let fp = -0.5 / q as f64 - (q as f64).ln() / beta;
        Some(beta * (fv1 - fp))
    } else {
        None
    };
    Ok(Depths { theta_1: beta * (h - fu1), theta_o })
}

/// `p` is a local minimum exactly for `β < q`.
pub(crate) fn barycenter_is_minimum(prof: &TemperatureProfile, beta: f64) -> bool {
    let at_q = matches!(prof.regime(beta), Regime::AtFourth) || (prof.q <= 4 && prof.regime(beta) == Regime::AtThird);
    beta < prof.q as f64 && !at_q
}

/// Location of `u_1^k` for each `k`.
pub(crate) fn ordered_minima(q: usize, beta: f64) -> Result<Vec<Vec<f64>>> {
    let f = Family::new(q, 1)?;
    Ok(f.orbit(f.solve(beta)?.u.coords))
}

/// One connected component of a sublevel set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellComponent {
    pub labels: Vec<WellLabel>,
    pub level: f64,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellDecomposition {
    pub q: usize,
    pub beta: f64,
    pub grid: SimplexGrid,
    /// `H_β`, or `+∞` when `β <= β_1`.
    pub level: f64,
    /// `F_β(v_1)`, the level of the well around `p`, for `β_1 < β < q`.
    pub level_o: Option<f64>,
    /// Labelled components, pairwise disjoint.
    pub components: Vec<WellComponent>,
    /// Components of `{F_β < H_β}` that contain no known minimum.
    pub unlabeled: usize,
    /// Grid saddle sets: nodes within [`GATE_REACH`] steps of two wells whose
    /// free energy is within one local grid step of `H_β`.
    pub gates: BTreeMap<(WellLabel, WellLabel), Vec<usize>>,
    /// Free energy at every node.
    pub f: Vec<f64>,
    member: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl WellDecomposition {
    pub fn well(&self, label: WellLabel) -> Option<&WellComponent> {
        self.components.iter().find(|c| c.labels.contains(&label))
    }

    /// Index into `components` of the well containing a node.
    pub fn component_of(&self, node: usize) -> Option<usize> {
        let m = self.member[node];
        (m != NONE).then_some(m as usize)
    }

    pub fn gate(&self, a: WellLabel, b: WellLabel) -> &[usize] {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.gates.get(&key).map_or(&[], |v| v.as_slice())
    }

    /// The gate node with the smallest central-difference gradient, the grid
    /// stand-in for the critical point.
    pub fn gate_representative(&self, a: WellLabel, b: WellLabel) -> Option<usize> {
        self.gate(a, b)
            .iter()
            .map(|&v| (central_gradient(&self.grid, &self.f, v), v))
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .map(|(_, v)| v)
    }

    /// One row per component.
    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(&["component", "labels", "level", "nodes", "min_f"]);
        for (k, c) in self.components.iter().enumerate() {
            let labels: Vec<String> = c.labels.iter().map(|l| l.to_string()).collect();
            let min_f = c.nodes.iter().map(|&v| self.f[v]).fold(f64::INFINITY, f64::min);
            t.push(vec![k.into(), labels.join(" ").into(), c.level.into(), c.nodes.len().into(), min_f.into()]);
        }
        t
    }

    /// One row per gate node.
    pub fn gate_table(&self) -> Table {
        let mut cols = vec!["well_a".to_string(), "well_b".to_string()];
        cols.extend((1..=self.q).map(|k| format!("x{k}")));
        cols.push("f".into());
        let names: Vec<&str> = cols.iter().map(String::as_str).collect();
        let mut t = Table::new(&names);
        for ((a, b), nodes) in &self.gates {
            for &v in nodes {
                let mut row: Vec<Value> = vec![a.to_string().into(), b.to_string().into()];
                row.extend(self.grid.coords(v).into_iter().map(Value::Float));
                row.push(self.f[v].into());
                t.push(row);
            }
        }
        t
    }

    /// One row per node that belongs to a labelled well.
    pub fn node_table(&self) -> Table {
        let mut cols: Vec<String> = (1..=self.q).map(|k| format!("x{k}")).collect();
        cols.extend(["component".to_string(), "f".to_string()]);
        let names: Vec<&str> = cols.iter().map(String::as_str).collect();
        let mut t = Table::new(&names);
        for v in 0..self.grid.len() {
            if let Some(c) = self.component_of(v) {
                let mut row: Vec<Value> = self.grid.coords(v).into_iter().map(Value::Float).collect();
                row.push(c.into());
                row.push(self.f[v].into());
                t.push(row);
            }
        }
        t
    }
}

fn check_grid_args(q: usize, m: usize) -> Result<()> {
    if !(3..=MAX_GRID_Q).contains(&q) {
        return domain(format!("grid computations support 3 <= q <= {MAX_GRID_Q}, got q = {q}"));
    }
    if m < MIN_RESOLUTION {
        return domain(format!("grid resolution must be at least {MIN_RESOLUTION}, got {m}"));
    }
    Ok(())
}

/// Connected components of `{F_β < level}` on the grid, where an edge is
/// usable only if `F_β` stays below the level along the whole segment.
fn flood(grid: &SimplexGrid, f: &[f64], beta: f64, level: f64, seeds: Option<&[usize]>) -> Vec<Vec<usize>> {
    let mut seen = vec![false; grid.len()];
    let mut out = Vec::new();
    let starts: Vec<usize> = match seeds {
        Some(s) => s.to_vec(),
        None => (0..grid.len()).collect(),
    };
    let mut stack = Vec::new();
    for s in starts {
        if seen[s] || !(f[s] < level) {
            continue;
        }
        let mut comp = Vec::new();
        seen[s] = true;
        stack.push(s);
        while let Some(v) = stack.pop() {
            comp.push(v);
            for (w, i, j) in grid.neighbors(v) {
                if !seen[w] && grid.edge_max(f, beta, v, w, i, j) < level {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Well decomposition of `F_β` on the grid of resolution `M`.
pub fn wells(q: usize, beta: f64, m: usize) -> Result<WellDecomposition> {
    check_grid_args(q, m)?;
    check_beta(beta)?;
    let prof = TemperatureProfile::new(q)?;
    let grid = SimplexGrid::new(q, m)?;
    let f = grid.free_energies(beta);
    let regime = prof.regime(beta);
    let mut member = vec![NONE; grid.len()];
    if matches!(regime, Regime::BelowFirst | Regime::AtFirst) {
        member.iter_mut().for_each(|x| *x = 0);
        let comp = WellComponent { labels: vec![WellLabel::O], level: f64::INFINITY, nodes: (0..grid.len()).collect() };
        return Ok(WellDecomposition {
            q,
            beta,
            grid,
            level: f64::INFINITY,
            level_o: None,
            components: vec![comp],
            unlabeled: 0,
            gates: BTreeMap::new(),
            f,
            member,
        });
    }
    let level = saddle_height_with(&prof, beta)?;
    let p_is_min = barycenter_is_minimum(&prof, beta);
    let level_o = if p_is_min { Some(free_energy_family_value(q, 1, beta, Branch::V)?) } else { None };

    let mut minima: Vec<(WellLabel, usize)> = Vec::new();
    for (k, x) in ordered_minima(q, beta)?.iter().enumerate() {
        minima.push((WellLabel::K(k), grid.nearest(x)?));
    }
    let p_node = if p_is_min { Some(grid.nearest(&vec![1.0 / q as f64; q])?) } else { None };
    for &(lab, node) in &minima {
        if !(f[node] < level) {
            return Err(Error::Resolution(format!(
                "M = {m} is too coarse: the node nearest to u1^{lab} has F = {} >= H = {level}",
                f[node]
            )));
        }
    }
    if let (Some(node), Some(lo)) = (p_node, level_o) {
        if !(f[node] < lo) {
            return Err(Error::Resolution(format!(
                "M = {m} is too coarse: the node nearest to p has F = {} >= F(v1) = {lo}",
                f[node]
            )));
        }
    }

    let all = flood(&grid, &f, beta, level, None);
    let mut comp_of = vec![NONE; grid.len()];
    for (k, c) in all.iter().enumerate() {
        for &v in c {
            comp_of[v] = k as u32;
        }
    }
    let separate_o = level_o.is_some_and(|lo| lo != level);
    let mut labels: BTreeMap<u32, BTreeSet<WellLabel>> = BTreeMap::new();
    for &(lab, node) in &minima {
        labels.entry(comp_of[node]).or_default().insert(lab);
    }
    if let (Some(node), false) = (p_node, separate_o) {
        labels.entry(comp_of[node]).or_default().insert(WellLabel::O);
    }
    let mut components = Vec::new();
    for (&k, labs) in &labels {
        components.push(WellComponent { labels: labs.iter().copied().collect(), level, nodes: all[k as usize].clone() });
    }
    let unlabeled = all.len() - labels.len();
    if let (Some(node), Some(lo), true) = (p_node, level_o, separate_o) {
        let wo = flood(&grid, &f, beta, lo, Some(&[node])).pop().unwrap_or_default();
        components.push(WellComponent { labels: vec![WellLabel::O], level: lo, nodes: wo });
    }
    components.sort_by(|a, b| a.labels.cmp(&b.labels));
    for (k, c) in components.iter().enumerate() {
        for &v in &c.nodes {
            if member[v] != NONE {
                return Err(Error::Structural(format!("grid node {v} lies in two wells")));
            }
            member[v] = k as u32;
        }
    }

    let gates = find_gates(&grid, &f, level, &components, GATE_REACH);
    Ok(WellDecomposition { q, beta, grid, level, level_o, components, unlabeled, gates, f, member })
}

/// Graph distance within which a gate node must see both wells.
pub const GATE_REACH: u8 = 2;

fn one_step(grid: &SimplexGrid, f: &[f64], v: usize) -> f64 {
    grid.neighbors(v).map(|(w, _, _)| (f[w] - f[v]).abs()).fold(0.0, f64::max)
}

/// Largest central difference of `F_β` along the exchange directions, or
/// `+∞` on the boundary.
fn central_gradient(grid: &SimplexGrid, f: &[f64], v: usize) -> f64 {
    let c = grid.counts(v);
    if c.contains(&0) {
        return f64::INFINITY;
    }
    let mut out: f64 = 0.0;
    let mut fwd = vec![f64::NAN; c.len() * c.len()];
    for (w, i, j) in grid.neighbors(v) {
        fwd[i * c.len() + j] = f[w];
    }
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            out = out.max((fwd[i * c.len() + j] - fwd[j * c.len() + i]).abs());
        }
    }
    0.5 * out
}

/// Graph distance from a component, capped at `reach + 1`.
fn distances(grid: &SimplexGrid, nodes: &[usize], reach: u8) -> Vec<u8> {
    let mut d = vec![reach + 1; grid.len()];
    let mut front = nodes.to_vec();
    for &v in nodes {
        d[v] = 0;
    }
    for step in 1..=reach {
        let mut next = Vec::new();
        for v in front {
            for (w, _, _) in grid.neighbors(v) {
                if d[w] > step {
                    d[w] = step;
                    next.push(w);
                }
            }
        }
        front = next;
    }
    d
}

fn find_gates(
    grid: &SimplexGrid,
    f: &[f64],
    level: f64,
    components: &[WellComponent],
    reach: u8,
) -> BTreeMap<(WellLabel, WellLabel), Vec<usize>> {
    let dist: Vec<Vec<u8>> = components.iter().map(|c| distances(grid, &c.nodes, reach)).collect();
    let mut gates: BTreeMap<(WellLabel, WellLabel), BTreeSet<usize>> = BTreeMap::new();
    let mut near = Vec::new();
    for v in 0..grid.len() {
        near.clear();
        near.extend((0..components.len()).filter(|&k| dist[k][v] <= reach));
        if near.len() < 2 || !((f[v] - level).abs() <= one_step(grid, f, v)) {
            continue;
        }
        for (a, &ca) in near.iter().enumerate() {
            for &cb in &near[a + 1..] {
                for &la in &components[ca].labels {
                    for &lb in &components[cb].labels {
                        let key = if la <= lb { (la, lb) } else { (lb, la) };
                        gates.entry(key).or_default().insert(v);
                    }
                }
            }
        }
    }
    gates.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect()
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    // reversed so the max-heap pops the smallest running maximum
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Lowest achievable maximum of `F_β` over grid paths from `from` to every
/// node.
pub(crate) fn bottleneck(grid: &SimplexGrid, f: &[f64], beta: f64, from: usize) -> Vec<f64> {
    let mut best = vec![f64::INFINITY; grid.len()];
    let mut heap = BinaryHeap::new();
    best[from] = f[from];
    heap.push(Key(f[from], from));
    while let Some(Key(c, v)) = heap.pop() {
        if c > best[v] {
            continue;
        }
        for (w, i, j) in grid.neighbors(v) {
            let nc = c.max(grid.edge_max(f, beta, v, w, i, j));
            if nc < best[w] {
                best[w] = nc;
                heap.push(Key(nc, w));
            }
        }
    }
    best
}

/// Minimax height `𝔥(a, b)` approximated over grid paths between the nodes
/// nearest to `a` and `b`.
pub fn minimax_height(q: usize, beta: f64, a: &SimplexPoint, b: &SimplexPoint, m: usize) -> Result<f64> {
    check_grid_args(q, m)?;
    check_beta(beta)?;
    if a.q() != q || b.q() != q {
        return domain("endpoints must have q coordinates");
    }
    if !a.is_interior() || !b.is_interior() {
        return domain("minimax endpoints must be interior points");
    }
    let (fa, fb) = (free_energy_coords(a.coords(), beta), free_energy_coords(b.coords(), beta));
    if a == b {
        return Ok(fa);
    }
    let grid = SimplexGrid::new(q, m)?;
    let f = grid.free_energies(beta);
    let (na, nb) = (grid.nearest(a.coords())?, grid.nearest(b.coords())?);
    let best = bottleneck(&grid, &f, beta, na);
    Ok(best[nb].max(fa).max(fb))
}
