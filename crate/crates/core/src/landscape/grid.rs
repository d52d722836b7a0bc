use crate::chain::{CountVector, Lattice};
use crate::error::{domain, Error, Result};
use crate::potential::{free_energy_coords, xlogx};
use crate::simplex::SimplexPoint;

const NODE_CAP: u128 = 4_000_000;
const MAX_Q: usize = 16;

/// Points of the simplex with coordinates in `(1/M) Z`, joined by
/// single-exchange edges `±(e_j - e_i)/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexGrid {
    lattice: Lattice,
    counts: Vec<u32>,
}

impl SimplexGrid {
    pub fn new(q: usize, m: usize) -> Result<Self> {
        if q < 3 || m == 0 {
            return domain(format!("grids need q >= 3 and M >= 1, got q = {q}, M = {m}"));
        }
        let needed = Lattice::count(q, m);
        if needed > NODE_CAP {
            return Err(Error::Size { what: format!("simplex grid q = {q}, M = {m}"), needed, cap: NODE_CAP });
        }
        if q > MAX_Q {
            return domain(format!("grids support q <= {MAX_Q}, got q = {q}"));
        }
        let lattice = Lattice::new(q, m);
        let mut counts = vec![0u32; lattice.len() * q];
        for (v, c) in counts.chunks_mut(q).enumerate() {
            lattice.unrank_into(v, c);
        }
        Ok(Self { lattice, counts })
    }

    pub fn q(&self) -> usize {
        self.lattice.q()
    }

    pub fn resolution(&self) -> usize {
        self.lattice.n()
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn counts(&self, node: usize) -> &[u32] {
        let q = self.q();
        &self.counts[node * q..(node + 1) * q]
    }

    pub fn node(&self, counts: &[u32]) -> usize {
        self.lattice.rank(counts)
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        let m = self.resolution() as f64;
        self.counts(node).iter().map(|&c| c as f64 / m).collect()
    }

    pub fn point(&self, node: usize) -> SimplexPoint {
        CountVector::new(self.counts(node).to_vec()).expect("grid nodes are count vectors").to_point()
    }

    /// Node nearest to `x` under the rounding rule of [`CountVector::nearest`].
    pub fn nearest(&self, x: &[f64]) -> Result<usize> {
        let p = SimplexPoint::new(x.to_vec())?;
        if p.q() != self.q() {
            return domain(format!("point has {} coordinates, grid has q = {}", p.q(), self.q()));
        }
        Ok(self.node(CountVector::nearest(&p, self.resolution())?.counts()))
    }

    /// Neighbours of a node as `(node, i, j)`: the move takes one unit from
    /// coordinate `i` to coordinate `j`.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let q = self.q();
        let c = self.counts(node);
        (0..q).flat_map(move |i| (0..q).map(move |j| (i, j))).filter_map(move |(i, j)| {
            if i == j || c[i] == 0 {
                return None;
            }
            let mut y = [0u32; MAX_Q];
            y[..q].copy_from_slice(c);
            y[i] -= 1;
            y[j] += 1;
            Some((self.node(&y[..q]), i, j))
        })
    }

    pub fn free_energies(&self, beta: f64) -> Vec<f64> {
        (0..self.len()).map(|v| free_energy_coords(&self.coords(v), beta)).collect()
    }

    /// Maximum of `F_β` along the segment from `a` to its neighbour `b`.
    ///
    /// With `c = x_i + x_j` fixed, the restriction of `F_β` to the segment
    /// has a single interior local maximum, at `x_i = x_j`, which exists
    /// only when `c > 2/β`.
    pub fn edge_max(&self, f: &[f64], beta: f64, a: usize, b: usize, i: usize, j: usize) -> f64 {
        let ends = f[a].max(f[b]);
        let ca = self.counts(a);
        if ca[i] != ca[j] + 1 {
            return ends;
        }
        let m = self.resolution() as f64;
        let c = (ca[i] + ca[j]) as f64 / m;
        if c * beta <= 2.0 {
            return ends;
        }
        let y = 0.5 * c;
        let old = -0.5 * ((ca[i] as f64 / m).powi(2) + (ca[j] as f64 / m).powi(2))
            + (xlogx(ca[i] as f64 / m) + xlogx(ca[j] as f64 / m)) / beta;
        let new = -y * y + 2.0 * xlogx(y) / beta;
        ends.max(f[a] - old + new)
    }
}
