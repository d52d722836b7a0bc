/// Colexicographic indexing of `Ξ_N`.
///
/// A count vector `(n_0, ..., n_{q-1})` corresponds to the `(q-1)`-subset
/// `c_k = n_0 + ... + n_{k-1} + (k - 1)`, `k = 1..q-1`, of
/// `{0, ..., N + q - 2}`, whose colex rank is `Σ_k C(c_k, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    q: usize,
    n: usize,
    len: usize,
    /// `binom[k][c] = C(c, k)` for `k < q`, `c <= N + q - 2`.
    binom: Vec<Vec<u64>>,
}

impl Lattice {
    /// `|Ξ_N| = C(N + q - 1, q - 1)`, saturating.
    pub fn count(q: usize, n: usize) -> u128 {
        let mut acc: u128 = 1;
        for k in 1..q as u128 {
            acc = acc.saturating_mul(n as u128 + k) / k;
        }
        acc
    }

    pub fn new(q: usize, n: usize) -> Self {
        let top = n + q - 1;
        let mut binom = vec![vec![0u64; top]; q];
        for c in 0..top {
            binom[0][c] = 1;
            for k in 1..q.min(c + 1) {
                binom[k][c] = binom[k - 1][c - 1].saturating_add(if k < c { binom[k][c - 1] } else { 0 });
            }
        }
        let len = Self::count(q, n) as usize;
        Self { q, n, len, binom }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn rank(&self, counts: &[u32]) -> usize {
        let mut c: usize = 0;
        let mut rank = 0u64;
        for k in 1..self.q {
            c += counts[k - 1] as usize + if k == 1 { 0 } else { 1 };
            rank += self.binom[k][c];
        }
        rank as usize
    }

    pub fn unrank_into(&self, rank: usize, out: &mut [u32]) {
        let mut rest = rank as u64;
        let mut upper = self.n + self.q - 1;
        let mut subset = vec![0usize; self.q];
        for k in (1..self.q).rev() {
            // largest c < upper with C(c, k) <= rest
            let row = &self.binom[k];
            let c = row[..upper].partition_point(|&b| b <= rest) - 1;
            subset[k] = c;
            rest -= row[c];
            upper = c;
        }
        out[0] = subset[1] as u32;
        for k in 1..self.q - 1 {
            out[k] = (subset[k + 1] - subset[k] - 1) as u32;
        }
        out[self.q - 1] = (self.n + self.q - 2 - subset[self.q - 1]) as u32;
    }

    pub fn unrank(&self, rank: usize) -> Vec<u32> {
        let mut out = vec![0; self.q];
        self.unrank_into(rank, &mut out);
        out
    }
}
