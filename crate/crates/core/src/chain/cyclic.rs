use rand::Rng;

use crate::chain::{stream_rng, MagnetizationChain};

/// `L_N f` from the jump rates.
fn generator_direct(chain: &MagnetizationChain, f: &[f64]) -> Vec<f64> {
    (0..chain.len()).map(|x| chain.moves(x).map(|(_, _, y, r)| r * (f[y] - f[x])).sum()).collect()
}

/// `Σ_{i<j} Σ_y w_N^{i,j}(y) L^{i,j}_{N,y} f`, with the two-state cycle
/// generators built from `F_{β,N}` and weights `√(x_i (x_j + 1/N))`.
fn generator_cyclic(chain: &MagnetizationChain, f: &[f64]) -> Vec<f64> {
    let q = chain.q();
    let nf = chain.n() as f64;
    let nb = nf * chain.beta();
    let mut out = vec![0.0; chain.len()];
    for y in 0..chain.len() {
        let c = chain.counts(y);
        for i in 0..q {
            for j in i + 1..q {
                // y lies in the cycle set when both cycle states exist
                let Some(z) = chain.neighbor(y, i, j) else { continue };
                let w = (c[i] as f64 / nf * (c[j] as f64 + 1.0) / nf).sqrt();
                let (fy, fz) = (chain.free_energy_n(y), chain.free_energy_n(z));
                let mid = 0.5 * (fy + fz);
                let r0 = (-nb * (mid - fy)).exp();
                let r1 = (-nb * (mid - fz)).exp();
                out[y] += w * r0 * (f[z] - f[y]);
                out[z] += w * r1 * (f[y] - f[z]);
            }
        }
    }
    out
}

/// Largest `|L_N f - Σ w L^{i,j} f|` over states for one function.
pub fn cyclic_decomposition_residual(chain: &MagnetizationChain, f: &[f64]) -> f64 {
    let a = generator_direct(chain, f);
    let b = generator_cyclic(chain, f);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Maximum residual of the cyclic representation of the generator over
/// `trials` random test functions with values in `[-1, 1]`.
pub fn cyclic_decomposition_check(chain: &MagnetizationChain, trials: usize, seed: u64) -> f64 {
    (0..trials)
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let f: Vec<f64> = (0..chain.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            cyclic_decomposition_residual(chain, &f)
        })
        .fold(0.0, f64::max)
}
