use crate::chain::{CountVector, MagnetizationChain};
use crate::error::{domain, Error, Result};

/// States below which the banded elimination is always used.
const DIRECT_LIMIT: usize = 5_000;
/// Band storage, in entries, up to which elimination is still preferred
/// over conjugate gradients.
const BAND_BUDGET: usize = 1 << 24;
const CG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HittingSolver {
    /// Banded elimination below 5000 transient states or while the band
    /// fits in 2^24 entries, preconditioned conjugate gradients otherwise.
    /// The iterative solve meets its residual target in the `π`-weighted
    /// norm; when `e^{Nθ}` is very large that no longer pins down the
    /// hitting times of individual states.
    Auto,
    Banded,
    ConjugateGradient,
}

/// `E_x[H_A]` for one starting state.
pub fn exact_mean_hitting_time(chain: &MagnetizationChain, start: &CountVector, target: &[CountVector]) -> Result<f64> {
    if target.is_empty() {
        return domain("target set is empty");
    }
    let s = chain.index_of(start)?;
    let mask = chain.mask(target)?;
    if mask[s] {
        return Ok(0.0);
    }
    Ok(mean_hitting_times(chain, &mask, HittingSolver::Auto)?[s])
}

/// Mean hitting times of the masked set from every state.
pub fn mean_hitting_times(chain: &MagnetizationChain, target: &[bool], solver: HittingSolver) -> Result<Vec<f64>> {
    if target.len() != chain.len() {
        return domain(format!("target mask has {} entries, chain has {} states", target.len(), chain.len()));
    }
    if !target.iter().any(|&t| t) {
        return domain("target set is empty");
    }
    let free: Vec<usize> = (0..chain.len()).filter(|&x| !target[x]).collect();
    let mut pos = vec![usize::MAX; chain.len()];
    for (k, &x) in free.iter().enumerate() {
        pos[x] = k;
    }
    let bw = bandwidth(chain, &free, &pos);
    let use_banded = match solver {
        HittingSolver::Auto => free.len() < DIRECT_LIMIT || free.len().saturating_mul(2 * bw + 1) <= BAND_BUDGET,
        HittingSolver::Banded => true,
        HittingSolver::ConjugateGradient => false,
    };
    let u = if use_banded { banded(chain, &free, &pos, bw)? } else { conjugate_gradient(chain, &free, &pos)? };
    let mut out = vec![0.0; chain.len()];
    for (k, &x) in free.iter().enumerate() {
        out[x] = u[k];
    }
    Ok(out)
}

fn bandwidth(chain: &MagnetizationChain, free: &[usize], pos: &[usize]) -> usize {
    let mut bw = 0;
    for (k, &x) in free.iter().enumerate() {
        for (_, _, y, _) in chain.moves(x) {
            if pos[y] != usize::MAX {
                bw = bw.max(pos[y].abs_diff(k));
            }
        }
    }
    bw
}

/// Elimination on the banded system `(-Q_AA) u = 1`.  Pivots are formed
/// from outflow sums, so every update adds non-negative numbers.
fn banded(chain: &MagnetizationChain, free: &[usize], pos: &[usize], bw: usize) -> Result<Vec<f64>> {
    let m = free.len();
    let width = 2 * bw + 1;
    // a[k * width + (l + bw - k)] = rate from k to l
    let mut a = vec![0.0; m * width];
    let mut exit = vec![0.0; m];
    let mut rhs = vec![1.0; m];
    for (k, &x) in free.iter().enumerate() {
        for (_, _, y, r) in chain.moves(x) {
            if pos[y] == usize::MAX {
                exit[k] += r;
            } else {
                a[k * width + pos[y] + bw - k] += r;
            }
        }
    }
    let mut pivot = vec![0.0; m];
    for k in 0..m {
        let hi = (k + bw).min(m - 1);
        let d = exit[k] + (k + 1..=hi).map(|l| a[k * width + l + bw - k]).sum::<f64>();
        if !(d > 0.0) {
            return Err(Error::Structural(format!(
                "target is unreachable from state {:?}",
                chain.counts(free[k])
            )));
        }
        pivot[k] = d;
        for i in k + 1..=hi {
            let rik = a[i * width + k + bw - i];
            if rik == 0.0 {
                continue;
            }
            let f = rik / d;
            exit[i] += f * exit[k];
            rhs[i] += f * rhs[k];
            for l in k + 1..=hi {
                if l != i {
                    let rkl = a[k * width + l + bw - k];
                    a[i * width + l + bw - i] += f * rkl;
                }
            }
        }
    }
    let mut u = vec![0.0; m];
    for k in (0..m).rev() {
        let hi = (k + bw).min(m - 1);
        let s: f64 = (k + 1..=hi).map(|l| a[k * width + l + bw - k] * u[l]).sum();
        u[k] = (rhs[k] + s) / pivot[k];
    }
    Ok(u)
}

/// Jacobi-preconditioned conjugate gradients on the symmetric system
/// `Π (-Q_AA) u = π`.
fn conjugate_gradient(chain: &MagnetizationChain, free: &[usize], pos: &[usize]) -> Result<Vec<f64>> {
    let m = free.len();
    let top = free.iter().map(|&x| chain.log_pi()[x]).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = free.iter().map(|&x| (chain.log_pi()[x] - top).exp()).collect();
    let diag: Vec<f64> = free.iter().zip(&w).map(|(&x, wx)| wx * chain.exit_rate(x)).collect();
    if diag.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Structural("a transient state has zero weighted exit rate".into()));
    }
    let apply = |v: &[f64], out: &mut [f64]| {
        for (k, &x) in free.iter().enumerate() {
            let mut s = diag[k] * v[k];
            for (_, _, y, r) in chain.moves(x) {
                if pos[y] != usize::MAX {
                    s -= w[k] * r * v[pos[y]];
                }
            }
            out[k] = s;
        }
    };
    let b = w.clone();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut u: Vec<f64> = (0..m).map(|k| b[k] / diag[k]).collect();
    let mut r = vec![0.0; m];
    apply(&u, &mut r);
    r.iter_mut().zip(&b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; m];
    let max_iter = 20 * m + 1000;
    for _ in 0..max_iter {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= CG_TOL * bnorm {
            return Ok(u);
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::Structural("restricted generator is not positive definite".into()));
        }
        let alpha = rz / pap;
        for k in 0..m {
            u[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        z.iter_mut().zip(r.iter().zip(&diag)).for_each(|(zk, (rk, d))| *zk = rk / d);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pk, zk)| *pk = zk + beta * *pk);
    }
    Err(Error::Structural(format!("conjugate gradients did not reach residual {CG_TOL} in {max_iter} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_chain;
    use nalgebra::{DMatrix, DVector};

    fn dense_oracle(chain: &MagnetizationChain, target: &[bool]) -> Vec<f64> {
        let free: Vec<usize> = (0..chain.len()).filter(|&x| !target[x]).collect();
        let mut pos = vec![usize::MAX; chain.len()];
        for (k, &x) in free.iter().enumerate() {
            pos[x] = k;
        }
        let m = free.len();
        let mut a = DMatrix::zeros(m, m);
        for (k, &x) in free.iter().enumerate() {
            for (_, _, y, r) in chain.moves(x) {
                a[(k, k)] += r;
                if pos[y] != usize::MAX {
                    a[(k, pos[y])] -= r;
                }
            }
        }
        let u = a.lu().solve(&DVector::from_element(m, 1.0)).unwrap();
        let mut out = vec![0.0; chain.len()];
        for (k, &x) in free.iter().enumerate() {
            out[x] = u[k];
        }
        out
    }

    #[test]
    fn single_site_corner_to_corner() {
        let ch = build_chain(3, 1, 1.7).unwrap();
        let a = CountVector::new(vec![1, 0, 0]).unwrap();
        let b = CountVector::new(vec![0, 1, 0]).unwrap();
        // E = 1/2 + (1/2) E by symmetry of the two non-target corners
        assert!((exact_mean_hitting_time(&ch, &a, std::slice::from_ref(&b)).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(exact_mean_hitting_time(&ch, &b, std::slice::from_ref(&b)).unwrap(), 0.0);
    }

    #[test]
    fn solvers_agree_with_dense_lu() {
        for (q, n, beta) in [(3, 10, 2.5), (4, 6, 3.0), (3, 14, 3.5)] {
            let ch = build_chain(q, n, beta).unwrap();
            let mut target = vec![false; ch.len()];
            target[ch.index_of(&CountVector::corner(q, n, 0).unwrap()).unwrap()] = true;
            let dense = dense_oracle(&ch, &target);
            let band = mean_hitting_times(&ch, &target, HittingSolver::Banded).unwrap();
            let cg = mean_hitting_times(&ch, &target, HittingSolver::ConjugateGradient).unwrap();
            for x in 0..ch.len() {
                assert!((band[x] - dense[x]).abs() <= 1e-9 * dense[x].max(1.0), "{} {}", band[x], dense[x]);
                assert!((cg[x] - dense[x]).abs() <= 1e-6 * dense[x].max(1.0), "{} {}", cg[x], dense[x]);
            }
        }
    }

    #[test]
    fn rejects_empty_target() {
        let ch = build_chain(3, 4, 1.0).unwrap();
        let s = CountVector::new(vec![4, 0, 0]).unwrap();
        assert!(exact_mean_hitting_time(&ch, &s, &[]).is_err());
    }
}
