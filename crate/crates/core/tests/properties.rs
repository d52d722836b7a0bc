use cwpotts::chain::{build_chain, exact_mean_hitting_time, CountVector, Lattice};
use cwpotts::critical::{enumerate_critical_points, PointFamily, TemperatureProfile};
use cwpotts::ek::{ek_constants, negative_eigenvalue_at, reduced_chain};
use cwpotts::family::Family;
use cwpotts::potential::{entropy, free_energy, gradient, hessian, HessianSpectrum};
use cwpotts::SimplexPoint;
use proptest::prelude::*;

/// An interior point with `q` coordinates from positive weights.
fn interior(q: usize) -> impl Strategy<Value = SimplexPoint> {
    prop::collection::vec(0.02f64..1.0, q).prop_map(|w| {
        let s: f64 = w.iter().sum();
        SimplexPoint::new(w.iter().map(|v| v / s).collect()).unwrap()
    })
}

fn point_and_perm() -> impl Strategy<Value = (SimplexPoint, Vec<usize>)> {
    (3usize..=8).prop_flat_map(|q| (interior(q), Just((0..q).collect::<Vec<_>>()).prop_shuffle()))
}

fn count_vector(q: usize, n: usize) -> impl Strategy<Value = CountVector> {
    (0..Lattice::count(q, n) as usize).prop_map(move |r| CountVector::new(Lattice::new(q, n).unrank(r)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn potential_is_permutation_symmetric((x, perm) in point_and_perm(), beta in 0.2f64..10.0) {
        let a = free_energy(&x, beta).unwrap();
        let b = free_energy(&x.permuted(&perm).unwrap(), beta).unwrap();
        prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn entropy_is_bounded_below(x in (3usize..=8).prop_flat_map(interior)) {
        let q = x.q() as f64;
        prop_assert!(entropy(&x) >= -q.ln() - 1e-15);
    }

    #[test]
    fn gradient_matches_differences(x in (3usize..=6).prop_flat_map(interior), beta in 0.5f64..8.0) {
        let g = gradient(&x, beta).unwrap();
        let chart = x.chart().to_vec();
        let h = 1e-6;
        for k in 0..chart.len() {
            let mut up = chart.clone();
            let mut dn = chart.clone();
            up[k] += h;
            dn[k] -= h;
            let f = |c: &[f64]| free_energy(&SimplexPoint::from_chart(c).unwrap(), beta).unwrap();
            let fd = (f(&up) - f(&dn)) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1.0), "k = {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn family_spectrum_matches_dense(q in 3usize..=8, pick in 0.0f64..1.0, s in 0.01f64..0.99) {
        let i = 1 + ((pick * (q / 2) as f64) as usize).min(q / 2 - 1);
        let f = Family::new(q, i).unwrap();
        let t = s / f.j() as f64;
        prop_assume!((t - 1.0 / q as f64).abs() > 1e-6);
        let beta = f.beta_at(t).unwrap();
        let x = f.point(t).unwrap();
        let closed = f.spectrum(t).unwrap().eigenvalues();
        let dense = HessianSpectrum::from_matrix(&hessian(&x, beta).unwrap()).eigenvalues();
        prop_assert_eq!(closed.len(), dense.len());
        for (a, b) in closed.iter().zip(&dense) {
            prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "{closed:?} vs {dense:?}");
        }
    }

    #[test]
    fn chain_is_reversible(q in 3usize..=4, n in 1usize..=10, beta in 0.3f64..6.0) {
        let ch = build_chain(q, n, beta).unwrap();
        prop_assert!(ch.detailed_balance_residual() < 1e-12);
        let total: f64 = ch.pi().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measure_is_permutation_invariant(
        (n, x, perm) in (1usize..=9).prop_flat_map(|n| (Just(n), count_vector(3, n), Just(vec![0usize, 1, 2]).prop_shuffle())),
        beta in 0.3f64..6.0,
    ) {
        let ch = build_chain(3, n, beta).unwrap();
        let y = CountVector::new(perm.iter().map(|&p| x.counts()[p]).collect()).unwrap();
        let (a, b) = (ch.log_pi()[ch.index_of(&x).unwrap()], ch.log_pi()[ch.index_of(&y).unwrap()]);
        prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn hitting_time_from_target_is_zero(x in count_vector(3, 6), beta in 0.5f64..4.0) {
        let ch = build_chain(3, 6, beta).unwrap();
        prop_assert_eq!(exact_mean_hitting_time(&ch, &x, std::slice::from_ref(&x)).unwrap(), 0.0);
    }

    #[test]
    fn nearest_point_is_within_one_step(x in (3usize..=6).prop_flat_map(interior), n in 1usize..200) {
        let c = CountVector::nearest(&x, n).unwrap();
        prop_assert_eq!(c.n(), n);
        prop_assert!(c.to_point().max_abs_diff(&x) <= 1.0 / n as f64 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn mu_is_invariant_under_relabeling(s in 0.05f64..0.95, perm in Just(vec![0usize, 1, 2, 3, 4]).prop_shuffle()) {
        let prof = TemperatureProfile::new(5).unwrap();
        let beta = prof.beta1() + s * (5.0 - prof.beta1());
        let v1 = enumerate_critical_points(5, beta)
            .unwrap()
            .into_iter()
            .find(|p| p.family == PointFamily::V(1))
            .unwrap();
        let a = negative_eigenvalue_at(&v1.location, beta).unwrap();
        let b = negative_eigenvalue_at(&v1.location.permuted(&perm).unwrap(), beta).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-10 * a, "{a} vs {b}");
    }

    #[test]
    fn constants_are_positive(q in 3usize..=5, s in 0.01f64..3.0) {
        let prof = TemperatureProfile::new(q).unwrap();
        let beta = prof.beta1() + s;
        prop_assume!((beta - prof.beta3()).abs() > 1e-6 && (beta - q as f64).abs() > 1e-6);
        let c = ek_constants(q, beta).unwrap();
        prop_assert!(c.nu_1 > 0.0 && c.theta_1 > 0.0);
        for v in [c.omega_o, c.omega_1, c.nu_o, c.theta_o, c.mu_o, c.mu_1].into_iter().flatten() {
            prop_assert!(v > 0.0 && v.is_finite());
        }
        if let Ok(ch) = reduced_chain(q, beta) {
            prop_assert!(ch.rates.iter().flatten().all(|&r| r >= 0.0 && r.is_finite()));
        }
    }
}
