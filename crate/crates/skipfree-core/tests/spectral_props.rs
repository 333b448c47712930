use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use skipfree_core::chain::{reference_measure, stationary};
use skipfree_core::cutoff::{in_sm_class, member_report, separation, sst_law, sst_tail};
use skipfree_core::ergodicity::{bounds_table, exact_norm};
use skipfree_core::fixtures::{self, uniform01};
use skipfree_core::linalg::mat_pow;
use skipfree_core::passage::hitting_pmf;
use skipfree_core::spectral::{eigendecompose, spectral_hitting_pmf, spectral_power};
use skipfree_core::{Boundary, ChainSpec, HittingSpec};

/// Birth-death chain with holding at least `hold` in every row.
fn random_bd(seed: u64, n: usize, hold: f64) -> ChainSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|x| {
            let mut row = vec![0.0; n];
            let room = 1.0 - hold;
            let up = if x + 1 < n { room * (0.1 + 0.8 * uniform01(&mut rng)) } else { 0.0 };
            let down = if x > 0 { (room - up) * (0.1 + 0.9 * uniform01(&mut rng)) } else { 0.0 };
            if x + 1 < n {
                row[x + 1] = up;
            }
            if x > 0 {
                row[x - 1] = down;
            }
            row[x] = 1.0 - up - down;
            row
        })
        .collect();
    ChainSpec::from_rows(0, n as i64 - 1, &rows, Boundary::Regular, Boundary::Regular).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, max_global_rejects: 100_000, ..ProptestConfig::default() })]

    #[test]
    fn riesz_frame_and_power_expansion(seed in any::<u64>(), n in 3usize..=9, coeffs in prop::collection::vec(-1.0f64..1.0, 9)) {
        let spec = fixtures::random_skip_free(&mut ChaCha8Rng::seed_from_u64(seed), n, Boundary::Regular);
        let pi = stationary(&spec).unwrap();
        let sd = eigendecompose(&spec, &pi).unwrap();
        prop_assume!(sd.basis.is_some());
        let b = sd.basis.as_ref().unwrap();
        prop_assert!(b.eigen_residual < 1e-9 && b.biorth_residual < 1e-10);
        // A Σ|c|² <= ‖Σ c_k f_k‖²_π <= B Σ|c|²
        let c = &coeffs[..n];
        let c2: f64 = c.iter().map(|v| v * v).sum();
        let norm2: f64 = (0..n)
            .map(|i| {
                let v: f64 = (0..n).map(|k| c[k] * b.f[(i, k)]).sum();
                v * v * pi.at(i)
            })
            .sum();
        prop_assert!(b.riesz_a * c2 <= norm2 * (1.0 + 1e-9) + 1e-14);
        prop_assert!(norm2 <= b.riesz_b * c2 * (1.0 + 1e-9) + 1e-14);
        for m in [1u32, 4, 17] {
            let pm = mat_pow(spec.matrix(), m as u64);
            for x in 0..n as i64 {
                for y in 0..n as i64 {
                    let v = spectral_power(&spec, &sd, m, x, y).unwrap();
                    prop_assert!((v - pm[(x as usize, y as usize)]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn killed_expansion_matches_iteration(seed in any::<u64>(), n in 3usize..=9, hold in 0.0f64..0.6) {
        let spec = random_bd(seed, n, hold).with_absorbing_top();
        for x in 0..n as i64 - 1 {
            let exact = hitting_pmf(&spec, HittingSpec::Point(n as i64 - 1), x, 200).unwrap();
            let spectral = spectral_hitting_pmf(&spec, x, 200).unwrap();
            for (e, s) in exact.iter().zip(&spectral) {
                prop_assert!((e - s).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn reversible_chains_are_orthonormal(seed in any::<u64>(), n in 2usize..=10, hold in 0.0f64..0.6) {
        let spec = random_bd(seed, n, hold);
        let sd = eigendecompose(&spec, &stationary(&spec).unwrap()).unwrap();
        prop_assert!((sd.kappa().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn norms_submultiplicative_and_sandwiched(seed in any::<u64>(), n in 3usize..=8) {
        let spec = fixtures::random_skip_free(&mut ChaCha8Rng::seed_from_u64(seed), n, Boundary::Regular);
        let pi = stationary(&spec).unwrap();
        let t = bounds_table(&spec, &pi, 12).unwrap();
        prop_assert!(t.violations().is_empty(), "{:?}", t.violations());
        for a in 1..6u32 {
            for b in 1..6u32 {
                let lhs = exact_norm(&spec, &pi, a + b).unwrap();
                let rhs = exact_norm(&spec, &pi, a).unwrap() * exact_norm(&spec, &pi, b).unwrap();
                prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-14);
            }
        }
    }

    #[test]
    fn strong_stationary_time_is_separation(seed in any::<u64>(), n in 3usize..=9, hold in 0.5f64..0.7) {
        let spec = random_bd(seed, n, hold);
        let pi = stationary(&spec).unwrap();
        prop_assert!(in_sm_class(&spec, &pi));
        let tail = sst_tail(&sst_law(&spec).unwrap(), 200);
        for k in [0u64, 1, 3, 10, 50, 200] {
            let sep = separation(&spec, &pi, k as u32, Some(0)).unwrap();
            prop_assert!((tail[k as usize] - sep).abs() < 1e-9, "k={k}: {} vs {sep}", tail[k as usize]);
        }
        let r = member_report(&spec, 0.25, true).unwrap();
        prop_assert!(r.eigcompare_holds && r.lower_bound_holds && r.chebyshev_holds);
        prop_assert!((r.t_n - r.t_n_matrix).abs() < 1e-9 * r.t_n);
    }
}

#[test]
fn reference_measure_of_an_ergodic_chain_is_stationary() {
    let spec = fixtures::chain4();
    let a = reference_measure(&spec).unwrap();
    let b = stationary(&spec).unwrap();
    for i in 0..4 {
        assert!((a.at(i) - b.at(i)).abs() < 1e-14);
    }
}
