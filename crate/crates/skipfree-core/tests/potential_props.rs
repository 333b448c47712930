use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use skipfree_core::chain::reference_measure;
use skipfree_core::fluctuation::{downward_pgf, two_sided_pgf};
use skipfree_core::potential::{
    excursion_check, excursion_check_dual, fqe_bundle, green, green_via_fqe, hitting_pgf, hunt_check, regular_boundary_pgf,
    FqEBundle,
};
use skipfree_core::{fixtures, linalg, Boundary, ChainSpec, HittingSpec, Region};

fn chain(seed: u64, n: usize, killing: bool) -> ChainSpec {
    let top = if killing { Boundary::Killing } else { Boundary::Absorbing };
    fixtures::random_skip_free(&mut ChaCha8Rng::seed_from_u64(seed), n, top)
}

fn q_grid() -> impl Strategy<Value = f64> {
    (1u32..=9).prop_map(|k| k as f64 / 10.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn green_rebuilt_from_factors(seed in any::<u64>(), n in 4usize..=10, killing in any::<bool>(), q in q_grid(), r in 0usize..10) {
        let spec = chain(seed, n, killing);
        let pi = reference_measure(&spec).unwrap();
        // an absorbing top cannot serve as the reference point
        let ref_point = (r % if killing { n } else { n - 1 }) as i64;
        let bundle = fqe_bundle(&spec, &pi, q, ref_point, &FqEBundle::all_cutoffs(&spec)).unwrap();
        let direct = green(&spec, &pi, q).unwrap();
        let rebuilt = green_via_fqe(&bundle).unwrap();
        let rel = linalg::max_abs(&(&direct.g - &rebuilt.g)) / linalg::max_abs(&direct.g);
        prop_assert!(rel < 1e-9, "relative gap {rel:e}");
        prop_assert!(bundle.gap_residual < 1e-9);
        // the diagonal factorises through C H Ĥ away from the top
        for x in 0..(n as i64 - 1) {
            let diag = bundle.c * bundle.h_at(x) * bundle.h_hat_at(x);
            prop_assert!((direct.at(x, x) - diag).abs() <= 1e-9 * direct.at(x, x));
        }
    }

    #[test]
    fn hunt_and_excursion_identities(seed in any::<u64>(), n in 4usize..=10, killing in any::<bool>(), q in q_grid(), cut in 0i64..8) {
        let spec = chain(seed, n, killing);
        let pi = reference_measure(&spec).unwrap();
        let hi = n as i64 - 1;
        let b = cut % hi;
        prop_assert!(hunt_check(&spec, &pi, q, Region::Below(b)).unwrap() < 1e-10);
        prop_assert!(hunt_check(&spec, &pi, q, Region::Above(b + 1)).unwrap() < 1e-10);
        prop_assert!(excursion_check(&spec, &pi, q, b + 1).unwrap() < 1e-10);
        prop_assert!(excursion_check_dual(&spec, &pi, q, b).unwrap() < 1e-10);
    }

    #[test]
    fn exit_transforms_match_linear_solves(seed in any::<u64>(), n in 4usize..=10, killing in any::<bool>(), q in q_grid(), u in 0i64..10, v in 0i64..10) {
        let spec = chain(seed, n, killing);
        let pi = reference_measure(&spec).unwrap();
        let hi = n as i64 - 1;
        let b = u % (hi - 1);
        let a = b + 2 + v % (hi - b - 1);
        let x = b + 1 + v % (a - b - 1);
        let oracle = hitting_pgf(&spec, HittingSpec::LowerSet(b), q, x).unwrap();
        let fqe = downward_pgf(&spec, &pi, q, x, b).unwrap().pgf_value;
        prop_assert!((fqe - oracle).abs() < 1e-9, "{fqe} vs {oracle}");
        let oracle2 = hitting_pgf(&spec, HittingSpec::TwoSided { b, a }, q, x).unwrap();
        let two = two_sided_pgf(&spec, &pi, q, x, b, a).unwrap().pgf_value;
        prop_assert!((two - oracle2).abs() < 1e-9, "{two} vs {oracle2}");
    }

    #[test]
    fn regular_top_branch(seed in any::<u64>(), n in 4usize..=10, q in q_grid(), u in 0i64..10, v in 0i64..10) {
        let spec = fixtures::random_skip_free(&mut ChaCha8Rng::seed_from_u64(seed), n, Boundary::Regular);
        let pi = reference_measure(&spec).unwrap();
        let hi = n as i64 - 1;
        let b = u % hi;
        let x = b + 1 + v % (hi - b);
        let got = regular_boundary_pgf(&spec, &pi, q, x, b).unwrap();
        let oracle = hitting_pgf(&spec, HittingSpec::Point(b), q, x).unwrap();
        prop_assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
    }
}
