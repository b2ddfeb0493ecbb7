//! Estimator checks against independently coded brute-force oracles, plus
//! property tests for the invariants every measure must satisfy.

mod common;

use common::*;
use influence_rl::depmeasures::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn pearson_matches_direct_formula_oracle() {
    let x = [0.0, 1.0, 0.0, 1.0, 1.0];
    let y = [1.0, 1.0, 0.0, 1.0, 0.0];
    let est = pearson(&discrete_pair(&x, &y)).unwrap();
    let expected = pearson_oracle(&x, &y).unwrap();
    assert!((est.value - expected).abs() <= 1e-12 * expected.abs().max(1.0));
}

#[test]
fn kendall_matches_pair_enumeration_oracle() {
    let x = [1.0, 1.0, 2.0, 3.0];
    let y = [2.0, 1.0, 1.0, 3.0];
    let est = kendall_tau(&discrete_pair(&x, &y)).unwrap();
    assert_eq!(est.value, kendall_oracle(&x, &y));

    // Larger series with many ties exercise the inversion counting.
    let mut gen = SplitMix(42);
    for _ in 0..50 {
        let n = 2 + gen.below(60);
        let x: Vec<f64> = (0..n).map(|_| gen.below(5) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| gen.below(5) as f64).collect();
        let est = kendall_tau(&discrete_pair(&x, &y)).unwrap();
        let expected = kendall_oracle(&x, &y);
        assert!(
            (est.value - expected).abs() <= 1e-12,
            "kendall {} vs oracle {} on x={x:?} y={y:?}",
            est.value,
            expected
        );
    }
}

#[test]
fn spearman_matches_rank_then_pearson_oracle() {
    let x = [1.0, 2.0, 2.0, 5.0];
    let y = [0.0, 3.0, 1.0, 4.0];
    let est = spearman_rho(&discrete_pair(&x, &y)).unwrap();
    let expected = spearman_oracle(&x, &y).unwrap();
    assert!((est.value - expected).abs() <= 1e-12);
}

#[test]
fn dcor_matches_naive_matrix_oracle() {
    let x = [0.0, 1.0, 2.0, 3.0];
    let y = [0.0, 1.0, 0.0, 1.0];
    let est = distance_correlation(&discrete_pair(&x, &y)).unwrap();
    let oracle = dcor_oracle(&x, &y);
    assert!((est.value - oracle.dcor.unwrap()).abs() <= 1e-12);
    assert!((est.raw_value - oracle.dcov2).abs() <= 1e-12);
}

#[test]
fn discrete_mi_matches_table_oracle() {
    // x over {0,1,2} with counts (10,10,10), y = x mod 2.
    let mut x = Vec::new();
    for symbol in 0..3 {
        x.extend(std::iter::repeat(symbol as f64).take(10));
    }
    let y: Vec<f64> = x.iter().map(|&v| v % 2.0).collect();
    let est = discrete_mi(&discrete_pair(&x, &y)).unwrap();
    let expected = discrete_mi_oracle(&x, &y);
    assert!((est.value - expected).abs() <= 1e-12);
    // Direct evaluation: H(Y) with p = (2/3, 1/3) since y is a function of x.
    let by_hand = -(2.0 / 3.0f64) * (2.0 / 3.0f64).log2() - (1.0 / 3.0f64) * (1.0 / 3.0f64).log2();
    assert!((est.value - by_hand).abs() <= 1e-12);
}

#[test]
fn knn_mi_matches_reference_on_shuffled_stream() {
    // 200-point fixed pseudo-random sequence, y = fixed-stride shuffle of x.
    let mut gen = SplitMix(0xfeed);
    let x: Vec<f64> = (0..200).map(|_| gen.uniform()).collect();
    let y: Vec<f64> = (0..200).map(|i| x[(i * 73) % 200]).collect();
    // Frozen from the reference implementation (harmonic-series digamma).
    let frozen = 0.057_234_893_185_082_43;
    let recomputed = knn_mi_oracle(&x, &y, 3);
    assert!((recomputed - frozen).abs() <= 1e-12);
    let est = continuous_mi_knn(&continuous_pair(&x, &y), 3).unwrap();
    assert!(
        (est.raw_value - frozen).abs() <= 1e-9,
        "estimate {} vs frozen reference {}",
        est.raw_value,
        frozen
    );
    assert!(est.value < 0.5, "shuffled stream should be near zero");
}

#[test]
fn knn_mi_matches_reference_on_tied_ternary_inputs() {
    let mut gen = SplitMix(7);
    for _ in 0..10 {
        let n = 12 + gen.below(8);
        let x: Vec<f64> = (0..n).map(|_| gen.below(3) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| gen.below(3) as f64).collect();
        let est = continuous_mi_knn(&discrete_pair(&x, &y), 3).unwrap();
        let expected = knn_mi_oracle(&x, &y, 3);
        assert!(
            (est.raw_value - expected).abs() <= 1e-9,
            "knn {} vs oracle {} on x={x:?} y={y:?}",
            est.raw_value,
            expected
        );
    }
}

#[test]
fn mic_on_noiseless_parabola_reaches_the_exhaustive_bound() {
    let xs: Vec<f64> = (0..50).map(|i| -1.0 + 2.0 * i as f64 / 49.0).collect();
    let ys: Vec<f64> = xs.iter().map(|v| v * v).collect();
    let est = mic(&continuous_pair(&xs, &ys), DEFAULT_MIC_EXPONENT).unwrap();
    // Frozen values: the equipartition-candidate search and the exhaustive
    // small-grid search (all cut placements, up to 5 bins per axis).
    let frozen_impl = 0.970_950_594_454_668_69;
    let frozen_oracle = 1.0;
    let oracle = mic_exhaustive_oracle(&xs, &ys, DEFAULT_MIC_EXPONENT, 5);
    assert!((oracle - frozen_oracle).abs() <= 1e-12);
    assert!((est.value - frozen_impl).abs() <= 1e-12);
    assert!(est.value >= 0.9);
    assert!(est.value <= oracle + 1e-12);
}

#[test]
fn permutation_p_value_matches_independent_loop() {
    let mut gen = SplitMix(0xabc);
    let x: Vec<f64> = (0..30).map(|_| gen.uniform()).collect();
    let y: Vec<f64> = (0..30).map(|_| gen.uniform()).collect();
    let seed = 31;
    let n_perm = 200;
    let p = permutation_p_value(
        &continuous_pair(&x, &y),
        Measure::Pearson,
        &EstimatorParams::default(),
        n_perm,
        seed,
    )
    .unwrap();

    // Independently coded loop: same RNG stream, oracle estimator,
    // explicit smoothing arithmetic.
    let observed = pearson_oracle(&x, &y).unwrap().abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = y.clone();
    let mut exceed = 0;
    for _ in 0..n_perm {
        shuffled.shuffle(&mut rng);
        if pearson_oracle(&x, &shuffled).unwrap().abs() >= observed {
            exceed += 1;
        }
    }
    let expected = (1 + exceed) as f64 / (1 + n_perm) as f64;
    assert_eq!(p, expected);
    assert_eq!(p, 0.338_308_457_711_442_8); // frozen single-run value
}

// ---------------------------------------------------------------------------
// Property tests
// ---------------------------------------------------------------------------

fn ternary_series(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0..3u8, 2..max_len).prop_map(|v| v.into_iter().map(f64::from).collect())
}

fn continuous_series(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0f64, 2..max_len)
}

fn all_measure_estimates(
    x: &[f64],
    y: &[f64],
) -> Vec<(Measure, Option<DependencyEstimate>)> {
    let p = discrete_pair(x, y);
    Measure::ALL
        .iter()
        .map(|&m| (m, estimate(m, &p, &EstimatorParams::default()).ok()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn measures_are_exactly_symmetric(pair in ternary_series(40).prop_flat_map(|x| {
        let n = x.len();
        (Just(x), prop::collection::vec(0..3u8, n..=n))
    })) {
        let (x, y) = pair;
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        for (m, est) in all_measure_estimates(&x, &y) {
            let swapped = estimate(m, &discrete_pair(&y, &x), &EstimatorParams::default()).ok();
            match (est, swapped) {
                (Some(a), Some(b)) => {
                    prop_assert_eq!(a.defined, b.defined, "{} definedness asymmetric", m);
                    prop_assert_eq!(a.value.to_bits(), b.value.to_bits(), "{} not exactly symmetric", m);
                }
                (None, None) => {}
                _ => prop_assert!(false, "{} errored on one orientation only", m),
            }
        }
    }

    #[test]
    fn measures_stay_in_their_ranges(pair in ternary_series(40).prop_flat_map(|x| {
        let n = x.len();
        (Just(x), prop::collection::vec(0..3u8, n..=n))
    })) {
        let (x, y) = pair;
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        for (m, est) in all_measure_estimates(&x, &y) {
            let Some(est) = est else { continue };
            if !est.defined {
                continue;
            }
            match m {
                Measure::Pearson | Measure::Kendall | Measure::Spearman => {
                    prop_assert!((-1.0..=1.0).contains(&est.value), "{}={}", m, est.value);
                }
                Measure::DistanceCorrelation | Measure::Mic => {
                    prop_assert!((0.0..=1.0).contains(&est.value), "{}={}", m, est.value);
                }
                Measure::DiscreteMi => {
                    let bound = entropy_oracle(&x).min(entropy_oracle(&y));
                    prop_assert!(est.value >= 0.0);
                    prop_assert!(est.value <= bound + 1e-9, "MI {} > min entropy {}", est.value, bound);
                }
                Measure::ContinuousMi => {
                    prop_assert!(est.value >= 0.0);
                }
            }
        }
    }

    #[test]
    fn rank_measures_ignore_monotone_transforms(x in continuous_series(30).prop_flat_map(|x| {
        let n = x.len();
        (Just(x), prop::collection::vec(-100.0..100.0f64, n..=n))
    })) {
        let (x, y) = x;
        // Strictly increasing transform of the x series.
        let tx: Vec<f64> = x.iter().map(|&v| v.powi(3) + 2.0 * v).collect();
        let kendall_a = kendall_tau(&continuous_pair(&x, &y)).unwrap();
        let kendall_b = kendall_tau(&continuous_pair(&tx, &y)).unwrap();
        prop_assert_eq!(kendall_a.value.to_bits(), kendall_b.value.to_bits());
        let spearman_a = spearman_rho(&continuous_pair(&x, &y)).unwrap();
        let spearman_b = spearman_rho(&continuous_pair(&tx, &y)).unwrap();
        prop_assert_eq!(spearman_a.value.to_bits(), spearman_b.value.to_bits());
    }

    #[test]
    fn pearson_is_affine_invariant(x in continuous_series(30).prop_flat_map(|x| {
        let n = x.len();
        (Just(x), prop::collection::vec(-100.0..100.0f64, n..=n), 0.1..10.0f64, -50.0..50.0f64)
    })) {
        let (x, y, a, b) = x;
        let base = pearson(&continuous_pair(&x, &y)).unwrap();
        let scaled: Vec<f64> = x.iter().map(|&v| a * v + b).collect();
        let pos = pearson(&continuous_pair(&scaled, &y)).unwrap();
        let flipped: Vec<f64> = x.iter().map(|&v| -a * v + b).collect();
        let neg = pearson(&continuous_pair(&flipped, &y)).unwrap();
        if base.defined {
            prop_assert!((pos.value - base.value).abs() <= 1e-9);
            prop_assert!((neg.value + base.value).abs() <= 1e-9);
        }
    }

    #[test]
    fn discrete_mi_is_relabeling_invariant(pair in ternary_series(40).prop_flat_map(|x| {
        let n = x.len();
        (Just(x), prop::collection::vec(0..3u8, n..=n))
    })) {
        let (x, y) = pair;
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        let base = discrete_mi(&discrete_pair(&x, &y)).unwrap();
        // Bijective recoding 0->7, 1->5, 2->6 of the x symbols.
        let relabeled: Vec<f64> = x.iter().map(|&v| [7.0, 5.0, 6.0][v as usize]).collect();
        let recoded = discrete_mi(&discrete_pair(&relabeled, &y)).unwrap();
        prop_assert_eq!(base.value.to_bits(), recoded.value.to_bits());
    }
}

#[test]
fn estimates_are_bit_identical_across_calls() {
    let mut gen = SplitMix(99);
    let x: Vec<f64> = (0..60).map(|_| gen.below(3) as f64).collect();
    let y: Vec<f64> = (0..60).map(|_| gen.below(3) as f64).collect();
    for m in Measure::ALL {
        let a = estimate(m, &discrete_pair(&x, &y), &EstimatorParams::default()).unwrap();
        let b = estimate(m, &discrete_pair(&x, &y), &EstimatorParams::default()).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits(), "{m} not deterministic");
    }
}
