use proptest::prelude::*;
use rand::Rng;
use scma_ntn::detect::{log_mpa, log_mpa_counted, ml_oracle, mpa_exact, DetectorInput, LogMpaVariant};
use scma_ntn::neural::loss::sigmoid;
use scma_ntn::rng;
use scma_ntn::scma::{index_to_bits, CodebookSet, LoadOptions};
use scma_ntn::Complex;

mod common;
use common::{brute_llrs, joint_metrics, random_slot, single_resource};

#[test]
fn single_resource_mpa_is_exact_marginalization() {
    let cb = single_resource();
    let mut r = rng::root(10);
    for _ in 0..200 {
        let sigma2 = r.random_range(0.05..2.0);
        let (y, h, _) = random_slot(&cb, sigma2, &mut r);
        let input = DetectorInput::new(&y, &h, sigma2, &cb).unwrap();
        let exact = brute_llrs(&cb, &y, &h, sigma2, false);
        let got = mpa_exact(&input, 1).unwrap();
        for (a, b) in got.values().iter().zip(&exact) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        let oracle = ml_oracle(&input).unwrap();
        for (a, b) in oracle.llrs.values().iter().zip(&exact) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn single_resource_log_mpa_is_max_log_marginalization() {
    let cb = single_resource();
    let mut r = rng::root(11);
    for _ in 0..200 {
        let sigma2 = r.random_range(0.05..2.0);
        let (y, h, _) = random_slot(&cb, sigma2, &mut r);
        let input = DetectorInput::new(&y, &h, sigma2, &cb).unwrap();
        let expected = brute_llrs(&cb, &y, &h, sigma2, true);
        let got = log_mpa(&input, 1, LogMpaVariant::MaxLog).unwrap();
        for (a, b) in got.values().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

/// Noise variance of the full graph at a per-user Eb/N0, uncoded.
fn sigma2_at(ebn0_db: f64) -> f64 {
    scma_ntn::channel::ebn0_to_sigma2(ebn0_db, 2, 1.0, 1.0, 1.0).unwrap()
}

#[test]
fn mpa_agrees_with_oracle_on_the_full_graph() {
    let cb = CodebookSet::default_set();
    let sigma2 = sigma2_at(10.0);
    let mut r = rng::root(12);
    let slots = 10_000;
    let mut agree_oracle = 0;
    let mut agree_logmpa = 0;
    for _ in 0..slots {
        let (y, h, _) = random_slot(&cb, sigma2, &mut r);
        let input = DetectorInput::new(&y, &h, sigma2, &cb).unwrap();
        let mpa = mpa_exact(&input, 10).unwrap().hard_indices();
        agree_oracle += usize::from(mpa == ml_oracle(&input).unwrap().indices);
        agree_logmpa += usize::from(mpa == log_mpa(&input, 10, LogMpaVariant::MaxLog).unwrap().hard_indices());
    }
    let (a, b) = (agree_oracle as f64 / slots as f64, agree_logmpa as f64 / slots as f64);
    eprintln!("MPA/oracle agreement {a:.4}, MPA/Log-MPA agreement {b:.4}");
    assert!(a >= 0.99, "{a}");
    assert!(b >= 0.95, "{b}");
}

#[test]
fn oracle_recovers_lightly_noisy_slots() {
    let cb = CodebookSet::default_set();
    let mut r = rng::root(13);
    let hits = (0..1000)
        .filter(|_| {
            let (y, h, sent) = random_slot(&cb, 0.01, &mut r);
            ml_oracle(&DetectorInput::new(&y, &h, 0.01, &cb).unwrap()).unwrap().indices == sent
        })
        .count();
    assert!(hits >= 990, "{hits}");
}

#[test]
fn single_user_llrs_are_posterior_log_odds() {
    let full = CodebookSet::default_set();
    let support = full.book(0).support().to_vec();
    let raw = vec![full.book(0).codewords().iter().map(|cw| support.iter().map(|&k| cw[k]).collect()).collect()];
    let cb = CodebookSet::new(raw, 2, LoadOptions::default()).unwrap();
    let mut r = rng::root(14);
    for _ in 0..100 {
        let sigma2 = r.random_range(0.1..3.0);
        let (y, h, _) = random_slot(&cb, sigma2, &mut r);
        let out = ml_oracle(&DetectorInput::new(&y, &h, sigma2, &cb).unwrap()).unwrap();
        let metrics = joint_metrics(&cb, &y, &h, sigma2);
        let z: f64 = metrics.iter().map(|(_, l)| l.exp()).sum();
        for b in 0..2 {
            let p1: f64 = metrics
                .iter()
                .filter(|(idx, _)| index_to_bits(idx[0], 2)[b] == 1)
                .map(|(_, l)| l.exp() / z)
                .sum();
            assert!((sigmoid(out.llrs.get(0, b)) - p1).abs() < 1e-9);
        }
    }
}

#[test]
fn operation_counts_are_affine_in_iterations() {
    let cb = CodebookSet::default_set();
    let mut r = rng::root(15);
    let (y, h, _) = random_slot(&cb, 0.5, &mut r);
    let input = DetectorInput::new(&y, &h, 0.5, &cb).unwrap();
    let count = |n| log_mpa_counted(&input, n, LogMpaVariant::MaxLog).unwrap().1;
    let (c5, c10, c20) = (count(5), count(10), count(20));
    assert_eq!(c10.multiplications - c5.multiplications, (c20.multiplications - c10.multiplications) / 2);
    assert_eq!(c10.additions - c5.additions, (c20.additions - c10.additions) / 2);
    assert_eq!(c10.comparisons - c5.comparisons, (c20.comparisons - c10.comparisons) / 2);
    let base = count(0);
    assert_eq!(c5.multiplications - base.multiplications, c10.multiplications - c5.multiplications);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn common_phase_rotation_leaves_llrs_unchanged(seed in any::<u64>(), phase in 0.0f64..std::f64::consts::TAU) {
        let cb = CodebookSet::default_set();
        let mut r = rng::root(seed);
        let (y, h, _) = random_slot(&cb, 0.4, &mut r);
        let rot = Complex::from_polar(1.0, phase);
        let (y2, h2): (Vec<Complex>, Vec<Complex>) = (y.iter().map(|v| v * rot).collect(), h.iter().map(|v| v * rot).collect());
        let a = DetectorInput::new(&y, &h, 0.4, &cb).unwrap();
        let b = DetectorInput::new(&y2, &h2, 0.4, &cb).unwrap();
        for (x, z) in mpa_exact(&a, 5).unwrap().values().iter().zip(mpa_exact(&b, 5).unwrap().values()) {
            prop_assert!((x - z).abs() < 1e-8);
        }
        for (x, z) in log_mpa(&a, 5, LogMpaVariant::MaxLog).unwrap().values().iter()
            .zip(log_mpa(&b, 5, LogMpaVariant::MaxLog).unwrap().values()) {
            prop_assert!((x - z).abs() < 1e-8);
        }
    }

    #[test]
    fn permuting_users_permutes_llrs(seed in any::<u64>()) {
        let cb = CodebookSet::default_set();
        let mut r = rng::root(seed);
        let (y, h, _) = random_slot(&cb, 0.4, &mut r);
        // reverse the user order; the graph stays regular
        let perm: Vec<usize> = (0..6).rev().collect();
        let raw = perm.iter().map(|&i| cb.book(i).codewords().to_vec()).collect();
        let cb2 = CodebookSet::new(raw, 2, LoadOptions::default()).unwrap();
        let h2: Vec<Complex> = perm.iter().map(|&i| h[i]).collect();
        let a = DetectorInput::new(&y, &h, 0.4, &cb).unwrap();
        let b = DetectorInput::new(&y, &h2, 0.4, &cb2).unwrap();
        let (la, lb) = (mpa_exact(&a, 5).unwrap(), mpa_exact(&b, 5).unwrap());
        let (ma, mb) = (log_mpa(&a, 5, LogMpaVariant::MaxLog).unwrap(), log_mpa(&b, 5, LogMpaVariant::MaxLog).unwrap());
        for (new, &old) in perm.iter().enumerate() {
            for bit in 0..2 {
                prop_assert!((la.get(old, bit) - lb.get(new, bit)).abs() < 1e-8);
                prop_assert!((ma.get(old, bit) - mb.get(new, bit)).abs() < 1e-8);
            }
        }
    }
}
