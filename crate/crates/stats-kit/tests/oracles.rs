use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use stats_kit::*;

/// Naive rank: count of smaller values plus half the tied block.
fn naive_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&a| {
            let less = x.iter().filter(|&&b| b < a).count() as f64;
            let eq = x.iter().filter(|&&b| b == a).count() as f64;
            less + (eq + 1.0) / 2.0
        })
        .collect()
}

/// Two-sided exact p by listing all 2^n sign assignments.
fn enumerate_wilcoxon(diffs: &[f64]) -> (f64, f64) {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let ranks = naive_ranks(&nz.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let observed: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let n = nz.len();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| ranks[k]).sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (observed, (2.0 * (le.min(ge) as f64) / total).min(1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_wilcoxon_matches_enumeration(raw in prop::collection::vec(-6i32..=6, 5..=12)) {
        // Integer-valued diffs produce plenty of ties and zeros.
        let diffs: Vec<f64> = raw.iter().map(|&k| k as f64 * 0.25).collect();
        let nonzero = diffs.iter().filter(|d| **d != 0.0).count();
        prop_assume!(nonzero >= 5);
        let r = wilcoxon_signed_rank(&diffs).unwrap();
        let (w, p) = enumerate_wilcoxon(&diffs);
        prop_assert_eq!(r.statistic, w);
        prop_assert!((r.p_two_sided - p).abs() < 1e-12, "{} vs {}", r.p_two_sided, p);
    }

    #[test]
    fn exact_wilcoxon_matches_enumeration_continuous(diffs in prop::collection::vec(-3.0f64..3.0, 5..=12)) {
        let r = wilcoxon_signed_rank(&diffs).unwrap();
        let (w, p) = enumerate_wilcoxon(&diffs);
        prop_assert_eq!(r.statistic, w);
        prop_assert!((r.p_two_sided - p).abs() < 1e-12);
    }

    #[test]
    fn wilcoxon_is_sign_symmetric(diffs in prop::collection::vec(-3.0f64..3.0, 5..=30)) {
        let neg: Vec<f64> = diffs.iter().map(|d| -d).collect();
        let a = wilcoxon_signed_rank(&diffs).unwrap();
        let b = wilcoxon_signed_rank(&neg).unwrap();
        prop_assert!((a.p_two_sided - b.p_two_sided).abs() < 1e-12);
        prop_assert!(a.p_two_sided > 0.0 && a.p_two_sided <= 1.0);
    }

    #[test]
    fn spearman_reversal_negates(x in prop::collection::vec(-5.0f64..5.0, 6..=20), y in prop::collection::vec(-5.0f64..5.0, 6..=20)) {
        let n = x.len().min(y.len());
        let (x, y) = (&x[..n], &y[..n]);
        let ry = naive_ranks(y);
        prop_assume!(ry.iter().any(|r| *r != ry[0]) && x.iter().any(|v| *v != x[0]));
        let rev: Vec<f64> = ry.iter().map(|r| n as f64 + 1.0 - r).collect();
        let (a, pa) = spearman(x, y).unwrap();
        let (b, _) = spearman(x, &rev).unwrap();
        prop_assert!((a + b).abs() < 1e-12);
        prop_assert!(pa > 0.0 && pa <= 1.0);
    }
}

#[test]
fn spearman_fixed_vectors_match_hand_ranks() {
    let x = [0.3, 1.9, -0.4, 2.2, 0.3, 5.0, -1.1, 0.8, 0.9, 3.3];
    let y = [1.0, 2.0, 0.5, 1.5, 0.2, 4.0, -2.0, 0.9, 3.0, 3.0];
    // Ranks by hand: x = [3.5, 7, 2, 8, 3.5, 10, 1, 5, 6, 9], y = [5, 7, 3, 6, 2, 10, 1, 4, 8.5, 8.5].
    let rx = [3.5, 7.0, 2.0, 8.0, 3.5, 10.0, 1.0, 5.0, 6.0, 9.0];
    let ry = [5.0, 7.0, 3.0, 6.0, 2.0, 10.0, 1.0, 4.0, 8.5, 8.5];
    assert_eq!(naive_ranks(&x), rx.to_vec());
    assert_eq!(naive_ranks(&y), ry.to_vec());
    let m = 5.5;
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - m) * (b - m)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - m) * (a - m)).sum();
    let syy: f64 = ry.iter().map(|b| (b - m) * (b - m)).sum();
    let expect = sxy / (sxx * syy).sqrt();
    let (rho, p) = spearman(&x, &y).unwrap();
    assert!((rho - expect).abs() < 1e-14);
    // Frozen reference values (independent tie-aware implementation, t approximation, 8 df).
    assert!((rho - 0.896_341_463_414_634_3).abs() < 1e-12, "{rho}");
    assert!((p - 4.449_654_729_870_832e-4).abs() < 1e-12, "{p}");
}

#[test]
fn mcnemar_matches_direct_binomial_sum() {
    for (b, c) in [(5u64, 1u64), (1, 5), (9, 2), (12, 12), (20, 3)] {
        let n = b + c;
        let k = b.min(c);
        let mut tail = 0.0;
        for j in 0..=k {
            let mut binom = 1.0f64;
            for t in 0..j {
                binom = binom * (n - t) as f64 / (t + 1) as f64;
            }
            tail += binom / 2f64.powi(n as i32);
        }
        let expect = (2.0 * tail).min(1.0);
        assert!((mcnemar_exact(b, c).p_two_sided - expect).abs() < 1e-13, "({b},{c})");
    }
}

#[test]
fn bootstrap_coverage_on_gaussian_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let normal = Normal::new(0.7, 1.3).unwrap();
    let reps = 500;
    let mut covered = 0;
    for r in 0..reps {
        let sample: Vec<f64> = (0..30).map(|_| normal.sample(&mut rng)).collect();
        let (lo, hi) = bootstrap_mean_ci(&sample, 10_000, 0.95, r as u64).unwrap();
        if lo <= 0.7 && 0.7 <= hi {
            covered += 1;
        }
    }
    let rate = covered as f64 / reps as f64;
    assert!(rate >= 0.93, "coverage {rate}");
}

#[test]
fn p_value_decreases_as_shift_grows() {
    let base = [-0.9, 0.4, -0.2, 1.1, 0.3, -0.6, 0.8, -1.3, 0.5, 0.1, -0.4, 0.7];
    let mut last = 1.0 + 1e-12;
    for k in 0..10 {
        let shift = 0.15 * k as f64;
        let diffs: Vec<f64> = base.iter().map(|b| b + shift).collect();
        let p = wilcoxon_signed_rank(&diffs).unwrap().p_two_sided;
        assert!(p <= last, "shift {shift}: {p} > {last}");
        last = p;
    }
    assert!(last < 0.01);
}
