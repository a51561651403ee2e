use mmtrack_core::lifecycle::{
    dw_score, step_phase, AssociationHistory, DampingAccumulator, DampingConfig, LifecyclePhase,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn score_of(flags: &[bool], lambda: f64) -> f64 {
    let h = AssociationHistory::from_flags(0, flags.to_vec());
    dw_score(&h, flags.len() as i64 - 1, lambda)
}

proptest! {
    #[test]
    fn score_is_bounded(flags in prop::collection::vec(any::<bool>(), 1..200), lambda in 0.01..5.0f64) {
        let s = score_of(&flags, lambda);
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn hit_raises_and_miss_lowers(flags in prop::collection::vec(any::<bool>(), 1..100), lambda in 0.01..3.0f64) {
        let base = score_of(&flags, lambda);
        let mut hit = flags.clone();
        hit.push(true);
        let mut miss = flags.clone();
        miss.push(false);
        prop_assert!(score_of(&hit, lambda) >= base - 1e-12);
        prop_assert!(score_of(&miss, lambda) <= base + 1e-12);
    }

    #[test]
    fn score_depends_only_on_relative_time(flags in prop::collection::vec(any::<bool>(), 1..60), shift in -1000i64..1000, lambda in 0.01..3.0f64) {
        let t = flags.len() as i64 - 1;
        let a = dw_score(&AssociationHistory::from_flags(0, flags.clone()), t, lambda);
        let b = dw_score(&AssociationHistory::from_flags(shift, flags), t + shift, lambda);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn phase_thresholds(score in 0.0..1.0f64, misses in 0u32..20) {
        let cfg = DampingConfig::default();
        let next = step_phase(LifecyclePhase::Active, score, misses, &cfg);
        let expected = if misses >= cfg.max_coast || score < cfg.theta_tentative {
            LifecyclePhase::Terminated
        } else if score >= cfg.theta_active {
            LifecyclePhase::Active
        } else {
            LifecyclePhase::Tentative
        };
        prop_assert_eq!(next, expected);
        prop_assert_eq!(step_phase(LifecyclePhase::Terminated, score, misses, &cfg), LifecyclePhase::Terminated);
    }
}

#[test]
fn all_associated_scores_one() {
    for n in 1..50 {
        assert!((score_of(&vec![true; n], 0.4) - 1.0).abs() < 1e-15);
    }
}

#[test]
fn hit_then_miss_spot_value() {
    // e^{-0.4} / (1 + e^{-0.4}), evaluated independently.
    let expected = 0.401_312_339_887_548;
    assert!((score_of(&[true, false], 0.4) - expected).abs() < 1e-12);
}

#[test]
fn incremental_matches_direct_over_long_history() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let lambda = 0.4;
    let mut acc = DampingAccumulator::new(lambda);
    let mut history = AssociationHistory::from_flags(0, Vec::new());
    for t in 0..100_000i64 {
        let flag = rng.random::<f64>() < 0.6;
        acc.push(flag);
        history.push(flag);
        if t % 997 == 0 || t == 99_999 {
            let direct = dw_score(&history, t, lambda);
            assert!(
                (acc.score() - direct).abs() < 1e-12,
                "t={t}: {} vs {direct}",
                acc.score()
            );
        }
    }
}

fn condition(c: usize, frames: usize) -> Vec<bool> {
    (0..frames)
        .map(|k| match c {
            1 => k == 0,
            2 => k < 3,
            3 => k % 2 == 0,
            4 => k % 4 == 0,
            _ => unreachable!(),
        })
        .collect()
}

fn series(flags: &[bool], lambda: f64) -> Vec<f64> {
    (1..=flags.len()).map(|t| score_of(&flags[..t], lambda)).collect()
}

#[test]
fn damping_conditions_ordering() {
    let lambda = 0.4;
    let c1 = series(&condition(1, 30), lambda);
    let c2 = series(&condition(2, 30), lambda);
    for t in 3..30 {
        assert!(c2[t] > c1[t], "t={t}");
    }
    // Monotone decay once associations stop.
    for t in 1..30 {
        assert!(c1[t] < c1[t - 1]);
    }
    // Re-association lifts the score above the previous frame.
    for c in [3, 4] {
        let flags = condition(c, 30);
        let s = series(&flags, lambda);
        for t in 1..30 {
            if flags[t] {
                assert!(s[t] > s[t - 1], "condition {c} t={t}");
            }
        }
    }
}
