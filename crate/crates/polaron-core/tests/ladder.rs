//! Ladder enumeration against the exhaustive oracle.

use polaron_core::bogoliubov_ladder::{brute_force_ladder, enumerate_ladder};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn energies() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(100u32..950, 3..=10)
        .prop_map(|s| s.into_iter().map(|m| f64::from(m) / 1000.0).collect())
}

proptest! {
    #[test]
    fn enumeration_equals_brute_force(e in energies()) {
        let brute = brute_force_ladder(&e, 1.0, usize::MAX).unwrap();
        let fast = enumerate_ladder(&e, 1.0, brute.len() + 5).unwrap();
        prop_assert_eq!(&fast.entries, &brute.entries);
        prop_assert_eq!(fast.frak_m, brute.frak_m);
    }

    #[test]
    fn truncation_is_a_prefix(e in energies(), n in 1usize..40) {
        let full = enumerate_ladder(&e, 1.0, 10_000).unwrap();
        let part = enumerate_ladder(&e, 1.0, n).unwrap();
        prop_assert_eq!(&part.entries[..], &full.entries[..part.len()]);
        prop_assert_eq!(part.len(), n.min(full.len()));
    }

    #[test]
    fn entries_are_consistent_sums(e in energies()) {
        let l = enumerate_ladder(&e, 1.0, 10_000).unwrap();
        prop_assert!(l.entries[0].modes.is_empty() && l.entries[0].energy == 0.0);
        for w in l.entries.windows(2) {
            prop_assert!(w[0].energy <= w[1].energy);
        }
        for entry in &l.entries {
            let s: f64 = entry.modes.iter().map(|&m| e[m - 1]).sum();
            prop_assert!((s - entry.energy).abs() < 1e-14);
            prop_assert!(entry.energy < 1.0);
            prop_assert!(entry.modes.windows(2).all(|w| w[0] <= w[1]));
            // No multiset is longer than the cap allows with the cheapest mode.
            prop_assert!(entry.modes.len() as f64 * e[0] < 1.0);
        }
        // Single modes appear in order and each ladder value is bounded by
        // the single-mode energy of the same rank.
        for (n, entry) in l.entries.iter().enumerate().skip(1).take(e.len()) {
            prop_assert!(entry.energy <= e[n - 1]);
        }
    }
}

#[test]
fn hundred_seeded_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let n = rng.gen_range(3..=10);
        let mut e: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..0.95)).collect();
        e.sort_by(f64::total_cmp);
        e.dedup();
        let brute = brute_force_ladder(&e, 1.0, usize::MAX).unwrap();
        let fast = enumerate_ladder(&e, 1.0, brute.len() + 1).unwrap();
        assert_eq!(fast.entries, brute.entries);
    }
}

#[test]
fn degenerate_energies_in_lexicographic_order() {
    // Dyadic energies: every sum is exact, so ties are genuine.
    let l = enumerate_ladder(&[0.25, 0.25, 0.5], 1.0, 100).unwrap();
    let sets: Vec<Vec<usize>> = l.entries.iter().map(|e| e.modes.clone()).collect();
    assert_eq!(
        sets,
        vec![
            vec![],
            vec![1],
            vec![2],
            vec![1, 1],
            vec![1, 2],
            vec![2, 2],
            vec![3],
            vec![1, 1, 1],
            vec![1, 1, 2],
            vec![1, 2, 2],
            vec![1, 3],
            vec![2, 2, 2],
            vec![2, 3],
        ]
    );
}
