//! Property tests for the semantics and dataset layers.

use proptest::prelude::*;
use quantlearn::data::{generate_dataset, read_dataset, write_dataset, DatasetSpec};
use quantlearn::quant::{
    evaluate, zone_counts, Quantifier, Scene, Zone, ZoneCounts, SCENE_SIZE,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scene_strategy() -> impl Strategy<Value = Scene> {
    prop::collection::vec(0u8..5, SCENE_SIZE).prop_map(|codes| {
        let slots: Vec<Zone> = codes.into_iter().map(|c| Zone::from_code(c).unwrap()).collect();
        Scene::from_slice(&slots).unwrap()
    })
}

proptest! {
    // Truth is a function of the slot multiset, never of slot order.
    #[test]
    fn evaluation_is_permutation_invariant(scene in scene_strategy(), seed in any::<u64>()) {
        let mut shuffled = *scene.slots();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled = Scene::new(shuffled);
        for q in Quantifier::ALL {
            prop_assert_eq!(
                evaluate(q, zone_counts(&scene)),
                evaluate(q, zone_counts(&shuffled))
            );
        }
    }

    // Truth reads only the three relation zones.
    #[test]
    fn evaluation_ignores_outside_and_null(
        a in 0u8..=6, ab in 0u8..=6, b in 0u8..=6,
        outside in 0u8..=2, null in 0u8..=2,
    ) {
        let base = ZoneCounts::new(a, ab, b, 0, 0);
        let padded = ZoneCounts::new(a, ab, b, outside, null);
        for q in Quantifier::ALL {
            prop_assert_eq!(evaluate(q, base), evaluate(q, padded));
        }
    }

    // Dataset files reproduce their examples field for field.
    #[test]
    fn dataset_files_round_trip(
        q_index in 0usize..10,
        train in 0usize..24,
        seed in any::<u64>(),
    ) {
        let q = Quantifier::ALL[q_index];
        let spec = DatasetSpec::new(vec![(q, train)], vec![], seed);
        let ds = generate_dataset(&spec).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        write_dataset(&path, &ds.train).unwrap();
        prop_assert_eq!(read_dataset(&path).unwrap(), ds.train);
    }

    // Generated labels always agree with the semantics, and balance holds.
    #[test]
    fn generated_examples_satisfy_the_relation_oracle(
        q_index in 0usize..10,
        n in 1usize..40,
        seed in any::<u64>(),
    ) {
        let q = Quantifier::ALL[q_index];
        let spec = DatasetSpec::new(vec![(q, n)], vec![(q, n / 2)], seed);
        let ds = generate_dataset(&spec).unwrap();
        for ex in ds.train.iter().chain(&ds.test) {
            prop_assert_eq!(evaluate(ex.quantifier, zone_counts(&ex.scene)), ex.label);
        }
        let trues = ds.train.iter().filter(|e| e.label).count();
        let falses = ds.train.len() - trues;
        prop_assert!(trues.abs_diff(falses) <= 1);
    }
}
