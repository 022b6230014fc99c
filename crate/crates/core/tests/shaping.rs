mod common;

use common::checks::{invariance_fraction, telescope_prefix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sokoshape::level_io::generate;
use sokoshape::shaping::shaping_bonus;

#[test]
fn discounted_shaping_preserves_optimal_actions() {
    for seed in [3, 8] {
        let (same, total) = invariance_fraction(&generate(seed, 1, 7, 7, 20).unwrap(), 0.99);
        assert!(total > 0);
        assert_eq!(same, total, "seed {seed}");
    }
}

#[test]
fn bonus_sums_telescope_on_random_prefixes() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..100 {
        let level = generate(500 + i, 1 + (i as usize % 2), 7, 7, 20).unwrap();
        let (sum, want) = telescope_prefix(&level, &mut rng);
        assert_eq!(sum, want, "level {i}");
    }
}

#[test]
fn case_table() {
    assert_eq!(shaping_bonus(true, 5, true, 4).to_bits(), 1.0f64.to_bits());
    assert_eq!(shaping_bonus(true, 3, false, 0).to_bits(), (-4.0f64).to_bits());
    assert_eq!(shaping_bonus(false, 0, false, 0).to_bits(), 0.0f64.to_bits());
}
