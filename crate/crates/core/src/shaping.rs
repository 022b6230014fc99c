//! Potential-based reward shaping with `phi(s) = -d(s)`, where `d` is the
//! A* plan length. Transitions into unsolvable states pay `-d(s) - 1` once;
//! after that the raw reward is left alone.

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{step, Action, EnvConfig, GameError, Level, State, StepOutcome};
use crate::planner::{distance, Distance, DistanceCache, HeuristicMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapingError {
    #[error("potential is undefined for an unsolvable state")]
    UnsolvablePotential,
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapingConfig {
    pub enabled: bool,
    pub heuristic_mode: HeuristicMode,
    /// Use `gamma * phi(s') - phi(s)` instead of `phi(s') - phi(s)`.
    pub gamma_in_potential: bool,
    pub gamma: f64,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            heuristic_mode: HeuristicMode::AllPairs,
            gamma_in_potential: false,
            gamma: 0.99,
        }
    }
}

impl ShapingConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    fn discount(&self) -> Option<f64> {
        self.gamma_in_potential.then_some(self.gamma)
    }
}

/// Which branch of the shaping rule a transition falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShapingCase {
    BothSolvable,
    BecameUnsolvable,
    BothUnsolvable,
    /// Unsolvable to solvable; cannot happen in Sokoban.
    Recovered,
}

impl ShapingCase {
    pub fn classify(s_solvable: bool, s_prime_solvable: bool) -> Self {
        match (s_solvable, s_prime_solvable) {
            (true, true) => ShapingCase::BothSolvable,
            (true, false) => ShapingCase::BecameUnsolvable,
            (false, false) => ShapingCase::BothUnsolvable,
            (false, true) => ShapingCase::Recovered,
        }
    }
}

/// `phi(s) = -d(s)`.
pub fn potential(d: Distance) -> Result<f64, ShapingError> {
    match d {
        Distance::Steps(steps) => Ok(-f64::from(steps)),
        Distance::Unsolvable => Err(ShapingError::UnsolvablePotential),
    }
}

/// Shaping bonus `F(s, a, s')` from the solvability flags and distances.
/// Distances of unsolvable states are ignored.
pub fn shaping_bonus(s_solvable: bool, d_s: u32, s_prime_solvable: bool, d_s_prime: u32) -> f64 {
    shaping_bonus_discounted(s_solvable, d_s, s_prime_solvable, d_s_prime, None)
}

/// As [`shaping_bonus`]; with `Some(gamma)` the solvable-to-solvable case uses
/// `gamma * phi(s') - phi(s)`.
pub fn shaping_bonus_discounted(
    s_solvable: bool,
    d_s: u32,
    s_prime_solvable: bool,
    d_s_prime: u32,
    gamma: Option<f64>,
) -> f64 {
    let (d_s, d_sp) = (f64::from(d_s), f64::from(d_s_prime));
    match ShapingCase::classify(s_solvable, s_prime_solvable) {
        ShapingCase::BothSolvable => match gamma {
            None => -d_sp + d_s,
            Some(g) => -g * d_sp + d_s,
        },
        ShapingCase::BecameUnsolvable => -d_s - 1.0,
        ShapingCase::BothUnsolvable => 0.0,
        ShapingCase::Recovered => {
            warn!("transition from an unsolvable state to a solvable one; shaping bonus set to 0");
            0.0
        }
    }
}

/// Bonus for a transition given both distances.
pub fn bonus_for(d_s: Distance, d_s_prime: Distance, config: &ShapingConfig) -> f64 {
    if !config.enabled {
        return 0.0;
    }
    shaping_bonus_discounted(
        d_s.is_solvable(),
        d_s.steps().unwrap_or(0),
        d_s_prime.is_solvable(),
        d_s_prime.steps().unwrap_or(0),
        config.discount(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapedStepOutcome {
    pub inner: StepOutcome,
    pub potential_bonus: f64,
    /// Distances of `s` and `s'`; `None` when shaping is disabled.
    pub distances: Option<(Distance, Distance)>,
    pub shaped_reward: f64,
}

impl ShapedStepOutcome {
    pub fn s_solvable(&self) -> Option<bool> {
        self.distances.map(|(d, _)| d.is_solvable())
    }

    pub fn s_prime_solvable(&self) -> Option<bool> {
        self.distances.map(|(_, d)| d.is_solvable())
    }

    pub fn case(&self) -> Option<ShapingCase> {
        self.distances
            .map(|(a, b)| ShapingCase::classify(a.is_solvable(), b.is_solvable()))
    }
}

/// Environment step with the shaping bonus added to the reward.
pub fn shaped_step(
    level: &Level,
    state: &State,
    action: Action,
    env: &EnvConfig,
    config: &ShapingConfig,
    cache: &DistanceCache,
) -> Result<ShapedStepOutcome, ShapingError> {
    let inner = step(level, state, action, env)?;
    if !config.enabled {
        let shaped_reward = inner.reward;
        return Ok(ShapedStepOutcome {
            inner,
            potential_bonus: 0.0,
            distances: None,
            shaped_reward,
        });
    }
    let d_s = distance(level, state, cache);
    let d_sp = distance(level, &inner.next_state, cache);
    let bonus = bonus_for(d_s, d_sp, config);
    Ok(ShapedStepOutcome {
        shaped_reward: inner.reward + bonus,
        potential_bonus: bonus,
        distances: Some((d_s, d_sp)),
        inner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{is_solved, Pos};
    use crate::level_io::{generate, parse_xsb};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn potential_values() {
        assert_eq!(potential(Distance::Steps(0)).unwrap(), 0.0);
        assert_eq!(potential(Distance::Steps(5)).unwrap(), -5.0);
        assert_eq!(potential(Distance::Steps(1)).unwrap(), -1.0);
        assert_eq!(potential(Distance::Unsolvable), Err(ShapingError::UnsolvablePotential));
    }

    #[test]
    fn bonus_cases() {
        assert_eq!(shaping_bonus(true, 5, true, 4), 1.0);
        assert_eq!(shaping_bonus(true, 3, false, 0), -4.0);
        assert_eq!(shaping_bonus(true, 6, false, 0), -7.0);
        assert_eq!(shaping_bonus(false, 0, false, 0), 0.0);
        assert_eq!(shaping_bonus(false, 0, true, 2), 0.0);
        assert_eq!(shaping_bonus_discounted(true, 5, true, 4, Some(0.5)), 3.0);
    }

    #[test]
    fn disabled_is_raw_reward() {
        let level = parse_xsb("######\n#@$ .#\n######").unwrap();
        let cache = DistanceCache::for_training();
        let env = EnvConfig::default();
        for a in Action::ALL {
            let shaped =
                shaped_step(&level, &level.initial_state(), a, &env, &ShapingConfig::disabled(), &cache)
                    .unwrap();
            let raw = step(&level, &level.initial_state(), a, &env).unwrap();
            assert_eq!(shaped.inner, raw);
            assert_eq!(shaped.shaped_reward.to_bits(), raw.reward.to_bits());
            assert_eq!(shaped.potential_bonus, 0.0);
        }
        assert!(cache.is_empty());
    }

    #[test]
    fn solving_push_from_distance_one() {
        let level = parse_xsb("#####\n#@$.#\n#####").unwrap();
        let cache = DistanceCache::for_training();
        let out = shaped_step(
            &level,
            &level.initial_state(),
            Action::Right,
            &EnvConfig::default(),
            &ShapingConfig::default(),
            &cache,
        )
        .unwrap();
        assert_eq!(out.potential_bonus, 1.0);
        assert!((out.shaped_reward - 11.9).abs() < 1e-12);
        assert_eq!(out.case(), Some(ShapingCase::BothSolvable));
    }

    #[test]
    fn push_into_dead_column() {
        // Column 1 holds no target, so pushing the box left deadlocks it.
        let level = parse_xsb("#######\n#     #\n# $@  #\n#     #\n#    .#\n#######").unwrap();
        let cache = DistanceCache::for_training();
        let s = level.initial_state();
        // two steps to reach (1,2), two pushes down, two steps to (4,1), three pushes right
        assert_eq!(distance(&level, &s, &cache), Distance::Steps(9));
        let out = shaped_step(&level, &s, Action::Left, &EnvConfig::default(), &ShapingConfig::default(), &cache)
            .unwrap();
        assert_eq!(out.case(), Some(ShapingCase::BecameUnsolvable));
        assert_eq!(out.potential_bonus, -10.0);
        assert_eq!(out.inner.next_state.boxes, vec![Pos::new(2, 1)]);
        // the next transition inside the dead region is unshaped
        let next = shaped_step(&level, &out.inner.next_state, Action::Up, &EnvConfig::default(), &ShapingConfig::default(), &cache)
            .unwrap();
        assert_eq!(next.case(), Some(ShapingCase::BothUnsolvable));
        assert_eq!(next.potential_bonus, 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn telescoping_and_case_totality(seed in 0u64..5000, boxes in 1usize..3) {
            let level = generate(seed, boxes, 7, 7, 20).unwrap();
            let cache = DistanceCache::for_training();
            let cfg = ShapingConfig::default();
            let env = EnvConfig::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
            let mut s = level.initial_state();
            let d0 = distance(&level, &s, &cache).steps().unwrap();
            let mut sum = 0.0;
            let mut all_solvable = true;
            for _ in 0..60 {
                if is_solved(&level, &s) { break; }
                let a = Action::from_index(rng.gen_range(0..5)).unwrap();
                let out = shaped_step(&level, &s, a, &env, &cfg, &cache).unwrap();
                prop_assert_ne!(out.case(), Some(ShapingCase::Recovered));
                prop_assert_eq!(out.shaped_reward, out.inner.reward + out.potential_bonus);
                if !out.s_prime_solvable().unwrap() { all_solvable = false; }
                if all_solvable {
                    sum += out.potential_bonus;
                    let d_end = out.distances.unwrap().1.steps().unwrap();
                    prop_assert_eq!(sum, d0 as f64 - d_end as f64);
                }
                s = out.inner.next_state;
            }
        }
    }
}
