//! Oracle checks shared by the unit-style tests and the acceptance run.

use rand::Rng;
use sokoshape::game::{is_solved, Action, EnvConfig, Level};
use sokoshape::planner::{distance, Distance, DistanceCache};
use sokoshape::shaping::{bonus_for, shaped_step, ShapingConfig};

use super::vi::{argmax_set, Mdp};

/// `(same, total)` over solvable non-terminal states: how many keep their
/// optimal action set under discounted potential shaping.
pub fn invariance_fraction(level: &Level, gamma: f64) -> (usize, usize) {
    let mdp = Mdp::build(level);
    assert!(mdp.states.len() <= 5000, "{} states", mdp.states.len());
    let cache = DistanceCache::for_training();
    let d: Vec<Distance> = mdp.states.iter().map(|s| distance(level, s, &cache)).collect();
    let cfg = ShapingConfig { gamma_in_potential: true, gamma, ..ShapingConfig::default() };
    let raw = mdp.q_values(gamma, &|_, _| 0.0);
    let shaped = mdp.q_values(gamma, &|s, a| bonus_for(d[s], d[mdp.next[s][a]], &cfg));
    let mut total = 0;
    let mut same = 0;
    for s in 0..mdp.states.len() {
        if mdp.terminal[s] || !d[s].is_solvable() {
            continue;
        }
        total += 1;
        if argmax_set(&raw[s], 1e-9) == argmax_set(&shaped[s], 1e-9) {
            same += 1;
        }
    }
    (same, total)
}

/// Walks a random prefix that stays solvable and returns
/// `(sum of bonuses, d(s0) - d(s_end))`.
pub fn telescope_prefix(level: &Level, rng: &mut impl Rng) -> (i64, i64) {
    let env = EnvConfig::default();
    let cfg = ShapingConfig::default();
    let cache = DistanceCache::for_training();
    let mut s = level.initial_state();
    let d0 = distance(level, &s, &cache).steps().unwrap() as i64;
    let mut sum = 0i64;
    for _ in 0..rng.gen_range(1..40) {
        if is_solved(level, &s) {
            break;
        }
        let a = Action::from_index(rng.gen_range(0..Action::COUNT)).unwrap();
        let out = shaped_step(level, &s, a, &env, &cfg, &cache).unwrap();
        if !out.s_prime_solvable().unwrap() {
            break;
        }
        sum += out.potential_bonus as i64;
        s = out.inner.next_state;
    }
    let d_end = distance(level, &s, &cache).steps().unwrap() as i64;
    (sum, d0 - d_end)
}
