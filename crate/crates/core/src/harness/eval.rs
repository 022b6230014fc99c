use rand::seq::index::sample;
use rand::Rng;

use crate::agent::{greedy, PolicyParams};
use crate::game::{encode_into, step, Action, EnvConfig, Encoding, Level, State};
use crate::level_io::LevelSet;

/// Aggregate of one evaluation sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    pub solved_ratio: f64,
    pub mean_return: f64,
    pub mean_ep_len: f64,
    pub instances: usize,
}

/// Plays one episode on each of `levels` in lockstep until solved or capped,
/// asking `policy` for the actions of all unfinished episodes at once.
/// Returns are raw environment rewards.
pub fn evaluate_with<F>(levels: &[&Level], env: &EnvConfig, mut policy: F) -> EvalStats
where
    F: FnMut(&[(&Level, &State)]) -> Vec<Action>,
{
    let n = levels.len();
    let mut states: Vec<State> = levels.iter().map(|l| l.initial_state()).collect();
    let mut returns = vec![0.0; n];
    let mut lengths = vec![0u32; n];
    let mut solved = vec![false; n];
    let mut live: Vec<usize> = (0..n).collect();
    while !live.is_empty() {
        let view: Vec<(&Level, &State)> = live.iter().map(|&i| (levels[i], &states[i])).collect();
        let actions = policy(&view);
        assert_eq!(actions.len(), live.len(), "policy must return one action per episode");
        let mut still = Vec::with_capacity(live.len());
        for (&i, a) in live.iter().zip(actions) {
            let out = step(levels[i], &states[i], a, env).expect("live episodes are not over");
            returns[i] += out.reward;
            lengths[i] += 1;
            solved[i] = out.solved;
            let done = out.done();
            states[i] = out.next_state;
            if !done {
                still.push(i);
            }
        }
        live = still;
    }
    let denom = n.max(1) as f64;
    EvalStats {
        solved_ratio: solved.iter().filter(|s| **s).count() as f64 / denom,
        mean_return: returns.iter().sum::<f64>() / denom,
        mean_ep_len: lengths.iter().map(|l| f64::from(*l)).sum::<f64>() / denom,
        instances: n,
    }
}

/// Picks `n` distinct levels uniformly.
pub fn sample_levels<'a, R: Rng + ?Sized>(set: &'a LevelSet, n: usize, rng: &mut R) -> Vec<&'a Level> {
    let n = n.min(set.len());
    sample(rng, set.len(), n).into_iter().map(|i| &set.levels[i]).collect()
}

/// Greedy network policy for [`evaluate_with`].
pub fn greedy_policy<'p>(
    params: &'p PolicyParams,
    encoding: Encoding,
) -> impl FnMut(&[(&Level, &State)]) -> Vec<Action> + 'p {
    let per = params.arch().input_len();
    move |batch| {
        let mut obs = vec![0.0; batch.len() * per];
        for ((level, state), chunk) in batch.iter().zip(obs.chunks_mut(per)) {
            encode_into(level, state, encoding, chunk);
        }
        let pass = params.forward(&obs).expect("levels match the network input");
        pass.logits
            .chunks(params.arch().n_actions)
            .map(|l| Action::from_index(greedy(l)).expect("network has one logit per action"))
            .collect()
    }
}

/// Greedy evaluation of `params` on `n` levels drawn without replacement
/// with `rng`. Parameters are only read.
pub fn evaluate<R: Rng + ?Sized>(
    params: &PolicyParams,
    set: &LevelSet,
    n: usize,
    encoding: Encoding,
    env: &EnvConfig,
    rng: &mut R,
) -> EvalStats {
    let levels = sample_levels(set, n, rng);
    evaluate_with(&levels, env, greedy_policy(params, encoding))
}
