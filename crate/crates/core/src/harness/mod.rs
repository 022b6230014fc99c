//! Training loop, periodic evaluation, seeds and metrics output.

mod eval;
mod report;
mod stats;

use std::path::PathBuf;
use std::time::Instant;

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::agent::{
    a2c_update, sample, save_checkpoint, A2CHyper, AgentError, ArchSpec, EnvRollout, PolicyParams,
    RolloutBatch, StepEnd,
};
use crate::game::{encode_into, Action, EnvConfig, Encoding, Level, State, DEFAULT_STEP_CAP};
use crate::level_io::LevelSet;
use crate::planner::{distance, DistanceCache, TRAINING_NODE_BUDGET};
use crate::shaping::{shaped_step, ShapingConfig, ShapingError};

pub use eval::{evaluate, evaluate_with, greedy_policy, sample_levels, EvalStats};
pub use report::{config_hash, metrics_csv, read_metrics_csv, sha256_hex, summary_report, write_metrics_csv, METRICS_HEADER};
pub use stats::{shortest_path_stats, PathStats, STATS_NODE_BUDGET};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("level {0} is unsolvable")]
    Unsolvable(String),
    #[error("planner budget exhausted: {0}")]
    Budget(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Shaping(#[from] ShapingError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub level_set: LevelSet,
    pub shaping: ShapingConfig,
    pub hyper: A2CHyper,
    pub total_env_steps: u64,
    pub eval_every: u64,
    pub eval_instances: usize,
    pub seeds: Vec<u64>,
    pub step_cap: u32,
    pub encoding: Encoding,
    pub planner_budget: Option<usize>,
    /// Write a parameter checkpoint at every evaluation.
    pub checkpoint_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(level_set: LevelSet) -> Self {
        Self {
            level_set,
            shaping: ShapingConfig::default(),
            hyper: A2CHyper::default(),
            total_env_steps: 80_000,
            eval_every: 1000,
            eval_instances: 20,
            seeds: vec![0, 1, 2, 3, 4],
            step_cap: DEFAULT_STEP_CAP,
            encoding: Encoding::Symbolic,
            planner_budget: Some(TRAINING_NODE_BUDGET),
            checkpoint_dir: None,
        }
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig { step_cap: self.step_cap, ..EnvConfig::default() }
    }

    /// Network shape for this level set; every level must share one size.
    pub fn arch(&self) -> Result<ArchSpec, HarnessError> {
        let first = self
            .level_set
            .levels
            .first()
            .ok_or_else(|| HarnessError::Validation("level set is empty".into()))?;
        let (h, w) = (first.height(), first.width());
        if let Some(bad) = self.level_set.levels.iter().find(|l| (l.height(), l.width()) != (h, w)) {
            return Err(HarnessError::Validation(format!(
                "level {} is {}x{}, expected {h}x{w}; all levels in a training set must share one size",
                bad.id(),
                bad.height(),
                bad.width()
            )));
        }
        Ok(ArchSpec::for_encoding(self.encoding, h, w))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.hyper.validate().map_err(HarnessError::Validation)?;
        if self.eval_every == 0 {
            return Err(HarnessError::Validation("eval_every must be positive".into()));
        }
        if self.eval_instances == 0 || self.eval_instances > self.level_set.len() {
            return Err(HarnessError::Validation(format!(
                "eval_instances must be between 1 and the level count ({}), got {}",
                self.level_set.len(),
                self.eval_instances
            )));
        }
        if self.step_cap == 0 {
            return Err(HarnessError::Validation("step_cap must be positive".into()));
        }
        self.arch()?.param_count()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub seed: u64,
    pub env_steps: u64,
    pub solved_ratio: f64,
    pub mean_return: f64,
    pub mean_ep_len: f64,
    pub wall_clock_sec: f64,
    pub shaped: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub params: PolicyParams,
    pub rows: Vec<MetricsRow>,
    pub updates: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
}

impl RunResult {
    /// First evaluated step at which the solved ratio reached `threshold`.
    pub fn first_crossing(&self, threshold: f64) -> Option<u64> {
        self.rows.iter().find(|r| r.solved_ratio >= threshold).map(|r| r.env_steps)
    }

    pub fn final_row(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }
}

const EVAL_STREAM: u64 = u64::MAX;

struct Worker {
    rng: ChaCha8Rng,
    level: usize,
    state: State,
}

impl Worker {
    fn reset(&mut self, n_levels: usize, levels: &[Level]) {
        self.level = self.rng.gen_range(0..n_levels);
        self.state = levels[self.level].initial_state();
    }
}

struct Transition {
    action: usize,
    reward: f64,
    end: Option<bool>,
    next: State,
}

fn encode_batch(levels: &[Level], items: impl Iterator<Item = (usize, State)>, per: usize, enc: Encoding) -> Vec<f64> {
    let mut obs = Vec::new();
    for (level, state) in items {
        let start = obs.len();
        obs.resize(start + per, 0.0);
        encode_into(&levels[level], &state, enc, &mut obs[start..]);
    }
    obs
}

/// Trains one seed. The level for each episode is drawn uniformly by the
/// worker's own random stream, which also samples its actions.
pub fn train(config: &ExperimentConfig, seed: u64) -> Result<RunResult, HarnessError> {
    config.validate()?;
    let started = Instant::now();
    let levels = &config.level_set.levels;
    let arch = config.arch()?;
    let per = arch.input_len();
    let env = config.env_config();
    let hyper = config.hyper;
    let cache = DistanceCache::new(config.shaping.heuristic_mode, config.planner_budget);

    for level in levels {
        if !distance(level, &level.initial_state(), &cache).is_solvable() {
            return Err(if cache.budget_exhaustions() > 0 {
                HarnessError::Budget(format!("initial state of level {}", level.id()))
            } else {
                HarnessError::Unsolvable(level.id().to_string())
            });
        }
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = PolicyParams::init(arch, &mut init_rng)?;
    let mut eval_rng = ChaCha8Rng::seed_from_u64(seed);
    eval_rng.set_stream(EVAL_STREAM);
    let mut workers: Vec<Worker> = (0..hyper.n_envs)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let mut w = Worker { rng, level: 0, state: levels[0].initial_state() };
            w.reset(levels.len(), levels);
            w
        })
        .collect();

    let mut rows = Vec::new();
    // training episodes finished / solved since the last evaluation
    let mut episodes = (0u64, 0u64);
    let mut evaluate_at = |params: &PolicyParams, milestone: u64, rows: &mut Vec<MetricsRow>, episodes: &mut (u64, u64)| -> Result<(), HarnessError> {
        let stats = evaluate(params, &config.level_set, config.eval_instances, config.encoding, &env, &mut eval_rng);
        let row = MetricsRow {
            seed,
            env_steps: milestone,
            solved_ratio: stats.solved_ratio,
            mean_return: stats.mean_return,
            mean_ep_len: stats.mean_ep_len,
            wall_clock_sec: started.elapsed().as_secs_f64(),
            shaped: config.shaping.enabled,
        };
        info!(
            "seed {seed} step {milestone}: solved {:.2} return {:.2} len {:.1} (training episodes {}, solved {})",
            row.solved_ratio, row.mean_return, row.mean_ep_len, episodes.0, episodes.1
        );
        *episodes = (0, 0);
        if let Some(dir) = &config.checkpoint_dir {
            let path = dir.join(format!("seed{seed}_step{milestone:08}.ckpt"));
            save_checkpoint(params, &path)?;
        }
        rows.push(row);
        Ok(())
    };
    evaluate_at(&params, 0, &mut rows, &mut episodes)?;

    let n_envs = hyper.n_envs;
    let mut env_steps = 0u64;
    let mut next_eval = config.eval_every;
    let mut updates = 0u64;
    let mut budget_seen = cache.budget_exhaustions();
    while env_steps < config.total_env_steps {
        let mut segments: Vec<EnvRollout> = (0..n_envs)
            .map(|_| EnvRollout {
                obs: Vec::with_capacity(hyper.rollout_len * per),
                actions: Vec::with_capacity(hyper.rollout_len),
                rewards: Vec::with_capacity(hyper.rollout_len),
                values: Vec::with_capacity(hyper.rollout_len),
                ends: Vec::with_capacity(hyper.rollout_len),
                tail_bootstrap: None,
            })
            .collect();
        for _ in 0..hyper.rollout_len {
            if env_steps >= config.total_env_steps {
                break;
            }
            let obs = encode_batch(levels, workers.iter().map(|w| (w.level, w.state.clone())), per, config.encoding);
            let pass = params.forward(&obs)?;
            let na = params.arch().n_actions;

            let transitions: Vec<Result<Transition, HarnessError>> = workers
                .par_iter_mut()
                .enumerate()
                .map(|(i, w)| {
                    let a = sample(&pass.logits[i * na..(i + 1) * na], &mut w.rng);
                    let action = Action::from_index(a).expect("one logit per action");
                    let out = shaped_step(&levels[w.level], &w.state, action, &env, &config.shaping, &cache)?;
                    let end = if out.inner.solved {
                        Some(true)
                    } else if out.inner.truncated {
                        Some(false)
                    } else {
                        None
                    };
                    Ok(Transition { action: a, reward: out.shaped_reward, end, next: out.inner.next_state })
                })
                .collect();

            let mut truncated = Vec::new();
            for (i, t) in transitions.into_iter().enumerate() {
                let t = t?;
                let seg = &mut segments[i];
                seg.obs.extend_from_slice(&obs[i * per..(i + 1) * per]);
                seg.actions.push(t.action);
                seg.rewards.push(t.reward);
                seg.values.push(pass.values[i]);
                let w = &mut workers[i];
                match t.end {
                    None => {
                        seg.ends.push(StepEnd::Continue);
                        w.state = t.next;
                    }
                    Some(true) => {
                        episodes.0 += 1;
                        episodes.1 += 1;
                        seg.ends.push(StepEnd::Terminal);
                        w.reset(levels.len(), levels);
                    }
                    Some(false) => {
                        episodes.0 += 1;
                        seg.ends.push(StepEnd::Truncated { bootstrap: 0.0 });
                        truncated.push((i, w.level, t.next));
                        w.reset(levels.len(), levels);
                    }
                }
            }
            if !truncated.is_empty() {
                let obs = encode_batch(levels, truncated.iter().map(|(_, l, s)| (*l, s.clone())), per, config.encoding);
                let values = params.forward(&obs)?.values;
                for ((i, _, _), v) in truncated.iter().zip(values) {
                    if let Some(StepEnd::Truncated { bootstrap }) = segments[*i].ends.last_mut() {
                        *bootstrap = v;
                    }
                }
            }

            let budget_now = cache.budget_exhaustions();
            if budget_now > budget_seen {
                return Err(HarnessError::Budget(format!(
                    "{} distance queries exceeded {:?} nodes during training (seed {seed}, step {env_steps})",
                    budget_now - budget_seen,
                    config.planner_budget
                )));
            }
            budget_seen = budget_now;
            env_steps += n_envs as u64;
            while next_eval <= env_steps && next_eval <= config.total_env_steps {
                evaluate_at(&params, next_eval, &mut rows, &mut episodes)?;
                next_eval += config.eval_every;
            }
        }

        let obs = encode_batch(levels, workers.iter().map(|w| (w.level, w.state.clone())), per, config.encoding);
        let tail_values = params.forward(&obs)?.values;
        for (seg, v) in segments.iter_mut().zip(tail_values) {
            if seg.ends.last() == Some(&StepEnd::Continue) {
                seg.tail_bootstrap = Some(v);
            }
        }
        let batch = RolloutBatch { envs: segments.into_iter().filter(|s| !s.is_empty()).collect() };
        if batch.is_empty() {
            break;
        }
        let report = a2c_update(&mut params, &batch, &hyper)?;
        updates += 1;
        debug!(
            "update {updates}: loss {:.4} policy {:.4} value {:.4} entropy {:.4}",
            report.loss, report.policy_loss, report.value_loss, report.entropy
        );
    }

    Ok(RunResult {
        seed,
        params,
        rows,
        updates,
        cache_hits: cache.hits(),
        cache_misses: cache.misses(),
    })
}

/// Runs every configured seed in order.
pub fn train_all(config: &ExperimentConfig) -> Result<Vec<RunResult>, HarnessError> {
    config.seeds.iter().map(|&s| train(config, s)).collect()
}
