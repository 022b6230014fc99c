//! Synchronous advantage actor-critic: network, loss, optimizer, checkpoints.

mod a2c;
mod checkpoint;
mod linalg;
mod network;
mod rmsprop;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Action, Observation};

pub use a2c::{
    a2c_loss, a2c_update, loss_with_fixed_advantages, n_step_returns, EnvRollout, LossReport,
    RolloutBatch, StepEnd,
};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use network::{greedy, log_softmax, sample, softmax, ArchSpec, ConvSpec, ForwardPass, PolicyParams};
pub use rmsprop::{clip_grad_norm, rmsprop_step};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite loss: {0}")]
    NonFinite(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A2CHyper {
    pub learning_rate: f64,
    pub gamma: f64,
    pub entropy_coef: f64,
    pub value_loss_coef: f64,
    pub rmsprop_eps: f64,
    pub rmsprop_alpha: f64,
    pub rollout_len: usize,
    pub n_envs: usize,
    /// Global-norm gradient clip; `None` disables clipping.
    pub max_grad_norm: Option<f64>,
}

impl Default for A2CHyper {
    fn default() -> Self {
        Self {
            learning_rate: 7e-4,
            gamma: 0.99,
            entropy_coef: 0.1,
            value_loss_coef: 0.5,
            rmsprop_eps: 1e-5,
            rmsprop_alpha: 0.99,
            rollout_len: 5,
            n_envs: 30,
            max_grad_norm: Some(0.5),
        }
    }
}

impl A2CHyper {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        let coefs = [
            ("learning_rate", self.learning_rate),
            ("entropy_coef", self.entropy_coef),
            ("value_loss_coef", self.value_loss_coef),
            ("rmsprop_eps", self.rmsprop_eps),
            ("rmsprop_alpha", self.rmsprop_alpha),
            ("max_grad_norm", self.max_grad_norm.unwrap_or(0.0)),
        ];
        for (name, v) in coefs {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        if self.rmsprop_alpha > 1.0 {
            return Err(format!("rmsprop_alpha must be at most 1, got {}", self.rmsprop_alpha));
        }
        if self.rollout_len == 0 || self.n_envs == 0 {
            return Err("rollout_len and n_envs must be positive".into());
        }
        Ok(())
    }
}

/// Logits and value for one observation.
pub fn forward(params: &PolicyParams, obs: &Observation) -> Result<([f64; Action::COUNT], f64), AgentError> {
    let (c, h, w) = params.arch().input;
    if obs.shape() != (c, h, w) {
        return Err(AgentError::Shape(format!(
            "network expects {:?}, observation is {:?}",
            (c, h, w),
            obs.shape()
        )));
    }
    params.forward_one(&obs.data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{encode, Encoding};
    use crate::level_io::parse_xsb;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn defaults_validate() {
        assert!(A2CHyper::default().validate().is_ok());
        let bad = A2CHyper { gamma: 1.5, ..A2CHyper::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn forward_checks_observation_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = PolicyParams::init(ArchSpec::symbolic(5, 5), &mut rng).unwrap();
        let level = parse_xsb("#####\n#@$.#\n#####").unwrap();
        let obs = encode(&level, &level.initial_state(), Encoding::Symbolic);
        assert!(matches!(forward(&params, &obs), Err(AgentError::Shape(_))));
    }
}
