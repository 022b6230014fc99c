use super::network::{log_softmax, ForwardPass};
use super::rmsprop::{clip_grad_norm, rmsprop_step};
use super::{A2CHyper, AgentError, PolicyParams};

/// How an episode stood after a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepEnd {
    Continue,
    /// Solved: the return after this step is 0.
    Terminal,
    /// Hit the step cap; the return is bootstrapped from `V(s')`.
    Truncated { bootstrap: f64 },
}

/// One environment's steps since the last update. Episodes may end and
/// restart inside a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvRollout {
    /// `[len][C][H][W]`
    pub obs: Vec<f64>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub ends: Vec<StepEnd>,
    /// `V` of the state after the last step, present iff that step is
    /// [`StepEnd::Continue`].
    pub tail_bootstrap: Option<f64>,
}

impl EnvRollout {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RolloutBatch {
    pub envs: Vec<EnvRollout>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.envs.iter().map(EnvRollout::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self, obs_len: usize) -> Result<(), AgentError> {
        for (i, env) in self.envs.iter().enumerate() {
            let n = env.len();
            let aligned = env.rewards.len() == n
                && env.values.len() == n
                && env.ends.len() == n
                && env.obs.len() == n * obs_len;
            if !aligned {
                return Err(AgentError::Shape(format!("rollout of env {i} has misaligned sequences")));
            }
            let wants_bootstrap = env.ends.last().is_some_and(|e| *e == StepEnd::Continue);
            if wants_bootstrap != env.tail_bootstrap.is_some() {
                return Err(AgentError::Shape(format!(
                    "rollout of env {i}: tail bootstrap must be present exactly when the tail is non-terminal"
                )));
            }
        }
        Ok(())
    }

    /// All observations, env-major.
    pub fn observations(&self) -> Vec<f64> {
        self.envs.iter().flat_map(|e| e.obs.iter().copied()).collect()
    }

    pub fn actions(&self) -> Vec<usize> {
        self.envs.iter().flat_map(|e| e.actions.iter().copied()).collect()
    }
}

/// Discounted n-step returns, env-major, matching [`RolloutBatch::observations`].
pub fn n_step_returns(batch: &RolloutBatch, gamma: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(batch.len());
    for env in &batch.envs {
        let mut returns = vec![0.0; env.len()];
        let mut next = env.tail_bootstrap.unwrap_or(0.0);
        for t in (0..env.len()).rev() {
            let tail = match env.ends[t] {
                StepEnd::Continue => next,
                StepEnd::Terminal => 0.0,
                StepEnd::Truncated { bootstrap } => bootstrap,
            };
            next = env.rewards[t] + gamma * tail;
            returns[t] = next;
        }
        out.extend(returns);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub grad: Vec<f64>,
}

/// Loss and gradient with the advantages supplied as constants:
/// `-mean(A * log pi(a|s)) + c_v * mean((R - V)^2) - c_e * mean(H(pi(.|s)))`.
pub fn loss_with_fixed_advantages(
    params: &PolicyParams,
    obs: &[f64],
    actions: &[usize],
    returns: &[f64],
    advantages: &[f64],
    hyper: &A2CHyper,
) -> Result<LossReport, AgentError> {
    let pass = params.forward(obs)?;
    loss_from_pass(params, &pass, actions, returns, advantages, hyper)
}

fn loss_from_pass(
    params: &PolicyParams,
    pass: &ForwardPass,
    actions: &[usize],
    returns: &[f64],
    advantages: &[f64],
    hyper: &A2CHyper,
) -> Result<LossReport, AgentError> {
    let n = pass.batch;
    if n == 0 || actions.len() != n || returns.len() != n || advantages.len() != n {
        return Err(AgentError::Shape(format!(
            "batch of {n} observations with {} actions, {} returns, {} advantages",
            actions.len(),
            returns.len(),
            advantages.len()
        )));
    }
    let na = params.arch().n_actions;
    let inv_n = 1.0 / n as f64;
    let mut dlogits = vec![0.0; n * na];
    let mut dvalues = vec![0.0; n];
    let (mut policy_loss, mut value_loss, mut entropy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let logp = log_softmax(&pass.logits[i * na..(i + 1) * na]);
        let p: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
        let h: f64 = -p.iter().zip(&logp).map(|(p, l)| p * l).sum::<f64>();
        let a = actions[i];
        if a >= na {
            return Err(AgentError::Shape(format!("action index {a} out of range")));
        }
        let adv = advantages[i];
        policy_loss -= adv * logp[a] * inv_n;
        entropy += h * inv_n;
        let err = pass.values[i] - returns[i];
        value_loss += err * err * inv_n;

        let row = &mut dlogits[i * na..(i + 1) * na];
        for j in 0..na {
            let onehot = if j == a { 1.0 } else { 0.0 };
            row[j] = -adv * inv_n * (onehot - p[j]) + hyper.entropy_coef * inv_n * p[j] * (logp[j] + h);
        }
        dvalues[i] = hyper.value_loss_coef * 2.0 * err * inv_n;
    }
    let loss = policy_loss + hyper.value_loss_coef * value_loss - hyper.entropy_coef * entropy;
    if !loss.is_finite() {
        return Err(AgentError::NonFinite(format!(
            "loss={loss} policy={policy_loss} value={value_loss} entropy={entropy} batch={n} \
             max|logit|={} max|V|={}",
            pass.logits.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            pass.values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        )));
    }
    let grad = params.backward(pass, &dlogits, &dvalues);
    Ok(LossReport { loss, policy_loss, value_loss, entropy, grad })
}

/// A2C loss on a rollout batch, with `A = R - V(s)` held constant in the
/// policy term.
pub fn a2c_loss(params: &PolicyParams, batch: &RolloutBatch, hyper: &A2CHyper) -> Result<LossReport, AgentError> {
    batch.validate(params.arch().input_len())?;
    if batch.is_empty() {
        return Err(AgentError::Shape("empty rollout batch".into()));
    }
    let returns = n_step_returns(batch, hyper.gamma);
    let pass = params.forward(&batch.observations())?;
    let advantages: Vec<f64> = returns.iter().zip(&pass.values).map(|(r, v)| r - v).collect();
    loss_from_pass(params, &pass, &batch.actions(), &returns, &advantages, hyper)
}

/// Loss, optional gradient clipping, then one RMSprop step.
pub fn a2c_update(params: &mut PolicyParams, batch: &RolloutBatch, hyper: &A2CHyper) -> Result<LossReport, AgentError> {
    let mut report = a2c_loss(params, batch, hyper)?;
    if let Some(max) = hyper.max_grad_norm {
        clip_grad_norm(&mut report.grad, max);
    }
    rmsprop_step(params, &report.grad, hyper);
    if !params.all_finite() {
        return Err(AgentError::NonFinite(format!(
            "parameters diverged after update (loss {})",
            report.loss
        )));
    }
    Ok(report)
}
