//! TD3 agent trained against the frozen Teacher as a single-step
//! environment: state = normalized target hardness, action = 13 values in
//! [-1, 1] mapped onto the normalized feature box, reward = negative
//! squared error of the Teacher's output against the target.
//!
//! Every episode terminates after one step, so the critic target is the
//! reward itself; the discounted bootstrap term is masked by the terminal
//! flag. Target networks and soft updates are still maintained.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nncore::{adam_step, mse, AdamState, Matrix, Mlp, OutputMode};

pub const REWARD_SMOOTHING_WINDOW: usize = 100;

#[derive(Debug, Clone)]
pub struct Transition {
    /// Normalized target hardness.
    pub state: f64,
    /// Action components in [-1, 1].
    pub action: Vec<f64>,
    pub reward: f64,
    /// Always true: every episode is one step.
    pub terminal: bool,
}

#[derive(Debug)]
pub struct ReplayBuffer {
    data: Vec<Transition>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            data: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Ring-buffer push: overwrites the oldest entry once full.
    pub fn push(&mut self, t: Transition) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Uniform sample of `batch` indices (with replacement).
    pub fn sample(&self, batch: usize, rng: &mut ChaCha12Rng) -> Result<Vec<&Transition>> {
        if self.data.len() < batch {
            return Err(Error::Invariant(format!(
                "replay buffer holds {} transitions, need {batch}",
                self.data.len()
            )));
        }
        Ok((0..batch)
            .map(|_| &self.data[rng.random_range(0..self.data.len())])
            .collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Td3Config {
    pub total_steps: usize,
    pub warmup_steps: usize,
    pub batch: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub tau: f64,
    pub policy_delay: usize,
    pub exploration_noise_std: f64,
    pub target_noise_std: f64,
    pub target_noise_clip: f64,
    pub buffer_capacity: usize,
    pub actor_hidden: usize,
    pub critic_hidden: usize,
    pub seed: u64,
}

impl Default for Td3Config {
    fn default() -> Self {
        Td3Config {
            total_steps: 40_000,
            warmup_steps: 1_000,
            batch: 256,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            tau: 0.005,
            policy_delay: 2,
            exploration_noise_std: 0.1,
            target_noise_std: 0.2,
            target_noise_clip: 0.5,
            buffer_capacity: 100_000,
            actor_hidden: 64,
            critic_hidden: 128,
            seed: 0,
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0
            || self.batch == 0
            || self.policy_delay == 0
            || self.buffer_capacity == 0
            || self.actor_hidden == 0
            || self.critic_hidden == 0
        {
            return Err(Error::Config("Td3Config counts must be positive".into()));
        }
        if !(0.0 < self.tau && self.tau <= 1.0) {
            return Err(Error::Config(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        if self.actor_lr <= 0.0 || self.critic_lr <= 0.0 {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        Ok(())
    }
}

/// Maps an action in [-1, 1] onto the normalized feature box [0, 1].
fn action_to_features(action: &[f64]) -> Vec<f64> {
    action.iter().map(|&a| 0.5 * (a + 1.0)).collect()
}

/// Single environment step: reward is the negative squared error between
/// the Teacher's hardness for the mapped action and the target.
pub fn env_step(teacher: &Mlp, target_norm: f64, action: &[f64]) -> Result<f64> {
    if action.len() != teacher.in_width() {
        return Err(Error::dim(
            "env_step",
            format!("{} action dims", teacher.in_width()),
            format!("{}", action.len()),
        ));
    }
    let features = Matrix::from_vec(1, action.len(), action_to_features(action))?;
    let y_hat = teacher.predict(&features)?.get(0, 0);
    let d = y_hat - target_norm;
    Ok(-(d * d))
}

/// Critic target for a batch of transitions. Terminal transitions
/// contribute their reward only; non-terminal ones would add the
/// discounted clipped double-Q value under the smoothed target policy.
/// Every episode here is terminal, so in practice the target is `r`.
pub fn critic_targets(
    batch: &[&Transition],
    target_actor: &Mlp,
    target_q1: &Mlp,
    target_q2: &Mlp,
    cfg: &Td3Config,
    discount: f64,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<f64>> {
    let mut targets = Vec::with_capacity(batch.len());
    if batch.iter().all(|t| t.terminal) {
        // fast path: no bootstrap term anywhere in the batch
        targets.extend(batch.iter().map(|t| t.reward));
        return Ok(targets);
    }
    let noise = Normal::new(0.0, cfg.target_noise_std)
        .map_err(|e| Error::Config(format!("target_noise_std: {e}")))?;
    for t in batch {
        if t.terminal {
            targets.push(t.reward);
            continue;
        }
        let state = Matrix::from_vec(1, 1, vec![t.state])?;
        let u = target_actor.predict(&state)?;
        let mut next_action: Vec<f64> = u.values().iter().map(|&v| 2.0 * v - 1.0).collect();
        for a in &mut next_action {
            let eps = noise
                .sample(rng)
                .clamp(-cfg.target_noise_clip, cfg.target_noise_clip);
            *a = (*a + eps).clamp(-1.0, 1.0);
        }
        let mut qin = vec![t.state];
        qin.extend_from_slice(&next_action);
        let qin = Matrix::from_vec(1, qin.len(), qin)?;
        let q1 = target_q1.predict(&qin)?.get(0, 0);
        let q2 = target_q2.predict(&qin)?.get(0, 0);
        targets.push(t.reward + discount * q1.min(q2));
    }
    Ok(targets)
}

/// Polyak averaging: `target = tau * live + (1 - tau) * target`.
pub fn soft_update(target: &mut Mlp, live: &Mlp, tau: f64) {
    let live_tensors = live.param_tensors();
    let mut target_tensors = target.param_tensors_mut();
    for (t, l) in target_tensors.iter_mut().zip(live_tensors) {
        for (tv, lv) in t.iter_mut().zip(l) {
            *tv = tau * lv + (1.0 - tau) * *tv;
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RewardPoint {
    pub step: usize,
    pub raw_reward: f64,
    pub smoothed_reward: f64,
}

pub fn reward_curve_csv(points: &[RewardPoint], config_digest: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(d) = config_digest {
        out.push_str(&format!("# config_digest={d}\n"));
    }
    out.push_str("step,raw_reward,smoothed_reward\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.step, p.raw_reward, p.smoothed_reward));
    }
    out
}

/// Full TD3 training loop against the frozen Teacher. Returns the actor
/// (sigmoid head rescaled to [-1, 1] at the action boundary) and the
/// per-step reward curve with a trailing-window smoothed column.
pub fn td3_train(teacher: &Mlp, cfg: &Td3Config) -> Result<(Mlp, Vec<RewardPoint>)> {
    cfg.validate()?;
    let digest_before = teacher.param_digest();
    let action_dim = teacher.in_width();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let explore_noise = Normal::new(0.0, cfg.exploration_noise_std)
        .map_err(|e| Error::Config(format!("exploration_noise_std: {e}")))?;

    let mut actor = Mlp::init(1, cfg.actor_hidden, action_dim, OutputMode::Sigmoid, cfg.seed);
    let mut q1 = Mlp::init(
        1 + action_dim,
        cfg.critic_hidden,
        1,
        OutputMode::Linear,
        cfg.seed.wrapping_add(1),
    );
    let mut q2 = Mlp::init(
        1 + action_dim,
        cfg.critic_hidden,
        1,
        OutputMode::Linear,
        cfg.seed.wrapping_add(2),
    );
    let mut target_actor = actor.clone();
    let mut target_q1 = q1.clone();
    let mut target_q2 = q2.clone();

    let mut actor_adam = AdamState::new(&actor, cfg.actor_lr);
    let mut q1_adam = AdamState::new(&q1, cfg.critic_lr);
    let mut q2_adam = AdamState::new(&q2, cfg.critic_lr);

    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut curve = Vec::with_capacity(cfg.total_steps);
    let mut window = std::collections::VecDeque::with_capacity(REWARD_SMOOTHING_WINDOW);
    let mut window_sum = 0.0;
    let mut critic_updates = 0usize;

    for step in 1..=cfg.total_steps {
        // Behavior policy: uniform random during warmup, else actor + noise.
        let state = rng.random_range(0.0..1.0);
        let action: Vec<f64> = if step <= cfg.warmup_steps {
            (0..action_dim).map(|_| rng.random_range(-1.0..1.0)).collect()
        } else {
            let s = Matrix::from_vec(1, 1, vec![state])?;
            let u = actor.predict(&s)?;
            u.values()
                .iter()
                .map(|&v| (2.0 * v - 1.0 + explore_noise.sample(&mut rng)).clamp(-1.0, 1.0))
                .collect()
        };
        let reward = env_step(teacher, state, &action)?;
        if !reward.is_finite() {
            return Err(Error::non_finite(format!("td3 reward at step {step}")));
        }
        buffer.push(Transition {
            state,
            action,
            reward,
            terminal: true,
        });

        window_sum += reward;
        window.push_back(reward);
        if window.len() > REWARD_SMOOTHING_WINDOW {
            window_sum -= window.pop_front().unwrap();
        }
        curve.push(RewardPoint {
            step,
            raw_reward: reward,
            smoothed_reward: window_sum / window.len() as f64,
        });

        if step <= cfg.warmup_steps || buffer.len() < cfg.batch {
            continue;
        }

        // Critic update.
        let batch = buffer.sample(cfg.batch, &mut rng)?;
        let targets = critic_targets(&batch, &target_actor, &target_q1, &target_q2, cfg, 0.99, &mut rng)?;
        let mut qin = Matrix::zeros(cfg.batch, 1 + action_dim);
        for (i, t) in batch.iter().enumerate() {
            let row = qin.row_mut(i);
            row[0] = t.state;
            row[1..].copy_from_slice(&t.action);
        }
        let target_mat = Matrix::column(&targets)?;
        for (critic, adam) in [(&mut q1, &mut q1_adam), (&mut q2, &mut q2_adam)] {
            let (pred, cache) = critic.forward(&qin)?;
            let (loss, grad) = mse(&pred, &target_mat)?;
            if !loss.is_finite() {
                return Err(Error::non_finite(format!("td3 critic loss at step {step}")));
            }
            let tape = critic.backward(&cache, &grad)?;
            adam_step(critic, &tape, adam)?;
        }
        critic_updates += 1;

        // Delayed actor update and soft target updates.
        if critic_updates.is_multiple_of(cfg.policy_delay) {
            let states = Matrix::from_vec(
                cfg.batch,
                1,
                batch.iter().map(|t| t.state).collect(),
            )?;
            let (u, actor_cache) = actor.forward(&states)?;
            let mut ain = Matrix::zeros(cfg.batch, 1 + action_dim);
            for i in 0..cfg.batch {
                let row = ain.row_mut(i);
                row[0] = states.get(i, 0);
                for (j, &uv) in u.row(i).iter().enumerate() {
                    row[1 + j] = 2.0 * uv - 1.0;
                }
            }
            let (q, q_cache) = q1.forward(&ain)?;
            // maximize mean Q: dL/dq = -1/batch
            let dl_dq = q.map(|_| -1.0 / cfg.batch as f64);
            let q_tape = q1.backward(&q_cache, &dl_dq)?;
            // slice the action part of the critic's input gradient and
            // undo the [0,1] -> [-1,1] rescaling (factor 2)
            let mut dl_du = Matrix::zeros(cfg.batch, action_dim);
            for i in 0..cfg.batch {
                let src = q_tape.input_grad.row(i);
                let dst = dl_du.row_mut(i);
                for j in 0..action_dim {
                    dst[j] = 2.0 * src[1 + j];
                }
            }
            let actor_tape = actor.backward(&actor_cache, &dl_du)?;
            adam_step(&mut actor, &actor_tape, &mut actor_adam)?;

            soft_update(&mut target_actor, &actor, cfg.tau);
            soft_update(&mut target_q1, &q1, cfg.tau);
            soft_update(&mut target_q2, &q2, cfg.tau);
        }
    }

    if teacher.param_digest() != digest_before {
        return Err(Error::Invariant(
            "teacher parameters changed during TD3 training".into(),
        ));
    }
    Ok((actor, curve))
}
