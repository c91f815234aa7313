//! Decentralized actor-critic learners.
//!
//! One learner per agent, trained only on its own observations, actions and
//! effective rewards. The IPD variants use a tabular softmax actor with a
//! state-value critic; cleanup uses the same update rule on a one-hidden-
//! layer network. Exploration is epsilon-softmax with a linear decay.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// Linearly decaying exploration rate, clamped at its floor.
#[derive(Debug, Clone, Copy)]
pub struct ExplorationSchedule {
    pub eps_start: f64,
    pub eps_end: f64,
    /// Episodes over which epsilon decays before the floor applies.
    pub decay_episodes: usize,
}

impl ExplorationSchedule {
    pub fn new(eps_start: f64, eps_end: f64, decay_episodes: usize) -> Self {
        ExplorationSchedule {
            eps_start,
            eps_end,
            decay_episodes,
        }
    }

    pub fn epsilon(&self, episode: usize) -> f64 {
        if self.decay_episodes == 0 {
            return self.eps_end;
        }
        let t = (episode as f64 / self.decay_episodes as f64).min(1.0);
        self.eps_start + (self.eps_end - self.eps_start) * t
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

/// Epsilon-softmax action selection: uniform with probability `epsilon`,
/// otherwise a sample from the given distribution.
pub fn select_action(probs: &[f64], epsilon: f64, rng: &mut dyn RngCore) -> usize {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..probs.len())
    } else {
        sample_categorical(probs, rng)
    }
}

fn sample_categorical(probs: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// One TD transition over encoded states.
#[derive(Debug, Clone, Copy)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    /// Post-participation reward.
    pub reward: f64,
    pub next_state: usize,
    pub done: bool,
}

/// Softmax-preference actor with a table critic.
#[derive(Debug, Clone)]
pub struct TabularActorCritic {
    states: usize,
    actions: usize,
    prefs: Vec<f64>,
    values: Vec<f64>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
}

impl TabularActorCritic {
    pub fn new(states: usize, actions: usize, actor_lr: f64, critic_lr: f64, gamma: f64) -> Self {
        TabularActorCritic {
            states,
            actions,
            prefs: vec![0.0; states * actions],
            values: vec![0.0; states],
            actor_lr,
            critic_lr,
            gamma,
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn preferences(&self) -> &[f64] {
        &self.prefs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn from_parts(
        states: usize,
        actions: usize,
        prefs: Vec<f64>,
        values: Vec<f64>,
        actor_lr: f64,
        critic_lr: f64,
        gamma: f64,
    ) -> Result<Self> {
        if prefs.len() != states * actions {
            return Err(Error::DimensionMismatch {
                expected: states * actions,
                actual: prefs.len(),
            });
        }
        if values.len() != states {
            return Err(Error::DimensionMismatch {
                expected: states,
                actual: values.len(),
            });
        }
        Ok(TabularActorCritic {
            states,
            actions,
            prefs,
            values,
            actor_lr,
            critic_lr,
            gamma,
        })
    }

    /// Softmax action distribution for a state.
    pub fn policy(&self, state: usize) -> Vec<f64> {
        softmax(&self.prefs[state * self.actions..(state + 1) * self.actions])
    }

    pub fn value(&self, state: usize) -> f64 {
        self.values[state]
    }

    pub fn select(&self, state: usize, epsilon: f64, rng: &mut dyn RngCore) -> usize {
        select_action(&self.policy(state), epsilon, rng)
    }

    /// One TD(0) actor-critic update.
    pub fn update(&mut self, t: &Transition) {
        let bootstrap = if t.done {
            0.0
        } else {
            self.gamma * self.values[t.next_state]
        };
        let delta = t.reward + bootstrap - self.values[t.state];
        self.values[t.state] += self.critic_lr * delta;
        let probs = self.policy(t.state);
        let row = &mut self.prefs[t.state * self.actions..(t.state + 1) * self.actions];
        for (a, p) in probs.iter().enumerate() {
            let indicator = f64::from(a == t.action);
            row[a] += self.actor_lr * delta * (indicator - p);
        }
    }
}

/// One-hidden-layer tanh network with a softmax policy head and a scalar
/// value head, parameters held in one flat vector.
#[derive(Debug, Clone)]
pub struct MlpPolicy {
    input: usize,
    hidden: usize,
    actions: usize,
    params: Vec<f64>,
}

struct ForwardCache {
    hidden: Vec<f64>,
    probs: Vec<f64>,
    value: f64,
}

impl MlpPolicy {
    pub fn zeros(input: usize, hidden: usize, actions: usize) -> Self {
        let count = Self::count_params(input, hidden, actions);
        MlpPolicy {
            input,
            hidden,
            actions,
            params: vec![0.0; count],
        }
    }

    /// Uniform init in [-scale, scale] from the caller's seeded stream.
    pub fn init_uniform(
        input: usize,
        hidden: usize,
        actions: usize,
        scale: f64,
        rng: &mut dyn RngCore,
    ) -> Self {
        let mut policy = Self::zeros(input, hidden, actions);
        for p in &mut policy.params {
            *p = rng.gen_range(-scale..=scale);
        }
        policy
    }

    pub fn count_params(input: usize, hidden: usize, actions: usize) -> usize {
        input * hidden + hidden + actions * hidden + actions + hidden + 1
    }

    pub fn from_params(input: usize, hidden: usize, actions: usize, params: Vec<f64>) -> Result<Self> {
        let expected = Self::count_params(input, hidden, actions);
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: params.len(),
            });
        }
        Ok(MlpPolicy {
            input,
            hidden,
            actions,
            params,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.input, self.hidden, self.actions)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    // Flat layout: w1 (hidden x input), b1, w2 (actions x hidden), b2,
    // wv (hidden), bv.
    fn off_b1(&self) -> usize {
        self.input * self.hidden
    }
    fn off_w2(&self) -> usize {
        self.off_b1() + self.hidden
    }
    fn off_b2(&self) -> usize {
        self.off_w2() + self.actions * self.hidden
    }
    fn off_wv(&self) -> usize {
        self.off_b2() + self.actions
    }
    fn off_bv(&self) -> usize {
        self.off_wv() + self.hidden
    }

    fn forward_cached(&self, obs: &[f64]) -> Result<ForwardCache> {
        if obs.len() != self.input {
            return Err(Error::DimensionMismatch {
                expected: self.input,
                actual: obs.len(),
            });
        }
        let p = &self.params;
        let mut hidden = Vec::with_capacity(self.hidden);
        for j in 0..self.hidden {
            let row = &p[j * self.input..(j + 1) * self.input];
            let mut z = p[self.off_b1() + j];
            for (w, x) in row.iter().zip(obs) {
                z += w * x;
            }
            hidden.push(z.tanh());
        }
        let mut logits = Vec::with_capacity(self.actions);
        for k in 0..self.actions {
            let row = &p[self.off_w2() + k * self.hidden..self.off_w2() + (k + 1) * self.hidden];
            let mut z = p[self.off_b2() + k];
            for (w, h) in row.iter().zip(&hidden) {
                z += w * h;
            }
            logits.push(z);
        }
        let mut value = p[self.off_bv()];
        for (w, h) in p[self.off_wv()..self.off_wv() + self.hidden].iter().zip(&hidden) {
            value += w * h;
        }
        Ok(ForwardCache {
            hidden,
            probs: softmax(&logits),
            value,
        })
    }

    /// Action distribution and state value for an observation.
    pub fn forward(&self, obs: &[f64]) -> Result<(Vec<f64>, f64)> {
        let cache = self.forward_cached(obs)?;
        Ok((cache.probs, cache.value))
    }

    /// Ascent gradient of
    /// `advantage * log pi(action | obs) - value_coef/2 * (V(obs) - value_target)^2`
    /// with respect to the flat parameter vector. `advantage` and
    /// `value_target` are constants of the transition.
    pub fn backward(
        &self,
        obs: &[f64],
        action: usize,
        advantage: f64,
        value_target: f64,
        value_coef: f64,
    ) -> Result<Vec<f64>> {
        let cache = self.forward_cached(obs)?;
        if action >= self.actions {
            return Err(Error::invalid(format!("action {action} out of range")));
        }
        let p = &self.params;
        let mut grad = vec![0.0; p.len()];

        let dlogits: Vec<f64> = (0..self.actions)
            .map(|k| advantage * (f64::from(k == action) - cache.probs[k]))
            .collect();
        let dvalue = -value_coef * (cache.value - value_target);

        let mut dhidden = vec![0.0; self.hidden];
        for (k, &dl) in dlogits.iter().enumerate() {
            let base = self.off_w2() + k * self.hidden;
            for j in 0..self.hidden {
                grad[base + j] = dl * cache.hidden[j];
                dhidden[j] += p[base + j] * dl;
            }
            grad[self.off_b2() + k] = dl;
        }
        for j in 0..self.hidden {
            grad[self.off_wv() + j] = dvalue * cache.hidden[j];
            dhidden[j] += p[self.off_wv() + j] * dvalue;
        }
        grad[self.off_bv()] = dvalue;

        for (j, dh) in dhidden.iter().enumerate() {
            let dz = dh * (1.0 - cache.hidden[j] * cache.hidden[j]);
            let base = j * self.input;
            for (i, x) in obs.iter().enumerate() {
                grad[base + i] = dz * x;
            }
            grad[self.off_b1() + j] = dz;
        }
        Ok(grad)
    }
}

/// Actor-critic wrapper around [`MlpPolicy`] with separate actor and critic
/// step sizes.
#[derive(Debug, Clone)]
pub struct MlpActorCritic {
    pub policy: MlpPolicy,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
}

impl MlpActorCritic {
    pub fn new(policy: MlpPolicy, actor_lr: f64, critic_lr: f64, gamma: f64) -> Self {
        MlpActorCritic {
            policy,
            actor_lr,
            critic_lr,
            gamma,
        }
    }

    pub fn select(&self, obs: &[f64], epsilon: f64, rng: &mut dyn RngCore) -> Result<usize> {
        let (probs, _) = self.policy.forward(obs)?;
        Ok(select_action(&probs, epsilon, rng))
    }

    /// TD(0) update from one transition; `next_obs` is ignored when done.
    pub fn update(
        &mut self,
        obs: &[f64],
        action: usize,
        reward: f64,
        next_obs: &[f64],
        done: bool,
    ) -> Result<()> {
        let target = if done {
            reward
        } else {
            let (_, v_next) = self.policy.forward(next_obs)?;
            reward + self.gamma * v_next
        };
        let (_, v) = self.policy.forward(obs)?;
        let advantage = target - v;
        let value_coef = self.critic_lr / self.actor_lr;
        let grad = self.policy.backward(obs, action, advantage, target, value_coef)?;
        for (p, g) in self.policy.params_mut().iter_mut().zip(&grad) {
            *p += self.actor_lr * g;
        }
        Ok(())
    }
}
