//! Deterministic policy gradient agent with target networks.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::mlp::Mlp;
use super::replay::{ReplayBuffer, Transition};
use crate::error::Result;
use crate::math;
use crate::rng::normal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdpgParams {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub discount: f64,
    pub tau: f64,
    /// Std-dev of the Gaussian noise added to the actor's pre-squash output.
    pub sigma: f64,
    pub batch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdpgAgent {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    actor_opt: Adam,
    critic_opt: Adam,
    pub replay: ReplayBuffer,
    pub params: DdpgParams,
    pub updates: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdpgLosses {
    pub critic: f64,
    pub actor: f64,
}

impl DdpgAgent {
    /// The actor's output layer starts at zero so a fresh policy is the
    /// midpoint action.
    pub fn new<R: Rng + ?Sized>(state_dim: usize, action_dim: usize, hidden: [usize; 2], params: DdpgParams, capacity: usize, rng: &mut R) -> Self {
        let mut actor = Mlp::new(&[state_dim, hidden[0], hidden[1], action_dim], rng);
        actor.scale_output_layer(0.0);
        let critic = Mlp::new(&[state_dim + action_dim, hidden[0], hidden[1], 1], rng);
        Self {
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor_opt: Adam::new(actor.num_params(), params.actor_lr),
            critic_opt: Adam::new(critic.num_params(), params.critic_lr),
            actor,
            critic,
            replay: ReplayBuffer::new(capacity),
            params,
            updates: 0,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    /// Action in `[-1,1]^a`. Noise draws are consumed only when exploring.
    pub fn act<R: Rng + ?Sized>(&self, state: &[f64], explore: bool, rng: &mut R) -> Result<Vec<f64>> {
        let mut z = self.actor.forward(state)?;
        if explore {
            for v in z.iter_mut() {
                *v += self.params.sigma * normal(rng);
            }
        }
        Ok(z.into_iter().map(math::tanh).collect())
    }

    pub fn q_value(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        let mut x = state.to_vec();
        x.extend_from_slice(action);
        Ok(self.critic.forward(&x)?[0])
    }

    pub fn remember(&mut self, t: Transition) {
        self.replay.push(t);
    }

    /// One critic step, one actor step and a soft target update on a sampled batch.
    pub fn update<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<DdpgLosses>> {
        if self.replay.is_empty() {
            return Ok(None);
        }
        let batch: Vec<Transition> = self.replay.sample(self.params.batch.max(1), rng).into_iter().cloned().collect();
        Ok(Some(self.update_on(&batch)?))
    }

    pub fn update_on(&mut self, batch: &[Transition]) -> Result<DdpgLosses> {
        let bsz = batch.len() as f64;
        let sd = self.state_dim();

        let mut gc = vec![0.0; self.critic.num_params()];
        let mut critic_loss = 0.0;
        for t in batch {
            let target = if t.done {
                t.reward
            } else {
                let z = self.target_actor.forward(&t.next_state)?;
                let a: Vec<f64> = z.into_iter().map(math::tanh).collect();
                let mut x = t.next_state.clone();
                x.extend_from_slice(&a);
                t.reward + self.params.discount * self.target_critic.forward(&x)?[0]
            };
            let mut x = t.state.clone();
            x.extend_from_slice(&t.action);
            let cache = self.critic.forward_cache(&x)?;
            let err = cache.output()[0] - target;
            critic_loss += err * err / bsz;
            self.critic.backward(&cache, &[2.0 * err / bsz], &mut gc)?;
        }
        self.critic_opt.step(&mut self.critic.params, &gc);

        let mut ga = vec![0.0; self.actor.num_params()];
        let mut scratch = vec![0.0; self.critic.num_params()];
        let mut actor_loss = 0.0;
        for t in batch {
            let ac = self.actor.forward_cache(&t.state)?;
            let a: Vec<f64> = ac.output().iter().map(|&z| math::tanh(z)).collect();
            let mut x = t.state.clone();
            x.extend_from_slice(&a);
            let cc = self.critic.forward_cache(&x)?;
            actor_loss -= cc.output()[0] / bsz;
            let dx = self.critic.backward(&cc, &[-1.0 / bsz], &mut scratch)?;
            let dz: Vec<f64> = dx[sd..].iter().zip(&a).map(|(d, a)| d * (1.0 - a * a)).collect();
            self.actor.backward(&ac, &dz, &mut ga)?;
        }
        self.actor_opt.step(&mut self.actor.params, &ga);

        self.soft_update(self.params.tau);
        self.updates += 1;
        Ok(DdpgLosses { critic: critic_loss, actor: actor_loss })
    }

    pub fn soft_update(&mut self, tau: f64) {
        self.target_actor.soft_update_from(&self.actor, tau);
        self.target_critic.soft_update_from(&self.critic, tau);
    }
}
