//! Deep Q-learning over a small discrete action set with a hard-synced target.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::mlp::Mlp;
use super::replay::{ReplayBuffer, Transition};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DqnParams {
    pub lr: f64,
    pub discount: f64,
    pub target_sync: usize,
    pub batch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqnAgent {
    pub q: Mlp,
    pub target: Mlp,
    opt: Adam,
    pub replay: ReplayBuffer,
    pub params: DqnParams,
    pub updates: u64,
}

/// Linear decay from `start` to `end` over `steps`.
pub fn epsilon_at(step: u64, start: f64, end: f64, steps: usize) -> f64 {
    if steps == 0 || step as f64 >= steps as f64 {
        return end;
    }
    start + (end - start) * step as f64 / steps as f64
}

impl DqnAgent {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, num_actions: usize, hidden: [usize; 2], params: DqnParams, capacity: usize, rng: &mut R) -> Self {
        let q = Mlp::new(&[state_dim, hidden[0], hidden[1], num_actions], rng);
        Self { target: q.clone(), opt: Adam::new(q.num_params(), params.lr), q, replay: ReplayBuffer::new(capacity), params, updates: 0 }
    }

    pub fn num_actions(&self) -> usize {
        self.q.output_dim()
    }

    pub fn q_values(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.q.forward(state)
    }

    /// Greedy action over `feasible`, ties to the earliest listed.
    pub fn greedy(&self, state: &[f64], feasible: &[usize]) -> Result<usize> {
        let q = self.q_values(state)?;
        let mut best = feasible[0];
        for &a in &feasible[1..] {
            if q[a] > q[best] {
                best = a;
            }
        }
        Ok(best)
    }

    /// ε-greedy restricted to `feasible` (nonempty). Always consumes two draws.
    pub fn act<R: Rng + ?Sized>(&self, state: &[f64], feasible: &[usize], epsilon: f64, rng: &mut R) -> Result<usize> {
        assert!(!feasible.is_empty(), "no feasible action");
        let u: f64 = rng.random();
        let pick = rng.random_range(0..feasible.len());
        if u < epsilon {
            Ok(feasible[pick])
        } else {
            self.greedy(state, feasible)
        }
    }

    pub fn remember(&mut self, t: Transition) {
        self.replay.push(t);
    }

    pub fn update<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<f64>> {
        if self.replay.is_empty() {
            return Ok(None);
        }
        let batch: Vec<Transition> = self.replay.sample(self.params.batch.max(1), rng).into_iter().cloned().collect();
        Ok(Some(self.update_on(&batch)?))
    }

    /// One temporal-difference step; returns the batch MSE.
    pub fn update_on(&mut self, batch: &[Transition]) -> Result<f64> {
        let bsz = batch.len() as f64;
        let na = self.num_actions();
        let mut g = vec![0.0; self.q.num_params()];
        let mut loss = 0.0;
        for t in batch {
            let target = if t.done {
                t.reward
            } else {
                let qn = self.target.forward(&t.next_state)?;
                t.reward + self.params.discount * qn.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            };
            let a = t.action[0] as usize;
            let cache = self.q.forward_cache(&t.state)?;
            let err = cache.output()[a] - target;
            loss += err * err / bsz;
            let mut dout = vec![0.0; na];
            dout[a] = 2.0 * err / bsz;
            self.q.backward(&cache, &dout, &mut g)?;
        }
        self.opt.step(&mut self.q.params, &g);
        self.updates += 1;
        if self.params.target_sync > 0 && self.updates.is_multiple_of(self.params.target_sync as u64) {
            self.target = self.q.clone();
        }
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn params(discount: f64) -> DqnParams {
        DqnParams { lr: 1e-3, discount, target_sync: 100, batch: 32 }
    }

    #[test]
    fn epsilon_schedule() {
        assert_eq!(epsilon_at(0, 1.0, 0.05, 5000), 1.0);
        assert!((epsilon_at(2500, 1.0, 0.05, 5000) - 0.525).abs() < 1e-12);
        assert_eq!(epsilon_at(9000, 1.0, 0.05, 5000), 0.05);
    }

    #[test]
    fn epsilon_one_is_uniform_over_feasible() {
        let mut rng = stream(1, Stream::AgentInit);
        let ag = DqnAgent::new(2, 4, [8, 8], params(0.0), 10, &mut rng);
        let feasible = [0, 2, 3];
        let mut counts = [0usize; 4];
        let n = 10_000;
        for _ in 0..n {
            counts[ag.act(&[0.5, -0.5], &feasible, 1.0, &mut rng).unwrap()] += 1;
        }
        assert_eq!(counts[1], 0);
        let e = n as f64 / 3.0;
        let chi2: f64 = feasible.iter().map(|&a| (counts[a] as f64 - e).powi(2) / e).sum();
        // χ²(2) critical value at p = 0.01.
        assert!(chi2 < 9.21, "{chi2}");
        let g = ag.act(&[0.5, -0.5], &feasible, 0.0, &mut rng).unwrap();
        assert_eq!(g, ag.greedy(&[0.5, -0.5], &feasible).unwrap());
    }

    #[test]
    fn zero_reward_converges_to_zero() {
        let mut rng = stream(2, Stream::AgentInit);
        let mut ag = DqnAgent::new(2, 2, [8, 8], params(0.0), 100, &mut rng);
        let batch: Vec<Transition> = (0..4)
            .map(|i| Transition { state: vec![(i % 2) as f64, 1.0], action: vec![(i / 2) as f64], reward: 0.0, next_state: vec![0.0, 1.0], done: false })
            .collect();
        for _ in 0..3000 {
            ag.update_on(&batch).unwrap();
        }
        for s in [[0.0, 1.0], [1.0, 1.0]] {
            assert!(ag.q_values(&s).unwrap().iter().all(|q| q.abs() < 1e-2));
        }
    }

    /// States 0 and 1; action 0 stays, action 1 switches. Reward 1 for
    /// staying in state 1, zero otherwise; γ = 0.5.
    /// Q*(1,0) = 2, Q*(0,1) = 1, Q*(0,0) = 0.5, Q*(1,1) = 0.5.
    #[test]
    fn two_state_mdp_matches_tabular() {
        let mut rng = stream(3, Stream::AgentInit);
        let mut p = params(0.5);
        p.batch = 4;
        let mut ag = DqnAgent::new(2, 2, [16, 16], p, 100, &mut rng);
        let one_hot = |s: usize| if s == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] };
        for s in 0..2 {
            for a in 0..2 {
                let next = if a == 0 { s } else { 1 - s };
                let r = if s == 1 && a == 0 { 1.0 } else { 0.0 };
                ag.remember(Transition { state: one_hot(s), action: vec![a as f64], reward: r, next_state: one_hot(next), done: false });
            }
        }
        let mut data = stream(3, Stream::Replay);
        for _ in 0..5000 {
            ag.update(&mut data).unwrap();
        }
        let want = [[0.5, 1.0], [2.0, 0.5]];
        for s in 0..2 {
            let q = ag.q_values(&one_hot(s)).unwrap();
            for a in 0..2 {
                assert!((q[a] - want[s][a]).abs() <= 0.05 * want[s][a], "Q({s},{a}) = {}", q[a]);
            }
        }
    }
}
