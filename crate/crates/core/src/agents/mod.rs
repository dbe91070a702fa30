//! Learning agents and the state/action encodings that connect them to the
//! scheduling subproblems.
//!
//! Both agents act per UAV with parameters shared across UAVs, so their
//! dimensions depend only on the number of BSs.

pub mod adam;
pub mod checkpoint;
pub mod ddpg;
pub mod dqn;
pub mod mlp;
pub mod replay;

use alloc::vec::Vec;

use crate::lyapunov::ObjectiveContext;
use crate::math;
use crate::queueing::{self, OffloadSplit};

pub use ddpg::{DdpgAgent, DdpgParams};
pub use dqn::{DqnAgent, DqnParams};
pub use mlp::Mlp;
pub use replay::{ReplayBuffer, Transition};

/// Three split logits plus the UAV frequency.
pub const P1_ACTION_DIM: usize = 4;

/// Softmax sharpness applied to the actor's split outputs in `[-1,1]`.
pub const SPLIT_SHARPNESS: f64 = 6.0;

const RATE_SCALE: f64 = 1e6;

fn log_units(x: f64, unit: f64) -> f64 {
    math::ln_1p(x.max(0.0) / unit) / 5.0
}

/// Split fractions `softmax(k·a[0..3])` and `f_u = cap·(a₃+1)/2`.
pub fn decode_p1_action(a: &[f64], h: u64, f_cap: f64) -> (OffloadSplit, f64) {
    let z = [SPLIT_SHARPNESS * a[0], SPLIT_SHARPNESS * a[1], SPLIT_SHARPNESS * a[2]];
    let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = z.map(|v| math::exp(v - zmax));
    let s: f64 = e.iter().sum();
    let frac = e.map(|v| v / s);
    let f = (f_cap.max(0.0) * 0.5 * (a[3].clamp(-1.0, 1.0) + 1.0)).clamp(0.0, f_cap.max(0.0));
    (OffloadSplit::from_fractions(h, frac), f)
}

pub fn p1_state_dim(_num_bs: usize) -> usize {
    11
}

/// P1 state of UAV `m`: own and associated backlogs, new load, link rates,
/// local capacity and the perceived device-type counts.
pub fn p1_state(ctx: &ObjectiveContext, m: usize, y: Option<usize>, type_counts: [f64; 3]) -> Vec<f64> {
    let p = &ctx.params;
    let u = p.lyap.unit;
    let best_bs = ctx.bs_cover[m].iter().map(|&n| ctx.rate_bs[m][n]).fold(0.0, f64::max);
    let h_bs = y.map_or(0.0, |n| ctx.queues.bs[m][n] as f64);
    let local_cap = queueing::cpu_capacity(p.uav_cpu_max, p.window, p.gamma) as f64;
    let mut s = Vec::with_capacity(11);
    s.push(log_units(ctx.queues.uav[m] as f64, u));
    s.push(log_units(ctx.hosted[m] as f64, u));
    s.push(log_units(ctx.assoc_rate(m, y), RATE_SCALE));
    s.push(log_units(ctx.rate_sat[m], RATE_SCALE));
    s.push(log_units(best_bs, RATE_SCALE));
    s.push(log_units(local_cap, u));
    s.push(log_units(h_bs, u));
    s.push(if y.is_some() { 1.0 } else { 0.0 });
    for c in type_counts {
        s.push(c / 10.0);
    }
    s
}

pub fn p2_state_dim(num_bs: usize) -> usize {
    6 + 4 * num_bs
}

/// P2 state of UAV `m` given the P1 plan and the BS allocation in force.
pub fn p2_state(ctx: &ObjectiveContext, m: usize, planned: &OffloadSplit, f_u: f64, f_bs: &[f64]) -> Vec<f64> {
    let p = &ctx.params;
    let u = p.lyap.unit;
    let h = ctx.queues.uav[m];
    let frac = |q: u64| if h > 0 { q as f64 / h as f64 } else { 0.0 };
    let mut s = Vec::with_capacity(p2_state_dim(ctx.num_bs()));
    s.push(log_units(ctx.hosted[m] as f64, u));
    s.push(log_units(h as f64, u));
    s.push(frac(planned.q_loc));
    s.push(frac(planned.q_bs));
    s.push(frac(planned.q_sat));
    s.push(f_u / p.uav_cpu_max);
    for n in 0..ctx.num_bs() {
        let covered = ctx.bs_cover[m].contains(&n);
        s.push(log_units(ctx.queues.bs[m][n] as f64, u));
        s.push(if covered { log_units(ctx.rate_bs[m][n], RATE_SCALE) } else { 0.0 });
        s.push(if covered { 1.0 } else { 0.0 });
        s.push(f_bs[n] / p.bs_cpu_max);
    }
    s
}

/// DQN action index of an association: 0 for none, `n + 1` for BS `n`.
pub fn association_to_action(y: Option<usize>) -> usize {
    y.map_or(0, |n| n + 1)
}

pub fn action_to_association(a: usize) -> Option<usize> {
    a.checked_sub(1)
}

/// Feasible DQN actions of UAV `m`.
pub fn feasible_actions(ctx: &ObjectiveContext, m: usize) -> Vec<usize> {
    let mut v = Vec::with_capacity(ctx.bs_cover[m].len() + 1);
    v.push(0);
    v.extend(ctx.bs_cover[m].iter().map(|&n| n + 1));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use rand::Rng;

    #[test]
    fn midpoint_action_is_equal_thirds() {
        let (s, f) = decode_p1_action(&[0.0, 0.0, 0.0, 0.0], 3_000_000, 3e8);
        assert_eq!(s, OffloadSplit { q_loc: 1_000_000, q_bs: 1_000_000, q_sat: 1_000_000 });
        assert_eq!(f, 1.5e8);
    }

    #[test]
    fn decoded_actions_are_feasible() {
        let mut rng = stream(1, Stream::Policy);
        for _ in 0..10_000 {
            let a: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let h = rng.random_range(0..100_000_000u64);
            let cap = rng.random_range(0.0..3e8);
            let (s, f) = decode_p1_action(&a, h, cap);
            assert!(s.total() <= h);
            assert!((0.0..=cap).contains(&f));
        }
    }

    #[test]
    fn action_index_round_trip() {
        for y in [None, Some(0), Some(3)] {
            assert_eq!(action_to_association(association_to_action(y)), y);
        }
    }
}
