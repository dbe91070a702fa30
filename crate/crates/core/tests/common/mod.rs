//! Random slot contexts shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use sagin_core::config::Config;
use sagin_core::lyapunov::ObjectiveContext;
use sagin_core::orchestrator::objective_params;
use sagin_core::queueing::{NetworkQueues, OffloadSplit};

/// A context with default parameters and randomized queues, rates and coverage.
/// `h_max` bounds the UAV backlogs.
pub fn random_context<R: Rng>(mc: usize, nc: usize, h_max: u64, rng: &mut R) -> ObjectiveContext {
    let mut cfg = Config::default();
    cfg.lyapunov.v_weight = rng.random_range(0.1..10.0);
    let params = objective_params(&cfg);
    let hosted: Vec<u64> = (0..mc).map(|_| rng.random_range(0..20_000_000)).collect();
    ObjectiveContext {
        queues: NetworkQueues {
            uav: (0..mc).map(|_| rng.random_range(0..=h_max)).collect(),
            bs: (0..mc).map(|_| (0..nc).map(|_| if rng.random_bool(0.25) { 0 } else { rng.random_range(0..8_000_000) }).collect()).collect(),
        },
        covered_arrivals: hosted.iter().map(|&d| d + rng.random_range(0..40_000_000)).collect(),
        hosted,
        rate_bs: (0..mc).map(|_| (0..nc).map(|_| rng.random_range(1e4..5e8)).collect()).collect(),
        rate_sat: (0..mc).map(|_| rng.random_range(1e6..3e9)).collect(),
        bs_cover: (0..mc).map(|_| (0..nc).filter(|_| rng.random_bool(0.6)).collect()).collect(),
        collect_cost: (0..mc).map(|_| rng.random_range(0.0..1.0)).collect(),
        direct_cost: (0..mc).map(|_| rng.random_range(0.0..50.0)).collect(),
        f_bs_prev: (0..mc).map(|_| (0..nc).map(|_| rng.random_range(0.0..params.bs_cpu_max / mc as f64)).collect()).collect(),
        params,
    }
}

/// Uniform split fractions, frequencies and per-BS allocations that respect
/// the BS capacity, plus a feasible association.
pub struct RandomPlan {
    pub association: Vec<Option<usize>>,
    pub split: Vec<OffloadSplit>,
    pub f_u: Vec<f64>,
    pub f_bs: Vec<Vec<f64>>,
}

pub fn random_plan<R: Rng>(ctx: &ObjectiveContext, rng: &mut R) -> RandomPlan {
    let mc = ctx.num_uavs();
    let nc = ctx.num_bs();
    let association = (0..mc)
        .map(|m| {
            let c = &ctx.bs_cover[m];
            if c.is_empty() || rng.random_bool(0.3) {
                None
            } else {
                Some(c[rng.random_range(0..c.len())])
            }
        })
        .collect();
    let split = (0..mc)
        .map(|m| {
            let mut w = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            let s: f64 = w.iter().sum::<f64>() + rng.random::<f64>();
            for x in &mut w {
                *x /= s;
            }
            OffloadSplit::from_fractions(ctx.queues.uav[m], w)
        })
        .collect();
    let f_u = (0..mc).map(|_| rng.random_range(0.0..=ctx.params.uav_cpu_max)).collect();
    let f_bs = (0..mc).map(|_| (0..nc).map(|_| rng.random_range(0.0..ctx.params.bs_cpu_max / mc as f64)).collect()).collect();
    RandomPlan { association, split, f_u, f_bs }
}
