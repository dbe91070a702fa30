//! The slot loop: perception and hosting, the inner P1/P2/P3 iteration,
//! queue advancement, agent training and per-slot records.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{self, dqn::epsilon_at, DdpgAgent, DdpgParams, DqnAgent, DqnParams, Transition};
use crate::baselines;
use crate::channel::{self, Budgets, FadingParams};
use crate::config::{Config, Method};
use crate::cost::{self, CostBreakdown, EnergyParams};
use crate::error::{Error, Result};
use crate::lyapunov::{self, LyapunovConfig, ObjectiveContext, ObjectiveParams, Plan};
use crate::math;
use crate::perception::{self, PerceptionReport, RateModel};
use crate::queueing::{self, Limits, NetworkQueues, OffloadSplit, SlotDecision, TaskArrivals};
use crate::rng::{stream, substream, SimRng, Stream};
use crate::sghs;
use crate::world::{self, CoverageSets, DeviceState, DeviceType, Position, Topology, UavState};

/// Realized link rates of one slot (bit/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub rate_bs: Vec<Vec<f64>>,
    pub rate_sat: Vec<f64>,
    /// Device-to-UAV rates `[k][m]`.
    pub rate_dev_uav: Vec<Vec<f64>>,
    pub rate_dev_sat: Vec<f64>,
}

/// Samples every link of the scenario, in a fixed order, whether used or not.
pub fn sample_channels<R: Rng + ?Sized>(topo: &Topology, fp: &FadingParams, b: &Budgets, rng: &mut R) -> Result<ChannelState> {
    let mut rate_bs = Vec::with_capacity(topo.num_uavs());
    for uav in &topo.uavs {
        let mut row = Vec::with_capacity(topo.num_bs());
        for bs in &topo.bs_positions {
            let g = channel::ag_channel_gain(uav.pos.distance(bs), fp, rng)?;
            row.push(channel::rate(&b.uav_bs, &g));
        }
        rate_bs.push(row);
    }
    let mut rate_sat = Vec::with_capacity(topo.num_uavs());
    for uav in &topo.uavs {
        let g = channel::us_channel_gain(uav.pos.distance(&topo.satellite_pos), fp, rng)?;
        rate_sat.push(channel::rate(&b.uav_sat, &g));
    }
    let mut rate_dev_uav = Vec::with_capacity(topo.num_devices());
    for dev in &topo.devices {
        let mut row = Vec::with_capacity(topo.num_uavs());
        for uav in &topo.uavs {
            let g = channel::ag_channel_gain(uav.pos.distance(&dev.pos).max(1e-3), fp, rng)?;
            row.push(channel::rate(&b.device_uav, &g));
        }
        rate_dev_uav.push(row);
    }
    let mut rate_dev_sat = Vec::with_capacity(topo.num_devices());
    for dev in &topo.devices {
        let g = channel::us_channel_gain(dev.pos.distance(&topo.satellite_pos), fp, rng)?;
        rate_dev_sat.push(channel::rate(&b.device_sat, &g));
    }
    Ok(ChannelState { rate_bs, rate_sat, rate_dev_uav, rate_dev_sat })
}

/// Everything a record needs to recompute its costs offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotEnv {
    pub rate_bs: Vec<Vec<f64>>,
    pub rate_sat: Vec<f64>,
    /// Realized rate from each device to the UAV covering it, zero if uncovered.
    pub collect_rate: Vec<f64>,
    pub direct_rate: Vec<f64>,
    pub device_cover: Vec<Vec<usize>>,
    pub bs_cover: Vec<Vec<usize>>,
    pub f_bs_prev: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub t: u64,
    pub method: Method,
    pub decision: SlotDecision,
    pub arrivals: Vec<u64>,
    pub hosted: Vec<u64>,
    pub realized: Vec<OffloadSplit>,
    pub j_bs: Vec<Vec<u64>>,
    pub costs: Vec<CostBreakdown>,
    pub cost_total: f64,
    pub queues_before: NetworkQueues,
    pub queues_after: NetworkQueues,
    pub drift: f64,
    pub pi: f64,
    pub bound_rhs: f64,
    pub bound_ok: bool,
    pub inner_iters: usize,
    pub env: SlotEnv,
}

impl SlotRecord {
    pub fn mean_uav_backlog(&self) -> f64 {
        mean(self.queues_after.uav.iter().map(|&h| h as f64))
    }

    pub fn mean_bs_backlog(&self) -> f64 {
        mean(self.queues_after.bs.iter().flatten().map(|&h| h as f64))
    }

    /// Bits hosted this slot minus bits that left the network this slot.
    pub fn net_inflow(&self) -> i128 {
        let arrived: i128 = self.hosted.iter().map(|&b| b as i128).sum();
        let left: i128 = self.realized.iter().map(|r| (r.q_loc + r.q_sat) as i128).sum::<i128>()
            + self.j_bs.iter().flatten().map(|&j| j as i128).sum::<i128>();
        arrived - left
    }
}

fn mean<I: Iterator<Item = f64>>(it: I) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

pub fn objective_params(cfg: &Config) -> ObjectiveParams {
    let d = cfg.derived();
    ObjectiveParams {
        window: d.window,
        gamma: cfg.task.cycles_per_bit,
        uav_cpu_max: cfg.world.uav_cpu_max,
        bs_cpu_max: cfg.world.bs_cpu_max,
        sat_cpu_share: d.sat_cpu_share,
        energy: EnergyParams::from_config(cfg),
        lyap: LyapunovConfig { v_weight: cfg.lyapunov.v_weight, unit: cfg.lyapunov.queue_unit_bits },
    }
}

/// Devices dropped uniformly by area in the spawn annulus, UAVs at their
/// slot-zero trajectory points.
pub fn spawn_topology<R: Rng + ?Sized>(cfg: &Config, rng: &mut R) -> Topology {
    let w = &cfg.world;
    let c = w.trajectory_center;
    let mix_total: f64 = w.type_mix.iter().sum();
    let devices = (0..w.num_devices)
        .map(|id| {
            let (ri, ro) = (w.spawn_inner_radius, w.spawn_outer_radius);
            let r2 = rng.random_range(ri * ri..=ro * ro);
            let r = math::sqrt(r2);
            let theta = rng.random::<f64>() * math::TAU;
            let u = rng.random::<f64>() * mix_total;
            let heading = rng.random::<f64>() * math::TAU;
            let mut acc = 0.0;
            let mut ty = DeviceType::Vehicle;
            for (i, p) in w.type_mix.iter().enumerate() {
                acc += p;
                if u < acc {
                    ty = DeviceType::from_index(i).unwrap();
                    break;
                }
            }
            DeviceState {
                id,
                pos: Position::new(c[0] + r * math::cos(theta), c[1] + r * math::sin(theta), 0.0),
                speed: w.type_speeds[ty.index()],
                heading,
                device_type: ty,
                arrival_rate: cfg.task.arrival_rate * cfg.task.task_size_bits as f64,
            }
        })
        .collect();
    let traj = w.trajectory();
    let uavs = (0..w.num_uavs)
        .map(|m| UavState {
            id: m,
            pos: world::uav_position(m, 0, cfg.task.slot_len, &traj),
            coverage_radius: w.coverage_radius,
            cpu_max: w.uav_cpu_max,
            cycles_per_bit: cfg.task.cycles_per_bit,
        })
        .collect();
    let bs_positions = w.bs();
    Topology { devices, uavs, bs_cpu_max: vec![w.bs_cpu_max; bs_positions.len()], bs_positions, satellite_pos: w.satellite() }
}

/// Parameter-shared agents for P1 and P2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerAgents {
    pub ddpg: DdpgAgent,
    pub dqn: DqnAgent,
}

impl SchedulerAgents {
    pub fn new<R: Rng + ?Sized>(cfg: &Config, num_bs: usize, rng: &mut R) -> Self {
        let a = &cfg.agents;
        let dp = DdpgParams {
            actor_lr: a.actor_lr,
            critic_lr: a.critic_lr,
            discount: a.discount,
            tau: a.soft_tau,
            sigma: a.exploration_sigma,
            batch: a.batch_size,
        };
        let qp = DqnParams { lr: a.dqn_lr, discount: a.discount, target_sync: a.dqn_target_sync, batch: a.batch_size };
        Self {
            ddpg: DdpgAgent::new(agents::p1_state_dim(num_bs), agents::P1_ACTION_DIM, a.hidden, dp, a.replay_capacity, rng),
            dqn: DqnAgent::new(agents::p2_state_dim(num_bs), num_bs + 1, a.hidden, qp, a.replay_capacity, rng),
        }
    }
}

const REWARD_CLIP: f64 = 5.0;
const SCALE_FLOOR: f64 = 1e-9;

/// Reward of a P1 action relative to the idle action, normalized by the
/// largest gap among the pure strategies so every state has rewards of order one.
pub fn p1_reward(ctx: &ObjectiveContext, m: usize, y: Option<usize>, split: &OffloadSplit, f_u: f64) -> Result<f64> {
    let h = ctx.queues.uav[m];
    let idle = ctx.p1_uav(m, y, &OffloadSplit::default(), 0.0)?;
    let corners = [
        (OffloadSplit { q_loc: h, q_bs: 0, q_sat: 0 }, ctx.f_u_cap(m)),
        (OffloadSplit { q_loc: 0, q_bs: h, q_sat: 0 }, 0.0),
        (OffloadSplit { q_loc: 0, q_bs: 0, q_sat: h }, 0.0),
    ];
    let mut scale: f64 = SCALE_FLOOR;
    for (s, f) in &corners {
        scale = scale.max((ctx.p1_uav(m, y, s, *f)? - idle).abs());
    }
    let v = ctx.p1_uav(m, y, split, f_u)?;
    Ok((-(v - idle) / scale).clamp(-REWARD_CLIP, REWARD_CLIP))
}

pub fn p2_reward(ctx: &ObjectiveContext, m: usize, y: Option<usize>, split: &OffloadSplit, f_u: f64, f_bs: &[f64]) -> Result<f64> {
    let idle = ctx.p2_uav(m, None, split, f_u, f_bs)?;
    let mut scale: f64 = SCALE_FLOOR;
    for &n in &ctx.bs_cover[m] {
        scale = scale.max((ctx.p2_uav(m, Some(n), split, f_u, f_bs)? - idle).abs());
    }
    let v = ctx.p2_uav(m, y, split, f_u, f_bs)?;
    Ok((-(v - idle) / scale).clamp(-REWARD_CLIP, REWARD_CLIP))
}

struct Rngs {
    mobility: SimRng,
    arrivals: SimRng,
    channel: SimRng,
    perception: SimRng,
    policy: SimRng,
    exploration: SimRng,
    replay: SimRng,
    solver: SimRng,
}

impl Rngs {
    fn new(seed: u64) -> Self {
        Self {
            mobility: stream(seed, Stream::Mobility),
            arrivals: stream(seed, Stream::Arrivals),
            channel: stream(seed, Stream::Channel),
            perception: stream(seed, Stream::Perception),
            policy: stream(seed, Stream::Policy),
            exploration: stream(seed, Stream::Exploration),
            replay: stream(seed, Stream::Replay),
            solver: stream(seed, Stream::Solver),
        }
    }
}

/// One candidate decision of the inner loop.
#[derive(Debug, Clone)]
struct Candidate {
    association: Vec<Option<usize>>,
    split: Vec<OffloadSplit>,
    f_u: Vec<f64>,
}

/// State of one simulated run.
pub struct Simulation {
    pub cfg: Config,
    pub method: Method,
    pub seed: u64,
    pub topo: Topology,
    pub queues: NetworkQueues,
    pub t: u64,
    pub agents: Option<SchedulerAgents>,
    /// Slots the agents have acted in, across warm-up and measured runs.
    pub agent_steps: u64,
    f_bs_prev: Vec<Vec<f64>>,
    assoc_prev: Vec<Option<usize>>,
    rngs: Rngs,
    fading: FadingParams,
    budgets: Budgets,
    params: ObjectiveParams,
}

impl Simulation {
    pub fn new(cfg: &Config, method: Method, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let topo = spawn_topology(cfg, &mut stream(seed, Stream::Topology));
        let (mc, nc) = (topo.num_uavs(), topo.num_bs());
        let agents = (method != Method::Random).then(|| SchedulerAgents::new(cfg, nc, &mut stream(seed, Stream::AgentInit)));
        Ok(Self {
            cfg: cfg.clone(),
            method,
            seed,
            queues: NetworkQueues::zeros(mc, nc),
            t: 0,
            agents,
            agent_steps: 0,
            f_bs_prev: vec![vec![0.0; nc]; mc],
            assoc_prev: vec![None; mc],
            rngs: Rngs::new(seed),
            fading: FadingParams::from_config(&cfg.channel),
            budgets: Budgets::from_config(cfg),
            params: objective_params(cfg),
            topo,
        })
    }

    pub fn params(&self) -> &ObjectiveParams {
        &self.params
    }

    fn perceive_all(&mut self, cover: &CoverageSets) -> Vec<Vec<PerceptionReport>> {
        let rates = RateModel { fading: &self.fading, budget: &self.budgets.device_uav };
        let mut out = Vec::with_capacity(cover.device_cover.len());
        for (m, devs) in cover.device_cover.iter().enumerate() {
            let covered: Vec<&DeviceState> = devs.iter().map(|&k| &self.topo.devices[k]).collect();
            out.push(perception::perceive(&self.topo.uavs[m], &covered, &self.cfg.radar, &rates, &mut self.rngs.perception));
        }
        out
    }

    fn hosting(&mut self, cover: &CoverageSets, reports: &[Vec<PerceptionReport>], arrivals: &TaskArrivals) -> Vec<Option<usize>> {
        let k_count = self.topo.num_devices();
        let task = &self.cfg.task;
        match self.method {
            Method::Random => baselines::random_hosting(cover, k_count, &mut self.rngs.policy),
            method => {
                let worst = RateModel { fading: &self.fading, budget: &self.budgets.device_uav }.rate_at(self.cfg.world.coverage_radius);
                let mut hosting = vec![None; k_count];
                for (m, rs) in reports.iter().enumerate() {
                    for r in rs {
                        let r = if method == Method::PerceptionFree { baselines::perception_free_report(r, worst) } else { r.clone() };
                        if queueing::hosting_decision(&r, arrivals.bits[r.device_id], task.phase1_len, task.v_bar) {
                            hosting[r.device_id] = Some(m);
                        }
                    }
                }
                hosting
            }
        }
    }

    fn type_counts(&self, reports: &[Vec<PerceptionReport>]) -> Vec<[f64; 3]> {
        reports
            .iter()
            .map(|rs| {
                let mut c = [0.0; 3];
                if self.method != Method::PerceptionFree {
                    for r in rs {
                        c[r.est_type.index()] += 1.0;
                    }
                }
                c
            })
            .collect()
    }

    fn solve_p3(&mut self, ctx: &ObjectiveContext) -> Vec<Vec<f64>> {
        let inst = ctx.p3_instance();
        let mc = ctx.num_uavs();
        if inst.dim() == 0 {
            return vec![vec![0.0; ctx.num_bs()]; mc];
        }
        let warm = inst.encode(&inst.gather(&self.f_bs_prev));
        let f = if self.method == Method::SimAnnealing {
            let prev = inst.gather(&self.f_bs_prev);
            baselines::simulated_annealing_allocate(&inst, &self.cfg.sa, Some(&prev), &mut self.rngs.solver).0
        } else {
            let res = sghs::sghs_minimize(
                inst.dim(),
                |x| inst.value_unchecked(&inst.decode(x)),
                |x| {
                    let f = inst.decode(x);
                    x.copy_from_slice(&inst.encode(&f));
                },
                &self.cfg.sghs,
                self.cfg.sghs.ni_per_slot,
                Some(&warm),
                &mut self.rngs.solver,
            );
            inst.decode(&res.best.vector)
        };
        inst.scatter(&f, mc)
    }

    /// Inner loop of the learning-based methods. Returns the kept candidate
    /// and the number of iterations run.
    fn drl_decide(&mut self, ctx: &ObjectiveContext, ct: &[[f64; 3]], f_bs: &[Vec<f64>]) -> Result<(Candidate, usize)> {
        let mc = ctx.num_uavs();
        let ag_cfg = self.cfg.agents.clone();
        let terminal = ag_cfg.per_slot_terminal;
        let eps = epsilon_at(self.agent_steps, ag_cfg.epsilon_start, ag_cfg.epsilon_end, ag_cfg.epsilon_decay_steps);
        let complete = self.method == Method::CompleteOffload;
        let agents = self.agents.as_mut().ok_or_else(|| Error::Invariant("learning method without agents".into()))?;

        let mut y: Vec<Option<usize>> =
            (0..mc).map(|m| self.assoc_prev[m].filter(|n| ctx.bs_cover[m].contains(n))).collect();
        let mut best: Option<(f64, Candidate)> = None;
        let mut prev_rhs = f64::INFINITY;
        let mut iters = 0;
        for iter in 0..self.cfg.scheduler.inner_iters {
            iters = iter + 1;
            let explore = iter > 0;
            let mut split = Vec::with_capacity(mc);
            let mut f_u = Vec::with_capacity(mc);
            for m in 0..mc {
                let s = agents::p1_state(ctx, m, y[m], ct[m]);
                let a = agents.ddpg.act(&s, explore, &mut self.rngs.exploration)?;
                let (mut sp, f) = agents::decode_p1_action(&a, ctx.queues.uav[m], ctx.f_u_cap(m));
                if complete {
                    sp = baselines::complete_offload_split(ctx, m, y[m], f)?;
                }
                let f = ctx.useful_f_u(&sp, f);
                // With an empty backlog every action has the same outcome.
                if ctx.queues.uav[m] > 0 {
                    let r = p1_reward(ctx, m, y[m], &sp, f)?;
                    agents.ddpg.remember(Transition { state: s.clone(), action: a, reward: r, next_state: s, done: terminal });
                }
                split.push(sp);
                f_u.push(f);
            }
            let mut y_new = Vec::with_capacity(mc);
            for m in 0..mc {
                let s = agents::p2_state(ctx, m, &split[m], f_u[m], &f_bs[m]);
                let feasible = agents::feasible_actions(ctx, m);
                let e = if explore { eps } else { 0.0 };
                let a = agents.dqn.act(&s, &feasible, e, &mut self.rngs.exploration)?;
                let ym = agents::action_to_association(a);
                if feasible.len() > 1 {
                    let r = p2_reward(ctx, m, ym, &split[m], f_u[m], &f_bs[m])?;
                    agents.dqn.remember(Transition { state: s.clone(), action: vec![a as f64], reward: r, next_state: s, done: terminal });
                }
                y_new.push(ym);
            }
            y = y_new;
            let cand = Candidate { association: y.clone(), split, f_u };
            let plan = Plan { association: &cand.association, split: &cand.split, f_u: &cand.f_u, f_bs };
            let out = ctx.evaluate(&plan)?;
            let rhs = ctx.queue_bracket(&plan, &out) + ctx.params.lyap.v_weight * out.total_cost;
            if best.as_ref().is_none_or(|(b, _)| rhs < *b) {
                best = Some((rhs, cand));
            }
            if iter > 0 && rhs >= prev_rhs {
                break;
            }
            prev_rhs = rhs;
        }
        Ok((best.expect("at least one inner iteration").1, iters))
    }

    /// Advances the simulation by one slot.
    pub fn run_slot(&mut self) -> Result<SlotRecord> {
        let t = self.t;
        let traj = self.cfg.world.trajectory();
        for (m, uav) in self.topo.uavs.iter_mut().enumerate() {
            uav.pos = world::uav_position(m, t, self.cfg.task.slot_len, &traj);
        }
        let cover = world::coverage_sets(&self.topo, self.cfg.world.bs_coverage_radius);
        let arrivals = queueing::sample_arrivals(&self.topo.devices, self.cfg.task.task_size_bits, &mut self.rngs.arrivals);
        let ch = sample_channels(&self.topo, &self.fading, &self.budgets, &mut self.rngs.channel)?;
        let reports = self.perceive_all(&cover);
        let hosting = self.hosting(&cover, &reports, &arrivals);
        let ct = self.type_counts(&reports);

        let (mc, nc, kc) = (self.topo.num_uavs(), self.topo.num_bs(), self.topo.num_devices());
        let mut collect_rate = vec![0.0; kc];
        for (m, devs) in cover.device_cover.iter().enumerate() {
            for &k in devs {
                collect_rate[k] = ch.rate_dev_uav[k][m];
            }
        }
        let env = SlotEnv {
            rate_bs: ch.rate_bs.clone(),
            rate_sat: ch.rate_sat.clone(),
            collect_rate,
            direct_rate: ch.rate_dev_sat.clone(),
            device_cover: cover.device_cover.clone(),
            bs_cover: cover.bs_cover.clone(),
            f_bs_prev: self.f_bs_prev.clone(),
        };
        let ctx = build_context(&self.queues, &hosting, &arrivals.bits, &env, &self.params)?;

        let (assoc, split, f_u, f_bs, inner_iters) = match self.method {
            Method::Random => {
                let d = baselines::random_policy(&ctx, &mut self.rngs.policy);
                (d.association, d.split, d.f_u, d.f_bs, 1)
            }
            _ => {
                let f_bs = self.solve_p3(&ctx);
                let (c, it) = self.drl_decide(&ctx, &ct, &f_bs)?;
                (c.association, c.split, c.f_u, f_bs, it)
            }
        };
        let decision = SlotDecision { hosting, association: assoc, split, f_u, f_bs };
        let limits = Limits { uav_cpu_max: self.params.uav_cpu_max, bs_cpu_max: self.params.bs_cpu_max, cover: &cover };
        queueing::validate_decision(&decision, &self.queues, &limits)?;

        let plan = Plan { association: &decision.association, split: &decision.split, f_u: &decision.f_u, f_bs: &decision.f_bs };
        let out = ctx.evaluate(&plan)?;
        let queues_after = advance_queues(&self.queues, &ctx.hosted, &decision.association, &out)?;
        let lyap = self.params.lyap;
        let drift = lyapunov::sample_drift(&self.queues, &queues_after, &lyap);
        let pi = ctx.pi_constant();
        let bound_rhs = ctx.theorem1_rhs(&plan, &out);
        let lhs = lyapunov::drift_plus_penalty(drift, out.total_cost, lyap.v_weight);
        let scale = lyapunov::lyapunov_value(&self.queues, &lyap) + lyapunov::lyapunov_value(&queues_after, &lyap) + bound_rhs.abs();
        let bound_ok = lyapunov::bound_holds(lhs, bound_rhs, scale);

        let record = SlotRecord {
            t,
            method: self.method,
            arrivals: arrivals.bits.clone(),
            hosted: ctx.hosted.clone(),
            realized: out.realized.clone(),
            j_bs: out.j_bs.clone(),
            costs: out.costs.clone(),
            cost_total: out.total_cost,
            queues_before: self.queues.clone(),
            queues_after: queues_after.clone(),
            drift,
            pi,
            bound_rhs,
            bound_ok,
            inner_iters,
            env,
            decision,
        };

        if let Some(agents) = self.agents.as_mut() {
            let a = &self.cfg.agents;
            if agents.ddpg.replay.len() >= a.train_start {
                for _ in 0..a.updates_per_slot {
                    agents.ddpg.update(&mut self.rngs.replay)?;
                    agents.dqn.update(&mut self.rngs.replay)?;
                }
            }
            self.agent_steps += 1;
        }

        for d in self.topo.devices.iter_mut() {
            *d = world::step_device(d, self.cfg.task.slot_len, self.cfg.world.p_turn, &mut self.rngs.mobility);
        }
        self.f_bs_prev = record.decision.f_bs.clone();
        self.assoc_prev = record.decision.association.clone();
        self.queues = queues_after;
        self.t += 1;
        debug_assert_eq!(record.queues_after.uav.len(), mc);
        debug_assert_eq!(record.j_bs.first().map_or(0, Vec::len), nc);
        Ok(record)
    }
}

/// Rebuilds the objective context of a slot from logged quantities.
pub fn build_context(queues: &NetworkQueues, hosting: &[Option<usize>], arrivals: &[u64], env: &SlotEnv, params: &ObjectiveParams) -> Result<ObjectiveContext> {
    let mc = queues.uav.len();
    let ep = &params.energy;
    let mut hosted = vec![0u64; mc];
    let mut covered_arrivals = vec![0u64; mc];
    let mut collect_cost = vec![0.0; mc];
    let mut direct_cost = vec![0.0; mc];
    for (m, devs) in env.device_cover.iter().enumerate() {
        for &k in devs {
            let d = arrivals[k];
            covered_arrivals[m] += d;
            match hosting[k] {
                Some(h) if h == m => {
                    hosted[m] += d;
                    collect_cost[m] += cost::collection_cost([(d as f64, env.collect_rate[k])], ep.device_tx_power)?;
                }
                Some(h) => return Err(Error::ConstraintViolation(format!("hosting: device {k} covered by {m} but hosted by {h}"))),
                None => direct_cost[m] += cost::direct_sat_cost(d as f64, env.direct_rate[k], params.gamma, ep)?,
            }
        }
    }
    Ok(ObjectiveContext {
        queues: queues.clone(),
        hosted,
        covered_arrivals,
        rate_bs: env.rate_bs.clone(),
        rate_sat: env.rate_sat.clone(),
        bs_cover: env.bs_cover.clone(),
        collect_cost,
        direct_cost,
        f_bs_prev: env.f_bs_prev.clone(),
        params: *params,
    })
}

pub fn advance_queues(q: &NetworkQueues, hosted: &[u64], association: &[Option<usize>], out: &lyapunov::Outcome) -> Result<NetworkQueues> {
    let mut next = q.clone();
    for m in 0..q.uav.len() {
        next.uav[m] = queueing::advance_uav_queue(q.uav[m], &out.realized[m], hosted[m])?;
        for n in 0..q.bs[m].len() {
            let on = association[m] == Some(n);
            next.bs[m][n] = queueing::advance_bs_queue(q.bs[m][n], out.j_bs[m][n], on, out.realized[m].q_bs);
        }
    }
    Ok(next)
}

/// Re-derives a record's costs, service and next queues from its logged
/// decision and environment; returns a description of the first mismatch.
pub fn audit_record(rec: &SlotRecord, params: &ObjectiveParams) -> core::result::Result<(), String> {
    let ctx = build_context(&rec.queues_before, &rec.decision.hosting, &rec.arrivals, &rec.env, params).map_err(|e| format!("slot {}: {e}", rec.t))?;
    if ctx.hosted != rec.hosted {
        return Err(format!("slot {}: hosted load differs", rec.t));
    }
    let d = &rec.decision;
    let plan = Plan { association: &d.association, split: &d.split, f_u: &d.f_u, f_bs: &d.f_bs };
    let out = ctx.evaluate(&plan).map_err(|e| format!("slot {}: {e}", rec.t))?;
    if out.realized != rec.realized || out.j_bs != rec.j_bs {
        return Err(format!("slot {}: realized service differs", rec.t));
    }
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
    for (m, (c, r)) in out.costs.iter().zip(&rec.costs).enumerate() {
        for (name, x, y) in [
            ("collect", c.collect, r.collect),
            ("local", c.local, r.local),
            ("bs", c.bs, r.bs),
            ("sat", c.sat, r.sat),
            ("direct_sat", c.direct_sat, r.direct_sat),
            ("total", c.total, r.total),
        ] {
            if !close(x, y) {
                return Err(format!("slot {}: UAV {m} {name} cost {y} recomputes to {x}", rec.t));
            }
        }
    }
    if !close(out.total_cost, rec.cost_total) {
        return Err(format!("slot {}: total cost {} recomputes to {}", rec.t, rec.cost_total, out.total_cost));
    }
    let next = advance_queues(&rec.queues_before, &rec.hosted, &d.association, &out).map_err(|e| format!("slot {}: {e}", rec.t))?;
    if next != rec.queues_after {
        return Err(format!("slot {}: next queues differ", rec.t));
    }
    Ok(())
}

/// Exact flow balance over a run: hosted − served = final − initial backlog.
pub fn flow_error(records: &[SlotRecord]) -> i128 {
    let Some(first) = records.first() else { return 0 };
    let last = records.last().unwrap();
    let inflow: i128 = records.iter().map(SlotRecord::net_inflow).sum();
    let delta = last.queues_after.total_bits() as i128 - first.queues_before.total_bits() as i128;
    inflow - delta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: Method,
    pub seed: u64,
    pub slots: u64,
    pub v_weight: f64,
    /// Time-averaged total network cost per slot.
    pub avg_cost: f64,
    pub avg_components: CostBreakdown,
    /// Time average of the mean UAV backlog (bits).
    pub avg_uav_backlog: f64,
    pub avg_bs_backlog: f64,
    pub bound_violations: u64,
    pub flow_error: i64,
    pub hosted_bits: u64,
    pub arrived_bits: u64,
    pub mean_inner_iters: f64,
}

pub fn summary_of(records: &[SlotRecord], seed: u64, v_weight: f64) -> Summary {
    let n = records.len().max(1) as f64;
    let mut comp = CostBreakdown::default();
    for r in records {
        for c in &r.costs {
            comp.add(c);
        }
    }
    for x in [&mut comp.collect, &mut comp.local, &mut comp.bs, &mut comp.sat, &mut comp.direct_sat, &mut comp.total] {
        *x /= n;
    }
    Summary {
        method: records.first().map_or(Method::DrlPerception, |r| r.method),
        seed,
        slots: records.len() as u64,
        v_weight,
        avg_cost: records.iter().map(|r| r.cost_total).sum::<f64>() / n,
        avg_components: comp,
        avg_uav_backlog: records.iter().map(SlotRecord::mean_uav_backlog).sum::<f64>() / n,
        avg_bs_backlog: records.iter().map(SlotRecord::mean_bs_backlog).sum::<f64>() / n,
        bound_violations: records.iter().filter(|r| !r.bound_ok).count() as u64,
        flow_error: flow_error(records) as i64,
        hosted_bits: records.iter().flat_map(|r| r.hosted.iter()).sum(),
        arrived_bits: records.iter().flat_map(|r| r.arrivals.iter()).sum(),
        mean_inner_iters: records.iter().map(|r| r.inner_iters as f64).sum::<f64>() / n,
    }
}

/// Per-slot values with their running time averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunningRow {
    pub t: u64,
    pub cost: f64,
    pub running_cost: f64,
    pub uav_backlog: f64,
    pub running_uav_backlog: f64,
    pub bs_backlog: f64,
    pub running_bs_backlog: f64,
}

pub fn summarize(records: &[SlotRecord]) -> Vec<RunningRow> {
    let (mut c, mut u, mut b) = (0.0, 0.0, 0.0);
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let n = (i + 1) as f64;
            let (cost, hu, hb) = (r.cost_total, r.mean_uav_backlog(), r.mean_bs_backlog());
            c += cost;
            u += hu;
            b += hb;
            RunningRow { t: r.t, cost, running_cost: c / n, uav_backlog: hu, running_uav_backlog: u / n, bs_backlog: hb, running_bs_backlog: b / n }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub records: Vec<SlotRecord>,
    pub summary: Summary,
}

/// Seed used for the agents' pre-training world.
const WARMUP_SALT: u64 = 0x5741_524D;

/// Runs one method for `cfg.experiment.slots` slots. With warm-up enabled the
/// agents first train on an independent world; the measured world is then
/// the same for every method under the same seed.
pub fn run_experiment(cfg: &Config, method: Method, seed: u64) -> Result<Experiment> {
    let mut sim = Simulation::new(cfg, method, seed)?;
    if cfg.scheduler.warmup_slots > 0 && method != Method::Random {
        let mut pre = Simulation::new(cfg, method, seed ^ WARMUP_SALT)?;
        pre.rngs.exploration = substream(seed, Stream::Exploration, 1);
        for _ in 0..cfg.scheduler.warmup_slots {
            pre.run_slot()?;
        }
        sim.agents = pre.agents.take();
        sim.agent_steps = pre.agent_steps;
    }
    let mut records = Vec::with_capacity(cfg.experiment.slots as usize);
    for _ in 0..cfg.experiment.slots {
        records.push(sim.run_slot()?);
    }
    let summary = summary_of(&records, seed, cfg.lyapunov.v_weight);
    Ok(Experiment { records, summary })
}
