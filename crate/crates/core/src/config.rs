//! Experiment configuration with the reference scenario as defaults.
//!
//! Every section deserializes with defaults for missing keys and rejects
//! unknown ones, so an empty document yields the full reference scenario.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::world::{Position, TrajectoryConfig};

/// Scheduling method under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DrlPerception,
    Random,
    CompleteOffload,
    PerceptionFree,
    SimAnnealing,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::DrlPerception,
        Method::SimAnnealing,
        Method::PerceptionFree,
        Method::CompleteOffload,
        Method::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::DrlPerception => "drl_perception",
            Method::Random => "random",
            Method::CompleteOffload => "complete_offload",
            Method::PerceptionFree => "perception_free",
            Method::SimAnnealing => "sim_annealing",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Self::ALL.iter().copied().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub method: Method,
    /// Horizon T in slots.
    pub slots: u64,
    pub seeds: Vec<u64>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self { method: Method::DrlPerception, slots: 200, seeds: vec![1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldSection {
    pub num_devices: usize,
    pub num_uavs: usize,
    pub trajectory_center: [f64; 3],
    pub trajectory_radius: f64,
    pub uav_speed: f64,
    pub coverage_radius: f64,
    /// Horizontal radius within which a UAV can reach a BS.
    pub bs_coverage_radius: f64,
    pub bs_positions: Vec<[f64; 3]>,
    pub bs_cpu_max: f64,
    pub uav_cpu_max: f64,
    pub satellite_pos: [f64; 3],
    pub satellite_cpu: f64,
    pub p_turn: f64,
    /// Ground speeds for pedestrian, cyclist, vehicle (m/s).
    pub type_speeds: [f64; 3],
    /// Population mix over pedestrian, cyclist, vehicle.
    pub type_mix: [f64; 3],
    /// Devices are dropped uniformly (by area) in this annulus around the trajectory center.
    pub spawn_inner_radius: f64,
    pub spawn_outer_radius: f64,
}

impl Default for WorldSection {
    fn default() -> Self {
        Self {
            num_devices: 10,
            num_uavs: 5,
            trajectory_center: [1000.0, 0.0, 100.0],
            trajectory_radius: 1000.0,
            uav_speed: 16.67,
            coverage_radius: 500.0,
            bs_coverage_radius: 1000.0,
            bs_positions: vec![[500.0, 0.0, 0.0], [1500.0, 0.0, 0.0]],
            bs_cpu_max: 5e9,
            uav_cpu_max: 3e8,
            satellite_pos: [1000.0, 0.0, 780_000.0],
            satellite_cpu: 10e9,
            p_turn: 0.2,
            type_speeds: [1.5, 5.0, 15.0],
            type_mix: [0.5, 0.3, 0.2],
            spawn_inner_radius: 500.0,
            spawn_outer_radius: 1500.0,
        }
    }
}

impl WorldSection {
    pub fn trajectory(&self) -> TrajectoryConfig {
        let c = self.trajectory_center;
        TrajectoryConfig {
            center: Position::new(c[0], c[1], c[2]),
            radius: self.trajectory_radius,
            speed: self.uav_speed,
            num_uavs: self.num_uavs,
        }
    }

    pub fn bs(&self) -> Vec<Position> {
        self.bs_positions.iter().map(|p| Position::new(p[0], p[1], p[2])).collect()
    }

    pub fn satellite(&self) -> Position {
        let p = self.satellite_pos;
        Position::new(p[0], p[1], p[2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSection {
    /// Slot length τ (s).
    pub slot_len: f64,
    /// Phase-1 duration Δ (s).
    pub phase1_len: f64,
    /// Cycles per bit γ, shared by UAVs and devices.
    pub cycles_per_bit: f64,
    pub task_size_bits: u64,
    /// Mean number of tasks per device per slot.
    pub arrival_rate: f64,
    /// Speed threshold v̄ above which a device is never hosted (m/s).
    pub v_bar: f64,
}

impl Default for TaskSection {
    fn default() -> Self {
        Self {
            slot_len: 1.0,
            phase1_len: 0.1,
            cycles_per_bit: 1000.0,
            task_size_bits: 80_000_000,
            arrival_rate: 0.1,
            v_bar: 10.0,
        }
    }
}

impl TaskSection {
    /// Processing window τ − Δ.
    pub fn window(&self) -> f64 {
        self.slot_len - self.phase1_len
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub carrier_freq: f64,
    pub bandwidth_c: f64,
    pub bandwidth_ka: f64,
    pub noise_psd_dbm_hz: f64,
    pub shadow_fading: f64,
    pub pathloss_exp_ag: f64,
    pub rician_k: f64,
    pub pathloss_exp_los: f64,
    pub pathloss_exp_nlos: f64,
    pub wavelength_ka: f64,
    pub sat_antenna_gain_dbi: f64,
    pub uav_bs_tx_dbm: f64,
    pub uav_sat_tx_dbm: f64,
    pub device_sat_tx_dbm: f64,
    pub device_uav_tx_dbm: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            carrier_freq: 4e9,
            bandwidth_c: 4e8,
            bandwidth_ka: 4e8,
            noise_psd_dbm_hz: -174.0,
            shadow_fading: 1.0,
            pathloss_exp_ag: 2.7,
            rician_k: 7.0,
            pathloss_exp_los: 2.0,
            pathloss_exp_nlos: 3.0,
            wavelength_ka: 0.01,
            sat_antenna_gain_dbi: 43.3,
            uav_bs_tx_dbm: 1.6,
            uav_sat_tx_dbm: 5.0,
            device_sat_tx_dbm: 5.0,
            device_uav_tx_dbm: 23.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarSection {
    pub center_freq: f64,
    pub sweep_bandwidth: f64,
    pub sweep_time: f64,
    pub chirp_interval: f64,
    pub tx_amplitude: f64,
    pub sample_rate: f64,
    pub freq_noise_sigma: f64,
    /// Std-dev of the Doppler phase-rate measurement (rad).
    pub phase_noise_sigma: f64,
    pub classifier_accuracy: f64,
}

impl Default for RadarSection {
    fn default() -> Self {
        Self {
            center_freq: 77e9,
            sweep_bandwidth: 4e9,
            sweep_time: 40e-6,
            chirp_interval: 100e-6,
            tx_amplitude: 1.0,
            sample_rate: 1e9,
            freq_noise_sigma: 1e4,
            phase_noise_sigma: 0.05,
            classifier_accuracy: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSection {
    pub kappa: f64,
    /// Cost units per CPU cycle of satellite usage.
    pub w_cyc: f64,
}

impl Default for CostSection {
    fn default() -> Self {
        Self { kappa: 1e-27, w_cyc: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovSection {
    pub v_weight: f64,
    /// Bits per queue unit used when squaring backlogs.
    pub queue_unit_bits: f64,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        Self { v_weight: 1.0, queue_unit_bits: 1e6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SghsSection {
    pub hms: usize,
    pub ni: usize,
    pub bw_min: f64,
    pub bw_max: f64,
    pub mu_hmcr: f64,
    pub sigma_hmcr: f64,
    pub mu_par: f64,
    pub sigma_par: f64,
    pub batch: usize,
    pub symmetric_pitch: bool,
    /// Iteration budget per slot inside the scheduler.
    pub ni_per_slot: usize,
}

impl Default for SghsSection {
    fn default() -> Self {
        Self {
            hms: 30,
            ni: 10_000,
            bw_min: 5e-4,
            bw_max: 0.5,
            mu_hmcr: 0.95,
            sigma_hmcr: 0.01,
            mu_par: 0.3,
            sigma_par: 0.05,
            batch: 20,
            symmetric_pitch: false,
            ni_per_slot: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaSection {
    pub initial_temp: f64,
    pub cooling_rate: f64,
    pub iters: usize,
    pub step_sigma: f64,
}

impl Default for SaSection {
    fn default() -> Self {
        Self { initial_temp: 1.0, cooling_rate: 0.95, iters: 1000, step_sigma: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentSection {
    pub hidden: [usize; 2],
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub discount: f64,
    pub soft_tau: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub exploration_sigma: f64,
    pub train_start: usize,
    pub updates_per_slot: usize,
    pub dqn_lr: f64,
    pub dqn_target_sync: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: usize,
    /// Store every transition as terminal: each slot's subproblem is a
    /// one-shot minimization, so the target collapses to the reward.
    pub per_slot_terminal: bool,
}

impl Default for AgentSection {
    fn default() -> Self {
        Self {
            hidden: [64, 64],
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            discount: 0.99,
            soft_tau: 0.005,
            replay_capacity: 10_000,
            batch_size: 64,
            exploration_sigma: 0.2,
            train_start: 256,
            updates_per_slot: 1,
            dqn_lr: 1e-3,
            dqn_target_sync: 100,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 5000,
            per_slot_terminal: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerSection {
    /// Inner-loop iterations per slot (ITER).
    pub inner_iters: usize,
    /// Slots of agent pre-training on the same world before the measured run.
    pub warmup_slots: u64,
}

impl Default for SchedulerSection {
    fn default() -> Self {
        Self { inner_iters: 10, warmup_slots: 0 }
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub experiment: ExperimentSection,
    pub world: WorldSection,
    pub task: TaskSection,
    pub channel: ChannelSection,
    pub radar: RadarSection,
    pub cost: CostSection,
    pub lyapunov: LyapunovSection,
    pub sghs: SghsSection,
    pub sa: SaSection,
    pub agents: AgentSection,
    pub scheduler: SchedulerSection,
}

fn check(ok: bool, key: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig { key: key.to_string(), reason: reason.to_string() })
    }
}

fn positive(v: f64, key: &str) -> Result<()> {
    check(v.is_finite() && v > 0.0, key, &format!("must be a positive finite number, got {v}"))
}

fn non_negative(v: f64, key: &str) -> Result<()> {
    check(v.is_finite() && v >= 0.0, key, &format!("must be a non-negative finite number, got {v}"))
}

fn probability(v: f64, key: &str) -> Result<()> {
    check((0.0..=1.0).contains(&v), key, &format!("must lie in [0, 1], got {v}"))
}

fn position(p: &[f64; 3], key: &str) -> Result<()> {
    check(
        p.iter().all(|c| c.is_finite()) && p[2] >= 0.0,
        key,
        "coordinates must be finite with non-negative altitude",
    )
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        check(e.slots >= 1, "experiment.slots", "must be at least 1")?;
        check(!e.seeds.is_empty(), "experiment.seeds", "must list at least one seed")?;

        let w = &self.world;
        check(w.num_uavs >= 1, "world.num_uavs", "must be at least 1")?;
        position(&w.trajectory_center, "world.trajectory_center")?;
        positive(w.trajectory_radius, "world.trajectory_radius")?;
        non_negative(w.uav_speed, "world.uav_speed")?;
        positive(w.coverage_radius, "world.coverage_radius")?;
        positive(w.bs_coverage_radius, "world.bs_coverage_radius")?;
        for p in &w.bs_positions {
            position(p, "world.bs_positions")?;
        }
        positive(w.bs_cpu_max, "world.bs_cpu_max")?;
        positive(w.uav_cpu_max, "world.uav_cpu_max")?;
        position(&w.satellite_pos, "world.satellite_pos")?;
        positive(w.satellite_cpu, "world.satellite_cpu")?;
        probability(w.p_turn, "world.p_turn")?;
        for s in w.type_speeds {
            non_negative(s, "world.type_speeds")?;
        }
        for s in w.type_mix {
            non_negative(s, "world.type_mix")?;
        }
        positive(w.type_mix.iter().sum(), "world.type_mix")?;
        non_negative(w.spawn_inner_radius, "world.spawn_inner_radius")?;
        check(
            w.spawn_outer_radius.is_finite() && w.spawn_outer_radius >= w.spawn_inner_radius,
            "world.spawn_outer_radius",
            "must be finite and at least world.spawn_inner_radius",
        )?;

        let t = &self.task;
        positive(t.slot_len, "task.slot_len")?;
        non_negative(t.phase1_len, "task.phase1_len")?;
        check(t.phase1_len < t.slot_len, "task.phase1_len", "must be shorter than task.slot_len")?;
        positive(t.cycles_per_bit, "task.cycles_per_bit")?;
        check(t.task_size_bits > 0, "task.task_size_bits", "must be positive")?;
        non_negative(t.arrival_rate, "task.arrival_rate")?;
        non_negative(t.v_bar, "task.v_bar")?;

        let c = &self.channel;
        positive(c.carrier_freq, "channel.carrier_freq")?;
        positive(c.bandwidth_c, "channel.bandwidth_c")?;
        positive(c.bandwidth_ka, "channel.bandwidth_ka")?;
        check(c.noise_psd_dbm_hz.is_finite(), "channel.noise_psd_dbm_hz", "must be finite")?;
        non_negative(c.shadow_fading, "channel.shadow_fading")?;
        positive(c.pathloss_exp_ag, "channel.pathloss_exp_ag")?;
        non_negative(c.rician_k, "channel.rician_k")?;
        positive(c.pathloss_exp_los, "channel.pathloss_exp_los")?;
        positive(c.pathloss_exp_nlos, "channel.pathloss_exp_nlos")?;
        positive(c.wavelength_ka, "channel.wavelength_ka")?;
        for (v, k) in [
            (c.sat_antenna_gain_dbi, "channel.sat_antenna_gain_dbi"),
            (c.uav_bs_tx_dbm, "channel.uav_bs_tx_dbm"),
            (c.uav_sat_tx_dbm, "channel.uav_sat_tx_dbm"),
            (c.device_sat_tx_dbm, "channel.device_sat_tx_dbm"),
            (c.device_uav_tx_dbm, "channel.device_uav_tx_dbm"),
        ] {
            check(v.is_finite(), k, "must be finite")?;
        }

        let r = &self.radar;
        positive(r.center_freq, "radar.center_freq")?;
        positive(r.sweep_bandwidth, "radar.sweep_bandwidth")?;
        positive(r.sweep_time, "radar.sweep_time")?;
        positive(r.chirp_interval, "radar.chirp_interval")?;
        non_negative(r.tx_amplitude, "radar.tx_amplitude")?;
        positive(r.sample_rate, "radar.sample_rate")?;
        non_negative(r.freq_noise_sigma, "radar.freq_noise_sigma")?;
        non_negative(r.phase_noise_sigma, "radar.phase_noise_sigma")?;
        probability(r.classifier_accuracy, "radar.classifier_accuracy")?;

        non_negative(self.cost.kappa, "cost.kappa")?;
        non_negative(self.cost.w_cyc, "cost.w_cyc")?;

        non_negative(self.lyapunov.v_weight, "lyapunov.v_weight")?;
        positive(self.lyapunov.queue_unit_bits, "lyapunov.queue_unit_bits")?;

        let s = &self.sghs;
        check(s.hms >= 1, "sghs.hms", "must be at least 1")?;
        check(s.ni >= 1, "sghs.ni", "must be at least 1")?;
        check(s.ni_per_slot >= 1, "sghs.ni_per_slot", "must be at least 1")?;
        check(s.batch >= 1, "sghs.batch", "must be at least 1")?;
        positive(s.bw_min, "sghs.bw_min")?;
        check(s.bw_max.is_finite() && s.bw_max >= s.bw_min, "sghs.bw_max", "must be at least sghs.bw_min")?;
        probability(s.mu_hmcr, "sghs.mu_hmcr")?;
        probability(s.mu_par, "sghs.mu_par")?;
        non_negative(s.sigma_hmcr, "sghs.sigma_hmcr")?;
        non_negative(s.sigma_par, "sghs.sigma_par")?;

        let a = &self.sa;
        positive(a.initial_temp, "sa.initial_temp")?;
        check(a.cooling_rate > 0.0 && a.cooling_rate < 1.0, "sa.cooling_rate", "must lie in (0, 1)")?;
        check(a.iters >= 1, "sa.iters", "must be at least 1")?;
        positive(a.step_sigma, "sa.step_sigma")?;

        let g = &self.agents;
        check(g.hidden.iter().all(|&h| h >= 1), "agents.hidden", "layer widths must be at least 1")?;
        positive(g.actor_lr, "agents.actor_lr")?;
        positive(g.critic_lr, "agents.critic_lr")?;
        positive(g.dqn_lr, "agents.dqn_lr")?;
        probability(g.discount, "agents.discount")?;
        probability(g.soft_tau, "agents.soft_tau")?;
        check(g.replay_capacity >= 1, "agents.replay_capacity", "must be at least 1")?;
        check(g.batch_size >= 1, "agents.batch_size", "must be at least 1")?;
        non_negative(g.exploration_sigma, "agents.exploration_sigma")?;
        check(g.dqn_target_sync >= 1, "agents.dqn_target_sync", "must be at least 1")?;
        probability(g.epsilon_start, "agents.epsilon_start")?;
        probability(g.epsilon_end, "agents.epsilon_end")?;

        check(self.scheduler.inner_iters >= 1, "scheduler.inner_iters", "must be at least 1")?;
        Ok(())
    }

    /// Derived physical constants in SI units.
    pub fn derived(&self) -> Derived {
        let c = &self.channel;
        Derived {
            noise_psd_w_hz: math::dbm_to_watts(c.noise_psd_dbm_hz),
            sat_gain: math::db_to_linear(c.sat_antenna_gain_dbi),
            uav_bs_tx_w: math::dbm_to_watts(c.uav_bs_tx_dbm),
            uav_sat_tx_w: math::dbm_to_watts(c.uav_sat_tx_dbm),
            device_sat_tx_w: math::dbm_to_watts(c.device_sat_tx_dbm),
            device_uav_tx_w: math::dbm_to_watts(c.device_uav_tx_dbm),
            window: self.task.window(),
            sat_cpu_share: self.world.satellite_cpu / self.world.num_uavs.max(1) as f64,
        }
    }
}

/// Unit conversions computed once from a [`Config`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub noise_psd_w_hz: f64,
    pub sat_gain: f64,
    pub uav_bs_tx_w: f64,
    pub uav_sat_tx_w: f64,
    pub device_sat_tx_w: f64,
    pub device_uav_tx_w: f64,
    /// τ − Δ.
    pub window: f64,
    /// Satellite CPU share per UAV f^{u,s}_{m,0}.
    pub sat_cpu_share: f64,
}
