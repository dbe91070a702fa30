//! Geometry and mobility: device random walks, circular UAV trajectories,
//! fixed BS and satellite positions, and per-slot coverage sets.

use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math::{self, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    /// Altitude.
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.z >= 0.0
    }

    pub fn distance(&self, other: &Position) -> f64 {
        distance(self, other)
    }

    /// Distance between ground projections.
    pub fn horizontal_distance(&self, other: &Position) -> f64 {
        math::hypot(self.x - other.x, self.y - other.y)
    }
}

/// Euclidean distance in meters.
pub fn distance(a: &Position, b: &Position) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    math::sqrt(dx * dx + dy * dy + dz * dz)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceType {
    Pedestrian,
    Cyclist,
    Vehicle,
}

impl DeviceType {
    pub const ALL: [DeviceType; 3] = [DeviceType::Pedestrian, DeviceType::Cyclist, DeviceType::Vehicle];

    pub fn index(self) -> usize {
        match self {
            DeviceType::Pedestrian => 0,
            DeviceType::Cyclist => 1,
            DeviceType::Vehicle => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceState {
    pub id: usize,
    pub pos: Position,
    /// Constant ground speed (m/s).
    pub speed: f64,
    /// Heading in `[0, 2π)`.
    pub heading: f64,
    pub device_type: DeviceType,
    /// Mean task arrival in bits per slot.
    pub arrival_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavState {
    pub id: usize,
    pub pos: Position,
    pub coverage_radius: f64,
    /// Maximum CPU frequency (Hz).
    pub cpu_max: f64,
    pub cycles_per_bit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub devices: Vec<DeviceState>,
    pub uavs: Vec<UavState>,
    pub bs_positions: Vec<Position>,
    /// Maximum CPU frequency of each BS (Hz).
    pub bs_cpu_max: Vec<f64>,
    pub satellite_pos: Position,
}

impl Topology {
    pub fn num_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn num_uavs(&self) -> usize {
        self.uavs.len()
    }

    pub fn num_bs(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn is_valid(&self) -> bool {
        self.bs_positions.len() == self.bs_cpu_max.len()
            && self.devices.iter().all(|d| d.pos.is_valid())
            && self.uavs.iter().all(|u| u.pos.is_valid())
            && self.bs_positions.iter().all(Position::is_valid)
            && self.satellite_pos.is_valid()
    }
}

/// Per-slot membership: `device_cover[m]` is C_m(t), `bs_cover[m]` is BS_m(t).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoverageSets {
    pub device_cover: Vec<Vec<usize>>,
    pub bs_cover: Vec<Vec<usize>>,
}

impl CoverageSets {
    /// The UAV covering device `k`, if any.
    pub fn owner_of(&self, k: usize) -> Option<usize> {
        self.device_cover.iter().position(|c| c.contains(&k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub center: Position,
    pub radius: f64,
    /// UAV ground speed (m/s).
    pub speed: f64,
    pub num_uavs: usize,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            center: Position::new(1000.0, 0.0, 100.0),
            radius: 1000.0,
            speed: 16.67,
            num_uavs: 5,
        }
    }
}

impl TrajectoryConfig {
    /// Time for one full revolution (s).
    pub fn period(&self) -> f64 {
        TAU * self.radius / self.speed
    }
}

/// Position of UAV `m` at the start of slot `t` on its circular trajectory.
pub fn uav_position(m: usize, t: u64, slot_len: f64, cfg: &TrajectoryConfig) -> Position {
    let n = cfg.num_uavs.max(1) as f64;
    let travelled = cfg.speed * (t as f64) * slot_len;
    let angle = TAU * (m as f64) / n + travelled / cfg.radius;
    Position::new(
        cfg.center.x + cfg.radius * math::cos(angle),
        cfg.center.y + cfg.radius * math::sin(angle),
        cfg.center.z,
    )
}

/// One random-walk step: move along the heading, then turn with probability `p_turn`.
pub fn step_device<R: Rng + ?Sized>(d: &DeviceState, slot_len: f64, p_turn: f64, rng: &mut R) -> DeviceState {
    debug_assert!(slot_len > 0.0);
    let mut next = d.clone();
    let step = d.speed * slot_len;
    if step != 0.0 {
        next.pos.x += step * math::cos(d.heading);
        next.pos.y += step * math::sin(d.heading);
    }
    // Draw unconditionally so the stream position does not depend on the outcome.
    let turn: f64 = rng.random();
    let new_heading: f64 = rng.random::<f64>() * TAU;
    if turn < p_turn {
        next.heading = math::wrap_angle(new_heading);
    }
    next
}

/// Computes C_m(t) and BS_m(t).
///
/// A device joins the nearest UAV whose footprint contains it (ties go to the
/// lower index) so the device sets are disjoint. BS membership uses its own
/// radius and is not exclusive.
pub fn coverage_sets(topo: &Topology, bs_radius: f64) -> CoverageSets {
    let m_count = topo.uavs.len();
    let mut device_cover = alloc::vec![Vec::new(); m_count];
    for dev in &topo.devices {
        let mut best: Option<(usize, f64)> = None;
        for (m, uav) in topo.uavs.iter().enumerate() {
            let d = uav.pos.horizontal_distance(&dev.pos);
            if d <= uav.coverage_radius && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((m, d));
            }
        }
        if let Some((m, _)) = best {
            device_cover[m].push(dev.id);
        }
    }
    let bs_cover = topo
        .uavs
        .iter()
        .map(|uav| {
            topo.bs_positions
                .iter()
                .enumerate()
                .filter(|(_, bs)| uav.pos.horizontal_distance(bs) <= bs_radius)
                .map(|(n, _)| n)
                .collect()
        })
        .collect();
    CoverageSets { device_cover, bs_cover }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use alloc::vec;

    fn device(speed: f64, heading: f64) -> DeviceState {
        DeviceState {
            id: 0,
            pos: Position::new(10.0, -3.0, 0.0),
            speed,
            heading,
            device_type: DeviceType::Pedestrian,
            arrival_rate: 0.0,
        }
    }

    fn uav(id: usize, x: f64, y: f64) -> UavState {
        UavState { id, pos: Position::new(x, y, 100.0), coverage_radius: 500.0, cpu_max: 3e8, cycles_per_bit: 1000.0 }
    }

    #[test]
    fn distance_examples() {
        let o = Position::new(0.0, 0.0, 0.0);
        assert_eq!(distance(&o, &o), 0.0);
        assert_eq!(distance(&o, &Position::new(3.0, 4.0, 0.0)), 5.0);
        assert!((distance(&o, &Position::new(1.0, 1.0, 1.0)) - 1.732_050_8).abs() < 1e-7);
    }

    #[test]
    fn zero_speed_is_fixed_point() {
        let mut rng = stream(1, Stream::Mobility);
        let d = device(0.0, 1.2);
        let n = step_device(&d, 1.0, 1.0, &mut rng);
        assert_eq!(n.pos, d.pos);
    }

    #[test]
    fn axis_aligned_step() {
        let mut rng = stream(1, Stream::Mobility);
        let d = device(1.5, 0.0);
        let n = step_device(&d, 1.0, 0.0, &mut rng);
        assert_eq!(n.pos.x, 11.5);
        assert_eq!(n.pos.y, -3.0);
        assert_eq!(n.heading, 0.0);
        assert_eq!(n.speed, 1.5);
    }

    #[test]
    fn isotropic_displacement_with_constant_turning() {
        // Monte-Carlo oracle: with p_turn = 1 each step direction is uniform, so
        // per-axis displacement has mean 0 and variance speed^2 / 2 per step.
        let mut rng = stream(3, Stream::Mobility);
        let mut d = device(1.0, 0.3);
        let start = d.pos;
        let steps = 10_000;
        for _ in 0..steps {
            d = step_device(&d, 1.0, 1.0, &mut rng);
        }
        let sigma = math::sqrt(steps as f64 * 0.5);
        assert!((d.pos.x - start.x).abs() < 3.0 * sigma);
        assert!((d.pos.y - start.y).abs() < 3.0 * sigma);
    }

    #[test]
    fn heading_histogram_is_uniform() {
        // chi-square over 8 bins, critical value at p = 0.01 with 7 dof is 18.475.
        let mut rng = stream(11, Stream::Mobility);
        let mut d = device(1.0, 0.0);
        let mut bins = [0u32; 8];
        let events = 20_000;
        for _ in 0..events {
            d = step_device(&d, 1.0, 1.0, &mut rng);
            assert!((0.0..TAU).contains(&d.heading));
            bins[((d.heading / TAU) * 8.0) as usize % 8] += 1;
        }
        let expected = events as f64 / 8.0;
        let chi2: f64 = bins.iter().map(|&b| (b as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 18.475, "chi2 = {chi2}");
    }

    #[test]
    fn uav_trajectory_examples() {
        let cfg = TrajectoryConfig::default();
        let p = uav_position(0, 0, 1.0, &cfg);
        assert!((p.x - 2000.0).abs() < 1e-9 && p.y.abs() < 1e-9 && p.z == 100.0);

        let period = cfg.period();
        // Pick a slot length that makes one revolution exactly 10 slots.
        let slot = period / 10.0;
        for m in 0..5 {
            let a = uav_position(m, 3, slot, &cfg);
            let b = uav_position(m, 13, slot, &cfg);
            assert!(a.distance(&b) < 1e-6);
        }

        let ps: Vec<Position> = (0..5).map(|m| uav_position(m, 0, 1.0, &cfg)).collect();
        for i in 0..5 {
            let j = (i + 1) % 5;
            let ai = math::atan2(ps[i].y - cfg.center.y, ps[i].x - cfg.center.x);
            let aj = math::atan2(ps[j].y - cfg.center.y, ps[j].x - cfg.center.x);
            let sep = math::wrap_angle(aj - ai);
            assert!((sep - TAU / 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uav_stays_on_circle() {
        let cfg = TrajectoryConfig::default();
        for m in 0..5 {
            for t in (0..5000).step_by(37) {
                let p = uav_position(m, t, 1.0, &cfg);
                let r = math::hypot(p.x - cfg.center.x, p.y - cfg.center.y);
                assert!((r - cfg.radius).abs() < 1e-6);
                assert_eq!(p.z, 100.0);
            }
        }
    }

    fn topo(devices: Vec<DeviceState>, uavs: Vec<UavState>) -> Topology {
        Topology {
            devices,
            uavs,
            bs_positions: vec![Position::new(500.0, 0.0, 0.0)],
            bs_cpu_max: vec![5e9],
            satellite_pos: Position::new(1000.0, 0.0, 780_000.0),
        }
    }

    #[test]
    fn tie_goes_to_lower_index() {
        let mut d = device(0.0, 0.0);
        d.pos = Position::new(0.0, 0.0, 0.0);
        let t = topo(vec![d], vec![uav(0, -100.0, 0.0), uav(1, 100.0, 0.0)]);
        let c = coverage_sets(&t, 500.0);
        assert_eq!(c.device_cover, vec![vec![0], vec![]]);
    }

    #[test]
    fn outside_every_footprint() {
        let mut d = device(0.0, 0.0);
        d.pos = Position::new(501.0, 0.0, 0.0);
        let t = topo(vec![d], vec![uav(0, 0.0, 0.0)]);
        let c = coverage_sets(&t, 500.0);
        assert!(c.device_cover[0].is_empty());
        assert_eq!(c.owner_of(0), None);
    }

    #[test]
    fn random_topology_membership_brute_force() {
        let mut rng = stream(5, Stream::Topology);
        for _ in 0..50 {
            let devices: Vec<DeviceState> = (0..10)
                .map(|k| {
                    let mut d = device(1.0, 0.0);
                    d.id = k;
                    d.pos = Position::new(rng.random_range(-500.0..2500.0), rng.random_range(-1500.0..1500.0), 0.0);
                    d
                })
                .collect();
            let uavs: Vec<UavState> = (0..5)
                .map(|m| {
                    let p = uav_position(m, rng.random_range(0..400), 1.0, &TrajectoryConfig::default());
                    uav(m, p.x, p.y)
                })
                .collect();
            let t = topo(devices, uavs);
            let c = coverage_sets(&t, 500.0);
            let total: usize = c.device_cover.iter().map(Vec::len).sum();
            assert!(total <= 10);
            for k in 0..10 {
                let owners: Vec<usize> = (0..5).filter(|&m| c.device_cover[m].contains(&k)).collect();
                assert!(owners.len() <= 1);
                let dists: Vec<f64> = t.uavs.iter().map(|u| u.pos.horizontal_distance(&t.devices[k].pos)).collect();
                let eligible: Vec<usize> = (0..5).filter(|&m| dists[m] <= 500.0).collect();
                match owners.first() {
                    None => assert!(eligible.is_empty()),
                    Some(&m) => {
                        assert!(dists[m] <= 500.0);
                        assert!(eligible.iter().all(|&o| dists[o] > dists[m] || (dists[o] == dists[m] && o >= m)));
                    }
                }
            }
        }
    }
}
