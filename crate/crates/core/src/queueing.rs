//! Task arrivals, hosting, offload realization and queue updates.
//!
//! All backlogs are whole bits in `u64` so flow accounting is exact. Real
//! valued capacities (CPU cycles over the processing window, link rate times
//! window) are floored to whole bits before they cap anything.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::bits_floor;
use crate::perception::PerceptionReport;
use crate::world::{CoverageSets, DeviceState};

/// Bits generated by each device this slot.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TaskArrivals {
    pub bits: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NetworkQueues {
    /// H_m^u per UAV.
    pub uav: Vec<u64>,
    /// H_{m,n}^{u,b}, indexed `[m][n]`.
    pub bs: Vec<Vec<u64>>,
}

impl NetworkQueues {
    pub fn zeros(num_uavs: usize, num_bs: usize) -> Self {
        Self { uav: vec![0; num_uavs], bs: vec![vec![0; num_bs]; num_uavs] }
    }

    pub fn total_bits(&self) -> u128 {
        self.uav.iter().map(|&h| h as u128).sum::<u128>() + self.bs.iter().flatten().map(|&h| h as u128).sum::<u128>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OffloadSplit {
    pub q_loc: u64,
    pub q_bs: u64,
    pub q_sat: u64,
}

impl OffloadSplit {
    pub fn total(&self) -> u64 {
        self.q_loc + self.q_bs + self.q_sat
    }

    /// Whole-bit split of `h` by non-negative fractions summing to at most one.
    pub fn from_fractions(h: u64, frac: [f64; 3]) -> Self {
        let hf = h as f64;
        let q_loc = bits_floor(hf * frac[0]).min(h);
        let q_bs = bits_floor(hf * frac[1]).min(h - q_loc);
        let q_sat = bits_floor(hf * frac[2]).min(h - q_loc - q_bs);
        Self { q_loc, q_bs, q_sat }
    }
}

/// All per-slot decision variables.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SlotDecision {
    /// Hosting UAV of each device (`x_{k,m} = 1` iff `hosting[k] == Some(m)`).
    pub hosting: Vec<Option<usize>>,
    /// Associated BS of each UAV (`y_{m,n} = 1` iff `association[m] == Some(n)`).
    pub association: Vec<Option<usize>>,
    /// Planned split per UAV.
    pub split: Vec<OffloadSplit>,
    pub f_u: Vec<f64>,
    /// BS CPU allocation, indexed `[m][n]`.
    pub f_bs: Vec<Vec<f64>>,
}

impl SlotDecision {
    pub fn idle(num_devices: usize, num_uavs: usize, num_bs: usize) -> Self {
        Self {
            hosting: vec![None; num_devices],
            association: vec![None; num_uavs],
            split: vec![OffloadSplit::default(); num_uavs],
            f_u: vec![0.0; num_uavs],
            f_bs: vec![vec![0.0; num_bs]; num_uavs],
        }
    }
}

/// Compound-Poisson arrivals: `N_k ~ Poisson(rate_k / task_size)` tasks of `task_size` bits.
pub fn sample_arrivals<R: Rng + ?Sized>(devices: &[DeviceState], task_size: u64, rng: &mut R) -> TaskArrivals {
    let bits = devices
        .iter()
        .map(|d| {
            let lambda = d.arrival_rate / task_size as f64;
            if lambda > 0.0 {
                let p = Poisson::new(lambda).expect("positive finite rate");
                let n: f64 = p.sample(rng);
                (n as u64).saturating_mul(task_size)
            } else {
                0
            }
        })
        .collect();
    TaskArrivals { bits }
}

/// Hosting rule: latency over the estimated link within Δ and estimated speed within v̄.
pub fn hosting_decision(report: &PerceptionReport, d_k: u64, delta: f64, v_bar: f64) -> bool {
    debug_assert!(delta > 0.0);
    if !report.valid {
        return false;
    }
    let latency_ok = if d_k == 0 {
        true
    } else if report.link_rate_estimate > 0.0 {
        d_k as f64 / report.link_rate_estimate <= delta
    } else {
        false
    };
    latency_ok && report.est_velocity <= v_bar
}

/// D_m^u: bits of devices hosted by UAV `m`.
pub fn hosted_load(m: usize, hosting: &[Option<usize>], arrivals: &TaskArrivals) -> u64 {
    hosting.iter().zip(&arrivals.bits).filter(|(h, _)| **h == Some(m)).map(|(_, &b)| b).sum()
}

/// Bits of covered but unhosted devices, sent straight to the satellite.
pub fn direct_satellite_load(cover: &CoverageSets, hosting: &[Option<usize>], arrivals: &TaskArrivals) -> u64 {
    cover
        .device_cover
        .iter()
        .flatten()
        .filter(|&&k| hosting[k].is_none())
        .map(|&k| arrivals.bits[k])
        .sum()
}

/// Bits the CPU can process in the window, `f(τ−Δ)/γ`, floored.
pub fn cpu_capacity(f: f64, window: f64, gamma: f64) -> u64 {
    bits_floor(f * window / gamma)
}

/// Bits a link can carry in the window, floored.
pub fn link_capacity(rate: f64, window: f64) -> u64 {
    bits_floor(rate * window)
}

/// J^{u,loc} = min(H, f(τ−Δ)/γ).
pub fn local_service(h: u64, f_u: f64, tau: f64, delta: f64, gamma: f64) -> u64 {
    h.min(cpu_capacity(f_u.max(0.0), tau - delta, gamma))
}

/// Caps a planned split in the order local, BS, satellite.
///
/// `local_cap` is the CPU capacity of the UAV; the BS part only goes through
/// when the UAV is associated.
pub fn resolve_offload(
    h: u64,
    planned: &OffloadSplit,
    associated: bool,
    local_cap: u64,
    rate_bs: f64,
    rate_sat: f64,
    window: f64,
) -> OffloadSplit {
    let q_loc = planned.q_loc.min(local_cap).min(h);
    let r1 = h - q_loc;
    let q_bs = if associated { planned.q_bs.min(r1).min(link_capacity(rate_bs, window)) } else { 0 };
    let r2 = r1 - q_bs;
    let q_sat = planned.q_sat.min(r2).min(link_capacity(rate_sat, window));
    OffloadSplit { q_loc, q_bs, q_sat }
}

/// H' = H − (q_loc + q_bs + q_sat) + D_new.
pub fn advance_uav_queue(h: u64, realized: &OffloadSplit, d_new: u64) -> Result<u64> {
    let out = realized.total();
    if out > h {
        return Err(Error::Invariant(format!("UAV queue would go negative: H={h}, served={out}")));
    }
    Ok(h - out + d_new)
}

/// J^{u,b} = min(H_bs, (τ−Δ) f_bs / γ).
pub fn bs_service(h_bs: u64, f_bs: f64, tau: f64, delta: f64, gamma: f64) -> u64 {
    h_bs.min(cpu_capacity(f_bs.max(0.0), tau - delta, gamma))
}

pub fn advance_bs_queue(h_bs: u64, j_bs: u64, y: bool, q_bs: u64) -> u64 {
    h_bs.saturating_sub(j_bs) + if y { q_bs } else { 0 }
}

/// Static limits used by the feasibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct Limits<'a> {
    pub uav_cpu_max: f64,
    pub bs_cpu_max: f64,
    pub cover: &'a CoverageSets,
}

/// Checks the decision constraints; the error names the first violation.
pub fn validate_decision(dec: &SlotDecision, queues: &NetworkQueues, lim: &Limits<'_>) -> Result<()> {
    let m_count = queues.uav.len();
    let n_count = queues.bs.first().map_or(0, Vec::len);
    let bad = |s: alloc::string::String| Err(Error::ConstraintViolation(s));
    if dec.association.len() != m_count || dec.split.len() != m_count || dec.f_u.len() != m_count || dec.f_bs.len() != m_count {
        return Err(Error::ShapeMismatch { expected: m_count, got: dec.association.len() });
    }
    for (k, h) in dec.hosting.iter().enumerate() {
        if let Some(m) = *h {
            if lim.cover.device_cover.get(m).is_none_or(|c| !c.contains(&k)) {
                return bad(format!("hosting: device {k} hosted by UAV {m} which does not cover it"));
            }
        }
    }
    for m in 0..m_count {
        if dec.split[m].total() > queues.uav[m] {
            return bad(format!("split: UAV {m} plans {} bits with backlog {}", dec.split[m].total(), queues.uav[m]));
        }
        let f = dec.f_u[m];
        if !(f.is_finite() && f >= 0.0 && f <= lim.uav_cpu_max * (1.0 + 1e-12)) {
            return bad(format!("f_u: UAV {m} frequency {f} outside [0, {}]", lim.uav_cpu_max));
        }
        if let Some(n) = dec.association[m] {
            if n >= n_count || !lim.cover.bs_cover[m].contains(&n) {
                return bad(format!("association: UAV {m} linked to uncovered BS {n}"));
            }
        }
        if dec.f_bs[m].len() != n_count {
            return Err(Error::ShapeMismatch { expected: n_count, got: dec.f_bs[m].len() });
        }
    }
    for n in 0..n_count {
        let mut sum = 0.0;
        for m in 0..m_count {
            let f = dec.f_bs[m][n];
            if !(f.is_finite() && f >= 0.0) {
                return bad(format!("f_bs: entry ({m},{n}) = {f}"));
            }
            sum += f;
        }
        if sum > lim.bs_cpu_max * (1.0 + 1e-9) {
            return bad(format!("f_bs: BS {n} allocates {sum} Hz above {}", lim.bs_cpu_max));
        }
    }
    Ok(())
}
