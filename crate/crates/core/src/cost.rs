//! Energy and usage cost of every offloading path, aggregated per UAV.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    /// Effective switched capacitance κ.
    pub kappa: f64,
    /// Device transmit power toward its UAV (W).
    pub device_tx_power: f64,
    /// Device transmit power toward the satellite (W).
    pub device_sat_tx_power: f64,
    pub uav_bs_tx_power: f64,
    pub uav_sat_tx_power: f64,
    /// Cost units per satellite CPU cycle.
    pub w_cyc: f64,
}

impl EnergyParams {
    pub fn from_config(cfg: &crate::config::Config) -> Self {
        let d = cfg.derived();
        Self {
            kappa: cfg.cost.kappa,
            device_tx_power: d.device_uav_tx_w,
            device_sat_tx_power: d.device_sat_tx_w,
            uav_bs_tx_power: d.uav_bs_tx_w,
            uav_sat_tx_power: d.uav_sat_tx_w,
            w_cyc: cfg.cost.w_cyc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub collect: f64,
    pub local: f64,
    pub bs: f64,
    pub sat: f64,
    pub direct_sat: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn add(&mut self, other: &CostBreakdown) {
        self.collect += other.collect;
        self.local += other.local;
        self.bs += other.bs;
        self.sat += other.sat;
        self.direct_sat += other.direct_sat;
        self.total += other.total;
    }
}

/// Transmission energy `P · bits / rate`.
fn tx_energy(power: f64, bits: f64, rate: f64) -> Result<f64> {
    if bits <= 0.0 {
        return Ok(0.0);
    }
    if !(rate > 0.0) {
        return Err(Error::InfeasibleTransmission { bits });
    }
    Ok(power * bits / rate)
}

/// CPU energy `κ f³ · γH/f = κ f² γ H`; zero when the CPU is off.
pub fn local_cost(f_u: f64, h_bits: f64, gamma: f64, kappa: f64) -> f64 {
    if f_u <= 0.0 || h_bits <= 0.0 {
        return 0.0;
    }
    kappa * f_u * f_u * gamma * h_bits
}

/// Transmission to the associated BS plus CPU energy at that BS.
pub fn bs_offload_cost(
    associated: bool,
    q_bs: f64,
    rate: f64,
    f_bs: f64,
    h_bs: f64,
    gamma: f64,
    ep: &EnergyParams,
) -> Result<f64> {
    if !associated {
        return Ok(0.0);
    }
    let tran = tx_energy(ep.uav_bs_tx_power, q_bs, rate)?;
    let cmp = local_cost(f_bs, h_bs, gamma, ep.kappa);
    Ok(tran + cmp)
}

/// Satellite cycles consumed by `bits`.
pub fn sat_usage_cycles(bits: f64, gamma: f64) -> f64 {
    bits * gamma
}

pub fn sat_offload_cost(q_sat: f64, rate_sat: f64, gamma: f64, ep: &EnergyParams) -> Result<f64> {
    let tran = tx_energy(ep.uav_sat_tx_power, q_sat, rate_sat)?;
    Ok(tran + ep.w_cyc * sat_usage_cycles(q_sat, gamma))
}

pub fn direct_sat_cost(d_k: f64, rate_k_sat: f64, gamma_k: f64, ep: &EnergyParams) -> Result<f64> {
    let tran = tx_energy(ep.device_sat_tx_power, d_k, rate_k_sat)?;
    Ok(tran + ep.w_cyc * sat_usage_cycles(d_k, gamma_k))
}

/// Device-to-UAV collection energy of the hosted devices, given as `(bits, rate)` pairs.
pub fn collection_cost<I>(hosted: I, device_tx: f64) -> Result<f64>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    hosted.into_iter().try_fold(0.0, |acc, (bits, rate)| Ok(acc + tx_energy(device_tx, bits, rate)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostParts {
    pub collect: f64,
    pub local: f64,
    pub bs: f64,
    pub sat: f64,
    /// Sum of direct-satellite costs of the covered, unhosted devices.
    pub direct_sat: f64,
}

pub fn total_uav_cost(p: &CostParts) -> CostBreakdown {
    CostBreakdown {
        collect: p.collect,
        local: p.local,
        bs: p.bs,
        sat: p.sat,
        direct_sat: p.direct_sat,
        total: p.collect + p.local + p.bs + p.sat + p.direct_sat,
    }
}
