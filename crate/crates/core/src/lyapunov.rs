//! Lyapunov value, drift, the per-slot upper bound on drift-plus-penalty and
//! the three subproblem objectives.
//!
//! Backlogs enter every quadratic term in queue units of
//! `queue_unit_bits` bits, so `L = ½ Σ (H/u)²`. Costs are never rescaled.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::cost::{self, CostBreakdown, CostParts, EnergyParams};
use crate::error::{Error, Result};
use crate::queueing::{self, NetworkQueues, OffloadSplit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovConfig {
    /// V ≥ 0.
    pub v_weight: f64,
    /// Bits per queue unit.
    pub unit: f64,
}

impl LyapunovConfig {
    #[inline]
    pub fn units(&self, bits: u64) -> f64 {
        bits as f64 / self.unit
    }
}

/// Static parameters shared by every objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveParams {
    /// τ − Δ.
    pub window: f64,
    pub gamma: f64,
    pub uav_cpu_max: f64,
    pub bs_cpu_max: f64,
    /// Satellite CPU share per UAV.
    pub sat_cpu_share: f64,
    pub energy: EnergyParams,
    pub lyap: LyapunovConfig,
}

/// Everything about one slot that is fixed once hosting is decided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveContext {
    pub queues: NetworkQueues,
    /// D_m^u.
    pub hosted: Vec<u64>,
    /// Arrivals of all devices covered by each UAV; bounds D_m^u from above.
    pub covered_arrivals: Vec<u64>,
    /// UAV→BS rates `[m][n]` (bit/s).
    pub rate_bs: Vec<Vec<f64>>,
    pub rate_sat: Vec<f64>,
    /// BS_m(t).
    pub bs_cover: Vec<Vec<usize>>,
    /// Collection cost of the hosted devices per UAV.
    pub collect_cost: Vec<f64>,
    /// Direct-satellite cost of the covered, unhosted devices per UAV.
    pub direct_cost: Vec<f64>,
    /// BS allocation in force before this slot's P3 solve.
    pub f_bs_prev: Vec<Vec<f64>>,
    pub params: ObjectiveParams,
}

/// Realized per-slot quantities implied by a decision.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Outcome {
    pub realized: Vec<OffloadSplit>,
    /// J^{u,b} `[m][n]`.
    pub j_bs: Vec<Vec<u64>>,
    pub costs: Vec<CostBreakdown>,
    /// G(t).
    pub total_cost: f64,
}

/// The continuous part of a decision evaluated by the objectives.
#[derive(Debug, Clone, Copy)]
pub struct Plan<'a> {
    pub association: &'a [Option<usize>],
    pub split: &'a [OffloadSplit],
    pub f_u: &'a [f64],
    pub f_bs: &'a [Vec<f64>],
}

impl ObjectiveContext {
    pub fn num_uavs(&self) -> usize {
        self.queues.uav.len()
    }

    pub fn num_bs(&self) -> usize {
        self.queues.bs.first().map_or(0, Vec::len)
    }

    fn local_cap(&self, f_u: f64) -> u64 {
        queueing::cpu_capacity(f_u.max(0.0), self.params.window, self.params.gamma)
    }

    /// Largest f_u that does not exceed the backlog, `min(f_max, γH/(τ−Δ))`.
    pub fn f_u_cap(&self, m: usize) -> f64 {
        let p = &self.params;
        p.uav_cpu_max.min(p.gamma * self.queues.uav[m] as f64 / p.window)
    }

    /// `f_u` lowered to the frequency that just covers the planned local
    /// share; cycles beyond `γ·Q_loc/(τ−Δ)` would serve nothing.
    pub fn useful_f_u(&self, planned: &OffloadSplit, f_u: f64) -> f64 {
        let p = &self.params;
        f_u.min(p.gamma * planned.q_loc as f64 / p.window).max(0.0)
    }

    pub fn assoc_rate(&self, m: usize, y: Option<usize>) -> f64 {
        y.map_or(0.0, |n| self.rate_bs[m][n])
    }

    /// Realized split of UAV `m` under association `y`.
    pub fn realize_uav(&self, m: usize, y: Option<usize>, planned: &OffloadSplit, f_u: f64) -> OffloadSplit {
        queueing::resolve_offload(
            self.queues.uav[m],
            planned,
            y.is_some(),
            self.local_cap(f_u),
            self.assoc_rate(m, y),
            self.rate_sat[m],
            self.params.window,
        )
    }

    pub fn bs_service(&self, m: usize, n: usize, f_bs: f64) -> u64 {
        self.queues.bs[m][n].min(queueing::cpu_capacity(f_bs.max(0.0), self.params.window, self.params.gamma))
    }

    /// Per-UAV cost with the realized split.
    pub fn uav_cost(&self, m: usize, y: Option<usize>, realized: &OffloadSplit, f_u: f64, f_bs: &[f64]) -> Result<CostBreakdown> {
        let p = &self.params;
        let e = &p.energy;
        let local = cost::local_cost(f_u, self.queues.uav[m] as f64, p.gamma, e.kappa);
        let bs = match y {
            Some(n) => cost::bs_offload_cost(
                true,
                realized.q_bs as f64,
                self.rate_bs[m][n],
                f_bs[n],
                self.queues.bs[m][n] as f64,
                p.gamma,
                e,
            )?,
            None => 0.0,
        };
        let sat = cost::sat_offload_cost(realized.q_sat as f64, self.rate_sat[m], p.gamma, e)?;
        Ok(cost::total_uav_cost(&CostParts {
            collect: self.collect_cost[m],
            local,
            bs,
            sat,
            direct_sat: self.direct_cost[m],
        }))
    }

    pub fn evaluate(&self, plan: &Plan<'_>) -> Result<Outcome> {
        let mc = self.num_uavs();
        let nc = self.num_bs();
        let mut out = Outcome { j_bs: vec![vec![0; nc]; mc], ..Default::default() };
        for m in 0..mc {
            let y = plan.association[m];
            let r = self.realize_uav(m, y, &plan.split[m], plan.f_u[m]);
            for n in 0..nc {
                out.j_bs[m][n] = self.bs_service(m, n, plan.f_bs[m][n]);
            }
            let c = self.uav_cost(m, y, &r, plan.f_u[m], &plan.f_bs[m])?;
            out.total_cost += c.total;
            out.costs.push(c);
            out.realized.push(r);
        }
        Ok(out)
    }

    /// Π for this slot, built from decision-independent caps on every flow.
    pub fn pi_constant(&self) -> f64 {
        let p = &self.params;
        let l = &p.lyap;
        let mut pi = 0.0;
        for m in 0..self.num_uavs() {
            let h = self.queues.uav[m];
            let a = l.units(self.covered_arrivals[m].max(self.hosted[m]));
            let best_bs = self.bs_cover[m]
                .iter()
                .map(|&n| queueing::link_capacity(self.rate_bs[m][n], p.window))
                .max()
                .unwrap_or(0);
            let s_cap = self
                .local_cap(p.uav_cpu_max)
                .saturating_add(best_bs)
                .saturating_add(queueing::link_capacity(self.rate_sat[m], p.window))
                .min(h);
            let s = l.units(s_cap);
            pi += 0.5 * (a * a + s * s);
            for n in 0..self.num_bs() {
                let q = if self.bs_cover[m].contains(&n) {
                    l.units(h.min(queueing::link_capacity(self.rate_bs[m][n], p.window)))
                } else {
                    0.0
                };
                let j = l.units(self.bs_service(m, n, p.bs_cpu_max));
                pi += 0.5 * (q * q + j * j);
            }
        }
        pi.max(1e-9)
    }

    /// Right-hand side of the per-slot drift-plus-penalty bound on realized quantities.
    pub fn theorem1_rhs(&self, plan: &Plan<'_>, out: &Outcome) -> f64 {
        self.pi_constant() + self.queue_bracket(plan, out) + self.params.lyap.v_weight * out.total_cost
    }

    /// Queue-weighted part of the bound.
    pub fn queue_bracket(&self, plan: &Plan<'_>, out: &Outcome) -> f64 {
        let l = &self.params.lyap;
        let mut acc = 0.0;
        for m in 0..self.num_uavs() {
            let r = &out.realized[m];
            let inflow = l.units(self.hosted[m]);
            let outflow = l.units(r.total());
            acc += l.units(self.queues.uav[m]) * (inflow - outflow);
            for n in 0..self.num_bs() {
                let into = if plan.association[m] == Some(n) { l.units(r.q_bs) } else { 0.0 };
                acc += l.units(self.queues.bs[m][n]) * (into - l.units(out.j_bs[m][n]));
            }
        }
        acc
    }

    /// P1 objective of one UAV with realized quantities under association `y`.
    pub fn p1_uav(&self, m: usize, y: Option<usize>, planned: &OffloadSplit, f_u: f64) -> Result<f64> {
        let p = &self.params;
        let e = &p.energy;
        let l = &p.lyap;
        let v = l.v_weight;
        let h = self.queues.uav[m];
        if planned.total() > h {
            return Err(Error::ConstraintViolation(format!("split: UAV {m} plans {} bits above backlog {h}", planned.total())));
        }
        if !(f_u >= 0.0 && f_u <= p.uav_cpu_max * (1.0 + 1e-12)) {
            return Err(Error::ConstraintViolation(format!("f_u: UAV {m} frequency {f_u} outside [0, {}]", p.uav_cpu_max)));
        }
        let r = self.realize_uav(m, y, planned, f_u);
        let queue = l.units(h) * (l.units(self.hosted[m]) - l.units(r.q_loc) - l.units(r.q_bs) - l.units(r.q_sat));
        let fixed = v * (self.collect_cost[m] + self.direct_cost[m]);
        let local = v * cost::local_cost(f_u, h as f64, p.gamma, e.kappa);
        let q_sat = r.q_sat as f64;
        let sat_tx = if q_sat > 0.0 { e.uav_sat_tx_power * q_sat / self.rate_sat[m] } else { 0.0 };
        let sat_cpu = e.kappa * p.sat_cpu_share * p.sat_cpu_share * p.gamma * q_sat;
        let sat = v * (sat_tx + sat_cpu);
        let q_bs = r.q_bs as f64;
        let bs_tx = if q_bs > 0.0 { v * e.uav_bs_tx_power * q_bs / self.assoc_rate(m, y) } else { 0.0 };
        let f_prev = y.map_or(0.0, |n| self.f_bs_prev[m][n]);
        let bs_const = v * e.kappa * f_prev * f_prev * f_prev * p.window;
        Ok(queue + fixed + local + sat + bs_tx + bs_const)
    }

    pub fn p1_objective(&self, association: &[Option<usize>], split: &[OffloadSplit], f_u: &[f64]) -> Result<f64> {
        (0..self.num_uavs()).try_fold(0.0, |acc, m| Ok(acc + self.p1_uav(m, association[m], &split[m], f_u[m])?))
    }

    /// P2 objective of one UAV. Besides the BS-side terms it carries the UAV
    /// backlog credit `−H_m Q_b` that offloading to a BS earns in the bound.
    pub fn p2_uav(&self, m: usize, y: Option<usize>, planned: &OffloadSplit, f_u: f64, f_bs: &[f64]) -> Result<f64> {
        if let Some(n) = y {
            if !self.bs_cover[m].contains(&n) {
                return Err(Error::ConstraintViolation(format!("association: UAV {m} linked to uncovered BS {n}")));
            }
        }
        let p = &self.params;
        let e = &p.energy;
        let l = &p.lyap;
        let r = self.realize_uav(m, y, planned, f_u);
        let q_b = l.units(r.q_bs);
        let mut acc = -l.units(self.queues.uav[m]) * q_b;
        for &n in &self.bs_cover[m] {
            let h_mn = self.queues.bs[m][n];
            let on = y == Some(n);
            let j = l.units(self.bs_service(m, n, f_bs[n]));
            acc += l.units(h_mn) * (if on { q_b } else { 0.0 } - j);
            if on {
                let tx = if r.q_bs > 0 { e.uav_bs_tx_power * r.q_bs as f64 / self.rate_bs[m][n] } else { 0.0 };
                acc += l.v_weight * (tx + cost::local_cost(f_bs[n], h_mn as f64, p.gamma, e.kappa));
            }
        }
        Ok(acc)
    }

    pub fn p2_objective(&self, association: &[Option<usize>], split: &[OffloadSplit], f_u: &[f64], f_bs: &[Vec<f64>]) -> Result<f64> {
        (0..self.num_uavs()).try_fold(0.0, |acc, m| Ok(acc + self.p2_uav(m, association[m], &split[m], f_u[m], &f_bs[m])?))
    }

    /// The BS allocation subproblem of this slot.
    pub fn p3_instance(&self) -> P3Instance {
        let p = &self.params;
        let mut dims = Vec::new();
        for m in 0..self.num_uavs() {
            for n in 0..self.num_bs() {
                let h = self.queues.bs[m][n];
                if h > 0 {
                    let cap = p.bs_cpu_max.min(p.gamma * h as f64 / p.window);
                    dims.push(P3Dim { m, n, h_bits: h, cap });
                }
            }
        }
        P3Instance {
            dims,
            num_bs: self.num_bs(),
            bs_cpu_max: p.bs_cpu_max,
            window: p.window,
            gamma: p.gamma,
            kappa: p.energy.kappa,
            lyap: p.lyap,
        }
    }
}

/// `L = ½ Σ_m [(H_m/u)² + Σ_n (H_{m,n}/u)²]`.
pub fn lyapunov_value(q: &NetworkQueues, lyap: &LyapunovConfig) -> f64 {
    let sq = |h: u64| {
        let x = lyap.units(h);
        x * x
    };
    0.5 * (q.uav.iter().map(|&h| sq(h)).sum::<f64>() + q.bs.iter().flatten().map(|&h| sq(h)).sum::<f64>())
}

pub fn sample_drift(q_t: &NetworkQueues, q_t1: &NetworkQueues, lyap: &LyapunovConfig) -> f64 {
    lyapunov_value(q_t1, lyap) - lyapunov_value(q_t, lyap)
}

pub fn drift_plus_penalty(drift: f64, slot_cost: f64, v: f64) -> f64 {
    drift + v * slot_cost
}

/// Whether `lhs ≤ rhs` up to floating-point rounding of terms of size `scale`.
pub fn bound_holds(lhs: f64, rhs: f64, scale: f64) -> bool {
    lhs <= rhs + 1e-9 * (1.0 + scale.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P3Dim {
    pub m: usize,
    pub n: usize,
    pub h_bits: u64,
    /// Upper bound `min(f_n,max, γH/(τ−Δ))`.
    pub cap: f64,
}

/// BS CPU allocation over pairs with a non-empty BS queue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P3Instance {
    pub dims: Vec<P3Dim>,
    pub num_bs: usize,
    pub bs_cpu_max: f64,
    pub window: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub lyap: LyapunovConfig,
}

impl P3Instance {
    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    /// Per-pair quadratic `−a f + b f²` coefficients.
    pub fn coefficients(&self, i: usize) -> (f64, f64) {
        let d = &self.dims[i];
        let hu = self.lyap.units(d.h_bits);
        let a = hu * self.window / (self.gamma * self.lyap.unit);
        let b = self.lyap.v_weight * self.kappa * self.gamma * d.h_bits as f64;
        (a, b)
    }

    /// Objective without feasibility checks.
    pub fn value_unchecked(&self, f: &[f64]) -> f64 {
        (0..self.dim())
            .map(|i| {
                let (a, b) = self.coefficients(i);
                -a * f[i] + b * f[i] * f[i]
            })
            .sum()
    }

    pub fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.dim() {
            return Err(Error::ShapeMismatch { expected: self.dim(), got: f.len() });
        }
        let mut per_bs = vec![0.0; self.num_bs];
        for (i, d) in self.dims.iter().enumerate() {
            if !(f[i] >= 0.0) || f[i] > d.cap * (1.0 + 1e-9) {
                return Err(Error::ConstraintViolation(format!(
                    "p3: f({},{}) = {} outside [0, {}] (backlog cap)",
                    d.m, d.n, f[i], d.cap
                )));
            }
            per_bs[d.n] += f[i];
        }
        for (n, s) in per_bs.iter().enumerate() {
            if *s > self.bs_cpu_max * (1.0 + 1e-9) {
                return Err(Error::ConstraintViolation(format!("p3: BS {n} allocates {s} Hz above {}", self.bs_cpu_max)));
            }
        }
        Ok(())
    }

    pub fn objective(&self, f: &[f64]) -> Result<f64> {
        self.check(f)?;
        Ok(self.value_unchecked(f))
    }

    /// Maps `[0,1]^d` to a feasible allocation: scale by per-pair caps, then
    /// shrink any over-committed BS proportionally.
    pub fn decode(&self, x: &[f64]) -> Vec<f64> {
        let mut f: Vec<f64> = self.dims.iter().zip(x).map(|(d, &xi)| xi.clamp(0.0, 1.0) * d.cap).collect();
        self.repair(&mut f);
        f
    }

    pub fn repair(&self, f: &mut [f64]) {
        let mut per_bs = vec![0.0; self.num_bs];
        for (d, &fi) in self.dims.iter().zip(f.iter()) {
            per_bs[d.n] += fi;
        }
        for (d, fi) in self.dims.iter().zip(f.iter_mut()) {
            let s = per_bs[d.n];
            if s > self.bs_cpu_max {
                *fi *= self.bs_cpu_max / s;
            }
        }
    }

    /// Inverse of [`decode`](Self::decode) for feasible points.
    pub fn encode(&self, f: &[f64]) -> Vec<f64> {
        self.dims.iter().zip(f).map(|(d, &fi)| if d.cap > 0.0 { (fi / d.cap).clamp(0.0, 1.0) } else { 0.0 }).collect()
    }

    /// Expands a solution into the `[m][n]` matrix.
    pub fn scatter(&self, f: &[f64], num_uavs: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.num_bs]; num_uavs];
        for (d, &fi) in self.dims.iter().zip(f) {
            out[d.m][d.n] = fi;
        }
        out
    }

    /// Reads this instance's coordinates out of a `[m][n]` matrix.
    pub fn gather(&self, full: &[Vec<f64>]) -> Vec<f64> {
        self.dims.iter().map(|d| full.get(d.m).and_then(|r| r.get(d.n)).copied().unwrap_or(0.0)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use rand::Rng;

    fn unit_lyap() -> LyapunovConfig {
        LyapunovConfig { v_weight: 1.0, unit: 1.0 }
    }

    #[test]
    fn lyapunov_examples() {
        let l = unit_lyap();
        assert_eq!(lyapunov_value(&NetworkQueues::zeros(2, 2), &l), 0.0);
        let q = NetworkQueues { uav: vec![4], bs: vec![vec![0]] };
        assert_eq!(lyapunov_value(&q, &l), 8.0);
        let q2 = NetworkQueues { uav: vec![3], bs: vec![vec![4]] };
        assert_eq!(lyapunov_value(&q2, &l), 12.5);
        assert_eq!(sample_drift(&q2, &q2, &l), 0.0);
        assert_eq!(sample_drift(&q2, &q, &l), -4.5);
        assert_eq!(sample_drift(&q, &q2, &l), -sample_drift(&q2, &q, &l));
    }

    #[test]
    fn dpp_examples() {
        assert_eq!(drift_plus_penalty(-4.5, 2.0, 0.0), -4.5);
        assert_eq!(drift_plus_penalty(-4.5, 2.0, 1.0), -2.5);
        let a = drift_plus_penalty(1.0, 3.0, 2.0) - drift_plus_penalty(1.0, 3.0, 1.0);
        assert_eq!(a, 3.0);
    }

    #[test]
    fn p3_hand_example() {
        // One pair: H = 1e6 bits, γ = 1000, τ−Δ = 0.9, κ = 1e-27, f = 1e9, unit = 1 bit.
        // −H (τ−Δ) f / γ = −9e11 and κ γ H f² = 1.
        let inst = P3Instance {
            dims: vec![P3Dim { m: 0, n: 0, h_bits: 1_000_000, cap: 1e10 }],
            num_bs: 1,
            bs_cpu_max: 1e10,
            window: 0.9,
            gamma: 1000.0,
            kappa: 1e-27,
            lyap: unit_lyap(),
        };
        let v = inst.objective(&[1e9]).unwrap();
        assert!((v - (-9e11 + 1.0)).abs() < 1e-3);
        assert_eq!(inst.objective(&[0.0]).unwrap(), 0.0);
        // Second difference is positive.
        let h = 1e7;
        let f0 = 2e9;
        let d2 = inst.value_unchecked(&[f0 + h]) - 2.0 * inst.value_unchecked(&[f0]) + inst.value_unchecked(&[f0 - h]);
        assert!(d2 > 0.0);
        assert!(inst.objective(&[2e10]).is_err());
    }

    #[test]
    fn decode_is_feasible() {
        let mut rng = stream(9, Stream::Solver);
        for _ in 0..200 {
            let d = rng.random_range(1..5);
            let dims = (0..d).map(|i| P3Dim { m: i, n: i % 2, h_bits: rng.random_range(1..10_000_000), cap: 0.0 }).collect::<Vec<_>>();
            let mut inst = P3Instance { dims, num_bs: 2, bs_cpu_max: 5e9, window: 0.9, gamma: 1000.0, kappa: 1e-27, lyap: unit_lyap() };
            for dim in inst.dims.iter_mut() {
                dim.cap = inst.bs_cpu_max.min(inst.gamma * dim.h_bits as f64 / inst.window);
            }
            let x: Vec<f64> = (0..d).map(|_| rng.random()).collect();
            let f = inst.decode(&x);
            inst.check(&f).unwrap();
        }
    }
}
