//! Comparison policies and exact reference solvers for the subproblems.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lyapunov::{ObjectiveContext, P3Instance};
use crate::math;
use crate::perception::PerceptionReport;
use crate::queueing::{self, OffloadSplit};
use crate::rng::normal;
use crate::world::CoverageSets;

pub use crate::config::SaSection as SaConfig;

/// Hosts each covered device with probability one half.
pub fn random_hosting<R: Rng + ?Sized>(cover: &CoverageSets, num_devices: usize, rng: &mut R) -> Vec<Option<usize>> {
    let mut hosting = vec![None; num_devices];
    for (m, devs) in cover.device_cover.iter().enumerate() {
        for &k in devs {
            if rng.random::<f64>() < 0.5 {
                hosting[k] = Some(m);
            }
        }
    }
    hosting
}

/// Uniform point on the 2-simplex from two sorted uniforms.
pub fn uniform_simplex<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let a: f64 = rng.random();
    let b: f64 = rng.random();
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    [lo, hi - lo, 1.0 - hi]
}

/// Decision parts chosen uniformly at random over their feasible ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomDecision {
    pub association: Vec<Option<usize>>,
    pub split: Vec<OffloadSplit>,
    pub f_u: Vec<f64>,
    pub f_bs: Vec<Vec<f64>>,
}

pub fn random_policy<R: Rng + ?Sized>(ctx: &ObjectiveContext, rng: &mut R) -> RandomDecision {
    let mc = ctx.num_uavs();
    let mut out = RandomDecision { association: Vec::with_capacity(mc), split: Vec::with_capacity(mc), f_u: Vec::with_capacity(mc), f_bs: Vec::new() };
    for m in 0..mc {
        let opts = ctx.bs_cover[m].len() + 1;
        let pick = rng.random_range(0..opts);
        out.association.push(pick.checked_sub(1).map(|i| ctx.bs_cover[m][i]));
        let split = OffloadSplit::from_fractions(ctx.queues.uav[m], uniform_simplex(rng));
        out.f_u.push(ctx.useful_f_u(&split, rng.random::<f64>() * ctx.f_u_cap(m)));
        out.split.push(split);
    }
    let inst = ctx.p3_instance();
    let x: Vec<f64> = (0..inst.dim()).map(|_| rng.random()).collect();
    out.f_bs = inst.scatter(&inst.decode(&x), mc);
    out
}

/// Best one-hot split of UAV `m` by the P1 objective, each option run at its
/// useful frequency; ties keep the earlier option in the order local, BS,
/// satellite.
pub fn complete_offload_split(ctx: &ObjectiveContext, m: usize, y: Option<usize>, f_u: f64) -> Result<OffloadSplit> {
    let h = ctx.queues.uav[m];
    let options = [
        OffloadSplit { q_loc: h, q_bs: 0, q_sat: 0 },
        OffloadSplit { q_loc: 0, q_bs: h, q_sat: 0 },
        OffloadSplit { q_loc: 0, q_bs: 0, q_sat: h },
    ];
    let mut best = options[0];
    let mut best_v = ctx.p1_uav(m, y, &best, ctx.useful_f_u(&best, f_u))?;
    for o in &options[1..] {
        let v = ctx.p1_uav(m, y, o, ctx.useful_f_u(o, f_u))?;
        if v < best_v {
            best_v = v;
            best = *o;
        }
    }
    Ok(best)
}

/// Reference minimizer of one UAV's P1 objective.
///
/// Only realized amounts matter, and at the useful frequency the objective is
/// convex in the local amount and linear in the BS and satellite amounts. So
/// for each local amount on a grid the other two sit at a vertex of their
/// feasible set; the best grid point is then polished by golden-section
/// search. Returns the split, its frequency and the objective value.
pub fn p1_reference(ctx: &ObjectiveContext, m: usize, y: Option<usize>, grid: usize) -> Result<(OffloadSplit, f64, f64)> {
    let p = &ctx.params;
    let h = ctx.queues.uav[m];
    let loc_max = queueing::cpu_capacity(ctx.f_u_cap(m), p.window, p.gamma).min(h);
    let bs_link = if y.is_some() { queueing::link_capacity(ctx.assoc_rate(m, y), p.window) } else { 0 };
    let sat_link = queueing::link_capacity(ctx.rate_sat[m], p.window);
    let freq = |q: u64| (p.gamma * q as f64 / p.window).min(ctx.f_u_cap(m));

    // Best vertex completion for a fixed local amount.
    let complete = |q_loc: u64| -> Result<(OffloadSplit, f64)> {
        let f = freq(q_loc);
        let rest = h - q_loc;
        let mut best: Option<(OffloadSplit, f64)> = None;
        let b_max = bs_link.min(rest);
        let s_max = sat_link.min(rest);
        let candidates = [
            (0, 0),
            (b_max, 0),
            (0, s_max),
            (b_max, sat_link.min(rest - b_max)),
            (bs_link.min(rest - s_max), s_max),
        ];
        for (q_bs, q_sat) in candidates {
            let s = OffloadSplit { q_loc, q_bs, q_sat };
            let v = ctx.p1_uav(m, y, &s, f)?;
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((s, v));
            }
        }
        Ok(best.expect("candidate list is nonempty"))
    };

    let grid = grid.max(1);
    let mut best_k = 0;
    let mut best = complete(0)?;
    for k in 1..=grid {
        let q = (loc_max as f64 * k as f64 / grid as f64).round() as u64;
        let c = complete(q)?;
        if c.1 < best.1 {
            best = c;
            best_k = k;
        }
    }
    let step = loc_max as f64 / grid as f64;
    let (mut lo, mut hi) = ((best_k as f64 - 1.0).max(0.0) * step, ((best_k + 1) as f64 * step).min(loc_max as f64));
    let phi = 0.5 * (math::sqrt(5.0) - 1.0);
    for _ in 0..60 {
        if hi - lo < 1.0 {
            break;
        }
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        let va = complete(a.round() as u64)?;
        let vb = complete(b.round() as u64)?;
        for c in [&va, &vb] {
            if c.1 < best.1 {
                best = *c;
            }
        }
        if va.1 <= vb.1 {
            hi = b;
        } else {
            lo = a;
        }
    }
    let f = freq(best.0.q_loc);
    Ok((best.0, f, best.1))
}

/// Report as seen without radar: worst-case link rate and no speed information.
pub fn perception_free_report(report: &PerceptionReport, worst_case_rate: f64) -> PerceptionReport {
    PerceptionReport { link_rate_estimate: worst_case_rate, est_velocity: 0.0, valid: true, ..report.clone() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaResult {
    pub best: Vec<f64>,
    pub best_value: f64,
    /// Best-so-far value after each iteration.
    pub trace: Vec<f64>,
}

/// Metropolis search with geometric cooling on the repaired unit box.
pub fn sa_minimize<R, F, P>(dim: usize, mut objective: F, mut repair: P, cfg: &SaConfig, start: Option<&[f64]>, rng: &mut R) -> SaResult
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
    P: FnMut(&mut [f64]),
{
    let mut x: Vec<f64> = match start {
        Some(s) if s.len() == dim => s.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        _ => vec![0.5; dim],
    };
    repair(&mut x);
    let mut fx = objective(&x);
    let mut best = x.clone();
    let mut best_value = fx;
    let mut temp = cfg.initial_temp;
    let mut trace = Vec::with_capacity(cfg.iters);
    for _ in 0..cfg.iters {
        let mut cand: Vec<f64> = x.iter().map(|v| (v + cfg.step_sigma * normal(rng)).clamp(0.0, 1.0)).collect();
        repair(&mut cand);
        let fc = objective(&cand);
        let u: f64 = rng.random();
        let delta = fc - fx;
        let accept = delta <= 0.0 || (temp > 0.0 && u < math::exp(-delta / temp));
        if accept && fc.is_finite() {
            x = cand;
            fx = fc;
            if fx < best_value {
                best_value = fx;
                best = x.clone();
            }
        }
        temp *= cfg.cooling_rate;
        trace.push(best_value);
    }
    SaResult { best, best_value, trace }
}

/// BS allocation by simulated annealing over the same encoding as harmony search.
pub fn simulated_annealing_allocate<R: Rng + ?Sized>(inst: &P3Instance, cfg: &SaConfig, warm: Option<&[f64]>, rng: &mut R) -> (Vec<f64>, SaResult) {
    let start = warm.map(|f| inst.encode(f));
    let res = sa_minimize(
        inst.dim(),
        |x| inst.value_unchecked(&inst.decode(x)),
        |x| {
            let f = inst.decode(x);
            x.copy_from_slice(&inst.encode(&f));
        },
        cfg,
        start.as_deref(),
        rng,
    );
    (inst.decode(&res.best), res)
}

/// Exact P2 minimizer by per-UAV enumeration over `{none} ∪ BS_m`.
pub fn exhaustive_p2_oracle(ctx: &ObjectiveContext, split: &[OffloadSplit], f_u: &[f64], f_bs: &[Vec<f64>]) -> Result<Vec<Option<usize>>> {
    let mut y = Vec::with_capacity(ctx.num_uavs());
    for m in 0..ctx.num_uavs() {
        let mut best = None;
        let mut best_v = ctx.p2_uav(m, None, &split[m], f_u[m], &f_bs[m])?;
        for &n in &ctx.bs_cover[m] {
            let v = ctx.p2_uav(m, Some(n), &split[m], f_u[m], &f_bs[m])?;
            if v < best_v {
                best_v = v;
                best = Some(n);
            }
        }
        y.push(best);
    }
    Ok(y)
}

/// Exact P3 minimizer. Each BS is solved independently: per-pair
/// minimizers clipped to their caps, and if the BS is over-committed, a
/// bisection on the capacity multiplier followed by a greedy fill of any
/// leftover capacity.
pub fn p3_analytic_oracle(inst: &P3Instance) -> Vec<f64> {
    let d = inst.dim();
    let mut f = vec![0.0; d];
    for n in 0..inst.num_bs {
        let idx: Vec<usize> = (0..d).filter(|&i| inst.dims[i].n == n).collect();
        if idx.is_empty() {
            continue;
        }
        let coef: Vec<(f64, f64)> = idx.iter().map(|&i| inst.coefficients(i)).collect();
        let caps: Vec<f64> = idx.iter().map(|&i| inst.dims[i].cap).collect();
        let at = |lambda: f64, j: usize| -> f64 {
            let (a, b) = coef[j];
            if b > 0.0 {
                ((a - lambda) / (2.0 * b)).clamp(0.0, caps[j])
            } else if a > lambda {
                caps[j]
            } else {
                0.0
            }
        };
        let total = |lambda: f64| (0..idx.len()).map(|j| at(lambda, j)).sum::<f64>();
        let cap_total = inst.bs_cpu_max;
        let mut sol: Vec<f64>;
        if total(0.0) <= cap_total {
            sol = (0..idx.len()).map(|j| at(0.0, j)).collect();
        } else {
            let mut lo = 0.0;
            let mut hi = coef.iter().map(|c| c.0).fold(0.0, f64::max);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if total(mid) > cap_total {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            sol = (0..idx.len()).map(|j| at(hi, j)).collect();
            let mut residual = cap_total - sol.iter().sum::<f64>();
            // Fill by marginal gain a − 2bf, largest first.
            let mut order: Vec<usize> = (0..idx.len()).collect();
            order.sort_by(|&p, &q| {
                let gp = coef[p].0 - 2.0 * coef[p].1 * sol[p];
                let gq = coef[q].0 - 2.0 * coef[q].1 * sol[q];
                gq.total_cmp(&gp)
            });
            for j in order {
                if residual <= 0.0 {
                    break;
                }
                let (a, b) = coef[j];
                let target = if b > 0.0 { (a / (2.0 * b)).min(caps[j]) } else if a > 0.0 { caps[j] } else { 0.0 };
                let add = (target - sol[j]).max(0.0).min(residual);
                sol[j] += add;
                residual -= add;
            }
        }
        for (j, &i) in idx.iter().enumerate() {
            f[i] = sol[j];
        }
    }
    inst.repair(&mut f);
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::{LyapunovConfig, P3Dim};
    use crate::rng::{stream, substream, Stream};

    #[test]
    fn simplex_moments() {
        // Dirichlet(1,1,1): each coordinate has mean 1/3 and variance 1/18.
        let mut rng = stream(1, Stream::Policy);
        let n = 20_000;
        let mut s = [0.0; 3];
        let mut s2 = [0.0; 3];
        for _ in 0..n {
            let p = uniform_simplex(&mut rng);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12 && p.iter().all(|v| *v >= 0.0));
            for j in 0..3 {
                s[j] += p[j];
                s2[j] += p[j] * p[j];
            }
        }
        for j in 0..3 {
            let mean = s[j] / n as f64;
            let var = s2[j] / n as f64 - mean * mean;
            assert!((mean - 1.0 / 3.0).abs() < 0.01);
            assert!((var - 1.0 / 18.0).abs() < 0.005);
        }
    }

    #[test]
    fn random_hosting_only_covered() {
        let cover = CoverageSets { device_cover: vec![vec![0, 2], vec![3]], bs_cover: vec![vec![], vec![]] };
        let mut rng = stream(2, Stream::Policy);
        let mut hits = 0;
        for _ in 0..1000 {
            let h = random_hosting(&cover, 5, &mut rng);
            assert!(h[1].is_none() && h[4].is_none());
            assert!(h[0].is_none_or(|m| m == 0) && h[3].is_none_or(|m| m == 1));
            hits += h.iter().filter(|x| x.is_some()).count();
        }
        assert!((hits as f64 / 3000.0 - 0.5).abs() < 0.05);
    }

    #[test]
    fn sa_zero_temperature_is_greedy() {
        let cfg = SaConfig { initial_temp: 1e-300, cooling_rate: 0.5, iters: 500, step_sigma: 0.2 };
        let mut rng = stream(3, Stream::Solver);
        let mut current = f64::INFINITY;
        let mut greedy = true;
        sa_minimize(
            1,
            |x| (x[0] - 0.7).abs(),
            |_| {},
            &cfg,
            None,
            &mut rng,
        )
        .trace
        .iter()
        .for_each(|&v| {
            greedy &= v <= current;
            current = v;
        });
        assert!(greedy);
    }

    #[test]
    fn sa_quadratic_1d() {
        let cfg = SaConfig::default();
        let mut ok = 0;
        for seed in 0..30 {
            let mut rng = substream(5, Stream::Solver, seed);
            let r = sa_minimize(1, |x| (x[0] - 0.3) * (x[0] - 0.3), |_| {}, &cfg, None, &mut rng);
            assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
            if (r.best[0] - 0.3).abs() < 1e-2 {
                ok += 1;
            }
        }
        assert!(ok >= 27, "{ok}/30");
    }

    fn bits_instance(h: &[(usize, u64)], v: f64, unit: f64) -> P3Instance {
        let mut inst = P3Instance {
            dims: Vec::new(),
            num_bs: 2,
            bs_cpu_max: 5e9,
            window: 0.9,
            gamma: 1000.0,
            kappa: 1e-27,
            lyap: LyapunovConfig { v_weight: v, unit },
        };
        for (m, &(n, bits)) in h.iter().enumerate() {
            inst.dims.push(P3Dim { m, n, h_bits: bits, cap: 5e9f64.min(1000.0 * bits as f64 / 0.9) });
        }
        inst
    }

    #[test]
    fn oracle_saturates_cap_in_bit_units() {
        // With backlogs in bits the unconstrained minimizer is 4.5e20 Hz, far
        // above every cap, so the optimum sits at γH/(τ−Δ).
        let inst = bits_instance(&[(0, 1_000_000)], 1.0, 1.0);
        let f = p3_analytic_oracle(&inst);
        assert!((f[0] - 1.0e9 / 0.9).abs() / f[0] < 1e-9);
    }

    #[test]
    fn oracle_interior_in_queue_units() {
        // u = 1e6, V = 1: f° = (τ−Δ)/(2Vκγ²u²) = 4.5e8 < cap.
        let inst = bits_instance(&[(0, 10_000_000)], 1.0, 1e6);
        let f = p3_analytic_oracle(&inst);
        assert!((f[0] - 4.5e8).abs() / 4.5e8 < 1e-9);
    }

    /// Dense grid over the feasible region of up to three coupled pairs.
    fn grid_min(inst: &P3Instance, pts: usize) -> f64 {
        let d = inst.dim();
        let mut best = f64::INFINITY;
        let mut idx = vec![0usize; d];
        loop {
            let f: Vec<f64> = (0..d).map(|i| inst.dims[i].cap * idx[i] as f64 / (pts - 1) as f64).collect();
            if inst.check(&f).is_ok() {
                best = best.min(inst.value_unchecked(&f));
            }
            let mut k = 0;
            while k < d {
                idx[k] += 1;
                if idx[k] < pts {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == d {
                break;
            }
        }
        best
    }

    #[test]
    fn oracle_matches_grid_on_coupled_instances() {
        let mut rng = stream(11, Stream::Solver);
        for _ in 0..20 {
            let d = rng.random_range(1..=3);
            let h: Vec<(usize, u64)> = (0..d).map(|_| (0, rng.random_range(1_000_000..40_000_000))).collect();
            let mut inst = bits_instance(&h, rng.random_range(0.0..3.0), 1e6);
            inst.bs_cpu_max = rng.random_range(5e8..3e9);
            let f = p3_analytic_oracle(&inst);
            let v = inst.objective(&f).unwrap();
            let g = grid_min(&inst, if d == 3 { 200 } else { 2000 });
            assert!(v <= g + 1e-9 * g.abs().max(1.0), "oracle {v} grid {g}");
        }
        assert_eq!(p3_analytic_oracle(&bits_instance(&[], 1.0, 1e6)), Vec::<f64>::new());
    }
}
