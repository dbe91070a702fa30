//! Standalone benchmark of harmony search against the exact BS allocation.

use rand::Rng;
use sagin_core::baselines::p3_analytic_oracle;
use sagin_core::lyapunov::{LyapunovConfig, P3Dim, P3Instance};
use sagin_core::sghs::{sghs_minimize, SghsConfig};
use serde::Serialize;

/// Random instance whose pairs all share one BS, so the capacity couples
/// every coordinate.
pub fn random_instance<R: Rng + ?Sized>(max_dim: usize, rng: &mut R) -> P3Instance {
    let d = rng.random_range(1..=max_dim.max(1));
    let window = 0.9;
    let gamma = 1000.0;
    let bs_cpu_max: f64 = rng.random_range(3e8..2e9);
    let dims = (0..d)
        .map(|m| {
            let h_bits = rng.random_range(200_000..40_000_000u64);
            P3Dim { m, n: 0, h_bits, cap: bs_cpu_max.min(gamma * h_bits as f64 / window) }
        })
        .collect();
    P3Instance {
        dims,
        num_bs: 1,
        bs_cpu_max,
        window,
        gamma,
        kappa: 1e-27,
        lyap: LyapunovConfig { v_weight: rng.random_range(0.1..10.0), unit: 1e6 },
    }
}

/// Grid-search minimum of the feasible region.
///
/// All coordinates but one run over `pts` grid values; the remaining one is
/// set to its exact minimizer given the capacity the others leave. Every
/// coordinate takes a turn as the projected one. The grid box then zooms in
/// on the best point for `levels` rounds.
pub fn grid_min(inst: &P3Instance, pts: usize, levels: usize) -> f64 {
    let d = inst.dim();
    if d == 0 {
        return 0.0;
    }
    let pts = pts.max(2);
    let mut best = f64::INFINITY;
    for free in 0..d {
        let others: Vec<usize> = (0..d).filter(|&i| i != free).collect();
        let mut lo: Vec<f64> = vec![0.0; others.len()];
        let mut hi: Vec<f64> = others.iter().map(|&i| inst.dims[i].cap).collect();
        for _ in 0..levels.max(1) {
            let mut idx = vec![0usize; others.len()];
            let mut level_best = (f64::INFINITY, vec![0.0; others.len()]);
            loop {
                let mut f = vec![0.0; d];
                let at: Vec<f64> = (0..others.len()).map(|k| lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / (pts - 1) as f64).collect();
                for (k, &i) in others.iter().enumerate() {
                    f[i] = at[k];
                }
                let used: f64 = others.iter().filter(|&&i| inst.dims[i].n == inst.dims[free].n).map(|&i| f[i]).sum();
                let room = inst.dims[free].cap.min(inst.bs_cpu_max - used);
                if room >= 0.0 {
                    let (a, b) = inst.coefficients(free);
                    f[free] = if b > 0.0 { (a / (2.0 * b)).clamp(0.0, room) } else if a > 0.0 { room } else { 0.0 };
                    if inst.check(&f).is_ok() {
                        let v = inst.value_unchecked(&f);
                        if v < level_best.0 {
                            level_best = (v, at);
                        }
                    }
                }
                let mut k = 0;
                while k < idx.len() {
                    idx[k] += 1;
                    if idx[k] < pts {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
            best = best.min(level_best.0);
            if !level_best.0.is_finite() {
                break;
            }
            for (k, &i) in others.iter().enumerate() {
                let step = 2.0 * (hi[k] - lo[k]) / (pts - 1) as f64;
                lo[k] = (level_best.1[k] - step).max(0.0);
                hi[k] = (level_best.1[k] + step).min(inst.dims[i].cap);
            }
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchCase {
    pub instance: usize,
    pub dim: usize,
    pub sghs: f64,
    pub oracle: f64,
    /// `(sghs − oracle)/|oracle|`.
    pub rel_gap: f64,
    pub trace: Vec<f64>,
}

pub fn relative_gap(value: f64, reference: f64) -> f64 {
    (value - reference) / reference.abs().max(1e-300)
}

pub fn bench_one<R: Rng + ?Sized>(inst: &P3Instance, cfg: &SghsConfig, ni: usize, rng: &mut R) -> (f64, f64, Vec<f64>) {
    let res = sghs_minimize(inst.dim(), |x| inst.value_unchecked(&inst.decode(x)), |_| {}, cfg, ni, None, rng);
    let oracle = inst.value_unchecked(&p3_analytic_oracle(inst));
    (res.best.fitness, oracle, res.trace)
}

pub fn run_bench<R: Rng + ?Sized>(count: usize, max_dim: usize, cfg: &SghsConfig, ni: usize, rng: &mut R) -> Vec<BenchCase> {
    (0..count)
        .map(|k| {
            let inst = random_instance(max_dim, rng);
            let (sghs, oracle, trace) = bench_one(&inst, cfg, ni, rng);
            BenchCase { instance: k, dim: inst.dim(), sghs, oracle, rel_gap: relative_gap(sghs, oracle), trace }
        })
        .collect()
}

/// Long-format trace table `instance,iter,best`.
pub fn write_traces(cases: &[BenchCase], path: &std::path::Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["instance", "iter", "best"])?;
    for c in cases {
        for (i, v) in c.trace.iter().enumerate() {
            w.write_record([c.instance.to_string(), i.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use sagin_core::rng::{stream, Stream};

    #[test]
    fn instances_are_coupled_and_valid() {
        let mut rng = stream(3, Stream::Solver);
        for _ in 0..50 {
            let inst = random_instance(3, &mut rng);
            assert!((1..=3).contains(&inst.dim()));
            assert!(inst.dims.iter().all(|d| d.n == 0 && d.cap > 0.0));
            let f = p3_analytic_oracle(&inst);
            inst.check(&f).unwrap();
        }
    }

    #[test]
    fn grid_agrees_with_oracle() {
        let mut rng = stream(4, Stream::Solver);
        for _ in 0..30 {
            let inst = random_instance(3, &mut rng);
            let oracle = inst.value_unchecked(&p3_analytic_oracle(&inst));
            let grid = grid_min(&inst, 41, 12);
            assert!(grid >= oracle - 1e-9 * oracle.abs());
            assert!(relative_gap(grid, oracle) < 1e-3, "grid {grid} oracle {oracle}");
        }
    }

    #[test]
    fn gap_sign() {
        assert!(relative_gap(-0.99, -1.0) > 0.0);
        assert!((relative_gap(-0.99, -1.0) - 0.01).abs() < 1e-12);
    }
}
