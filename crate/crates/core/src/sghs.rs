//! Self-adaptive global-best harmony search on the unit box `[0,1]^d`.
//!
//! Callers encode their decision space into the unit box and supply a repair
//! map that projects any box point onto the feasible set. Candidates are
//! repaired before they are scored, so the objective never sees an
//! infeasible point.

use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::normal;

pub use crate::config::SghsSection as SghsConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harmony {
    pub vector: Vec<f64>,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Harmony,
    /// Best fitness after each iteration.
    pub trace: Vec<f64>,
}

/// Linearly shrinking bandwidth over the first half of the budget, then flat.
pub fn bw_schedule(iter: usize, ni: usize, bw_min: f64, bw_max: f64) -> f64 {
    if 2 * iter < ni {
        bw_max - (bw_max - bw_min) / ni as f64 * 2.0 * iter as f64
    } else {
        bw_min
    }
}

/// Normal draw clamped into `[0,1]`.
pub fn sample_rate<R: Rng + ?Sized>(mu: f64, sigma: f64, rng: &mut R) -> f64 {
    (mu + sigma * normal(rng)).clamp(0.0, 1.0)
}

/// One new harmony before repair. Every dimension consumes the same number
/// of draws regardless of the branch taken.
pub fn improvise<R: Rng + ?Sized>(hm: &[Harmony], hmcr: f64, par: f64, bw: f64, symmetric: bool, rng: &mut R) -> Vec<f64> {
    assert!(!hm.is_empty(), "harmony memory must be nonempty");
    let d = hm[0].vector.len();
    let mut out = Vec::with_capacity(d);
    for j in 0..d {
        let pick = rng.random_range(0..hm.len());
        let u_mem: f64 = rng.random();
        let u_par: f64 = rng.random();
        let step: f64 = rng.random();
        let fresh: f64 = rng.random();
        let v = if u_mem < hmcr {
            let base = hm[pick].vector[j];
            if u_par < par {
                let delta = if symmetric { (2.0 * step - 1.0) * bw } else { step * bw };
                base + delta
            } else {
                base
            }
        } else {
            fresh
        };
        out.push(v.clamp(0.0, 1.0));
    }
    out
}

fn worst_index(hm: &[Harmony]) -> usize {
    let mut w = 0;
    for (i, h) in hm.iter().enumerate() {
        if h.fitness > hm[w].fitness {
            w = i;
        }
    }
    w
}

fn best_index(hm: &[Harmony]) -> usize {
    let mut b = 0;
    for (i, h) in hm.iter().enumerate() {
        if h.fitness < hm[b].fitness {
            b = i;
        }
    }
    b
}

/// Minimizes `objective` over the repaired unit box of dimension `dim`.
///
/// `ni` overrides `cfg.ni` as the iteration budget. `warm` seeds one memory
/// member when given.
pub fn sghs_minimize<R, F, P>(
    dim: usize,
    mut objective: F,
    mut repair: P,
    cfg: &SghsConfig,
    ni: usize,
    warm: Option<&[f64]>,
    rng: &mut R,
) -> SearchResult
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
    P: FnMut(&mut [f64]),
{
    let score = |v: &mut Vec<f64>, objective: &mut F, repair: &mut P| {
        repair(v);
        let f = objective(v);
        if f.is_finite() {
            f
        } else {
            f64::INFINITY
        }
    };

    let hms = cfg.hms.max(1);
    let mut hm = Vec::with_capacity(hms);
    for i in 0..hms {
        let mut v: Vec<f64> = match (i, warm) {
            (0, Some(w)) if w.len() == dim => w.iter().map(|x| x.clamp(0.0, 1.0)).collect(),
            _ => (0..dim).map(|_| rng.random()).collect(),
        };
        let fitness = score(&mut v, &mut objective, &mut repair);
        hm.push(Harmony { vector: v, fitness });
    }

    let mut best = hm[best_index(&hm)].clone();
    let mut trace = Vec::with_capacity(ni);
    for iter in 0..ni {
        let hmcr = sample_rate(cfg.mu_hmcr, cfg.sigma_hmcr, rng);
        let par = sample_rate(cfg.mu_par, cfg.sigma_par, rng);
        let bw = bw_schedule(iter, ni, cfg.bw_min, cfg.bw_max);
        for _ in 0..cfg.batch.max(1) {
            let mut v = improvise(&hm, hmcr, par, bw, cfg.symmetric_pitch, rng);
            let fitness = score(&mut v, &mut objective, &mut repair);
            let w = worst_index(&hm);
            if fitness <= hm[w].fitness {
                if fitness < best.fitness {
                    best = Harmony { vector: v.clone(), fitness };
                }
                hm[w] = Harmony { vector: v, fitness };
            }
        }
        trace.push(best.fitness);
    }
    SearchResult { best, trace }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, substream, Stream};
    use alloc::vec;

    fn cfg() -> SghsConfig {
        SghsConfig::default()
    }

    #[test]
    fn bw_examples() {
        let c = cfg();
        assert_eq!(bw_schedule(0, 10_000, c.bw_min, c.bw_max), 0.5);
        assert_eq!(bw_schedule(5000, 10_000, c.bw_min, c.bw_max), 5e-4);
        assert_eq!(bw_schedule(9999, 10_000, c.bw_min, c.bw_max), 5e-4);
        assert!((bw_schedule(2500, 10_000, c.bw_min, c.bw_max) - 0.25025).abs() < 1e-12);
    }

    fn memory() -> Vec<Harmony> {
        vec![
            Harmony { vector: vec![0.1, 0.2, 0.3], fitness: 1.0 },
            Harmony { vector: vec![0.4, 0.5, 0.6], fitness: 2.0 },
        ]
    }

    #[test]
    fn pure_memory_consideration() {
        let hm = memory();
        let mut rng = stream(3, Stream::Solver);
        for _ in 0..500 {
            let v = improvise(&hm, 1.0, 0.0, 0.3, false, &mut rng);
            for (j, x) in v.iter().enumerate() {
                assert!(hm.iter().any(|h| h.vector[j] == *x));
            }
        }
    }

    #[test]
    fn zero_bandwidth_copies_members() {
        let hm = memory();
        let mut rng = stream(4, Stream::Solver);
        for _ in 0..500 {
            let v = improvise(&hm, 1.0, 1.0, 0.0, false, &mut rng);
            for (j, x) in v.iter().enumerate() {
                assert!(hm.iter().any(|h| h.vector[j] == *x));
            }
        }
    }

    #[test]
    fn random_consideration_is_uniform() {
        // Kolmogorov-Smirnov against U(0,1); critical value at p = 0.01 is 1.628/√n.
        let hm = memory();
        let mut rng = stream(5, Stream::Solver);
        let n = 10_000;
        let mut xs: Vec<f64> = (0..n).map(|_| improvise(&hm, 0.0, 0.5, 0.1, false, &mut rng)[0]).collect();
        xs.sort_by(f64::total_cmp);
        let mut d: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            d = d.max((x - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - x).abs());
        }
        assert!(d < 1.628 / (n as f64).sqrt(), "KS statistic {d}");
    }

    #[test]
    fn sampled_rates_are_probabilities() {
        let mut rng = stream(6, Stream::Solver);
        for _ in 0..1000 {
            let p = sample_rate(0.95, 0.5, &mut rng);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn quadratic_1d() {
        let mut c = cfg();
        c.ni = 2000;
        let mut ok = 0;
        for seed in 0..30 {
            let mut rng = substream(77, Stream::Solver, seed);
            let r = sghs_minimize(1, |x| (x[0] - 0.3) * (x[0] - 0.3), |_| {}, &c, c.ni, None, &mut rng);
            if (r.best.vector[0] - 0.3).abs() < 1e-3 {
                ok += 1;
            }
            assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(r.trace.len(), 2000);
        }
        assert!(ok >= 29, "{ok}/30");
    }

    #[test]
    fn reproducible_and_repaired() {
        let c = SghsConfig { ni: 100, ..cfg() };
        let run = |seed| {
            let mut rng = stream(seed, Stream::Solver);
            sghs_minimize(
                2,
                |x| -(x[0] + 2.0 * x[1]),
                |v| {
                    let s = v[0] + v[1];
                    if s > 1.0 {
                        v[0] /= s;
                        v[1] /= s;
                    }
                },
                &c,
                c.ni,
                Some(&[0.5, 0.5]),
                &mut rng,
            )
        };
        let a = run(1);
        assert_eq!(a, run(1));
        assert!(a.best.vector[0] + a.best.vector[1] <= 1.0 + 1e-12);
        assert!(a.best.fitness < -1.9);
    }
}
