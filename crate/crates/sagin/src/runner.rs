//! Batches of experiments on a worker pool, sweeps and their trend reports.

use std::path::Path;

use anyhow::{anyhow, Result};
use rayon::prelude::*;
use sagin_core::config::{Config, Method};
use sagin_core::orchestrator::{self, Experiment, Summary};
use serde::{Deserialize, Serialize};

/// One experiment to run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    /// Directory label below the output root.
    pub label: String,
    pub cfg: Config,
    pub method: Method,
    pub seed: u64,
}

/// Audit findings of a finished experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub records_checked: usize,
    pub record_mismatches: Vec<String>,
    pub bound_violations: u64,
    pub flow_error: i64,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.record_mismatches.is_empty() && self.bound_violations == 0 && self.flow_error == 0
    }

    pub fn failure(&self) -> Option<String> {
        if let Some(m) = self.record_mismatches.first() {
            return Some(format!("cost audit: {m}"));
        }
        if self.bound_violations > 0 {
            return Some(format!("drift bound: {} violating slots", self.bound_violations));
        }
        if self.flow_error != 0 {
            return Some(format!("flow conservation: error of {} bits", self.flow_error));
        }
        None
    }
}

pub fn audit(cfg: &Config, exp: &Experiment) -> AuditReport {
    let params = orchestrator::objective_params(cfg);
    let record_mismatches = exp.records.iter().filter_map(|r| orchestrator::audit_record(r, &params).err()).collect();
    AuditReport {
        records_checked: exp.records.len(),
        record_mismatches,
        bound_violations: exp.records.iter().filter(|r| !r.bound_ok).count() as u64,
        flow_error: orchestrator::flow_error(&exp.records) as i64,
    }
}

pub struct Finished {
    pub spec: RunSpec,
    pub experiment: Experiment,
    pub audit: AuditReport,
}

/// Runs every spec on `jobs` threads; results keep the input order.
pub fn run_all(specs: Vec<RunSpec>, jobs: usize) -> Result<Vec<Finished>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    pool.install(|| {
        specs
            .into_par_iter()
            .map(|spec| {
                let experiment = orchestrator::run_experiment(&spec.cfg, spec.method, spec.seed)
                    .map_err(|e| anyhow!("{} seed {}: {e}", spec.label, spec.seed))?;
                let audit = audit(&spec.cfg, &experiment);
                Ok(Finished { spec, experiment, audit })
            })
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Task size in MB.
    Datasize,
    UavCpu,
    BsCpu,
    V,
}

impl SweepKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "datasize" => Some(Self::Datasize),
            "uav-cpu" | "uav_cpu" => Some(Self::UavCpu),
            "bs-cpu" | "bs_cpu" => Some(Self::BsCpu),
            "v" | "v-weight" => Some(Self::V),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Datasize => "datasize",
            Self::UavCpu => "uav_cpu",
            Self::BsCpu => "bs_cpu",
            Self::V => "v",
        }
    }

    pub fn default_points(self) -> Vec<f64> {
        match self {
            Self::Datasize => vec![5.0, 10.0, 20.0],
            Self::UavCpu => vec![1e8, 3e8, 5e8],
            Self::BsCpu => vec![2.5e9, 5e9, 1e10],
            Self::V => vec![0.1, 1.0, 10.0],
        }
    }

    /// Copy of `base` with the swept parameter set to `x`.
    pub fn apply(self, base: &Config, x: f64) -> Config {
        let mut c = base.clone();
        match self {
            Self::Datasize => c.task.task_size_bits = (x * 8e6).round() as u64,
            Self::UavCpu => c.world.uav_cpu_max = x,
            Self::BsCpu => c.world.bs_cpu_max = x,
            Self::V => c.lyapunov.v_weight = x,
        }
        c
    }
}

/// Mean summary statistic per sweep point for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendLine {
    pub method: String,
    pub points: Vec<f64>,
    /// Per point, per seed time-averaged cost.
    pub costs: Vec<Vec<f64>>,
    pub backlogs: Vec<Vec<f64>>,
    /// Seeds for which cost is nondecreasing along the points.
    pub seeds_cost_nondecreasing: usize,
    pub seeds_backlog_nondecreasing: usize,
    pub seeds_cost_nonincreasing: usize,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub kind: SweepKind,
    pub lines: Vec<TrendLine>,
}

fn nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

/// Builds the trend report from summaries indexed `[method][point][seed]`.
pub fn trend_report(kind: SweepKind, methods: &[Method], points: &[f64], summaries: &[Vec<Vec<Summary>>]) -> TrendReport {
    let lines = methods
        .iter()
        .zip(summaries)
        .map(|(m, per_point)| {
            let costs: Vec<Vec<f64>> = per_point.iter().map(|s| s.iter().map(|x| x.avg_cost).collect()).collect();
            let backlogs: Vec<Vec<f64>> = per_point.iter().map(|s| s.iter().map(|x| x.avg_uav_backlog).collect()).collect();
            let seeds = per_point.first().map_or(0, Vec::len);
            let column = |table: &Vec<Vec<f64>>, s: usize| table.iter().map(|row| row[s]).collect::<Vec<f64>>();
            TrendLine {
                method: m.name().to_string(),
                points: points.to_vec(),
                seeds_cost_nondecreasing: (0..seeds).filter(|&s| nondecreasing(&column(&costs, s))).count(),
                seeds_cost_nonincreasing: (0..seeds).filter(|&s| nonincreasing(&column(&costs, s))).count(),
                seeds_backlog_nondecreasing: (0..seeds).filter(|&s| nondecreasing(&column(&backlogs, s))).count(),
                costs,
                backlogs,
                seeds,
            }
        })
        .collect();
    TrendReport { kind, lines }
}

pub fn print_trend(report: &TrendReport, out: &mut impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "trend report: {}", report.kind.name())?;
    for l in &report.lines {
        let means: Vec<String> = l.costs.iter().map(|c| format!("{:.4}", c.iter().sum::<f64>() / c.len().max(1) as f64)).collect();
        writeln!(
            out,
            "  {:<18} cost by point [{}]  nondecreasing on {}/{} seeds",
            l.method,
            means.join(", "),
            l.seeds_cost_nondecreasing,
            l.seeds
        )?;
    }
    Ok(())
}

pub fn label_for_point(kind: SweepKind, x: f64) -> String {
    format!("{}-{}", kind.name(), x)
}

pub fn ensure_exists(p: &Path) -> Result<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(anyhow!("{} does not exist", p.display()))
    }
}
