//! Command-line interface.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sagin_core::config::{Config, Method};
use sagin_core::orchestrator::{Experiment, Summary};
use sagin_core::rng::{stream, Stream};

use crate::bench;
use crate::config_io;
use crate::output::{self, RunManifest, CONFIG_TOML, MANIFEST_JSON, RECORDS_JSONL};
use crate::radar;
use crate::runner::{self, AuditReport, RunSpec, SweepKind};

#[derive(Debug, Parser)]
#[command(name = "sagin", version, about = "Offloading simulator for space-air-ground integrated networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every selected method for every seed.
    Run(Common),
    /// Run a parameter sweep and report the cost trend.
    Sweep {
        /// datasize, uav-cpu, bs-cpu or v.
        #[arg(value_parser = parse_sweep)]
        kind: SweepKind,
        /// Comma-separated sweep points (defaults depend on the kind).
        #[arg(long, value_delimiter = ',')]
        points: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-derive costs, bounds and flow balance from logged records.
    Audit {
        /// Output directory of a run or sweep, or a single run directory.
        dir: PathBuf,
    },
    /// Harmony search against the exact BS allocation on random instances.
    BenchSghs {
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 10_000)]
        ni: usize,
        #[arg(long, default_value_t = 3)]
        max_dim: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Writes the convergence traces as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// FFT peak of the synthesized radar beat signal against the closed form.
    BenchRadar {
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Writes the spectrum of the first distance as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seeds to run; repeat or comma-separate. Defaults to the config's list.
    #[arg(long, value_delimiter = ',')]
    pub seed: Vec<u64>,
    #[arg(long)]
    pub slots: Option<u64>,
    /// Comma-separated method names, or `all`.
    #[arg(long, value_delimiter = ',', value_parser = parse_method_arg)]
    pub method: Vec<MethodArg>,
    #[arg(long)]
    pub v_weight: Option<f64>,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodArg {
    All,
    One(Method),
}

fn parse_method_arg(s: &str) -> Result<MethodArg, String> {
    if s == "all" {
        return Ok(MethodArg::All);
    }
    Method::parse(s).map(MethodArg::One).ok_or_else(|| {
        let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
        format!("unknown method `{s}` (expected one of: all, {})", names.join(", "))
    })
}

fn parse_sweep(s: &str) -> Result<SweepKind, String> {
    SweepKind::parse(s).ok_or_else(|| format!("unknown sweep `{s}` (expected datasize, uav-cpu, bs-cpu or v)"))
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => config_io::parse_config(p),
        None => Ok(Config::default()),
    }
}

impl Common {
    /// Config with command-line overrides applied and validated.
    fn resolve(&self) -> Result<(Config, Vec<Method>, Vec<u64>)> {
        let mut cfg = load_config(self.config.as_deref())?;
        if let Some(s) = self.slots {
            cfg.experiment.slots = s;
        }
        if let Some(v) = self.v_weight {
            cfg.lyapunov.v_weight = v;
        }
        if !self.seed.is_empty() {
            cfg.experiment.seeds = self.seed.clone();
        }
        cfg.validate().map_err(|e| anyhow!("{e}"))?;
        let methods = if self.method.is_empty() {
            vec![cfg.experiment.method]
        } else if self.method.contains(&MethodArg::All) {
            Method::ALL.to_vec()
        } else {
            let mut v = Vec::new();
            for m in &self.method {
                if let MethodArg::One(m) = m {
                    if !v.contains(m) {
                        v.push(*m);
                    }
                }
            }
            v
        };
        let seeds = cfg.experiment.seeds.clone();
        Ok((cfg, methods, seeds))
    }

    fn manifest(&self, cfg: &Config, methods: &[Method], seeds: &[u64]) -> Result<RunManifest> {
        Ok(RunManifest {
            config_path: self.config.as_ref().map(|p| p.display().to_string()),
            config_hash: config_io::config_hash(cfg)?,
            seeds: seeds.to_vec(),
            methods: methods.iter().map(|m| m.name().to_string()).collect(),
            output_dir: self.out.display().to_string(),
            version: RunManifest::artifact_version(),
        })
    }
}

fn write_config(dir: &Path, cfg: &Config) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_TOML), config_io::to_toml(cfg)?).with_context(|| format!("writing config in {}", dir.display()))
}

/// Writes every finished run and reports audit failures. Returns whether all passed.
fn persist(root: &Path, finished: &[runner::Finished]) -> Result<bool> {
    let mut ok = true;
    for f in finished {
        let dir = output::run_dir(root, &f.spec.label, f.spec.seed);
        output::write_experiment(&dir, &f.experiment)?;
        print_summary(&f.spec.label, &f.experiment.summary);
        if let Some(msg) = f.audit.failure() {
            ok = false;
            eprintln!("audit failed for {} seed {}: {msg}", f.spec.label, f.spec.seed);
        }
    }
    Ok(ok)
}

fn print_summary(label: &str, s: &Summary) {
    println!(
        "{label:<32} seed {:<4} avg cost {:>12.6}  uav backlog {:>14.1}  bs backlog {:>14.1}  bound violations {}",
        s.seed, s.avg_cost, s.avg_uav_backlog, s.avg_bs_backlog, s.bound_violations
    );
}

fn cmd_run(c: &Common) -> Result<bool> {
    let (cfg, methods, seeds) = c.resolve()?;
    output::prepare_dir(&c.out, c.force)?;
    write_config(&c.out, &cfg)?;
    output::write_json(&c.out.join(MANIFEST_JSON), &c.manifest(&cfg, &methods, &seeds)?)?;
    let specs = methods
        .iter()
        .flat_map(|&m| seeds.iter().map(move |&s| (m, s)))
        .map(|(method, seed)| RunSpec { label: method.name().to_string(), cfg: cfg.clone(), method, seed })
        .collect();
    let finished = runner::run_all(specs, c.jobs)?;
    persist(&c.out, &finished)
}

fn cmd_sweep(kind: SweepKind, points: Option<Vec<f64>>, c: &Common) -> Result<bool> {
    let (cfg, methods, seeds) = c.resolve()?;
    let points = points.unwrap_or_else(|| kind.default_points());
    if points.is_empty() {
        bail!("sweep needs at least one point");
    }
    output::prepare_dir(&c.out, c.force)?;
    write_config(&c.out, &cfg)?;
    output::write_json(&c.out.join(MANIFEST_JSON), &c.manifest(&cfg, &methods, &seeds)?)?;
    let mut specs = Vec::new();
    for &x in &points {
        let pcfg = kind.apply(&cfg, x);
        pcfg.validate().map_err(|e| anyhow!("sweep point {x}: {e}"))?;
        let point_dir = runner::label_for_point(kind, x);
        write_config(&c.out.join(&point_dir), &pcfg)?;
        for &m in &methods {
            for &s in &seeds {
                specs.push(RunSpec { label: format!("{point_dir}/{}", m.name()), cfg: pcfg.clone(), method: m, seed: s });
            }
        }
    }
    let finished = runner::run_all(specs, c.jobs)?;
    let ok = persist(&c.out, &finished)?;

    // Input order is point-major, then method, then seed.
    let per = methods.len() * seeds.len();
    let table: Vec<Vec<Vec<Summary>>> = (0..methods.len())
        .map(|mi| {
            (0..points.len())
                .map(|pi| (0..seeds.len()).map(|si| finished[pi * per + mi * seeds.len() + si].experiment.summary.clone()).collect())
                .collect()
        })
        .collect();
    let report = runner::trend_report(kind, &methods, &points, &table);
    runner::print_trend(&report, &mut std::io::stdout())?;
    output::write_json(&c.out.join("trend.json"), &report)?;
    Ok(ok)
}

fn find_runs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if dir.join(RECORDS_JSONL).is_file() {
        out.push(dir.to_path_buf());
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    for e in entries {
        find_runs(&e, out)?;
    }
    Ok(())
}

/// Nearest `config.toml` at or above `dir`, up to `root`.
fn config_for(dir: &Path, root: &Path) -> Result<Config> {
    let mut cur = Some(dir);
    while let Some(d) = cur {
        let p = d.join(CONFIG_TOML);
        if p.is_file() {
            return config_io::parse_config(&p);
        }
        if d == root {
            break;
        }
        cur = d.parent();
    }
    // A bare run directory: try its ancestors without a bound.
    let mut cur = root.parent();
    while let Some(d) = cur {
        let p = d.join(CONFIG_TOML);
        if p.is_file() {
            return config_io::parse_config(&p);
        }
        cur = d.parent();
    }
    bail!("no {CONFIG_TOML} found for {}", dir.display())
}

pub fn audit_dir(dir: &Path) -> Result<Vec<(PathBuf, AuditReport)>> {
    runner::ensure_exists(dir)?;
    let mut runs = Vec::new();
    find_runs(dir, &mut runs)?;
    if runs.is_empty() {
        bail!("no {RECORDS_JSONL} below {}", dir.display());
    }
    runs.into_iter()
        .map(|r| {
            let cfg = config_for(&r, dir)?;
            let records = output::read_records(&r.join(RECORDS_JSONL))?;
            let summary = output::read_summary(&r)?;
            let exp = Experiment { records, summary };
            Ok((r, runner::audit(&cfg, &exp)))
        })
        .collect()
}

fn cmd_audit(dir: &Path) -> Result<bool> {
    let mut ok = true;
    for (path, rep) in audit_dir(dir)? {
        match rep.failure() {
            None => println!("ok    {} ({} slots)", path.display(), rep.records_checked),
            Some(msg) => {
                ok = false;
                println!("FAIL  {}: {msg}", path.display());
            }
        }
    }
    Ok(ok)
}

fn cmd_bench_sghs(instances: usize, ni: usize, max_dim: usize, seed: u64, config: Option<&Path>, trace: Option<&Path>) -> Result<bool> {
    let cfg = load_config(config)?;
    let mut rng = stream(seed, Stream::Solver);
    let cases = bench::run_bench(instances, max_dim, &cfg.sghs, ni, &mut rng);
    let within = cases.iter().filter(|c| c.rel_gap <= 0.01).count();
    for c in &cases {
        println!("instance {:>3}  dim {}  sghs {:>14.6e}  oracle {:>14.6e}  gap {:>9.3e}", c.instance, c.dim, c.sghs, c.oracle, c.rel_gap);
    }
    println!("{within}/{} instances within 1% of the exact optimum", cases.len());
    if let Some(p) = trace {
        bench::write_traces(&cases, p)?;
    }
    Ok(true)
}

fn cmd_bench_radar(count: usize, seed: u64, config: Option<&Path>, dump: Option<&Path>) -> Result<bool> {
    let cfg = load_config(config)?;
    let rc = cfg.radar.noise_free();
    let mut rng = stream(seed, Stream::Perception);
    let cases = radar::run_oracle(&rc, count, 10.0, 500.0, &mut rng);
    for c in &cases {
        println!(
            "d {:>8.3} m  closed {:>13.1} Hz  peak {:>13.1} Hz  bin {:>8.1} Hz  d_est {:>8.3} m  {}",
            c.distance,
            c.f_closed,
            c.f_peak,
            c.bin_width,
            c.d_est,
            if c.freq_ok && c.range_ok { "ok" } else { "FAIL" }
        );
    }
    if let (Some(p), Some(first)) = (dump, cases.first()) {
        let mut f = std::io::BufWriter::new(fs::File::create(p)?);
        radar::dump_spectrum(first.distance, &rc, &mut f)?;
    }
    Ok(cases.iter().all(|c| c.freq_ok && c.range_ok))
}

pub fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(c) => cmd_run(&c),
        Command::Sweep { kind, points, common } => cmd_sweep(kind, points, &common),
        Command::Audit { dir } => cmd_audit(&dir),
        Command::BenchSghs { instances, ni, max_dim, seed, config, trace } => {
            cmd_bench_sghs(instances, ni, max_dim, seed, config.as_deref(), trace.as_deref())
        }
        Command::BenchRadar { count, seed, config, dump } => cmd_bench_radar(count, seed, config.as_deref(), dump.as_deref()),
    }
}

/// Exit status 0 on success, 1 on a failed audit or check, 2 on errors.
pub fn main_with(cli: Cli) -> ExitCode {
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
