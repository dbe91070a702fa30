//! Run artifacts: per-slot CSV, JSON summary, JSON-lines records and the manifest.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sagin_core::orchestrator::{Experiment, SlotRecord, Summary};
use serde::{Deserialize, Serialize};

pub const SLOTS_CSV: &str = "slots.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const RECORDS_JSONL: &str = "records.jsonl";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const CONFIG_TOML: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_path: Option<String>,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub methods: Vec<String>,
    pub output_dir: String,
    pub version: String,
}

impl RunManifest {
    pub fn artifact_version() -> String {
        format!("sagin {}", env!("CARGO_PKG_VERSION"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRow {
    pub t: u64,
    pub method: String,
    pub cost_total: f64,
    pub cost_collect: f64,
    pub cost_local: f64,
    pub cost_bs: f64,
    pub cost_sat: f64,
    pub cost_direct_sat: f64,
    pub h_u_mean: f64,
    pub h_bs_mean: f64,
    pub drift: f64,
    pub bound_rhs: f64,
}

impl SlotRow {
    pub fn from_record(r: &SlotRecord) -> Self {
        let mut row = SlotRow {
            t: r.t,
            method: r.method.name().to_string(),
            cost_total: r.cost_total,
            cost_collect: 0.0,
            cost_local: 0.0,
            cost_bs: 0.0,
            cost_sat: 0.0,
            cost_direct_sat: 0.0,
            h_u_mean: r.mean_uav_backlog(),
            h_bs_mean: r.mean_bs_backlog(),
            drift: r.drift,
            bound_rhs: r.bound_rhs,
        };
        for c in &r.costs {
            row.cost_collect += c.collect;
            row.cost_local += c.local;
            row.cost_bs += c.bs;
            row.cost_sat += c.sat;
            row.cost_direct_sat += c.direct_sat;
        }
        row
    }
}

/// Creates `dir`, refusing to reuse a non-empty directory unless `force`.
pub fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let non_empty = fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?.next().is_some();
        if non_empty && !force {
            bail!("output directory {} is not empty; pass --force to overwrite", dir.display());
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn write_slots_csv(path: &Path, records: &[SlotRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in records {
        w.serialize(SlotRow::from_record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_slots_csv(path: &Path) -> Result<Vec<SlotRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_reader(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_records(path: &Path, records: &[SlotRecord]) -> Result<()> {
    let f = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    let mut w = BufWriter::new(f);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<SlotRecord>> {
    let f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

/// Directory of one (method, seed) run below the output root.
pub fn run_dir(root: &Path, label: &str, seed: u64) -> PathBuf {
    root.join(label).join(format!("seed-{seed}"))
}

pub fn write_experiment(dir: &Path, exp: &Experiment) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_slots_csv(&dir.join(SLOTS_CSV), &exp.records)?;
    write_json(&dir.join(SUMMARY_JSON), &exp.summary)?;
    write_records(&dir.join(RECORDS_JSONL), &exp.records)?;
    Ok(())
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    read_json(&dir.join(SUMMARY_JSON))
}
