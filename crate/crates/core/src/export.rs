//! CSV and structured-text exports. Every file starts with comment headers
//! carrying the tool version, the model hash, and the seed when one applies;
//! no timestamps, so identical runs produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dynamics::{ConditionReport, RateFamily};
use crate::entropy::DecayCurve;
use crate::error::{Error, Result};
use crate::exact::{Generator, Measure};
use crate::simulate::{ProcessPath, TestReport, Trajectory};

/// Provenance carried by every exported artifact.
#[derive(Debug, Clone)]
pub struct FileMeta {
    pub model_hash: String,
    pub seed: Option<u64>,
}

impl FileMeta {
    pub fn new(model_hash: impl Into<String>) -> Self {
        Self {
            model_hash: model_hash.into(),
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    fn write_header(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "# ipslab v{}", crate::VERSION)?;
        writeln!(out, "# model_hash={}", self.model_hash)?;
        if let Some(seed) = self.seed {
            writeln!(out, "# seed={seed}")?;
        }
        Ok(())
    }
}

fn open(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Generic numeric table with named columns.
pub fn write_csv(
    path: &Path,
    meta: &FileMeta,
    columns: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<()> {
    let mut out = open(path)?;
    meta.write_header(&mut out)?;
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Decay curve: `t, entropy, dissipation[, bound]`.
pub fn write_decay_curve(path: &Path, meta: &FileMeta, curve: &DecayCurve) -> Result<()> {
    let mut columns = vec!["t", "entropy", "dissipation"];
    if curve.bound.is_some() {
        columns.push("bound");
    }
    let rows = (0..curve.t.len()).map(|i| {
        let mut row = vec![curve.t[i], curve.entropy[i], curve.dissipation[i]];
        if let Some(b) = &curve.bound {
            row.push(b[i]);
        }
        row
    });
    write_csv(path, meta, &columns, rows)
}

/// Process path: `s, L, A, M, state, is_event`.
pub fn write_process_path(path: &Path, meta: &FileMeta, p: &ProcessPath) -> Result<()> {
    write_csv(
        path,
        meta,
        &["s", "L", "A", "M", "state", "is_event"],
        (0..p.s.len()).map(|i| {
            vec![
                p.s[i],
                p.l[i],
                p.a[i],
                p.m[i],
                p.state[i] as f64,
                if p.is_event[i] { 1.0 } else { 0.0 },
            ]
        }),
    )
}

/// Trajectory event list: `time, region, new_pattern, self_jump`.
pub fn write_trajectory(
    path: &Path,
    meta: &FileMeta,
    rates: &RateFamily,
    traj: &Trajectory,
) -> Result<()> {
    let mut out = open(path)?;
    meta.write_header(&mut out)?;
    writeln!(out, "# initial={:?}", traj.initial.values())?;
    writeln!(out, "# horizon={:.17e}", traj.horizon)?;
    writeln!(out, "time,region_sites,new_pattern,self_jump")?;
    for e in &traj.events {
        let sites = &rates.regions()[e.region as usize].sites;
        let site_str: Vec<String> = sites.iter().map(|s| s.to_string()).collect();
        let vals: Vec<String> = e.new_values.iter().map(|v| v.to_string()).collect();
        writeln!(
            out,
            "{:.17e},{},{},{}",
            e.time,
            site_str.join(" "),
            vals.join(" "),
            u8::from(e.self_jump)
        )?;
    }
    Ok(())
}

/// Sparse generator in coordinate format: `row, col, value`.
pub fn write_generator_coo(path: &Path, meta: &FileMeta, gen: &Generator) -> Result<()> {
    let mut out = open(path)?;
    meta.write_header(&mut out)?;
    writeln!(out, "# dimension={}", gen.len())?;
    writeln!(out, "row,col,value")?;
    for (r, c, v) in gen.coo_entries() {
        writeln!(out, "{r},{c},{v:.17e}")?;
    }
    Ok(())
}

/// Probability vector: `state, probability`.
pub fn write_measure(path: &Path, meta: &FileMeta, mu: &Measure) -> Result<()> {
    write_csv(
        path,
        meta,
        &["state", "probability"],
        (0..mu.len()).map(|i| vec![i as f64, mu.get(i as u64)]),
    )
}

/// Structured-text (TOML) report for any serializable summary.
pub fn write_report<T: serde::Serialize>(path: &Path, meta: &FileMeta, report: &T) -> Result<()> {
    let mut out = open(path)?;
    meta.write_header(&mut out)?;
    let body = toml::to_string_pretty(report)
        .map_err(|e| Error::Invalid(format!("report serialization: {e}")))?;
    out.write_all(body.as_bytes())?;
    Ok(())
}

/// Condition report with its oscillation tables.
pub fn write_condition_report(
    path: &Path,
    meta: &FileMeta,
    report: &ConditionReport,
) -> Result<()> {
    write_report(path, meta, report)
}

/// Statistical test report.
pub fn write_test_report(path: &Path, meta: &FileMeta, report: &TestReport) -> Result<()> {
    write_report(path, meta, report)
}
