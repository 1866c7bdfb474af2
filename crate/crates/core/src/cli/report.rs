//! CSV rows and the JSON run summary.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::config::{Instance, SCHEMA_VERSION};
use super::pipeline::Row;
use crate::fmt_float;

pub const CSV_HEADER: [&str; 15] = [
    "instance_id",
    "theorem_id",
    "alpha",
    "a",
    "a_tilde",
    "lhs",
    "lhs_ci_lo",
    "lhs_ci_hi",
    "rhs",
    "rhs_ci_lo",
    "rhs_ci_hi",
    "verdict",
    "margin_stderr",
    "mode",
    "seed",
];

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.instance_id.clone(),
            r.theorem_id.to_string(),
            fmt_float(r.alpha),
            fmt_float(r.a),
            fmt_float(r.a_tilde),
            fmt_float(r.lhs.value()),
            fmt_float(r.lhs.lo()),
            fmt_float(r.lhs.hi()),
            fmt_float(r.rhs.value()),
            fmt_float(r.rhs.lo()),
            fmt_float(r.rhs.hi()),
            r.verdict.clone(),
            fmt_float(r.margin_stderr),
            r.mode.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct InstanceSummary {
    pub id: String,
    pub family: &'static str,
    pub seed: u64,
    pub paths: usize,
    pub grid_depth: u32,
    pub horizon: f64,
    pub rows: usize,
}

#[derive(Debug, Serialize)]
pub struct Violation {
    pub instance_id: String,
    pub theorem_id: String,
    pub alpha: String,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub rows: usize,
    pub verdicts: BTreeMap<String, usize>,
    pub theorems: BTreeMap<String, usize>,
    pub violations: Vec<Violation>,
    pub instances: Vec<InstanceSummary>,
    pub exit_code: i32,
}

pub fn summarize(instances: &[Instance], rows: &[Row], exit_code: i32) -> Summary {
    let mut verdicts = BTreeMap::new();
    let mut theorems = BTreeMap::new();
    for r in rows {
        *verdicts.entry(r.verdict.clone()).or_insert(0) += 1;
        *theorems.entry(r.theorem_id.to_string()).or_insert(0) += 1;
    }
    Summary {
        schema_version: SCHEMA_VERSION,
        rows: rows.len(),
        verdicts,
        theorems,
        violations: rows
            .iter()
            .filter(|r| r.is_violated())
            .map(|r| Violation {
                instance_id: r.instance_id.clone(),
                theorem_id: r.theorem_id.to_string(),
                alpha: fmt_float(r.alpha),
            })
            .collect(),
        instances: instances
            .iter()
            .map(|i| InstanceSummary {
                id: i.id.clone(),
                family: i.spec.family(),
                seed: i.seed,
                paths: i.paths,
                grid_depth: i.grid.depth,
                horizon: i.grid.horizon,
                rows: rows.iter().filter(|r| r.instance_id == i.id).count(),
            })
            .collect(),
        exit_code,
    }
}
