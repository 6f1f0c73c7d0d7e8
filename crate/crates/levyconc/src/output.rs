//! CSV, JSON and binary writers.
//!
//! Numbers are written in the shortest decimal form that parses back to the
//! same binary64 value. Infinities are `inf` / `-inf`, absent values are
//! empty CSV cells and `null` in JSON. JSON stores non-finite values as the
//! strings `"inf"`, `"-inf"` and `"nan"`.

use std::io::Write;
use std::path::Path;

use levyconc_core::bounds::BoundReport;
use levyconc_core::simulate::SampleBatch;
use serde_json::{json, Map, Value};

use crate::verify::VerificationReport;
use crate::Error;

/// Shortest round-trip text for `x`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:?}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(fmt_f64(x))
    }
}

/// One table cell before formatting.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(Option<f64>),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_opt(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(Some(x)) => json_f64(*x),
            Cell::Num(None) => Value::Null,
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

/// A table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), Error> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::csv))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(k, v)| (k.to_string(), v.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json serializes");
        s.push('\n');
        s
    }
}

pub const BOUND_COLUMNS: &[&str] = &[
    "t",
    "c",
    "q",
    "A",
    "K",
    "h",
    "g_quarter",
    "tail_mass",
    "condition_3",
    "E_c",
    "median_standard",
    "median_refined",
    "thm2_c",
    "thm2_h",
    "thm2_g",
    "thm2_threshold",
    "thm3_c",
    "thm3_h",
    "thm3_g",
    "thm3_threshold",
    "x0",
    "sandwich_lower",
    "sandwich_upper",
    "h_one",
    "h_k",
    "notes",
];

pub fn bound_table(reports: &[BoundReport]) -> Table {
    let mut table = Table::new(BOUND_COLUMNS);
    for r in reports {
        let th = |t: Option<levyconc_core::bounds::Threshold>| {
            [
                Cell::Num(t.map(|t| t.c)),
                Cell::Num(t.map(|t| t.h)),
                Cell::Num(t.map(|t| t.g)),
                Cell::Num(t.map(|t| t.value)),
            ]
        };
        let mut row = vec![
            Cell::Num(Some(r.t)),
            Cell::Num(Some(r.c)),
            Cell::Num(r.q),
            Cell::Num(Some(r.a)),
            Cell::Num(Some(r.k)),
            Cell::Num(Some(r.h)),
            Cell::Num(Some(r.g_quarter)),
            Cell::Num(Some(r.tail_mass)),
            Cell::Bool(r.condition_3),
            Cell::Num(Some(r.e_c)),
            Cell::Num(r.median_standard),
            Cell::Num(r.median_refined),
        ];
        row.extend(th(r.thm2));
        row.extend(th(r.thm3));
        let s = r.sandwich;
        row.extend([
            Cell::Num(s.map(|s| s.x0)),
            Cell::Num(s.map(|s| s.lower)),
            Cell::Num(s.map(|s| s.upper)),
            Cell::Num(s.map(|s| s.h_one)),
            Cell::Num(s.map(|s| s.h_k)),
            Cell::Text(r.notes.join("; ")),
        ]);
        table.push(row);
    }
    table
}

pub const VERIFY_COLUMNS: &[&str] = &[
    "theorem",
    "check",
    "family",
    "f",
    "t",
    "param",
    "param_value",
    "n",
    "seed",
    "stream",
    "bound",
    "empirical",
    "ci_lower",
    "ci_upper",
    "slack_mc",
    "slack_bias",
    "slack_center",
    "verdict",
    "note",
];

pub fn verify_table(reports: &[VerificationReport]) -> Table {
    let mut table = Table::new(VERIFY_COLUMNS);
    for r in reports {
        for c in &r.checks {
            table.push(vec![
                Cell::Text(r.theorem.to_string()),
                Cell::Text(c.name.clone()),
                Cell::Text(r.family.clone()),
                Cell::Text(r.f.clone()),
                Cell::Num(Some(r.t)),
                Cell::Text(r.param.map(|p| p.0.to_string()).unwrap_or_default()),
                Cell::Num(r.param.map(|p| p.1)),
                Cell::Int(r.n as u64),
                Cell::Int(r.seed),
                Cell::Int(r.stream),
                Cell::Num(c.bound),
                Cell::Num(c.empirical),
                Cell::Num(c.ci.map(|ci| ci.0)),
                Cell::Num(c.ci.map(|ci| ci.1)),
                Cell::Num(Some(c.slack.mc)),
                Cell::Num(Some(c.slack.bias)),
                Cell::Num(Some(c.slack.center)),
                Cell::Text(c.verdict.to_string()),
                Cell::Text(c.note.clone()),
            ]);
        }
    }
    table
}

/// Full verification records, nested by report.
pub fn verify_json(reports: &[VerificationReport]) -> String {
    let records: Vec<Value> = reports
        .iter()
        .map(|r| {
            let checks: Vec<Value> = r
                .checks
                .iter()
                .map(|c| {
                    json!({
                        "check": c.name,
                        "bound": c.bound.map(json_f64),
                        "empirical": c.empirical.map(json_f64),
                        "ci": c.ci.map(|(a, b)| json!([json_f64(a), json_f64(b)])),
                        "slack": {
                            "mc": json_f64(c.slack.mc),
                            "bias": json_f64(c.slack.bias),
                            "center": json_f64(c.slack.center),
                        },
                        "verdict": c.verdict.to_string(),
                        "note": c.note,
                    })
                })
                .collect();
            json!({
                "theorem": r.theorem.to_string(),
                "family": r.family,
                "f": r.f,
                "t": json_f64(r.t),
                "param": r.param.map(|p| json!({ "name": p.0, "value": json_f64(p.1) })),
                "n": r.n,
                "seed": r.seed,
                "stream": r.stream,
                "verdict": r.verdict().to_string(),
                "checks": checks,
            })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&Value::Array(records)).expect("json serializes");
    s.push('\n');
    s
}

/// Sample rows as a table; columns `x0 .. x{d-1}`.
pub fn sample_csv(batch: &SampleBatch) -> Result<String, Error> {
    let mut buf = Vec::new();
    {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        let header: Vec<String> = (0..batch.dim).map(|i| format!("x{i}")).collect();
        out.write_record(&header)?;
        for row in batch.rows() {
            out.write_record(row.iter().map(|&x| fmt_f64(x)))?;
        }
        out.flush()?;
    }
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

/// Metadata describing a batch.
pub fn sample_metadata(batch: &SampleBatch) -> Value {
    json!({
        "n": batch.len(),
        "dim": batch.dim,
        "t": json_f64(batch.t),
        "kind": format!("{:?}", batch.kind),
        "method": format!("{:?}", batch.method),
        "seed": batch.rng.seed,
        "stream": batch.rng.stream,
        "algorithm": batch.algorithm,
        "epsilon": batch.bias.epsilon.map(json_f64),
        "discarded_sd": json_f64(batch.bias.discarded_sd),
        "contamination_radius": json_f64(batch.bias.contamination_radius),
        "bias_bound": json_f64(batch.bias.bias_bound),
        "layout": "row-major little-endian f64, n rows of dim values",
    })
}

pub fn sample_json(batch: &SampleBatch) -> String {
    let mut meta = sample_metadata(batch);
    let rows: Vec<Value> = batch.rows().map(|r| Value::Array(r.iter().map(|&x| json_f64(x)).collect())).collect();
    meta["values"] = Value::Array(rows);
    let mut s = serde_json::to_string_pretty(&meta).expect("json serializes");
    s.push('\n');
    s
}

/// Raw little-endian dump at `path` plus a `.json` sidecar.
pub fn write_binary(batch: &SampleBatch, path: &Path) -> Result<(), Error> {
    let mut bytes = Vec::with_capacity(8 * batch.values.len());
    for x in &batch.values {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    std::fs::write(path, bytes)?;
    let mut side = serde_json::to_string_pretty(&sample_metadata(batch))?;
    side.push('\n');
    std::fs::write(sidecar_path(path), side)?;
    Ok(())
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    p.into()
}

/// Reads a dump written by [`write_binary`].
pub fn read_binary(path: &Path) -> Result<Vec<f64>, Error> {
    let bytes = std::fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Config(format!("{}: length is not a multiple of 8", path.display())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}
