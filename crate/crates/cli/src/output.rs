//! Report envelopes and CSV tables.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use rootshift::homotopy::TrackReport;
use rootshift::rootfind::{RootClass, RootSet};
use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Rows of a CSV table.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Serialize)]
pub struct Envelope<'a> {
    pub command: &'a str,
    pub input: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub verified: bool,
    pub result: Value,
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => {
            Box::new(File::create(p).with_context(|| format!("cannot write {}", p.display()))?)
        }
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_json(env: &Envelope, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, env)?;
    writeln!(w)?;
    Ok(())
}

pub fn write_csv(table: &Table, out: Option<&Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn coords(n: usize) -> impl Iterator<Item = String> {
    (1..=n).map(|i| format!("x{i}"))
}

fn class_name(c: RootClass) -> &'static str {
    match c {
        RootClass::Simple => "simple",
        RootClass::Multiple => "multiple",
    }
}

/// One row per root; `extra` appends a column computed from the root index.
pub fn roots_table(set: &RootSet, extra: Option<(&str, &dyn Fn(usize) -> String)>) -> Table {
    let n = set.region.dim();
    let mut header: Vec<String> = vec!["index".into()];
    header.extend(coords(n));
    header.extend(
        ["residual", "jf", "jf_relative", "class", "multiplicity"]
            .iter()
            .map(|s| s.to_string()),
    );
    if let Some((name, _)) = extra {
        header.push(name.into());
    }
    let rows = set
        .roots
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![i.to_string()];
            row.extend(r.x.iter().map(|v| format!("{v:.15e}")));
            row.push(format!("{:.3e}", r.residual));
            row.push(format!("{:.15e}", r.jf_value));
            row.push(format!("{:.3e}", r.jf_relative));
            row.push(class_name(r.class).into());
            row.push(r.multiplicity_estimate.to_string());
            if let Some((_, f)) = extra {
                row.push(f(i));
            }
            row
        })
        .collect();
    Table { header, rows }
}

/// Long format: one row per recorded path point.
pub fn paths_table(tracks: &[TrackReport], n: usize) -> Table {
    let mut header: Vec<String> = vec!["path".into(), "tau".into()];
    header.extend(coords(n));
    header.extend(["jf", "step", "status"].iter().map(|s| s.to_string()));
    let mut rows = Vec::new();
    for (i, t) in tracks.iter().enumerate() {
        let status = serde_json::to_value(t.status)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        for p in &t.path {
            let mut row = vec![i.to_string(), format!("{:.15e}", p.tau)];
            row.extend(p.x.iter().map(|v| format!("{v:.15e}")));
            row.push(format!("{:.15e}", p.jf_value));
            row.push(format!("{:.3e}", p.step));
            row.push(status.clone());
            rows.push(row);
        }
    }
    Table { header, rows }
}
