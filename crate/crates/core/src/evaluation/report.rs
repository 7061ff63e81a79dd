//! CSV report files.
//!
//! Every file starts with `# key: value` comment lines naming the schema and
//! the seeds and code that produced it, followed by a header row. Floats are
//! written in shortest round-trip form, so re-running a campaign reproduces
//! the file byte for byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::acsl::AcslReport;
use super::ber::{BerCurve, BerPoint};
use super::quantile::Summary;
use crate::error::{Error, Result};
use crate::training::EpochRecord;

pub const ACSL_SCHEMA: &str = "isac-acsl-v1";
pub const SUMMARY_SCHEMA: &str = "isac-acsl-summary-v1";
pub const BER_SCHEMA: &str = "isac-ber-v1";
pub const HISTORY_SCHEMA: &str = "isac-history-v1";

pub type Comments = Vec<(String, String)>;

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn write_table(path: &Path, schema: &str, comments: &[(String, String)], header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# schema: {schema}")?;
    for (k, v) in comments {
        // keep multi-line values (such as a config snapshot) inside comments
        for line in v.lines() {
            writeln!(w, "# {k}: {line}")?;
        }
    }
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Per-codeword values (or, for sampled reports, the reservoir).
pub fn write_acsl_values(path: &Path, report: &AcslReport, comments: &[(String, String)]) -> Result<()> {
    let values = report.values.as_ref().unwrap_or(&report.reservoir);
    let mut c = vec![
        ("code_id".to_string(), report.code_id.clone()),
        ("population".to_string(), report.population.label()),
    ];
    c.extend_from_slice(comments);
    let rows = values
        .iter()
        .enumerate()
        .map(|(i, &v)| vec![i.to_string(), num(v)])
        .collect();
    write_table(path, ACSL_SCHEMA, &c, &["message_index", "acsl_db"], rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub code_id: String,
    pub population: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl SummaryRow {
    pub fn new(code_id: &str, population: &str, s: &Summary) -> Self {
        Self {
            code_id: code_id.into(),
            population: population.into(),
            min: s.min,
            q1: s.q1,
            median: s.median,
            q3: s.q3,
            max: s.max,
        }
    }

    pub fn from_report(r: &AcslReport) -> Self {
        Self::new(&r.code_id, &r.population.label(), &r.summary)
    }

    pub fn summary(&self) -> Summary {
        Summary {
            min: self.min,
            q1: self.q1,
            median: self.median,
            q3: self.q3,
            max: self.max,
        }
    }
}

pub fn write_summary(path: &Path, rows: &[SummaryRow], comments: &[(String, String)]) -> Result<()> {
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.code_id.clone(),
                r.population.clone(),
                num(r.min),
                num(r.q1),
                num(r.median),
                num(r.q3),
                num(r.max),
            ]
        })
        .collect();
    write_table(
        path,
        SUMMARY_SCHEMA,
        comments,
        &["code_id", "population", "min", "q1", "median", "q3", "max"],
        rows,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRow {
    pub code_id: String,
    pub snr_db: f64,
    pub messages: u64,
    pub bit_errors: u64,
    pub ber: f64,
}

pub fn write_ber(path: &Path, curves: &[BerCurve], comments: &[(String, String)]) -> Result<()> {
    let mut c: Comments = curves
        .iter()
        .map(|cv| (format!("seed[{}]", cv.code_id), cv.seed.to_string()))
        .collect();
    c.extend_from_slice(comments);
    let rows = curves
        .iter()
        .flat_map(|cv| {
            cv.points.iter().map(|p: &BerPoint| {
                vec![
                    cv.code_id.clone(),
                    num(p.snr_db),
                    p.messages.to_string(),
                    p.bit_errors.to_string(),
                    num(p.ber),
                ]
            })
        })
        .collect();
    write_table(path, BER_SCHEMA, &c, &["code_id", "snr_db", "messages", "bit_errors", "ber"], rows)
}

pub fn write_history(path: &Path, history: &[EpochRecord], comments: &[(String, String)]) -> Result<()> {
    let rows = history
        .iter()
        .map(|r| {
            vec![
                r.epoch.to_string(),
                num(r.lr),
                num(r.snr_db),
                num(r.total),
                num(r.sensing),
                num(r.comms),
            ]
        })
        .collect();
    write_table(
        path,
        HISTORY_SCHEMA,
        comments,
        &["epoch", "lr", "snr_db", "total", "sensing", "comms"],
        rows,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcslRow {
    pub message_index: u64,
    pub acsl_db: f64,
}

/// A parsed report: its `# key: value` comments and typed rows.
#[derive(Debug, Clone)]
pub struct Table<T> {
    pub path: PathBuf,
    pub comments: Comments,
    pub rows: Vec<T>,
}

impl<T> Table<T> {
    pub fn comment(&self, key: &str) -> Option<&str> {
        self.comments.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads a report written by this module, checking its schema line.
pub fn read_table<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<Table<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(path, 0, e.to_string()))?;
    let mut comments = Comments::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let body = line.trim_start_matches('#').trim();
        if let Some((k, v)) = body.split_once(": ") {
            comments.push((k.to_string(), v.to_string()));
        }
    }
    match comments.first() {
        Some((k, v)) if k == "schema" && v == schema => {}
        Some((k, v)) if k == "schema" => {
            return Err(parse_err(path, 1, format!("expected schema {schema}, found {v}")));
        }
        _ => return Err(parse_err(path, 1, format!("missing '# schema: {schema}' line"))),
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.deserialize::<T>() {
        rows.push(rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            let msg = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                _ => e.to_string(),
            };
            parse_err(path, line, msg)
        })?);
    }
    Ok(Table {
        path: path.to_path_buf(),
        comments,
        rows,
    })
}

pub fn read_acsl_values(path: &Path) -> Result<Table<AcslRow>> {
    read_table(path, ACSL_SCHEMA)
}

pub fn read_summary(path: &Path) -> Result<Table<SummaryRow>> {
    read_table(path, SUMMARY_SCHEMA)
}

pub fn read_ber(path: &Path) -> Result<Table<BerRow>> {
    read_table(path, BER_SCHEMA)
}

pub fn read_history(path: &Path) -> Result<Table<EpochRecord>> {
    read_table(path, HISTORY_SCHEMA)
}
