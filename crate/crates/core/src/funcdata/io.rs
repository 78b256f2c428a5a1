//! Long-format CSV ingestion (`group,subject,component,time,value`) and
//! gridded export.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Grid, MfdSample, SampleSet};
use crate::{Error, Result};

/// One scalar measurement of one component of one subject's curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawObservation {
    pub group: String,
    pub subject: String,
    /// 1-based component index.
    pub component: usize,
    pub time: f64,
    pub value: f64,
}

/// Header names for the five long-format columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub group: String,
    pub subject: String,
    pub component: String,
    pub time: String,
    pub value: String,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        Self {
            group: "group".into(),
            subject: "subject".into(),
            component: "component".into(),
            time: "time".into(),
            value: "value".into(),
        }
    }
}

pub fn ingest_long_csv(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<Vec<RawObservation>> {
    let file = std::fs::File::open(path)?;
    read_long_csv(file, schema)
}

pub fn read_long_csv<R: Read>(reader: R, schema: &ColumnSchema) -> Result<Vec<RawObservation>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.clone(),
        Ok(_) => return Err(Error::EmptyFile),
        Err(e) => return Err(Error::Schema(e.to_string())),
    };
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    };
    let (ig, is, ic, it, iv) = (
        col(&schema.group)?,
        col(&schema.subject)?,
        col(&schema.component)?,
        col(&schema.time)?,
        col(&schema.value)?,
    );

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse { line, msg: e.to_string() }
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize, what: &str| {
            rec.get(i).ok_or_else(|| Error::Parse { line, msg: format!("missing {what} field") })
        };
        let num = |i: usize, what: &str| -> Result<f64> {
            let raw = field(i, what)?;
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse { line, msg: format!("{what} `{raw}` is not a finite number") })
        };
        let raw_comp = field(ic, "component")?;
        let component = raw_comp
            .parse::<usize>()
            .map_err(|_| Error::Parse { line, msg: format!("component `{raw_comp}` is not a positive integer") })?;
        out.push(RawObservation {
            group: field(ig, "group")?.to_string(),
            subject: field(is, "subject")?.to_string(),
            component,
            time: num(it, "time")?,
            value: num(iv, "value")?,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(out)
}

/// Writes one group as `subject,component,v1..vM` (components 1-based).
pub fn write_gridded_csv<W: Write>(sample: &MfdSample, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["subject".to_string(), "component".to_string()];
    header.extend((1..=sample.m()).map(|m| format!("v{m}")));
    w.write_record(&header).map_err(csv_io)?;
    for (i, subject) in sample.subjects().iter().enumerate() {
        for h in 0..sample.p() {
            let mut row = vec![subject.clone(), (h + 1).to_string()];
            row.extend((0..sample.m()).map(|m| sample.value(i, h, m).to_string()));
            w.write_record(&row).map_err(csv_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a whole set in long format on its grid.
pub fn write_long_csv<W: Write>(set: &SampleSet, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["group", "subject", "component", "time", "value"]).map_err(csv_io)?;
    let grid: &Grid = set.grid();
    for g in set.groups() {
        for (i, subject) in g.subjects().iter().enumerate() {
            for h in 0..g.p() {
                for (m, t) in grid.points().iter().enumerate() {
                    w.write_record([
                        g.group_id(),
                        subject,
                        &(h + 1).to_string(),
                        &t.to_string(),
                        &g.value(i, h, m).to_string(),
                    ])
                    .map_err(csv_io)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
