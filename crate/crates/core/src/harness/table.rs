use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Nominal level (in %) that the average relative error is measured against.
const NOMINAL_PERCENT: f64 = 5.0;

/// `100 mean |s_i - 5| / 5` for empirical sizes `s_i` in percent.
pub fn are_of(sizes: &[f64]) -> Result<f64> {
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("ARE of an empty list".into()));
    }
    let mean = sizes.iter().map(|s| (s - NOMINAL_PERCENT).abs()).sum::<f64>() / sizes.len() as f64;
    Ok(100.0 * mean / NOMINAL_PERCENT)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub dist: String,
    pub sizes: String,
    #[serde(rename = "M")]
    pub m: usize,
    pub setting: String,
    /// Rejection percentages, aligned with [`ResultTable::methods`].
    pub cells: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub methods: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl ResultTable {
    pub fn new(methods: Vec<String>) -> Self {
        Self { methods, rows: Vec::new() }
    }

    pub fn push(&mut self, row: TableRow) -> Result<()> {
        if row.cells.len() != self.methods.len() {
            return Err(Error::DimensionMismatch(format!("{} cells for {} methods", row.cells.len(), self.methods.len())));
        }
        if row.cells.iter().any(|c| !(0.0..=100.0).contains(c)) {
            return Err(Error::InvalidArgument("table cells are percentages in [0, 100]".into()));
        }
        self.rows.push(row);
        Ok(())
    }

    /// ARE per method column; `None` for an empty table.
    pub fn are(&self) -> Option<Vec<f64>> {
        (!self.rows.is_empty()).then(|| {
            (0..self.methods.len())
                .map(|j| {
                    let col: Vec<f64> = self.rows.iter().map(|r| r.cells[j]).collect();
                    are_of(&col).expect("non-empty column")
                })
                .collect()
        })
    }

    /// Header `dist,sizes,M,setting,<methods...>`, one line per row and a
    /// final `ARE` line.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        let mut header = vec!["dist".to_string(), "sizes".into(), "M".into(), "setting".into()];
        header.extend(self.methods.iter().cloned());
        w.write_record(&header).map_err(io)?;
        for r in &self.rows {
            let mut rec = vec![r.dist.clone(), r.sizes.clone(), r.m.to_string(), r.setting.clone()];
            rec.extend(r.cells.iter().map(|c| format!("{c:.1}")));
            w.write_record(&rec).map_err(io)?;
        }
        if let Some(are) = self.are() {
            let mut rec = vec!["ARE".to_string(), String::new(), String::new(), String::new()];
            rec.extend(are.iter().map(|a| format!("{a:.2}")));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn render_text(&self) -> String {
        let mut header = vec!["dist".to_string(), "sizes".into(), "M".into(), "setting".into()];
        header.extend(self.methods.iter().cloned());
        let mut lines: Vec<Vec<String>> = vec![header];
        for r in &self.rows {
            let mut l = vec![r.dist.clone(), r.sizes.clone(), r.m.to_string(), r.setting.clone()];
            l.extend(r.cells.iter().map(|c| format!("{c:.1}")));
            lines.push(l);
        }
        if let Some(are) = self.are() {
            let mut l = vec!["ARE".to_string(), String::new(), String::new(), String::new()];
            l.extend(are.iter().map(|a| format!("{a:.2}")));
            lines.push(l);
        }
        let widths: Vec<usize> =
            (0..lines[0].len()).map(|j| lines.iter().map(|l| l[j].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for (i, l) in lines.iter().enumerate() {
            let cells: Vec<String> = l
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (c, w))| if j < 4 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
            if i == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                let _ = writeln!(out, "{}", "-".repeat(total));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn are_arithmetic() {
        assert_eq!(are_of(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert_relative_eq!(are_of(&[4.0, 6.0]).unwrap(), 20.0, max_relative = 1e-14);
        assert!(are_of(&[]).is_err());
    }

    fn table() -> ResultTable {
        let mut t = ResultTable::new(vec!["new".into(), "bootstrap".into()]);
        t.push(TableRow { dist: "gaussian".into(), sizes: "100/140/140".into(), m: 50, setting: "rho=0.1".into(), cells: vec![5.7, 4.9] })
            .unwrap();
        t.push(TableRow { dist: "gaussian".into(), sizes: "100/140/140".into(), m: 50, setting: "rho=0.9".into(), cells: vec![4.0, 2.5] })
            .unwrap();
        t
    }

    #[test]
    fn table_are_equals_cellwise() {
        let t = table();
        let are = t.are().unwrap();
        assert_relative_eq!(are[0], are_of(&[5.7, 4.0]).unwrap(), max_relative = 1e-14);
        assert_relative_eq!(are[1], are_of(&[4.9, 2.5]).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn csv_and_text() {
        let t = table();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "dist,sizes,M,setting,new,bootstrap");
        assert!(text.lines().nth(1).unwrap().ends_with("5.7,4.9"));
        assert!(text.lines().last().unwrap().starts_with("ARE,,,,"));
        let rendered = t.render_text();
        assert!(rendered.contains("rho=0.9"));
        assert_eq!(rendered.lines().count(), 5);
    }

    #[test]
    fn rejects_bad_cells() {
        let mut t = ResultTable::new(vec!["new".into()]);
        let row = TableRow { dist: "g".into(), sizes: "1".into(), m: 2, setting: String::new(), cells: vec![101.0] };
        assert!(t.push(row.clone()).is_err());
        assert!(t.push(TableRow { cells: vec![1.0, 2.0], ..row }).is_err());
    }
}
