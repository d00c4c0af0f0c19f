//! Benchmark report shared by all metrics, with JSON, table and CSV output.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Language code and group label used for aggregate rows.
pub const ALL: &str = "all";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRow {
    pub language: String,
    pub group: String,
    pub metrics: BTreeMap<String, f64>,
    pub total: usize,
    pub invalid: usize,
    #[serde(default)]
    pub partial: bool,
}

impl ReportRow {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub benchmark: String,
    pub settings: BTreeMap<String, String>,
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn row(&self, language: &str, group: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.language == language && r.group == group)
    }

    fn metric_names(&self) -> Vec<String> {
        let names: BTreeSet<&String> = self.rows.iter().flat_map(|r| r.metrics.keys()).collect();
        names.into_iter().cloned().collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Aligned plain-text table; missing metrics print as `-`.
    pub fn to_table(&self) -> String {
        let names = self.metric_names();
        let mut header = vec!["language".to_string(), "group".into(), "total".into(), "invalid".into()];
        header.extend(names.iter().cloned());
        let mut rows = vec![header];
        for r in &self.rows {
            let mut line = vec![
                r.language.clone(),
                if r.partial { format!("{} (partial)", r.group) } else { r.group.clone() },
                r.total.to_string(),
                r.invalid.to_string(),
            ];
            line.extend(names.iter().map(|n| match r.metrics.get(n) {
                Some(v) => format!("{v:.4}"),
                None => "-".into(),
            }));
            rows.push(line);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = format!("{}\n", self.benchmark);
        for r in rows {
            let cells: Vec<String> = r
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, w))| {
                    let pad = w - cell.chars().count();
                    if c < 2 {
                        format!("{cell}{}", " ".repeat(pad))
                    } else {
                        format!("{}{cell}", " ".repeat(pad))
                    }
                })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let names = self.metric_names();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["language", "group", "total", "invalid", "partial"];
        header.extend(names.iter().map(String::as_str));
        let csv_err = |e: csv::Error| Error::InvalidInput(format!("csv export: {e}"));
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![
                r.language.clone(),
                r.group.clone(),
                r.total.to_string(),
                r.invalid.to_string(),
                r.partial.to_string(),
            ];
            rec.extend(names.iter().map(|n| r.metrics.get(n).map(f64::to_string).unwrap_or_default()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv export: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> EvalReport {
        EvalReport {
            benchmark: "pope".into(),
            settings: BTreeMap::new(),
            rows: vec![
                ReportRow {
                    language: "en".into(),
                    group: ALL.into(),
                    metrics: [("accuracy".to_string(), 0.6), ("f1".to_string(), 0.5)].into(),
                    total: 10,
                    invalid: 2,
                    partial: false,
                },
                ReportRow {
                    language: "ko".into(),
                    group: ALL.into(),
                    metrics: [("qc".to_string(), 1.0)].into(),
                    total: 3,
                    invalid: 0,
                    partial: true,
                },
            ],
        }
    }

    #[test]
    fn json_round_trip() {
        let r = report();
        let back: EvalReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.row("en", ALL).unwrap().metric("accuracy"), Some(0.6));
    }

    #[test]
    fn table_is_aligned() {
        let t = report().to_table();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "pope");
        assert!(lines[1].starts_with("language  group"));
        assert!(lines[3].contains("all (partial)"));
        assert!(lines[3].contains('-'));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let csv = report().to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "language,group,total,invalid,partial,accuracy,f1,qc");
        assert_eq!(lines[1], "en,all,10,2,false,0.6,0.5,");
        assert_eq!(lines.len(), 3);
    }
}
