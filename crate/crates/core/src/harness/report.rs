//! Benchmark tables: one per scope, rows keyed by (method, backbone),
//! SRCC and PLCC columns per dimension.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::evaluate::{Evaluation, Scope};
use super::HarnessError;

type RowCells = BTreeMap<(String, String), BTreeMap<Dimension, ReportCell>>;
use crate::subjective::Dimension;

/// One metric pair with the artifacts it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub srcc: f64,
    pub plcc: f64,
    pub count: usize,
    pub checkpoint: String,
    pub split: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub backbone: String,
    pub cells: BTreeMap<Dimension, ReportCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub scope: Scope,
    pub dimensions: Vec<Dimension>,
    pub rows: Vec<ReportRow>,
}

impl BenchmarkReport {
    /// Number of metric columns (two per dimension).
    pub fn metric_columns(&self) -> usize {
        self.dimensions.len() * 2
    }
}

/// Groups evaluations by scope. Two evaluations for the same cell are an
/// error rather than being averaged.
pub fn report(evaluations: &[Evaluation]) -> Result<Vec<BenchmarkReport>, HarnessError> {
    if evaluations.is_empty() {
        return Err(HarnessError::NoEvaluations);
    }
    let mut by_scope: BTreeMap<Scope, RowCells> = BTreeMap::new();
    for e in evaluations {
        let cells = by_scope
            .entry(e.scope)
            .or_default()
            .entry((e.method.clone(), e.backbone.clone()))
            .or_default();
        if cells.contains_key(&e.dimension) {
            return Err(HarnessError::DuplicateResult {
                method: e.method.clone(),
                backbone: e.backbone.clone(),
                dimension: e.dimension,
                scope: e.scope.to_string(),
            });
        }
        cells.insert(
            e.dimension,
            ReportCell {
                srcc: e.srcc,
                plcc: e.plcc,
                count: e.count,
                checkpoint: e.checkpoint.clone(),
                split: e.split.clone(),
            },
        );
    }
    Ok(by_scope
        .into_iter()
        .map(|(scope, rows)| {
            let dimensions: Vec<Dimension> = Dimension::ALL
                .into_iter()
                .filter(|d| rows.values().any(|c| c.contains_key(d)))
                .collect();
            BenchmarkReport {
                scope,
                dimensions,
                rows: rows
                    .into_iter()
                    .map(|((method, backbone), cells)| ReportRow { method, backbone, cells })
                    .collect(),
            }
        })
        .collect())
}

/// One JSON object per report.
pub fn write_reports<W: Write>(mut out: W, reports: &[BenchmarkReport]) -> std::io::Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Clone, Copy, PartialEq)]
enum Rank {
    Best,
    Second,
    Other,
}

fn ranks(values: &[Option<f64>]) -> Vec<Rank> {
    let mut distinct: Vec<f64> = values.iter().flatten().copied().collect();
    distinct.sort_by(|a, b| b.total_cmp(a));
    distinct.dedup();
    values
        .iter()
        .map(|v| match v {
            Some(v) if distinct.first() == Some(v) => Rank::Best,
            Some(v) if distinct.get(1) == Some(v) => Rank::Second,
            _ => Rank::Other,
        })
        .collect()
}

/// Markdown table; the best value per column is **bold**, the second best
/// _italic_.
pub fn render_table(report: &BenchmarkReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "### {}\n", report.scope);
    s.push_str("| Method | Backbone |");
    for d in &report.dimensions {
        let _ = write!(s, " {d} SRCC | {d} PLCC |");
    }
    s.push_str("\n|---|---|");
    s.push_str(&"---:|".repeat(report.metric_columns()));
    s.push('\n');

    let mut columns: Vec<Vec<Rank>> = Vec::new();
    for d in &report.dimensions {
        for pick in [|c: &ReportCell| c.srcc, |c: &ReportCell| c.plcc] {
            let values: Vec<Option<f64>> = report.rows.iter().map(|r| r.cells.get(d).map(pick)).collect();
            columns.push(ranks(&values));
        }
    }
    for (i, row) in report.rows.iter().enumerate() {
        let _ = write!(s, "| {} | {} |", row.method, row.backbone);
        for (j, d) in report.dimensions.iter().enumerate() {
            for (k, value) in row.cells.get(d).map(|c| [c.srcc, c.plcc]).into_iter().flatten().enumerate() {
                let text = format!("{value:.4}");
                let _ = match columns[2 * j + k][i] {
                    Rank::Best => write!(s, " **{text}** |"),
                    Rank::Second => write!(s, " _{text}_ |"),
                    Rank::Other => write!(s, " {text} |"),
                };
            }
            if !row.cells.contains_key(d) {
                s.push_str(" - | - |");
            }
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(method: &str, dim: Dimension, srcc: f64) -> Evaluation {
        Evaluation {
            method: method.into(),
            backbone: "stub".into(),
            dimension: dim,
            scope: Scope::Full,
            srcc,
            plcc: srcc - 0.01,
            count: 10,
            checkpoint: format!("ckpt-{method}-{dim}"),
            split: "split-x".into(),
        }
    }

    #[test]
    fn two_methods_three_dimensions() {
        let evals: Vec<Evaluation> = ["NR", "PR"]
            .iter()
            .flat_map(|m| Dimension::ALL.map(|d| eval(m, d, if *m == "PR" { 0.8 } else { 0.7 })))
            .collect();
        let reports = report(&evals).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].scope, Scope::Full);
        assert_eq!(reports[0].rows.len(), 2);
        assert_eq!(reports[0].metric_columns(), 6);
        let table = render_table(&reports[0]);
        assert!(table.contains("**0.8000**") && table.contains("_0.7000_"));
    }

    #[test]
    fn single_method_is_best_everywhere() {
        let evals: Vec<Evaluation> = Dimension::ALL.map(|d| eval("NR", d, 0.5)).into();
        let table = render_table(&report(&evals).unwrap()[0]);
        assert_eq!(table.matches("**").count(), 2 * 6);
        assert!(!table.contains(" _0"));
    }

    #[test]
    fn duplicate_cells_are_not_merged() {
        let evals = vec![eval("NR", Dimension::Quality, 0.5), eval("NR", Dimension::Quality, 0.6)];
        assert!(matches!(report(&evals), Err(HarnessError::DuplicateResult { .. })));
    }

    #[test]
    fn cells_keep_provenance() {
        let r = report(&[eval("PR", Dimension::Authenticity, 0.4)]).unwrap();
        let cell = &r[0].rows[0].cells[&Dimension::Authenticity];
        assert_eq!(cell.checkpoint, "ckpt-PR-authenticity");
        assert_eq!(cell.split, "split-x");
        let mut buf = Vec::new();
        write_reports(&mut buf, &r).unwrap();
        let back: BenchmarkReport = serde_json::from_slice(buf.trim_ascii_end()).unwrap();
        assert_eq!(back, r[0]);
    }
}
