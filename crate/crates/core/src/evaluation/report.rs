//! Per-class evaluation report: construction from pooled predictions,
//! weighted averages, a fixed-layout text table, a machine-readable CSV
//! with the same values, and a versioned artifact format.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::dataset::ClassLabel;

use super::curves::{prc_area, roc_area, ScoredPrediction};
use super::{per_class_metrics, ClassMetrics, ConfusionMatrix, EvalError};

pub const REPORT_FORMAT_TAG: &str = "incidentmine-report v1";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported report format tag `{0}`")]
    FormatVersionMismatch(String),
    #[error("report artifact line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

/// Per-class metric rows plus supports and pooled accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub labels: Vec<String>,
    pub supports: Vec<u64>,
    pub rows: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub total: u64,
}

impl EvaluationReport {
    /// Builds the full report from pooled scored predictions: argmax
    /// labels feed the confusion matrix, the score vectors feed the
    /// one-vs-rest curve areas. Classes without both positives and
    /// negatives get no area (rendered under the zero convention).
    pub fn from_scored(scored: &[ScoredPrediction]) -> Result<EvaluationReport, EvalError> {
        let pairs: Vec<(ClassLabel, ClassLabel)> = scored
            .iter()
            .map(|s| (s.true_label, s.scores.argmax()))
            .collect();
        let cm = ConfusionMatrix::from_label_pairs(&pairs);
        let mut rows = per_class_metrics(&cm)?;
        for (i, label) in ClassLabel::ALL.into_iter().enumerate() {
            rows[i].roc_area = roc_area(scored, label).ok();
            rows[i].prc_area = prc_area(scored, label).ok();
        }
        let supports: Vec<u64> = (0..3).map(|i| cm.support(i)).collect();
        Ok(EvaluationReport {
            labels: cm.labels().to_vec(),
            supports,
            rows,
            accuracy: cm.accuracy(),
            total: cm.total(),
        })
    }

    /// Support-weighted average row; missing curve areas contribute zero
    /// like every other degenerate cell.
    pub fn weighted_average(&self) -> ClassMetrics {
        let total: u64 = self.supports.iter().sum();
        if total == 0 {
            return ClassMetrics::zeroed();
        }
        let weight = |i: usize| self.supports[i] as f64 / total as f64;
        let mut avg = ClassMetrics {
            tp_rate: 0.0,
            fp_rate: 0.0,
            precision: 0.0,
            recall: 0.0,
            f_measure: 0.0,
            mcc: 0.0,
            roc_area: Some(0.0),
            prc_area: Some(0.0),
            degenerate: self.rows.iter().any(|r| r.degenerate),
        };
        for (i, row) in self.rows.iter().enumerate() {
            let w = weight(i);
            avg.tp_rate += w * row.tp_rate;
            avg.fp_rate += w * row.fp_rate;
            avg.precision += w * row.precision;
            avg.recall += w * row.recall;
            avg.f_measure += w * row.f_measure;
            avg.mcc += w * row.mcc;
            avg.roc_area = avg.roc_area.map(|a| a + w * row.roc_area.unwrap_or(0.0));
            avg.prc_area = avg.prc_area.map(|a| a + w * row.prc_area.unwrap_or(0.0));
        }
        avg
    }
}

const COLUMNS: [(&str, usize); 8] = [
    ("TP Rate", 7),
    ("FP Rate", 7),
    ("Precision", 9),
    ("Recall", 6),
    ("F-Measure", 9),
    ("MCC", 6),
    ("ROC Area", 8),
    ("PRC Area", 8),
];

fn metric_cells(m: &ClassMetrics) -> [String; 8] {
    let f = |v: f64| format!("{v:.3}");
    [
        f(m.tp_rate),
        f(m.fp_rate),
        f(m.precision),
        f(m.recall),
        f(m.f_measure),
        f(m.mcc),
        f(m.roc_area.unwrap_or(0.0)),
        f(m.prc_area.unwrap_or(0.0)),
    ]
}

fn text_row(cells: &[String; 8], class: &str) -> String {
    let mut line = String::new();
    for (cell, (_, width)) in cells.iter().zip(COLUMNS) {
        let _ = write!(line, "{cell:<width$}  ");
    }
    line.push_str(class);
    line.push('\n');
    line
}

/// Fixed-width table in the fixed column order, three decimals, with a
/// support-weighted average row appended. Byte-stable.
pub fn render_text(report: &EvaluationReport) -> String {
    let mut out = String::new();
    for (header, width) in COLUMNS {
        let _ = write!(out, "{header:<width$}  ");
    }
    out.push_str("Class\n");
    for (i, row) in report.rows.iter().enumerate() {
        out.push_str(&text_row(&metric_cells(row), &report.labels[i]));
    }
    out.push_str(&text_row(
        &metric_cells(&report.weighted_average()),
        "Weighted Avg.",
    ));
    out
}

/// The same values as the text table, machine-readable.
pub fn render_csv(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let headers: Vec<&str> = COLUMNS.iter().map(|(h, _)| *h).collect();
    let _ = writeln!(out, "{},Class", headers.join(","));
    for (i, row) in report.rows.iter().enumerate() {
        let _ = writeln!(out, "{},{}", metric_cells(row).join(","), report.labels[i]);
    }
    let _ = writeln!(
        out,
        "{},Weighted Avg.",
        metric_cells(&report.weighted_average()).join(",")
    );
    out
}

fn area_field(v: Option<f64>) -> String {
    v.map_or("-".to_string(), |a| a.to_string())
}

pub fn report_to_string(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{REPORT_FORMAT_TAG}");
    let _ = writeln!(out, "labels = {}", report.labels.len());
    for (i, label) in report.labels.iter().enumerate() {
        let _ = writeln!(out, "label {i} = {label}");
        let _ = writeln!(out, "support {i} = {}", report.supports[i]);
        let r = &report.rows[i];
        let _ = writeln!(
            out,
            "row {i} = {} {} {} {} {} {} {} {} {}",
            r.tp_rate,
            r.fp_rate,
            r.precision,
            r.recall,
            r.f_measure,
            r.mcc,
            area_field(r.roc_area),
            area_field(r.prc_area),
            r.degenerate
        );
    }
    let _ = writeln!(out, "accuracy = {}", report.accuracy);
    let _ = writeln!(out, "total = {}", report.total);
    out
}

pub fn report_from_str(text: &str) -> Result<EvaluationReport, ReportError> {
    let mut lines = text.lines().enumerate();
    let corrupt = |line: usize, message: &str| ReportError::Corrupt {
        line: line + 1,
        message: message.to_string(),
    };
    let (_, tag) = lines.next().ok_or_else(|| corrupt(0, "empty artifact"))?;
    if tag.trim() != REPORT_FORMAT_TAG {
        return Err(ReportError::FormatVersionMismatch(tag.trim().to_string()));
    }
    let mut value_of = |key: &str| -> Result<(usize, String), ReportError> {
        let (line, text) = lines
            .next()
            .ok_or_else(|| corrupt(0, "unexpected end of artifact"))?;
        let (k, v) = text
            .split_once('=')
            .ok_or_else(|| corrupt(line, "expected `key = value`"))?;
        let head = k.split_whitespace().next().unwrap_or("");
        if head != key {
            return Err(corrupt(line, &format!("expected `{key}`, found `{head}`")));
        }
        Ok((line, v.trim().to_string()))
    };

    let (line, n_labels) = value_of("labels")?;
    let n_labels: usize = n_labels
        .parse()
        .map_err(|_| corrupt(line, "bad label count"))?;
    let mut labels = Vec::with_capacity(n_labels.min(1 << 16));
    let mut supports = Vec::with_capacity(n_labels.min(1 << 16));
    let mut rows = Vec::with_capacity(n_labels.min(1 << 16));
    for _ in 0..n_labels {
        let (_, label) = value_of("label")?;
        labels.push(label);
        let (line, support) = value_of("support")?;
        supports.push(
            support
                .parse()
                .map_err(|_| corrupt(line, "bad support"))?,
        );
        let (line, row) = value_of("row")?;
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() != 9 {
            return Err(corrupt(line, "row must have 9 fields"));
        }
        let num = |s: &str| -> Result<f64, ReportError> {
            s.parse().map_err(|_| corrupt(line, "bad metric value"))
        };
        let opt = |s: &str| -> Result<Option<f64>, ReportError> {
            if s == "-" {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        rows.push(ClassMetrics {
            tp_rate: num(fields[0])?,
            fp_rate: num(fields[1])?,
            precision: num(fields[2])?,
            recall: num(fields[3])?,
            f_measure: num(fields[4])?,
            mcc: num(fields[5])?,
            roc_area: opt(fields[6])?,
            prc_area: opt(fields[7])?,
            degenerate: fields[8]
                .parse()
                .map_err(|_| corrupt(line, "bad degenerate flag"))?,
        });
    }
    let (line, accuracy) = value_of("accuracy")?;
    let accuracy: f64 = accuracy
        .parse()
        .map_err(|_| corrupt(line, "bad accuracy"))?;
    let (line, total) = value_of("total")?;
    let total: u64 = total.parse().map_err(|_| corrupt(line, "bad total"))?;
    Ok(EvaluationReport {
        labels,
        supports,
        rows,
        accuracy,
        total,
    })
}

pub fn save_report(report: &EvaluationReport, path: impl AsRef<Path>) -> Result<(), ReportError> {
    fs::write(path, report_to_string(report))?;
    Ok(())
}

pub fn load_report(path: impl AsRef<Path>) -> Result<EvaluationReport, ReportError> {
    report_from_str(&fs::read_to_string(path)?)
}
