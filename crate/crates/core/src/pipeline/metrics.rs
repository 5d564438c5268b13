//! Classification metrics and their report formats.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const METRICS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub class_names: Vec<String>,
    pub per_class: Vec<ClassMetrics>,
    #[serde(rename = "macro")]
    pub macro_avg: ClassMetrics,
    pub accuracy: f64,
    /// `confusion[truth][prediction]`.
    pub confusion: Vec<Vec<u64>>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Metrics of class-index predictions against truths over `0..class_count`.
pub fn evaluate(predictions: &[usize], truths: &[usize], class_count: usize) -> Result<MetricsReport> {
    if predictions.len() != truths.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    if truths.is_empty() {
        return Err(Error::invalid("cannot evaluate an empty prediction set"));
    }
    if let Some(bad) = predictions.iter().chain(truths).find(|&&c| c >= class_count) {
        return Err(Error::invalid(format!("label {bad} outside 0..{class_count}")));
    }
    let mut confusion = vec![vec![0u64; class_count]; class_count];
    for (&p, &t) in predictions.iter().zip(truths) {
        confusion[t][p] += 1;
    }
    let per_class: Vec<ClassMetrics> = (0..class_count)
        .map(|c| {
            let tp = confusion[c][c];
            let predicted: u64 = confusion.iter().map(|row| row[c]).sum();
            let actual: u64 = confusion[c].iter().sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, actual);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics { precision, recall, f1 }
        })
        .collect();
    let n = class_count as f64;
    let macro_avg = ClassMetrics {
        precision: per_class.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: per_class.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: per_class.iter().map(|m| m.f1).sum::<f64>() / n,
    };
    let correct: u64 = (0..class_count).map(|c| confusion[c][c]).sum();
    Ok(MetricsReport {
        schema_version: METRICS_SCHEMA_VERSION,
        class_names: (0..class_count).map(|c| format!("class {c}")).collect(),
        per_class,
        macro_avg,
        accuracy: correct as f64 / truths.len() as f64,
        confusion,
    })
}

impl MetricsReport {
    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.per_class.len() {
            return Err(Error::shape(format!(
                "{} names for {} classes",
                names.len(),
                self.per_class.len()
            )));
        }
        self.class_names = names;
        Ok(self)
    }

    pub fn class_count(&self) -> usize {
        self.per_class.len()
    }

    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text).map_err(|e| Error::invalid(format!("metrics.json: {e}")))?;
        if report.schema_version != METRICS_SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported metrics schema version {}",
                report.schema_version
            )));
        }
        Ok(report)
    }

    /// Truth-major CSV with a header row of class names.
    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("truth\\predicted");
        for name in &self.class_names {
            out.push(',');
            out.push_str(&csv_field(name));
        }
        out.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.confusion) {
            out.push_str(&csv_field(name));
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Per-class precision/recall/F1 rows followed by the macro average.
    pub fn table(&self) -> String {
        let width = self.class_names.iter().map(|n| n.len()).max().unwrap_or(0).max("Macro Average".len());
        let mut out = format!("{:<width$}  Precision  Recall  F1-Score\n", "Activity");
        for (name, m) in self.class_names.iter().zip(&self.per_class) {
            let _ = writeln!(out, "{name:<width$}  {:>9.2}  {:>6.2}  {:>8.2}", m.precision, m.recall, m.f1);
        }
        let m = &self.macro_avg;
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.2}  {:>6.2}  {:>8.2}",
            "Macro Average", m.precision, m.recall, m.f1
        );
        let _ = writeln!(out, "{:<width$}  {:>9.4}", "Accuracy", self.accuracy);
        out
    }

    /// Heatmap of row-normalized counts, one cell per (truth, prediction).
    pub fn confusion_svg(&self) -> String {
        const CELL: usize = 36;
        let n = self.class_count();
        let label_w = 12 + 7 * self.class_names.iter().map(|s| s.len()).max().unwrap_or(0);
        let top = label_w;
        let w = label_w + n * CELL + 10;
        let h = top + n * CELL + 10;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        for (i, name) in self.class_names.iter().enumerate() {
            let y = top + i * CELL + CELL / 2 + 4;
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#,
                label_w - 6,
                xml_escape(name)
            );
            let x = label_w + i * CELL + CELL / 2 + 4;
            let _ = writeln!(
                out,
                r#"<text x="{x}" y="{}" text-anchor="start" transform="rotate(-90 {x} {})">{}</text>"#,
                top - 6,
                top - 6,
                xml_escape(name)
            );
        }
        for (i, row) in self.confusion.iter().enumerate() {
            let total: u64 = row.iter().sum();
            for (j, &count) in row.iter().enumerate() {
                let frac = ratio(count, total);
                let shade = (255.0 * (1.0 - frac)).round() as u8;
                let x = label_w + j * CELL;
                let y = top + i * CELL;
                let _ = writeln!(
                    out,
                    r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="rgb({shade},{shade},255)" stroke="gray"/>"#
                );
                let ink = if frac > 0.5 { "white" } else { "black" };
                let _ = writeln!(
                    out,
                    r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{count}</text>"#,
                    x + CELL / 2,
                    y + CELL / 2 + 4
                );
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let t = [0, 1, 2, 2, 1];
        let r = evaluate(&t, &t, 3).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert!(r.per_class.iter().all(|m| m.precision == 1.0 && m.recall == 1.0 && m.f1 == 1.0));
        for (i, row) in r.confusion.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v > 0, i == j);
            }
        }
    }

    #[test]
    fn hand_confusion_oracle() {
        let r = evaluate(&[0, 1, 1], &[0, 0, 1], 2).unwrap();
        assert_eq!(r.per_class[0].precision, 1.0);
        assert_eq!(r.per_class[1].precision, 0.5);
        assert_eq!(r.per_class[0].recall, 0.5);
        assert_eq!(r.per_class[1].recall, 1.0);
        for m in &r.per_class {
            assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
        }
        assert!((r.macro_avg.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.confusion, vec![vec![1, 1], vec![0, 1]]);
    }

    #[test]
    fn absent_class_scores_zero() {
        let r = evaluate(&[0, 0], &[0, 0], 2).unwrap();
        assert_eq!(r.per_class[1], ClassMetrics { precision: 0.0, recall: 0.0, f1: 0.0 });
        assert_eq!(r.macro_avg.f1, 0.5);
    }

    #[test]
    fn invalid_inputs() {
        assert!(evaluate(&[], &[], 2).is_err());
        assert!(evaluate(&[0], &[0, 1], 2).is_err());
        assert!(matches!(evaluate(&[2], &[0], 2), Err(Error::InvalidValue(_))));
    }

    #[test]
    fn table_layout() {
        let r = evaluate(&[0, 1, 1, 1], &[0, 0, 1, 1], 2)
            .unwrap()
            .with_class_names(vec!["1. Horizontal arm wave".into(), "2. High arm wave".into()])
            .unwrap();
        let table = r.table();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].contains("Precision  Recall  F1-Score"));
        assert!(lines[1].starts_with("1. Horizontal arm wave"));
        assert!(lines[3].starts_with("Macro Average"));
        assert!(lines[3].ends_with("0.83    0.75      0.73"), "{}", lines[3]);
    }

    #[test]
    fn json_round_trip_and_csv() {
        let r = evaluate(&[0, 1, 2, 0], &[0, 1, 1, 2], 3).unwrap();
        let back = MetricsReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        let csv = r.confusion_csv();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows[0], "truth\\predicted,class 0,class 1,class 2");
        assert_eq!(rows[2], "class 1,0,1,1");
        assert_eq!(r.total(), 4);
        assert!(r.confusion_svg().starts_with("<svg"));
    }
}
