//! Classification metrics: confusion matrix, accuracy, F1, ROC/AUC and
//! average precision.
//!
//! Label `1` is the positive (fake) class. Scores are probabilities of the
//! positive class.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts at a fixed decision threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn check_inputs(labels: &[u8], scores: &[f64]) -> Result<()> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch {
            what: "labels and scores",
            left: labels.len(),
            right: scores.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset("no scored items".into()));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidConfig(format!("label {bad} is not 0 or 1")));
    }
    if let Some(bad) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::InvalidConfig(format!("score {bad} is not a number")));
    }
    Ok(())
}

/// Predicts positive iff `score >= threshold`.
pub fn confusion(labels: &[u8], scores: &[f64], threshold: f64) -> Result<ConfusionMatrix> {
    check_inputs(labels, scores)?;
    let mut cm = ConfusionMatrix::default();
    for (&l, &s) in labels.iter().zip(scores) {
        match (l == 1, s >= threshold) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fn_ += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total() == 0 {
        return Err(Error::EmptyDataset("empty confusion matrix".into()));
    }
    Ok((cm.tp + cm.tn) as f64 / cm.total() as f64)
}

/// `2tp / (2tp + fp + fn)`, defined as 0 when the denominator vanishes.
pub fn f1(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total() == 0 {
        return Err(Error::EmptyDataset("empty confusion matrix".into()));
    }
    let denom = 2 * cm.tp + cm.fp + cm.fn_;
    if denom == 0 {
        return Ok(0.0);
    }
    Ok((2 * cm.tp) as f64 / denom as f64)
}

/// One vertex of the ROC polyline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Lowest score classified positive at this vertex; `+inf` at the origin.
    pub threshold: f64,
}

/// ROC curve with exact tie grouping.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    points: Vec<RocPoint>,
    // Cumulative (tp, fp) at each vertex, kept so the area can be
    // computed in integers.
    counts: Vec<(u64, u64)>,
    positives: u64,
    negatives: u64,
}

impl RocCurve {
    pub fn points(&self) -> &[RocPoint] {
        &self.points
    }

    /// Two-column `fpr,tpr` CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{}", p.fpr, p.tpr);
        }
        out
    }

    /// Self-contained SVG plot of the curve with the chance diagonal and
    /// axis ticks every 0.2.
    pub fn to_svg(&self, title: &str) -> String {
        const SIZE: f64 = 400.0;
        const PAD: f64 = 50.0;
        let px = |v: f64| PAD + v * SIZE;
        let py = |v: f64| PAD + (1.0 - v) * SIZE;
        let mut svg = String::new();
        let total = SIZE + 2.0 * PAD;
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="25" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
            total / 2.0,
            escape_xml(title)
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{PAD}" y="{PAD}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
        );
        for i in 0..=5 {
            let v = i as f64 * 0.2;
            let _ = writeln!(
                svg,
                r#"<line x1="{x}" y1="{y0}" x2="{x}" y2="{y1}" stroke="black"/><text x="{x}" y="{ty}" text-anchor="middle" font-family="sans-serif" font-size="11">{v:.1}</text>"#,
                x = px(v),
                y0 = py(0.0),
                y1 = py(0.0) + 5.0,
                ty = py(0.0) + 18.0,
            );
            let _ = writeln!(
                svg,
                r#"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="black"/><text x="{tx}" y="{ty}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.1}</text>"#,
                x0 = px(0.0) - 5.0,
                x1 = px(0.0),
                y = py(v),
                tx = px(0.0) - 8.0,
                ty = py(v) + 4.0,
            );
        }
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
            px(0.0),
            py(0.0),
            px(1.0),
            py(1.0)
        );
        let pts: Vec<String> = self
            .points
            .iter()
            .map(|p| format!("{:.3},{:.3}", px(p.fpr), py(p.tpr)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">False positive rate</text>"#,
            total / 2.0,
            total - 10.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="15" y="{y}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 15 {y})">True positive rate</text>"#,
            y = total / 2.0
        );
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Item indices grouped by identical score, highest score first.
fn tie_groups(scores: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some((s, members)) if (*s).partial_cmp(&scores[i]) == Some(Ordering::Equal) => {
                members.push(i)
            }
            _ => groups.push((scores[i], vec![i])),
        }
    }
    groups
}

pub fn roc_curve(labels: &[u8], scores: &[f64]) -> Result<RocCurve> {
    check_inputs(labels, scores)?;
    let positives = labels.iter().filter(|&&l| l == 1).count() as u64;
    let negatives = labels.len() as u64 - positives;
    if positives == 0 {
        return Err(Error::SingleClass("no positive labels"));
    }
    if negatives == 0 {
        return Err(Error::SingleClass("no negative labels"));
    }
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let mut counts = vec![(0, 0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    for (score, members) in tie_groups(scores) {
        for i in members {
            if labels[i] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        counts.push((tp, fp));
        points.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
            threshold: score,
        });
    }
    Ok(RocCurve {
        points,
        counts,
        positives,
        negatives,
    })
}

/// Trapezoidal area under the curve.
///
/// The area is accumulated as an integer number of `1 / (2PN)` units, so
/// it equals the Mann-Whitney statistic with half-credit ties exactly.
pub fn auc(curve: &RocCurve) -> f64 {
    let mut twice_area: u128 = 0;
    for w in curve.counts.windows(2) {
        let (tp0, fp0) = w[0];
        let (tp1, fp1) = w[1];
        twice_area += u128::from(fp1 - fp0) * u128::from(tp0 + tp1);
    }
    twice_area as f64 / (2 * u128::from(curve.positives) * u128::from(curve.negatives)) as f64
}

/// Step-wise average precision `sum_k (R_k - R_{k-1}) * P_k` over
/// descending score groups.
pub fn average_precision(labels: &[u8], scores: &[f64]) -> Result<f64> {
    check_inputs(labels, scores)?;
    let positives = labels.iter().filter(|&&l| l == 1).count() as u64;
    if positives == 0 {
        return Err(Error::SingleClass("no positive labels"));
    }
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut ap = 0.0;
    for (_, members) in tie_groups(scores) {
        let before = tp;
        for i in members {
            if labels[i] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        if tp > before {
            let recall_step = (tp - before) as f64 / positives as f64;
            let precision = tp as f64 / (tp + fp) as f64;
            ap += recall_step * precision;
        }
    }
    Ok(ap)
}

/// All metrics for one model on one labelled set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub f1: f64,
    pub auc: f64,
    pub average_precision: f64,
    pub confusion: ConfusionMatrix,
    pub roc: RocCurve,
    pub n_items: usize,
}

/// Flat serialized form of [`EvalReport`] (the ROC points go to CSV).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub accuracy: f64,
    pub f1: f64,
    pub auc: f64,
    pub ap: f64,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub n: usize,
}

impl EvalReport {
    pub fn record(&self) -> ReportRecord {
        ReportRecord {
            accuracy: self.accuracy,
            f1: self.f1,
            auc: self.auc,
            ap: self.average_precision,
            tp: self.confusion.tp,
            fp: self.confusion.fp,
            tn: self.confusion.tn,
            fn_: self.confusion.fn_,
            n: self.n_items,
        }
    }

    /// Pretty-printed JSON of [`ReportRecord`], newline-terminated.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.record()).expect("plain struct serializes");
        s.push('\n');
        s
    }
}

/// Threshold used for accuracy, F1 and the confusion matrix.
pub const DECISION_THRESHOLD: f64 = 0.5;

pub fn evaluate(labels: &[u8], scores: &[f64]) -> Result<EvalReport> {
    let confusion = confusion(labels, scores, DECISION_THRESHOLD)?;
    let roc = roc_curve(labels, scores)?;
    Ok(EvalReport {
        accuracy: accuracy(&confusion)?,
        f1: f1(&confusion)?,
        auc: auc(&roc),
        average_precision: average_precision(labels, scores)?,
        confusion,
        roc,
        n_items: labels.len(),
    })
}
