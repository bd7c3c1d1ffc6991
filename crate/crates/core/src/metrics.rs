//! Evaluation metrics over collected predictions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    Mse,
    Mae,
    AucRoc,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::Mse => "mse",
            MetricKind::Mae => "mae",
            MetricKind::AucRoc => "auc_roc",
        }
    }

    pub fn higher_is_better(self) -> bool {
        matches!(self, MetricKind::Accuracy | MetricKind::AucRoc)
    }

    pub fn is_classification(self) -> bool {
        matches!(self, MetricKind::Accuracy | MetricKind::AucRoc)
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Supervision for a set of predictions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Targets {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(c) => c.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, rows: &[usize]) -> Targets {
        match self {
            Targets::Classes(c) => Targets::Classes(rows.iter().map(|&i| c[i]).collect()),
            Targets::Values(v) => Targets::Values(rows.iter().map(|&i| v[i]).collect()),
        }
    }

    /// Concatenation of two target lists of the same variant.
    pub fn extend(&mut self, other: &Targets) -> Result<()> {
        match (self, other) {
            (Targets::Classes(a), Targets::Classes(b)) => a.extend_from_slice(b),
            (Targets::Values(a), Targets::Values(b)) => a.extend_from_slice(b),
            _ => return Err(Error::shape("targets", "cannot mix class and value targets")),
        }
        Ok(())
    }

    /// Values as an `n x 1` column for regression losses.
    pub fn as_column(&self) -> DenseMatrix {
        let v: Vec<f64> = match self {
            Targets::Classes(c) => c.iter().map(|&x| x as f64).collect(),
            Targets::Values(v) => v.clone(),
        };
        DenseMatrix::from_raw(v.len(), 1, v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: MetricKind,
    pub value: f64,
    pub n: usize,
}

fn classes(kind: MetricKind, t: &Targets) -> Result<&[usize]> {
    match t {
        Targets::Classes(c) => Ok(c),
        Targets::Values(_) => Err(Error::Unsupported(format!("{kind} needs integer class labels"))),
    }
}

fn single_column(kind: MetricKind, p: &DenseMatrix) -> Result<()> {
    if p.cols() != 1 {
        return Err(Error::shape(kind.as_str(), format!("expected one prediction column, got {}", p.cols())));
    }
    Ok(())
}

/// Mann–Whitney AUC with mid-ranks for tied scores.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Unsupported("auc_roc needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        pos_rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((pos_rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Scores `predictions` (one row per sample) against `targets`.
///
/// For `auc_roc` a single column is taken as the positive score; two columns
/// are read as class logits and ranked by their difference.
pub fn metric(kind: MetricKind, predictions: &DenseMatrix, targets: &Targets) -> Result<MetricReport> {
    let n = predictions.rows();
    if n != targets.len() {
        return Err(Error::shape(kind.as_str(), format!("{n} predictions for {} targets", targets.len())));
    }
    if n == 0 {
        return Err(Error::shape(kind.as_str(), "no samples"));
    }
    let value = match kind {
        MetricKind::Accuracy => {
            let labels = classes(kind, targets)?;
            let hits = predictions.argmax_rows().iter().zip(labels).filter(|(a, b)| a == b).count();
            hits as f64 / n as f64
        }
        MetricKind::Mse | MetricKind::Mae => {
            single_column(kind, predictions)?;
            let t = targets.as_column();
            let total: f64 = predictions
                .data()
                .iter()
                .zip(t.data())
                .map(|(p, y)| if kind == MetricKind::Mse { (p - y).powi(2) } else { (p - y).abs() })
                .sum();
            total / n as f64
        }
        MetricKind::AucRoc => {
            let labels = classes(kind, targets)?;
            if labels.iter().any(|&l| l > 1) {
                return Err(Error::Unsupported("auc_roc supports binary labels only".into()));
            }
            let scores: Vec<f64> = match predictions.cols() {
                1 => predictions.data().to_vec(),
                2 => (0..n).map(|i| predictions.get(i, 1) - predictions.get(i, 0)).collect(),
                c => return Err(Error::shape("auc_roc", format!("expected 1 or 2 score columns, got {c}"))),
            };
            let pos: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
            auc_roc(&scores, &pos)?
        }
    };
    Ok(MetricReport { metric: kind, value, n })
}
