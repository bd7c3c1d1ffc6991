//! Reverse-mode differentiation over a fixed, closed kernel set.
//!
//! A [`Tape`] records every primitive application in evaluation order, so
//! the node list is topologically sorted by construction and each node is
//! assigned exactly once.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DenseMatrix, Parameter};
use crate::complex::SparseOperator;
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[serde(rename = "cross_entropy")]
    SoftmaxCrossEntropy,
    Mse,
    Mae,
}

#[derive(Clone, Debug)]
enum Op {
    Input,
    Param(String),
    MatMul(Var, Var),
    SparseMatMul(Arc<SparseOperator>, Var),
    Add(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    ConcatCols(Vec<Var>),
    SegmentReduce { input: Var, segments: Arc<[usize]>, counts: Vec<usize>, mean: bool },
    Dropout { input: Var, mask: Vec<f64> },
    RowSlice { input: Var, rows: Vec<usize> },
    CrossEntropy { logits: Var, labels: Vec<usize>, probs: DenseMatrix },
    Mse { pred: Var, targets: DenseMatrix },
    Mae { pred: Var, targets: DenseMatrix },
}

impl Op {
    fn kind(&self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::Param(_) => "param",
            Op::MatMul(..) => "matmul",
            Op::SparseMatMul(..) => "sparse_dense_matmul",
            Op::Add(..) => "add",
            Op::Scale(..) => "scale",
            Op::Relu(_) => "relu",
            Op::ConcatCols(_) => "concat_cols",
            Op::SegmentReduce { mean: false, .. } => "segment_sum",
            Op::SegmentReduce { mean: true, .. } => "segment_mean",
            Op::Dropout { .. } => "dropout",
            Op::RowSlice { .. } => "row_slice",
            Op::CrossEntropy { .. } => "softmax_cross_entropy",
            Op::Mse { .. } => "mse",
            Op::Mae { .. } => "mae",
        }
    }

    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Input | Op::Param(_) => vec![],
            Op::MatMul(a, b) | Op::Add(a, b) => vec![*a, *b],
            Op::SparseMatMul(_, a) | Op::Scale(a, _) | Op::Relu(a) => vec![*a],
            Op::ConcatCols(v) => v.clone(),
            Op::SegmentReduce { input, .. } | Op::Dropout { input, .. } | Op::RowSlice { input, .. } => vec![*input],
            Op::CrossEntropy { logits, .. } => vec![*logits],
            Op::Mse { pred, .. } | Op::Mae { pred, .. } => vec![*pred],
        }
    }
}

/// One recorded primitive application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordEntry {
    pub kind: &'static str,
    pub inputs: Vec<usize>,
    pub output: usize,
}

/// Gradients keyed by parameter id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients(pub BTreeMap<String, DenseMatrix>);

impl Gradients {
    pub fn get(&self, id: &str) -> Option<&DenseMatrix> {
        self.0.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &DenseMatrix)> {
        self.0.iter()
    }
}

struct Node {
    value: DenseMatrix,
    op: Op,
}

/// Sums (or averages) rows that share a segment id.
pub fn segment_reduce(x: &DenseMatrix, segments: &[usize], num_segments: usize, mean: bool) -> Result<DenseMatrix> {
    if segments.len() != x.rows() {
        return Err(Error::shape(
            "segment_reduce",
            format!("{} segment ids for {} rows", segments.len(), x.rows()),
        ));
    }
    if let Some(&s) = segments.iter().find(|&&s| s >= num_segments) {
        return Err(Error::shape("segment_reduce", format!("segment {s} of {num_segments}")));
    }
    let mut out = DenseMatrix::zeros(num_segments, x.cols());
    let mut counts = vec![0usize; num_segments];
    for (r, &s) in segments.iter().enumerate() {
        counts[s] += 1;
        for (o, v) in out.row_mut(s).iter_mut().zip(x.row(r)) {
            *o += v;
        }
    }
    if mean {
        for (s, &c) in counts.iter().enumerate() {
            if c > 0 {
                for o in out.row_mut(s) {
                    *o /= c as f64;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: DenseMatrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &DenseMatrix {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The recorded computation, in evaluation order.
    pub fn record(&self) -> Vec<RecordEntry> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| RecordEntry { kind: n.op.kind(), inputs: n.op.inputs().iter().map(|v| v.0).collect(), output: i })
            .collect()
    }

    /// Constant input.
    pub fn input(&mut self, value: DenseMatrix) -> Var {
        self.push(value, Op::Input)
    }

    /// Leaf bound to a parameter. Frozen parameters are recorded as constants.
    pub fn param(&mut self, p: &Parameter) -> Var {
        let op = if p.requires_grad { Op::Param(p.id.clone()) } else { Op::Input };
        self.push(p.value.clone(), op)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    pub fn sparse_matmul(&mut self, op: Arc<SparseOperator>, x: Var) -> Result<Var> {
        let v = DenseMatrix::sparse_left(&op, self.value(x))?;
        Ok(self.push(v, Op::SparseMatMul(op, x)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).scale(s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        self.push(v, Op::Relu(a))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let refs: Vec<&DenseMatrix> = parts.iter().map(|&p| self.value(p)).collect();
        let v = DenseMatrix::concat_cols(&refs)?;
        Ok(self.push(v, Op::ConcatCols(parts.to_vec())))
    }

    pub fn segment_reduce(&mut self, x: Var, segments: Arc<[usize]>, num_segments: usize, mean: bool) -> Result<Var> {
        let v = segment_reduce(self.value(x), &segments, num_segments, mean)?;
        let mut counts = vec![0; num_segments];
        for &s in segments.iter() {
            counts[s] += 1;
        }
        Ok(self.push(v, Op::SegmentReduce { input: x, segments, counts, mean }))
    }

    /// Inverted dropout: kept entries are scaled by `1 / (1 - p)`. With
    /// `p == 0` the input handle is returned unchanged.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, p: f64, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::shape("dropout", format!("probability {p} outside [0, 1)")));
        }
        if p == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - p);
        let src = self.value(x);
        let mask: Vec<f64> = (0..src.data().len()).map(|_| if rng.random::<f64>() < p { 0.0 } else { keep }).collect();
        let data = src.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let v = DenseMatrix::from_raw(src.rows(), src.cols(), data);
        Ok(self.push(v, Op::Dropout { input: x, mask }))
    }

    pub fn row_slice(&mut self, x: Var, rows: &[usize]) -> Result<Var> {
        let v = self.value(x).select_rows(rows)?;
        Ok(self.push(v, Op::RowSlice { input: x, rows: rows.to_vec() }))
    }

    /// Mean softmax cross-entropy of `logits` (one row per sample) against class ids.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let l = self.value(logits);
        if l.rows() != labels.len() || l.rows() == 0 {
            return Err(Error::shape(
                "softmax_cross_entropy",
                format!("{} logit rows for {} labels", l.rows(), labels.len()),
            ));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= l.cols()) {
            return Err(Error::shape("softmax_cross_entropy", format!("label {y} outside {} classes", l.cols())));
        }
        let mut probs = DenseMatrix::zeros(l.rows(), l.cols());
        let mut total = 0.0;
        for (r, &y) in labels.iter().enumerate() {
            let row = l.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
            let log_z = max + sum.ln();
            total += log_z - row[y];
            for (c, &v) in row.iter().enumerate() {
                probs.set(r, c, (v - log_z).exp());
            }
        }
        let value = total / labels.len() as f64;
        check_loss(value, "softmax_cross_entropy")?;
        Ok(self.push(DenseMatrix::from_raw(1, 1, vec![value]), Op::CrossEntropy { logits, labels: labels.to_vec(), probs }))
    }

    pub fn mse(&mut self, pred: Var, targets: &DenseMatrix) -> Result<Var> {
        let p = self.value(pred);
        check_target_shape(p, targets, "mse")?;
        let value = p.data().iter().zip(targets.data()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / p.data().len() as f64;
        check_loss(value, "mse")?;
        Ok(self.push(DenseMatrix::from_raw(1, 1, vec![value]), Op::Mse { pred, targets: targets.clone() }))
    }

    pub fn mae(&mut self, pred: Var, targets: &DenseMatrix) -> Result<Var> {
        let p = self.value(pred);
        check_target_shape(p, targets, "mae")?;
        let value = p.data().iter().zip(targets.data()).map(|(a, b)| (a - b).abs()).sum::<f64>() / p.data().len() as f64;
        check_loss(value, "mae")?;
        Ok(self.push(DenseMatrix::from_raw(1, 1, vec![value]), Op::Mae { pred, targets: targets.clone() }))
    }

    /// Reverse sweep from a scalar output. Every parameter leaf on the tape
    /// gets an entry; leaves not on a path to `loss` get zeros.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).shape() != (1, 1) {
            let (r, c) = self.value(loss).shape();
            return Err(Error::shape("backward", format!("loss must be 1x1, got {r}x{c}")));
        }
        let mut grads: Vec<Option<DenseMatrix>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(DenseMatrix::filled(1, 1, 1.0));
        let mut out = Gradients::default();

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            let Some(g) = grads[i].take() else {
                if let Op::Param(id) = &node.op {
                    out.0.entry(id.clone()).or_insert_with(|| DenseMatrix::zeros(node.value.rows(), node.value.cols()));
                }
                continue;
            };
            let mut acc = |v: Var, d: DenseMatrix| match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&d),
                slot @ None => *slot = Some(d),
            };
            match &node.op {
                Op::Input => {}
                Op::Param(id) => match out.0.get_mut(id) {
                    Some(existing) => existing.add_assign(&g),
                    None => {
                        out.0.insert(id.clone(), g);
                    }
                },
                Op::MatMul(a, b) => {
                    acc(*a, g.matmul_t(self.value(*b))?);
                    acc(*b, self.value(*a).t_matmul(&g)?);
                }
                Op::SparseMatMul(op, x) => acc(*x, DenseMatrix::sparse_left_t(op, &g)?),
                Op::Add(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, g);
                }
                Op::Scale(a, s) => acc(*a, g.scale(*s)),
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let data = g.data().iter().zip(x.data()).map(|(gv, xv)| if *xv > 0.0 { *gv } else { 0.0 }).collect();
                    acc(*a, DenseMatrix::from_raw(g.rows(), g.cols(), data));
                }
                Op::ConcatCols(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let w = self.value(*p).cols();
                        acc(*p, g.col_range(start, w));
                        start += w;
                    }
                }
                Op::SegmentReduce { input, segments, counts, mean } => {
                    let mut d = DenseMatrix::zeros(segments.len(), g.cols());
                    for (r, &s) in segments.iter().enumerate() {
                        let scale = if *mean { 1.0 / counts[s] as f64 } else { 1.0 };
                        for (o, gv) in d.row_mut(r).iter_mut().zip(g.row(s)) {
                            *o = gv * scale;
                        }
                    }
                    acc(*input, d);
                }
                Op::Dropout { input, mask } => {
                    let data = g.data().iter().zip(mask).map(|(a, b)| a * b).collect();
                    acc(*input, DenseMatrix::from_raw(g.rows(), g.cols(), data));
                }
                Op::RowSlice { input, rows } => {
                    let src = self.value(*input);
                    let mut d = DenseMatrix::zeros(src.rows(), src.cols());
                    for (k, &r) in rows.iter().enumerate() {
                        for (o, gv) in d.row_mut(r).iter_mut().zip(g.row(k)) {
                            *o += gv;
                        }
                    }
                    acc(*input, d);
                }
                Op::CrossEntropy { logits, labels, probs } => {
                    let scale = g.get(0, 0) / labels.len() as f64;
                    let mut d = probs.clone();
                    for (r, &y) in labels.iter().enumerate() {
                        d.set(r, y, d.get(r, y) - 1.0);
                    }
                    acc(*logits, d.scale(scale));
                }
                Op::Mse { pred, targets } => {
                    let p = self.value(*pred);
                    let scale = 2.0 * g.get(0, 0) / p.data().len() as f64;
                    let data = p.data().iter().zip(targets.data()).map(|(a, b)| scale * (a - b)).collect();
                    acc(*pred, DenseMatrix::from_raw(p.rows(), p.cols(), data));
                }
                Op::Mae { pred, targets } => {
                    let p = self.value(*pred);
                    let scale = g.get(0, 0) / p.data().len() as f64;
                    let data = p
                        .data()
                        .iter()
                        .zip(targets.data())
                        .map(|(a, b)| scale * if a > b { 1.0 } else if a < b { -1.0 } else { 0.0 })
                        .collect();
                    acc(*pred, DenseMatrix::from_raw(p.rows(), p.cols(), data));
                }
            }
        }
        for node in &self.nodes[loss.0 + 1..] {
            if let Op::Param(id) = &node.op {
                out.0.entry(id.clone()).or_insert_with(|| DenseMatrix::zeros(node.value.rows(), node.value.cols()));
            }
        }
        Ok(out)
    }
}

fn check_loss(value: f64, kind: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{kind} loss")))
    }
}

fn check_target_shape(p: &DenseMatrix, t: &DenseMatrix, kind: &'static str) -> Result<()> {
    if p.shape() != t.shape() || p.rows() == 0 {
        return Err(Error::shape(
            kind,
            format!("predictions {}x{} vs targets {}x{}", p.rows(), p.cols(), t.rows(), t.cols()),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn relu_and_segment_mean() {
        let mut t = Tape::new();
        let x = t.input(m(&[vec![-1.0, 2.0]]));
        let y = t.relu(x);
        assert_eq!(t.value(y).data(), &[0.0, 2.0]);
        let z = t.input(m(&[vec![1.0, 1.0], vec![3.0, 3.0]]));
        let s = t.segment_reduce(z, Arc::from(vec![0, 0]), 1, true).unwrap();
        assert_eq!(t.value(s).data(), &[2.0, 2.0]);
    }

    #[test]
    fn quadratic_gradient() {
        // f(w) = wᵀw written as 2 · mean(w²) for a 2-vector
        let w = Parameter::new("w", m(&[vec![1.0], vec![2.0]]));
        let mut t = Tape::new();
        let v = t.param(&w);
        let sq = t.mse(v, &DenseMatrix::zeros(2, 1)).unwrap();
        let f = t.scale(sq, 2.0);
        assert_eq!(t.value(f).data(), &[5.0]);
        assert_eq!(t.backward(f).unwrap().get("w").unwrap().data(), &[2.0, 4.0]);
    }

    #[test]
    fn constant_loss_zero_gradients() {
        let w = Parameter::new("w", m(&[vec![3.0]]));
        let mut t = Tape::new();
        let _ = t.param(&w);
        let c = t.input(m(&[vec![5.0]]));
        let g = t.backward(c).unwrap();
        assert_eq!(g.get("w").unwrap().data(), &[0.0]);
    }

    #[test]
    fn loss_values() {
        let mut t = Tape::new();
        let p = t.input(m(&[vec![0.0], vec![2.0]]));
        let l = t.mse(p, &DenseMatrix::zeros(2, 1)).unwrap();
        assert_eq!(t.value(l).get(0, 0), 2.0);
        let p = t.input(m(&[vec![1.0], vec![-1.0]]));
        let l = t.mae(p, &DenseMatrix::zeros(2, 1)).unwrap();
        assert_eq!(t.value(l).get(0, 0), 1.0);
        let p = t.input(m(&[vec![0.0, 0.0]]));
        let l = t.cross_entropy(p, &[0]).unwrap();
        assert!((t.value(l).get(0, 0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(t.cross_entropy(p, &[2]).is_err());
    }

    #[test]
    fn non_scalar_backward_rejected() {
        let mut t = Tape::new();
        let x = t.input(DenseMatrix::zeros(2, 1));
        assert!(t.backward(x).is_err());
    }

    #[test]
    fn record_is_topological() {
        let mut t = Tape::new();
        let a = t.input(DenseMatrix::filled(1, 1, 1.0));
        let b = t.relu(a);
        let _ = t.add(a, b).unwrap();
        let rec = t.record();
        assert_eq!(rec[2].kind, "add");
        assert!(rec.iter().all(|e| e.inputs.iter().all(|&i| i < e.output)));
    }
}
