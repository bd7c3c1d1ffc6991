use std::cell::Cell;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::DatasetBundle;
use super::optim::{Adam, OptimizerConfig};
use super::split::{batch_iter, Splits};
use crate::complex::FeaturedComplex;
use crate::error::{Error, Result};
use crate::homp::{DomainSignature, HompModel, ModelConfig, ModelState, PreparedBatch, Task};
use crate::metrics::{metric, MetricKind, MetricReport, Targets};
use crate::numerics::{DenseMatrix, LossKind, Tape};

fn d_max_epochs() -> usize {
    200
}
fn d_batch() -> usize {
    32
}
fn d_min_epochs() -> usize {
    50
}

/// Training-loop settings. Unset evaluation cadence and patience take the
/// task-level defaults: every epoch with patience 50 for node tasks, every
/// 5 epochs with patience 10 evaluations for graph tasks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "d_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    #[serde(default = "d_min_epochs")]
    pub min_epochs: usize,
    /// Overrides the task's default loss.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossKind>,
    /// Seeds dropout masks and mini-batch shuffling.
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: d_max_epochs(),
            batch_size: d_batch(),
            eval_every: None,
            patience: None,
            min_epochs: d_min_epochs(),
            loss: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.max_epochs == 0 {
            out.push("trainer.max_epochs must be >= 1".into());
        }
        if self.batch_size == 0 {
            out.push("trainer.batch_size must be >= 1".into());
        }
        if self.eval_every == Some(0) {
            out.push("trainer.eval_every must be >= 1".into());
        }
        if self.patience == Some(0) {
            out.push("trainer.patience must be >= 1".into());
        }
        out
    }

    /// `(eval_every, patience)` after applying the task-level defaults.
    pub fn cadence(&self, task: Task) -> (usize, usize) {
        let (e, p) = if task.is_node_level() { (1, 50) } else { (5, 10) };
        (self.eval_every.unwrap_or(e), self.patience.unwrap_or(p))
    }
}

/// One point of a metric trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub split: String,
    pub epoch: usize,
    pub metric: String,
    pub value: f64,
}

/// Outcome of training on one split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub metric: MetricKind,
    pub history: Vec<HistoryRow>,
    /// Epoch (1-based) whose parameters were restored; 0 if no evaluation ran.
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub train: MetricReport,
    pub val: MetricReport,
    pub test: MetricReport,
    pub num_parameters: usize,
    /// Test-split evaluations issued before the training loop finished.
    pub test_evaluations_during_training: usize,
}

enum Data<'a> {
    Node { batch: PreparedBatch, targets: Targets },
    Graph { samples: &'a [FeaturedComplex], targets: Targets },
}

/// Eval-mode predictions over a bundle.
pub struct Evaluator<'a> {
    model: &'a HompModel,
    data: Data<'a>,
    batch_size: usize,
    sealed: Option<Vec<bool>>,
    sealed_hits: Cell<usize>,
}

/// Signature covering the widest rank range among the samples.
pub fn signature_of(bundle: &DatasetBundle) -> DomainSignature {
    let widest = bundle.samples.iter().max_by_key(|s| s.complex().max_rank()).expect("bundles are non-empty");
    DomainSignature::of(widest, bundle.out_dim())
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a HompModel, bundle: &'a DatasetBundle, batch_size: usize) -> Result<Self> {
        let missing = || Error::schema(&bundle.name, format!("dataset has no targets for {:?}", model.config().task));
        let data = if model.config().task.is_node_level() {
            let batch = model.prepare(&bundle.samples[..1])?;
            let targets = batch.targets.clone().ok_or_else(missing)?;
            Data::Node { batch, targets }
        } else {
            let mut all: Option<Targets> = None;
            for chunk in bundle.samples.chunks(batch_size.max(1)) {
                let b = model.prepare(chunk)?;
                let t = b.targets.ok_or_else(missing)?;
                match &mut all {
                    None => all = Some(t),
                    Some(a) => a.extend(&t)?,
                }
            }
            Data::Graph { samples: &bundle.samples, targets: all.ok_or_else(missing)? }
        };
        Ok(Self { model, data, batch_size: batch_size.max(1), sealed: None, sealed_hits: Cell::new(0) })
    }

    /// Counts every later evaluation that touches one of `indices` until
    /// [`Evaluator::unseal`] is called.
    pub fn seal(&mut self, indices: &[usize]) {
        let mut mask = vec![false; self.targets().len()];
        for &i in indices {
            if let Some(m) = mask.get_mut(i) {
                *m = true;
            }
        }
        self.sealed = Some(mask);
    }

    /// Lifts the seal and returns how many sealed accesses happened.
    pub fn unseal(&mut self) -> usize {
        self.sealed = None;
        self.sealed_hits.replace(0)
    }

    pub fn targets(&self) -> &Targets {
        match &self.data {
            Data::Node { targets, .. } | Data::Graph { targets, .. } => targets,
        }
    }

    /// Predictions for `indices` (nodes or samples) in the given order.
    pub fn predictions(&self, state: &ModelState, indices: &[usize]) -> Result<DenseMatrix> {
        if let Some(mask) = &self.sealed {
            if indices.iter().any(|&i| mask.get(i).copied().unwrap_or(false)) {
                self.sealed_hits.set(self.sealed_hits.get() + 1);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        match &self.data {
            Data::Node { batch, .. } => {
                let mut tape = Tape::new();
                let p = self.model.predict(&mut tape, state, batch, false, &mut rng)?;
                tape.value(p).select_rows(indices)
            }
            Data::Graph { samples, .. } => {
                let mut parts = Vec::new();
                for chunk in indices.chunks(self.batch_size) {
                    let picked: Vec<FeaturedComplex> = chunk.iter().map(|&i| samples[i].clone()).collect();
                    let b = self.model.prepare(&picked)?;
                    let mut tape = Tape::new();
                    let p = self.model.predict(&mut tape, state, &b, false, &mut rng)?;
                    parts.push(tape.value(p).clone());
                }
                DenseMatrix::vstack(&parts.iter().collect::<Vec<_>>())
            }
        }
    }

    pub fn evaluate(&self, state: &ModelState, indices: &[usize], kind: MetricKind) -> Result<MetricReport> {
        let preds = self.predictions(state, indices)?;
        metric(kind, &preds, &self.targets().select(indices))
    }
}

/// Scores `indices` of `bundle` with `state` in eval mode.
pub fn evaluate(
    model: &HompModel,
    state: &ModelState,
    bundle: &DatasetBundle,
    indices: &[usize],
    kind: MetricKind,
) -> Result<MetricReport> {
    Evaluator::new(model, bundle, d_batch())?.evaluate(state, indices, kind)
}

fn improved(kind: MetricKind, new: f64, best: Option<f64>) -> bool {
    match best {
        None => true,
        Some(b) if kind.higher_is_better() => new > b,
        Some(b) => new < b,
    }
}

/// The model, trained parameters and report of one training run.
pub struct TrainOutcome {
    pub model: HompModel,
    pub state: ModelState,
    pub report: SplitReport,
}

/// Trains from a fresh initialization, keeps the parameters of the best
/// validation evaluation and scores the test split once, at the end.
pub fn train(
    model_cfg: &ModelConfig,
    bundle: &DatasetBundle,
    splits: &Splits,
    tcfg: &TrainConfig,
    ocfg: &OptimizerConfig,
    kind: MetricKind,
) -> Result<TrainOutcome> {
    let mut v = tcfg.violations();
    v.extend(ocfg.violations());
    if model_cfg.task != bundle.task {
        v.push(format!("model task {:?} does not match dataset task {:?}", model_cfg.task, bundle.task));
    }
    if kind.is_classification() != model_cfg.task.is_classification() {
        v.push(format!("metric {kind} does not fit task {:?}", model_cfg.task));
    }
    if !v.is_empty() {
        return Err(Error::Config(v));
    }
    splits.check(bundle.num_targets())?;

    let model = HompModel::new(model_cfg.clone(), signature_of(bundle))?;
    let mut state = model.init();
    let loss_kind = tcfg.loss.unwrap_or_else(|| model.default_loss());
    let mut evaluator = Evaluator::new(&model, bundle, tcfg.batch_size)?;
    evaluator.seal(&splits.test);
    let mut adam = Adam::new(ocfg.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let (eval_every, patience) = tcfg.cadence(model_cfg.task);
    let node_batch = match &evaluator.data {
        Data::Node { batch, .. } => Some(batch),
        Data::Graph { .. } => None,
    };

    let mut history = Vec::new();
    let mut best: Option<f64> = None;
    let mut best_epoch = 0;
    let mut best_state = state.clone();
    let mut stale = 0;
    let mut epochs_run = 0;
    for epoch in 0..tcfg.max_epochs {
        let mut loss_sum = 0.0;
        let mut loss_n = 0usize;
        let batches = match node_batch {
            Some(_) => vec![splits.train.clone()],
            None => batch_iter(&splits.train, tcfg.batch_size, tcfg.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15), true)?,
        };
        for chunk in &batches {
            let mut tape = Tape::new();
            let (pred, rows, targets, prepared);
            match node_batch {
                Some(b) => {
                    pred = model.predict(&mut tape, &state, b, true, &mut rng)?;
                    rows = Some(chunk.as_slice());
                    targets = evaluator.targets();
                }
                None => {
                    let picked: Vec<FeaturedComplex> = chunk.iter().map(|&i| bundle.samples[i].clone()).collect();
                    prepared = model.prepare(&picked)?;
                    pred = model.predict(&mut tape, &state, &prepared, true, &mut rng)?;
                    rows = None;
                    targets = prepared.targets.as_ref().expect("evaluator checked targets");
                }
            }
            let loss = model.loss(&mut tape, pred, targets, rows, loss_kind)?;
            let lv = tape.value(loss).get(0, 0);
            if !lv.is_finite() {
                return Err(Error::Aborted(format!("non-finite loss at epoch {}", epoch + 1)));
            }
            loss_sum += lv * chunk.len() as f64;
            loss_n += chunk.len();
            let grads = tape.backward(loss)?;
            adam.step(&mut state, &grads, epoch)
                .map_err(|e| Error::Aborted(format!("epoch {}: {e}", epoch + 1)))?;
        }
        epochs_run = epoch + 1;
        history.push(HistoryRow {
            split: "train".into(),
            epoch: epochs_run,
            metric: "loss".into(),
            value: loss_sum / loss_n as f64,
        });
        if epochs_run % eval_every != 0 {
            continue;
        }
        let tr = evaluator.evaluate(&state, &splits.train, kind)?;
        let va = evaluator.evaluate(&state, &splits.val, kind)?;
        for (split, r) in [("train", &tr), ("val", &va)] {
            history.push(HistoryRow { split: split.into(), epoch: epochs_run, metric: kind.to_string(), value: r.value });
        }
        if improved(kind, va.value, best) {
            best = Some(va.value);
            best_epoch = epochs_run;
            best_state = state.clone();
            stale = 0;
        } else {
            stale += 1;
        }
        if stale >= patience && epochs_run >= tcfg.min_epochs {
            break;
        }
    }
    let test_evaluations_during_training = evaluator.unseal();
    if best.is_some() {
        state = best_state;
    }
    let train = evaluator.evaluate(&state, &splits.train, kind)?;
    let val = evaluator.evaluate(&state, &splits.val, kind)?;
    let test = evaluator.evaluate(&state, &splits.test, kind)?;
    history.push(HistoryRow { split: "test".into(), epoch: best_epoch, metric: kind.to_string(), value: test.value });
    let report = SplitReport {
        metric: kind,
        history,
        best_epoch,
        epochs_run,
        train,
        val,
        test,
        num_parameters: state.num_scalars(),
        test_evaluations_during_training,
    };
    Ok(TrainOutcome { model, state, report })
}
