use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;

use super::config::{InterAgg, IntraAgg, ModelConfig, ReadoutKind, Update};
use super::model::{build_plan, encoder_id, init_from_plan, sdp_id, DomainSignature, ModelState, Plan, HEAD_ID};
use crate::complex::{
    boundary_matrix, disjoint_union, resolve_neighborhood, BatchVectors, Complex, FeaturedComplex, GraphLabel,
    NeighborhoodSpec, SparseOperator,
};
use crate::error::{Error, Result};
use crate::metrics::Targets;
use crate::numerics::{DenseMatrix, LossKind, Tape, Var};
use crate::readout::{readout_dr, readout_sdp, Pool};

/// Resolved neighborhood operators keyed by their spec. In mean mode the
/// stored operators are already row-normalized.
#[derive(Clone, Debug, Default)]
pub struct OperatorSet {
    ops: HashMap<NeighborhoodSpec, Arc<SparseOperator>>,
}

impl OperatorSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Resolves every spec on `complex`.
    pub fn resolve(complex: &Complex, specs: &[NeighborhoodSpec], intra: IntraAgg) -> Result<Self> {
        let mut set = Self::new();
        for spec in specs {
            if set.ops.contains_key(spec) {
                continue;
            }
            set.insert(*spec, resolve_neighborhood(complex, spec)?, intra);
        }
        Ok(set)
    }

    pub fn insert(&mut self, spec: NeighborhoodSpec, op: SparseOperator, intra: IntraAgg) {
        let op = match intra {
            IntraAgg::Sum => op,
            IntraAgg::Mean => op.row_normalized(),
        };
        self.ops.insert(spec, Arc::new(op));
    }

    pub fn get(&self, spec: &NeighborhoodSpec) -> Option<&Arc<SparseOperator>> {
        self.ops.get(spec)
    }
}

/// A (possibly unioned) featured complex with everything a forward pass
/// needs resolved up front.
#[derive(Clone, Debug)]
pub struct PreparedBatch {
    pub data: FeaturedComplex,
    pub batch: BatchVectors,
    /// One entry per node for node tasks, one per sample for graph tasks.
    pub targets: Option<Targets>,
    pub ops: OperatorSet,
    /// `incidences[r-1]` is `|B_{r-1,r}|`; only filled for SDP readouts.
    pub incidences: Vec<Arc<SparseOperator>>,
    segments0: Arc<[usize]>,
}

impl PreparedBatch {
    pub fn num_samples(&self) -> usize {
        self.batch.num_samples
    }

    pub fn pool(&self, model: &HompModel) -> Pool {
        Pool { segments: self.segments0.clone(), num_samples: self.batch.num_samples, pooling: model.config.pooling }
    }
}

/// A model configuration bound to a domain signature.
#[derive(Clone, Debug)]
pub struct HompModel {
    config: ModelConfig,
    signature: DomainSignature,
    plan: Plan,
}

struct Bound<'a> {
    state: &'a ModelState,
    vars: HashMap<String, Var>,
}

impl<'a> Bound<'a> {
    fn new(state: &'a ModelState) -> Self {
        Self { state, vars: HashMap::new() }
    }

    fn var(&mut self, tape: &mut Tape, id: &str) -> Result<Var> {
        if let Some(&v) = self.vars.get(id) {
            return Ok(v);
        }
        let v = tape.param(self.state.require(id)?);
        self.vars.insert(id.to_string(), v);
        Ok(v)
    }
}

fn graph_targets(samples: &[FeaturedComplex], classification: bool) -> Result<Option<Targets>> {
    let labels: Option<Vec<GraphLabel>> = samples.iter().map(|s| s.labels.graph_label).collect();
    let Some(labels) = labels else {
        return Ok(None);
    };
    Ok(Some(if classification {
        let mut out = Vec::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            match l {
                GraphLabel::Class(c) => out.push(*c),
                GraphLabel::Value(_) => {
                    return Err(Error::schema("graph labels", format!("sample {i} has a real-valued label")))
                }
            }
        }
        Targets::Classes(out)
    } else {
        Targets::Values(labels.iter().map(|l| l.as_f64()).collect())
    }))
}

impl HompModel {
    pub fn new(config: ModelConfig, signature: DomainSignature) -> Result<Self> {
        let plan = build_plan(&config, &signature)?;
        Ok(Self { config, signature, plan })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn signature(&self) -> &DomainSignature {
        &self.signature
    }

    pub fn max_rank(&self) -> usize {
        self.signature.max_rank()
    }

    /// Latent width per rank after the backbone.
    pub fn final_widths(&self) -> &[usize] {
        &self.plan.final_widths
    }

    pub fn init(&self) -> ModelState {
        init_from_plan(&self.config, &self.signature, &self.plan)
    }

    /// Every neighborhood any layer reads.
    pub fn required_specs(&self) -> Vec<NeighborhoodSpec> {
        let mut out: Vec<NeighborhoodSpec> = Vec::new();
        for t in self.plan.layers.iter().flatten() {
            for m in &t.messages {
                if !out.contains(&m.spec) {
                    out.push(m.spec);
                }
            }
        }
        out
    }

    /// Unions `samples`, pads to the model's ranks and resolves operators.
    pub fn prepare(&self, samples: &[FeaturedComplex]) -> Result<PreparedBatch> {
        let (mut data, mut batch) = if samples.len() == 1 {
            let s = &samples[0];
            let per_rank = (0..=s.complex().max_rank()).map(|r| vec![0; s.complex().num_cells(r)]).collect();
            (s.clone(), BatchVectors { per_rank, num_samples: 1 })
        } else {
            disjoint_union(samples)?
        };
        let max_rank = self.max_rank();
        if data.complex().max_rank() < max_rank {
            let width = self.signature.widths.last().copied().unwrap_or(0);
            data = data.padded(max_rank, width);
        }
        if data.features().len() <= data.complex().max_rank().min(max_rank) {
            let mut features = data.features().to_vec();
            for r in features.len()..=data.complex().max_rank().min(max_rank) {
                features.push(DenseMatrix::zeros(data.complex().num_cells(r), self.signature.widths[r]));
            }
            data = FeaturedComplex::from_parts_unchecked(data.complex().clone(), features, data.labels.clone());
        }
        while batch.per_rank.len() <= data.complex().max_rank() {
            let r = batch.per_rank.len();
            batch.per_rank.push(vec![0; data.complex().num_cells(r)]);
        }
        if data.complex().max_rank() != max_rank || data.features().len() != max_rank + 1 {
            return Err(Error::shape(
                "batch",
                format!(
                    "domain has ranks 0..={} with {} feature matrices, model expects ranks 0..={max_rank}",
                    data.complex().max_rank(),
                    data.features().len()
                ),
            ));
        }
        for (r, (f, &w)) in data.features().iter().zip(&self.signature.widths).enumerate() {
            if f.cols() != w {
                return Err(Error::shape("batch", format!("rank {r} features have width {}, model expects {w}", f.cols())));
            }
        }
        let task = self.config.task;
        let targets = if task.is_node_level() {
            if task.is_classification() {
                data.labels.node_labels.clone().map(Targets::Classes)
            } else {
                data.labels.node_targets.clone().map(Targets::Values)
            }
        } else {
            graph_targets(samples, task.is_classification())?
        };
        let ops = OperatorSet::resolve(data.complex(), &self.required_specs(), self.config.layer.intra_agg)?;
        let incidences = if self.config.readout == ReadoutKind::Sdp {
            (1..=max_rank)
                .map(|r| boundary_matrix(data.complex(), r, false).map(Arc::new))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let segments0: Arc<[usize]> = batch.rank(0).into();
        Ok(PreparedBatch { data, batch, targets, ops, incidences, segments0 })
    }

    fn encode_bound<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        bound: &mut Bound<'_>,
        features: &[DenseMatrix],
        training: bool,
        rng: &mut R,
    ) -> Result<Vec<Var>> {
        if features.len() != self.signature.widths.len() {
            return Err(Error::shape(
                "encode",
                format!("{} feature matrices for {} ranks", features.len(), self.signature.widths.len()),
            ));
        }
        let mut out = Vec::with_capacity(features.len());
        for (r, x) in features.iter().enumerate() {
            let e = bound.var(tape, &encoder_id(r))?;
            if x.cols() != tape.value(e).rows() {
                return Err(Error::shape(
                    "encode",
                    format!("rank {r} features have width {}, encoder expects {}", x.cols(), tape.value(e).rows()),
                ));
            }
            let xv = tape.input(x.clone());
            let z = tape.matmul(xv, e)?;
            let h = tape.relu(z);
            let p = if training { self.config.dropout } else { 0.0 };
            out.push(tape.dropout(h, p, rng)?);
        }
        Ok(out)
    }

    /// `H_r = dropout(relu(X_r · E_r))` for every rank.
    pub fn encode<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        state: &ModelState,
        features: &[DenseMatrix],
        training: bool,
        rng: &mut R,
    ) -> Result<Vec<Var>> {
        self.encode_bound(tape, &mut Bound::new(state), features, training, rng)
    }

    fn layer_bound(
        &self,
        tape: &mut Tape,
        bound: &mut Bound<'_>,
        layer: usize,
        latents: &[Var],
        ops: &OperatorSet,
    ) -> Result<Vec<Var>> {
        let plan = self
            .plan
            .layers
            .get(layer)
            .ok_or_else(|| Error::shape("homp layer", format!("model has no layer {layer}")))?;
        let mut next = latents.to_vec();
        for t in plan {
            let mut msgs = Vec::with_capacity(t.messages.len());
            for m in &t.messages {
                let g = ops
                    .get(&m.spec)
                    .ok_or_else(|| Error::Unsupported(format!("operator {:?} at rank {} not resolved", m.spec.kind, m.spec.rank)))?;
                let w = bound.var(tape, &m.weight)?;
                let hw = tape.matmul(latents[m.source], w)?;
                msgs.push(tape.sparse_matmul(g.clone(), hw)?);
            }
            let m = match self.config.layer.inter_agg {
                InterAgg::Concat => tape.concat_cols(&msgs)?,
                InterAgg::Sum => {
                    let mut acc = msgs[0];
                    for &x in &msgs[1..] {
                        acc = tape.add(acc, x)?;
                    }
                    acc
                }
            };
            let h = latents[t.rank];
            next[t.rank] = match (&t.update, self.config.layer.update) {
                (Some((uid, _, _)), update) => {
                    let u = bound.var(tape, uid)?;
                    let hu = tape.matmul(h, u)?;
                    let pre = tape.add(hu, m)?;
                    let act = tape.relu(pre);
                    if update == Update::ReluResidual {
                        tape.add(act, h)?
                    } else {
                        act
                    }
                }
                (None, _) => m,
            };
        }
        Ok(next)
    }

    /// One message-passing layer over `latents`, reading operators from `ops`.
    /// Ranks the layer does not target pass through unchanged.
    pub fn homp_layer_forward(
        &self,
        tape: &mut Tape,
        state: &ModelState,
        layer: usize,
        latents: &[Var],
        ops: &OperatorSet,
    ) -> Result<Vec<Var>> {
        self.layer_bound(tape, &mut Bound::new(state), layer, latents, ops)
    }

    fn forward_bound<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        bound: &mut Bound<'_>,
        batch: &PreparedBatch,
        training: bool,
        rng: &mut R,
    ) -> Result<Vec<Var>> {
        let mut h = self.encode_bound(tape, bound, batch.data.features(), training, rng)?;
        for l in 0..self.plan.layers.len() {
            h = self.layer_bound(tape, bound, l, &h, &batch.ops)?;
        }
        Ok(h)
    }

    /// Encoder followed by every layer. The tape holds the computation record.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        state: &ModelState,
        batch: &PreparedBatch,
        training: bool,
        rng: &mut R,
    ) -> Result<Vec<Var>> {
        self.forward_bound(tape, &mut Bound::new(state), batch, training, rng)
    }

    /// Forward pass and readout: one prediction row per node (node tasks) or
    /// per sample (graph tasks).
    pub fn predict<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        state: &ModelState,
        batch: &PreparedBatch,
        training: bool,
        rng: &mut R,
    ) -> Result<Var> {
        let mut bound = Bound::new(state);
        let latents = self.forward_bound(tape, &mut bound, batch, training, rng)?;
        let head = bound.var(tape, HEAD_ID)?;
        let pool = batch.pool(self);
        match self.config.readout {
            ReadoutKind::Dr => readout_dr(tape, latents[0], head, self.config.task, &pool),
            ReadoutKind::Sdp => {
                let projections = (0..self.max_rank())
                    .map(|r| bound.var(tape, &sdp_id(r)))
                    .collect::<Result<Vec<_>>>()?;
                readout_sdp(tape, &latents, &batch.incidences, &projections, head, self.config.task, &pool)
            }
        }
    }

    /// Mean loss of `pred` against `targets`, optionally restricted to `rows`.
    pub fn loss(&self, tape: &mut Tape, pred: Var, targets: &Targets, rows: Option<&[usize]>, kind: LossKind) -> Result<Var> {
        let (pred, targets) = match rows {
            Some(rows) => (tape.row_slice(pred, rows)?, targets.select(rows)),
            None => (pred, targets.clone()),
        };
        match (kind, &targets) {
            (LossKind::SoftmaxCrossEntropy, Targets::Classes(c)) => tape.cross_entropy(pred, c),
            (LossKind::SoftmaxCrossEntropy, Targets::Values(_)) => {
                Err(Error::Unsupported("cross-entropy needs class labels".into()))
            }
            (LossKind::Mse, t) => tape.mse(pred, &t.as_column()),
            (LossKind::Mae, t) => tape.mae(pred, &t.as_column()),
        }
    }

    /// Loss paired with the task: cross-entropy for classification, MSE otherwise.
    pub fn default_loss(&self) -> LossKind {
        if self.config.task.is_classification() {
            LossKind::SoftmaxCrossEntropy
        } else {
            LossKind::Mse
        }
    }
}
