use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{InterAgg, ModelConfig, ReadoutKind, Update};
use crate::complex::{FeaturedComplex, NeighborhoodSpec};
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Parameter};

/// Populated ranks, their input feature widths and the prediction width.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSignature {
    pub widths: Vec<usize>,
    pub out_dim: usize,
}

impl DomainSignature {
    pub fn new(widths: Vec<usize>, out_dim: usize) -> Self {
        Self { widths, out_dim }
    }

    /// Ranks follow the complex; ranks without features get width 0.
    pub fn of(fc: &FeaturedComplex, out_dim: usize) -> Self {
        let mut widths = fc.widths();
        widths.resize(fc.complex().max_rank() + 1, 0);
        Self { widths, out_dim }
    }

    pub fn max_rank(&self) -> usize {
        self.widths.len().saturating_sub(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct MessagePlan {
    pub spec: NeighborhoodSpec,
    pub source: usize,
    pub in_width: usize,
    pub out_width: usize,
    pub weight: String,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct TargetPlan {
    pub rank: usize,
    pub messages: Vec<MessagePlan>,
    /// `(in, out)` width of `U`, absent for the identity update.
    pub update: Option<(String, usize, usize)>,
    pub out_width: usize,
}

/// Shapes of every weight, derived once from a config and a signature.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Plan {
    pub layers: Vec<Vec<TargetPlan>>,
    /// Latent widths per rank after the last layer.
    pub final_widths: Vec<usize>,
}

pub(crate) fn encoder_id(r: usize) -> String {
    format!("encoder.{r}")
}

pub(crate) fn sdp_id(r: usize) -> String {
    format!("readout.sdp.{r}")
}

pub(crate) const HEAD_ID: &str = "readout.head";

pub(crate) fn build_plan(cfg: &ModelConfig, sig: &DomainSignature) -> Result<Plan> {
    let mut errs = cfg.violations();
    if sig.widths.is_empty() {
        errs.push("domain signature has no ranks".into());
    }
    if sig.out_dim == 0 {
        errs.push("output width must be >= 1".into());
    }
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let max_rank = sig.max_rank();
    let targets = cfg.layer.resolved_targets(max_rank);
    let mut widths = vec![cfg.hidden_dim; max_rank + 1];
    let mut layers = Vec::with_capacity(cfg.num_layers);
    for l in 0..cfg.num_layers {
        let mut layer = Vec::with_capacity(targets.len());
        let mut seen = vec![false; max_rank + 1];
        for t in &targets {
            let r = t.rank;
            if r > max_rank {
                errs.push(format!("layer target rank {r} exceeds domain max rank {max_rank}"));
                continue;
            }
            if std::mem::replace(&mut seen[r], true) {
                errs.push(format!("rank {r} listed twice as a layer target"));
            }
            if t.neighborhoods.is_empty() {
                errs.push(format!("rank {r} has no neighborhoods"));
                continue;
            }
            let mut messages = Vec::new();
            for (k, nb) in t.neighborhoods.iter().enumerate() {
                if nb.spec.rank != r {
                    errs.push(format!("neighborhood {k} of rank {r} targets rank {}", nb.spec.rank));
                    continue;
                }
                let source = match nb.spec.source_rank() {
                    Some(s) if s <= max_rank => s,
                    _ => {
                        errs.push(format!("neighborhood {:?} at rank {r} has no source rank on this domain", nb.spec.kind));
                        continue;
                    }
                };
                let out_width = nb.width.unwrap_or(widths[r]);
                if out_width == 0 {
                    errs.push(format!("neighborhood {k} of rank {r} has zero width"));
                }
                messages.push(MessagePlan {
                    spec: nb.spec,
                    source,
                    in_width: widths[source],
                    out_width,
                    weight: format!("layer.{l}.rank.{r}.nbr.{k}"),
                });
            }
            let m_width = match cfg.layer.inter_agg {
                InterAgg::Concat => messages.iter().map(|m| m.out_width).sum(),
                InterAgg::Sum => {
                    let w0 = messages.first().map_or(0, |m| m.out_width);
                    if messages.iter().any(|m| m.out_width != w0) {
                        errs.push(format!("inter_agg = sum needs equal message widths at rank {r}"));
                    }
                    w0
                }
            };
            let update = match cfg.layer.update {
                Update::Identity => None,
                Update::ReluResidual | Update::ReluPlain => {
                    if cfg.layer.update == Update::ReluResidual && m_width != widths[r] {
                        errs.push(format!(
                            "relu_residual at rank {r} needs message width {} to equal latent width {}",
                            m_width, widths[r]
                        ));
                    }
                    Some((format!("layer.{l}.rank.{r}.update"), widths[r], m_width))
                }
            };
            layer.push(TargetPlan { rank: r, messages, update, out_width: m_width });
        }
        for t in &layer {
            widths[t.rank] = t.out_width;
        }
        layers.push(layer);
    }
    if cfg.readout == ReadoutKind::Sdp && widths.iter().any(|&w| w != widths[0]) {
        errs.push(format!("sdp readout needs equal latent widths across ranks, got {widths:?}"));
    }
    if errs.is_empty() {
        Ok(Plan { layers, final_widths: widths })
    } else {
        Err(Error::Config(errs))
    }
}

/// Every trainable matrix of a model, in a fixed creation order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    params: Vec<Parameter>,
    index: BTreeMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointEntry {
    id: String,
    shape: [usize; 2],
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointDoc {
    parameters: Vec<CheckpointEntry>,
}

impl ModelState {
    pub fn from_params(params: Vec<Parameter>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, p) in params.iter().enumerate() {
            if index.insert(p.id.clone(), i).is_some() {
                return Err(Error::Config(vec![format!("duplicate parameter id {}", p.id)]));
            }
        }
        Ok(Self { params, index })
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Parameter] {
        &mut self.params
    }

    pub fn get(&self, id: &str) -> Option<&Parameter> {
        self.index.get(id).map(|&i| &self.params[i])
    }

    pub fn get_mut(&mut self, id: &str) -> Option<&mut Parameter> {
        self.index.get(id).map(|&i| &mut self.params[i])
    }

    pub(crate) fn require(&self, id: &str) -> Result<&Parameter> {
        self.get(id).ok_or_else(|| Error::shape("model state", format!("missing parameter {id}")))
    }

    /// Total number of scalar weights.
    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.data().len()).sum()
    }

    /// Overwrites every value from another state with the same ids and shapes.
    pub fn copy_values_from(&mut self, other: &ModelState) -> Result<()> {
        for p in &mut self.params {
            let src = other.require(&p.id)?;
            if src.value.shape() != p.value.shape() {
                return Err(Error::shape("model state", format!("shape mismatch for {}", p.id)));
            }
            p.value = src.value.clone();
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = CheckpointDoc {
            parameters: self
                .params
                .iter()
                .map(|p| CheckpointEntry {
                    id: p.id.clone(),
                    shape: [p.value.rows(), p.value.cols()],
                    data: p.value.data().to_vec(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CheckpointDoc = serde_json::from_str(text).map_err(|e| Error::schema("checkpoint", e.to_string()))?;
        let params = doc
            .parameters
            .into_iter()
            .map(|e| Ok(Parameter::new(e.id, DenseMatrix::from_vec(e.shape[0], e.shape[1], e.data)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_params(params)
    }
}

/// `uniform(-a, a)` with `a = 1/sqrt(fan_in)`.
pub fn init_bound(fan_in: usize) -> f64 {
    1.0 / (fan_in.max(1) as f64).sqrt()
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let a = init_bound(rows);
    let data = (0..rows * cols).map(|_| rng.random_range(-a..=a)).collect();
    DenseMatrix::from_raw(rows, cols, data)
}

/// `[I; 0]`: keeps the first `d` columns of a `2d`-wide concatenation.
fn pass_through(d: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(2 * d, d);
    for i in 0..d {
        m.set(i, i, 1.0);
    }
    m
}

pub(crate) fn init_from_plan(cfg: &ModelConfig, sig: &DomainSignature, plan: &Plan) -> ModelState {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = Vec::new();
    for (r, &w) in sig.widths.iter().enumerate() {
        params.push(Parameter::new(encoder_id(r), uniform(&mut rng, w, cfg.hidden_dim)));
    }
    for layer in &plan.layers {
        for t in layer {
            for m in &t.messages {
                params.push(Parameter::new(m.weight.clone(), uniform(&mut rng, m.in_width, m.out_width)));
            }
            if let Some((id, i, o)) = &t.update {
                params.push(Parameter::new(id.clone(), uniform(&mut rng, *i, *o)));
            }
        }
    }
    let d0 = plan.final_widths[0];
    if cfg.readout == ReadoutKind::Sdp {
        for r in 0..sig.max_rank() {
            params.push(Parameter::new(sdp_id(r), pass_through(d0)));
        }
    }
    params.push(Parameter::new(HEAD_ID, uniform(&mut rng, d0, sig.out_dim)));
    ModelState::from_params(params).expect("plan ids are unique")
}

/// Draws a fresh state for `cfg` on a domain with signature `sig`.
pub fn init_model(cfg: &ModelConfig, sig: &DomainSignature) -> Result<ModelState> {
    let plan = build_plan(cfg, sig)?;
    Ok(init_from_plan(cfg, sig, &plan))
}
