//! Finite-difference audit of a configured model on a small synthetic domain.

use crate::complex::{FeaturedComplex, GraphLabel};
use crate::error::Result;
use crate::homp::{check_model_gradients, HompLayerConfig, HompModel, InterAgg, IntraAgg, ModelConfig, ReadoutKind, Task, Update};
use crate::lifting::{apply_lifting, LiftingConfig};
use crate::numerics::{GradCheckReport, LossKind};

use super::dataset::{synthetic_sbm, DatasetBundle, SbmSpec};
use super::train::signature_of;

/// Largest accepted relative gradient error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

/// Central-difference step.
pub const GRADCHECK_STEP: f64 = 1e-5;

pub const GRADCHECK_NODES: usize = 10;

/// A seeded 10-node two-block graph lifted by `lifting`, annotated for `task`.
pub fn gradcheck_sample(task: Task, lifting: &LiftingConfig, seed: u64) -> Result<FeaturedComplex> {
    let spec = SbmSpec {
        nodes: GRADCHECK_NODES,
        blocks: 2,
        p_in: 0.7,
        p_out: 0.2,
        feature_dim: 3,
        noise: 0.5,
        seed,
    };
    let g = synthetic_sbm(&spec)?;
    let mut fc = apply_lifting(&g, lifting)?;
    match task {
        Task::NodeClassification => {}
        Task::NodeRegression => {
            let x = &fc.features()[0];
            let t = (0..x.rows()).map(|i| (0..x.cols()).map(|j| x.get(i, j)).sum()).collect();
            fc.labels.node_labels = None;
            fc.labels.node_targets = Some(t);
        }
        Task::GraphClassification => {
            fc.labels.node_labels = None;
            fc.labels.graph_label = Some(GraphLabel::Class(1));
        }
        Task::GraphRegression => {
            fc.labels.node_labels = None;
            fc.labels.graph_label = Some(GraphLabel::Value(0.5));
        }
    }
    Ok(fc)
}

/// Every intra × inter × update × readout combination over `base`, with
/// dropout off. Concatenating variants split the hidden width across each
/// rank's neighborhoods so the residual and SDP width rules still hold.
pub fn mode_grid(base: &ModelConfig, max_rank: usize) -> Vec<ModelConfig> {
    let mut out = Vec::new();
    for intra in [IntraAgg::Sum, IntraAgg::Mean] {
        for inter in [InterAgg::Sum, InterAgg::Concat] {
            for update in [Update::ReluResidual, Update::ReluPlain, Update::Identity] {
                for readout in [ReadoutKind::Dr, ReadoutKind::Sdp] {
                    let mut cfg = base.clone();
                    cfg.dropout = 0.0;
                    cfg.readout = readout;
                    let mut layer = HompLayerConfig { intra_agg: intra, inter_agg: inter, update, ..base.layer.clone() };
                    if inter == InterAgg::Concat {
                        layer.targets = layer.resolved_targets(max_rank);
                        for t in &mut layer.targets {
                            let n = t.neighborhoods.len();
                            if t.neighborhoods.iter().all(|nb| nb.width.is_none()) {
                                for (i, nb) in t.neighborhoods.iter_mut().enumerate() {
                                    nb.width = Some(cfg.hidden_dim / n + usize::from(i < cfg.hidden_dim % n));
                                }
                            }
                        }
                    }
                    cfg.layer = layer;
                    out.push(cfg);
                }
            }
        }
    }
    out
}

fn tag<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|j| j.as_str().map(str::to_owned)).unwrap_or_default()
}

/// Short `intra/inter/update/readout` tag for a config.
pub fn mode_label(cfg: &ModelConfig) -> String {
    format!("{}/{}/{}/{}", tag(&cfg.layer.intra_agg), tag(&cfg.layer.inter_agg), tag(&cfg.layer.update), tag(&cfg.readout))
}

/// Builds `cfg` (dropout off) on `sample` and compares tape gradients with
/// central differences. `loss` defaults to the task's loss.
pub fn gradcheck_model(cfg: &ModelConfig, sample: &FeaturedComplex, loss: Option<LossKind>) -> Result<GradCheckReport> {
    let mut cfg = cfg.clone();
    cfg.dropout = 0.0;
    let bundle = DatasetBundle::new("gradcheck", vec![sample.clone()], cfg.task, &[])?;
    let model = HompModel::new(cfg, signature_of(&bundle))?;
    let state = model.init();
    let batch = model.prepare(&bundle.samples)?;
    let loss = loss.unwrap_or_else(|| model.default_loss());
    check_model_gradients(&model, &state, &batch, loss, GRADCHECK_STEP)
}
