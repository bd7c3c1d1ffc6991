//! Higher-order message passing: configuration, parameters and the forward pass.

mod config;
mod forward;
mod model;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use config::{
    HompLayerConfig, InterAgg, IntraAgg, ModelConfig, NeighborhoodEntry, Pooling, RankTarget, ReadoutKind, Task,
    Update,
};
pub use forward::{HompModel, OperatorSet, PreparedBatch};
pub use model::{init_bound, init_model, DomainSignature, ModelState};

use crate::error::{Error, Result};
use crate::numerics::{finite_diff_check, GradCheckReport, LossKind, Tape};

/// Compares tape gradients of `loss(readout(forward(batch)))` against
/// central differences, with dropout disabled.
pub fn check_model_gradients(
    model: &HompModel,
    state: &ModelState,
    batch: &PreparedBatch,
    loss: LossKind,
    h: f64,
) -> Result<GradCheckReport> {
    let targets = batch
        .targets
        .as_ref()
        .ok_or_else(|| Error::Unsupported("gradient check needs labelled data".into()))?;
    let objective = |s: &ModelState| -> Result<(f64, Tape, crate::numerics::Var)> {
        let mut tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pred = model.predict(&mut tape, s, batch, false, &mut rng)?;
        let l = model.loss(&mut tape, pred, targets, None, loss)?;
        Ok((tape.value(l).get(0, 0), tape, l))
    };
    let (_, tape, l) = objective(state)?;
    let analytic = tape.backward(l)?;
    let mut scratch = state.clone();
    finite_diff_check(
        |ps| {
            for (dst, src) in scratch.params_mut().iter_mut().zip(ps) {
                dst.value = src.value.clone();
            }
            Ok(objective(&scratch)?.0)
        },
        state.params(),
        &analytic,
        h,
    )
}
