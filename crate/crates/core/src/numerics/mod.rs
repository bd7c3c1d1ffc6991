//! Dense kernels, sparse–dense products and reverse-mode gradients.

mod dense;
mod gradcheck;
mod tape;

use serde::{Deserialize, Serialize};

pub use dense::DenseMatrix;
pub use gradcheck::{finite_diff_check, GradCheckReport, REL_FLOOR};
pub use tape::{segment_reduce, Gradients, LossKind, RecordEntry, Tape, Var};

/// A named trainable matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub id: String,
    pub value: DenseMatrix,
    pub requires_grad: bool,
}

impl Parameter {
    pub fn new(id: impl Into<String>, value: DenseMatrix) -> Self {
        Self { id: id.into(), value, requires_grad: true }
    }
}
