//! Readouts from per-rank latents to task predictions.

use std::sync::Arc;

use crate::complex::SparseOperator;
use crate::error::{Error, Result};
use crate::homp::{Pooling, Task};
use crate::numerics::{Tape, Var};

/// Rank-0 grouping used by graph-level readouts.
#[derive(Clone, Debug)]
pub struct Pool {
    pub segments: Arc<[usize]>,
    pub num_samples: usize,
    pub pooling: Pooling,
}

/// Direct readout: a linear head on 0-cell latents. Graph tasks pool the
/// 0-cells of each sample first.
pub fn readout_dr(tape: &mut Tape, h0: Var, head: Var, task: Task, pool: &Pool) -> Result<Var> {
    if task.is_node_level() {
        return tape.matmul(h0, head);
    }
    let pooled = tape.segment_reduce(h0, pool.segments.clone(), pool.num_samples, pool.pooling == Pooling::Mean)?;
    tape.matmul(pooled, head)
}

/// Signal down-propagation: for `r = R..1`, rank-`r` latents are summed onto
/// their faces through `|B_{r-1,r}|`, concatenated to the rank-`r-1`
/// latents and projected back to their width. The result goes through
/// [`readout_dr`].
///
/// `incidences[r-1]` is `|B_{r-1,r}|` and `projections[r-1]` is applied when
/// fusing rank `r` into rank `r-1`.
pub fn readout_sdp(
    tape: &mut Tape,
    latents: &[Var],
    incidences: &[Arc<SparseOperator>],
    projections: &[Var],
    head: Var,
    task: Task,
    pool: &Pool,
) -> Result<Var> {
    let top = latents.len().checked_sub(1).ok_or_else(|| Error::shape("readout", "no rank-0 latents"))?;
    if incidences.len() < top || projections.len() < top {
        return Err(Error::shape(
            "sdp readout",
            format!("{} ranks need {top} incidences and projections", latents.len()),
        ));
    }
    let mut carried = latents[top];
    for r in (1..=top).rev() {
        let fused = tape.sparse_matmul(incidences[r - 1].clone(), carried)?;
        let joined = tape.concat_cols(&[latents[r - 1], fused])?;
        carried = tape.matmul(joined, projections[r - 1])?;
    }
    readout_dr(tape, carried, head, task, pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{boundary_matrix, Complex, SimplicialComplex};
    use crate::numerics::DenseMatrix;

    fn one_sample(n: usize, pooling: Pooling) -> Pool {
        Pool { segments: vec![0; n].into(), num_samples: 1, pooling }
    }

    #[test]
    fn dr_mean_pool_identity_head() {
        let mut t = Tape::new();
        let h = t.input(DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![3.0, 3.0]]).unwrap());
        let head = t.input(DenseMatrix::identity(2));
        let out = readout_dr(&mut t, h, head, Task::GraphClassification, &one_sample(2, Pooling::Mean)).unwrap();
        assert_eq!(t.value(out).data(), &[2.0, 2.0]);
        let node = readout_dr(&mut t, h, head, Task::NodeClassification, &one_sample(2, Pooling::Mean)).unwrap();
        assert_eq!(t.value(node), t.value(h));
    }

    #[test]
    fn sdp_triangle_fuses_top_cell() {
        let c = Complex::Simplicial(SimplicialComplex::from_closure(3, [vec![0, 1, 2]], 2).unwrap());
        let inc: Vec<Arc<SparseOperator>> =
            (1..=2).map(|r| Arc::new(boundary_matrix(&c, r, false).unwrap())).collect();
        let mut t = Tape::new();
        let h0 = t.input(DenseMatrix::zeros(3, 1));
        let h1 = t.input(DenseMatrix::zeros(3, 1));
        let h2 = t.input(DenseMatrix::filled(1, 1, 1.0));
        // selects the fused slice of [H_{r-1} | fused]
        let take_fused = t.input(DenseMatrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap());
        let head = t.input(DenseMatrix::identity(1));
        let pool = one_sample(3, Pooling::Sum);
        let out = readout_sdp(&mut t, &[h0, h1, h2], &inc, &[take_fused, take_fused], head, Task::NodeRegression, &pool)
            .unwrap();
        // every edge gets [1]; every node lies on two edges
        assert_eq!(t.value(out).data(), &[2.0, 2.0, 2.0]);
    }
}
