use super::{
    CellComplex, CombinatorialComplex, Complex, FeaturedComplex, Graph, Hypergraph, Labels, Simplex,
    SimplicialComplex,
};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// `per_rank[r][i]` is the sample index owning cell `i` of rank `r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchVectors {
    pub per_rank: Vec<Vec<usize>>,
    pub num_samples: usize,
}

impl BatchVectors {
    pub fn rank(&self, r: usize) -> &[usize] {
        &self.per_rank[r]
    }
}

/// Disjoint union of samples of the same domain kind.
///
/// Node ids of sample `k` are shifted by the node count of samples `0..k`.
/// Every cell list keeps its canonical sort order, so each operator of the
/// union is the block-diagonal assembly of the per-sample operators.
pub fn disjoint_union(samples: &[FeaturedComplex]) -> Result<(FeaturedComplex, BatchVectors)> {
    let first = samples.first().ok_or_else(|| Error::shape("disjoint_union", "no samples"))?;
    let kind = first.complex().kind();
    if let Some(bad) = samples.iter().find(|s| s.complex().kind() != kind) {
        return Err(Error::Unsupported(format!(
            "cannot union a {} with a {}",
            kind,
            bad.complex().kind()
        )));
    }
    let max_rank = samples.iter().map(|s| s.complex().max_rank()).max().unwrap_or(0);
    let n_feat = samples.iter().map(|s| s.features().len()).max().unwrap_or(1);
    let mut widths: Vec<Option<usize>> = vec![None; n_feat];
    for (k, s) in samples.iter().enumerate() {
        for (r, f) in s.features().iter().enumerate() {
            match widths[r] {
                None => widths[r] = Some(f.cols()),
                Some(w) if w != f.cols() => {
                    return Err(Error::shape(
                        "disjoint_union",
                        format!("sample {k} has width {} at rank {r}, expected {w}", f.cols()),
                    ))
                }
                _ => {}
            }
        }
    }
    let widths: Vec<usize> = widths.into_iter().map(|w| w.unwrap_or(0)).collect();

    let padded: Vec<Complex> = samples.iter().map(|s| s.complex().padded(max_rank)).collect();
    let mut offsets = Vec::with_capacity(samples.len());
    let mut total = 0;
    for c in &padded {
        offsets.push(total);
        total += c.num_nodes();
    }
    let shift = |cell: &[usize], off: usize| cell.iter().map(|v| v + off).collect::<Vec<_>>();

    let complex = match kind {
        super::DomainKind::Graph => {
            let mut edges = Vec::new();
            for (c, &off) in padded.iter().zip(&offsets) {
                if let Complex::Graph(g) = c {
                    edges.extend(g.edges().iter().map(|&(u, v)| (u + off, v + off)));
                }
            }
            Complex::Graph(Graph { num_nodes: total, edges, ..Graph::default() })
        }
        super::DomainKind::Simplicial => {
            let mut cells: Vec<Vec<Simplex>> = vec![Vec::new(); max_rank + 1];
            for (c, &off) in padded.iter().zip(&offsets) {
                if let Complex::Simplicial(s) = c {
                    for (r, level) in s.all_cells().iter().enumerate() {
                        cells[r].extend(level.iter().map(|x| Simplex::from_sorted(shift(x.vertices(), off))));
                    }
                }
            }
            Complex::Simplicial(SimplicialComplex::new_unchecked(cells))
        }
        super::DomainKind::Cell => {
            let (mut edges, mut two_cells) = (Vec::new(), Vec::new());
            for (c, &off) in padded.iter().zip(&offsets) {
                if let Complex::Cell(cc) = c {
                    edges.extend(cc.edges().iter().map(|&(u, v)| (u + off, v + off)));
                    two_cells.extend(cc.two_cells().iter().map(|x| shift(x, off)));
                }
            }
            Complex::Cell(CellComplex::new_unchecked(total, edges, two_cells))
        }
        super::DomainKind::Hypergraph => {
            let mut hyperedges = Vec::new();
            for (c, &off) in padded.iter().zip(&offsets) {
                if let Complex::Hypergraph(h) = c {
                    hyperedges.extend(h.hyperedges().iter().map(|e| shift(e, off)));
                }
            }
            Complex::Hypergraph(Hypergraph::new_unchecked(total, hyperedges))
        }
        super::DomainKind::Combinatorial => {
            let mut cells: Vec<Vec<Vec<usize>>> = vec![Vec::new(); max_rank + 1];
            for (c, &off) in padded.iter().zip(&offsets) {
                if let Complex::Combinatorial(cc) = c {
                    for (r, level) in cc.all_cells().iter().enumerate() {
                        cells[r].extend(level.iter().map(|x| shift(x, off)));
                    }
                }
            }
            Complex::Combinatorial(CombinatorialComplex::new_unchecked(total, cells))
        }
    };

    let mut per_rank = vec![Vec::new(); complex.max_rank() + 1];
    for (k, c) in padded.iter().enumerate() {
        for (r, bv) in per_rank.iter_mut().enumerate() {
            bv.extend(std::iter::repeat_n(k, c.num_cells(r)));
        }
    }

    let mut features = Vec::with_capacity(n_feat);
    for (r, &w) in widths.iter().enumerate() {
        let blocks: Vec<DenseMatrix> = samples
            .iter()
            .zip(&padded)
            .map(|(s, c)| s.feature(r).cloned().unwrap_or_else(|| DenseMatrix::zeros(c.num_cells(r), w)))
            .collect();
        let refs: Vec<&DenseMatrix> = blocks.iter().collect();
        features.push(DenseMatrix::vstack(&refs)?);
    }

    let concat_opt = |get: &dyn Fn(&Labels) -> Option<Vec<f64>>| -> Option<Vec<f64>> {
        let parts: Option<Vec<Vec<f64>>> = samples.iter().map(|s| get(&s.labels)).collect();
        parts.map(|p| p.concat())
    };
    let node_labels: Option<Vec<usize>> =
        samples.iter().map(|s| s.labels.node_labels.clone()).collect::<Option<Vec<_>>>().map(|p| p.concat());
    let node_targets = concat_opt(&|l: &Labels| l.node_targets.clone());
    let graph_label = if samples.len() == 1 { first.labels.graph_label } else { None };
    let labels = Labels { node_labels, node_targets, graph_label };

    let union = FeaturedComplex::from_parts_unchecked(complex, features, labels);
    Ok((union, BatchVectors { per_rank, num_samples: samples.len() }))
}
