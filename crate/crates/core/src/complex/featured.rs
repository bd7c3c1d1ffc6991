use super::{Complex, Graph, GraphLabel};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Supervision attached to a domain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Labels {
    pub node_labels: Option<Vec<usize>>,
    pub node_targets: Option<Vec<f64>>,
    pub graph_label: Option<GraphLabel>,
}

/// A domain paired with one feature matrix (cochain) per rank.
///
/// `features[r]` has one row per rank-`r` cell. Features always cover a
/// prefix `0..=k` of the ranks; liftings fill every rank.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturedComplex {
    complex: Complex,
    features: Vec<DenseMatrix>,
    pub labels: Labels,
}

impl FeaturedComplex {
    pub fn new(complex: Complex, features: Vec<DenseMatrix>, labels: Labels) -> Result<Self> {
        if features.is_empty() || features.len() > complex.max_rank() + 1 {
            return Err(Error::shape(
                "featured complex",
                format!("{} feature matrices for ranks 0..={}", features.len(), complex.max_rank()),
            ));
        }
        for (rank, f) in features.iter().enumerate() {
            let expected = complex.num_cells(rank);
            if f.rows() != expected {
                return Err(Error::FeatureRows { rank, rows: f.rows(), expected });
            }
        }
        let n = complex.num_nodes();
        if labels.node_labels.as_ref().is_some_and(|l| l.len() != n)
            || labels.node_targets.as_ref().is_some_and(|t| t.len() != n)
        {
            return Err(Error::shape("labels", format!("node annotations do not cover {n} nodes")));
        }
        Ok(Self { complex, features, labels })
    }

    /// A featured graph. Missing node features fall back to one all-ones column.
    pub fn from_graph(g: &Graph) -> Self {
        let x = g.node_features.clone().unwrap_or_else(|| DenseMatrix::filled(g.num_nodes(), 1, 1.0));
        let labels = Labels {
            node_labels: g.node_labels.clone(),
            node_targets: g.node_targets.clone(),
            graph_label: g.graph_label,
        };
        Self { complex: Complex::Graph(g.structure()), features: vec![x], labels }
    }

    /// Rebuilds the annotated graph when this is a graph-kind value.
    pub fn to_graph(&self) -> Option<Graph> {
        let Complex::Graph(g) = &self.complex else {
            return None;
        };
        let mut g = g.structure();
        g.node_features = Some(self.features[0].clone());
        g.node_labels = self.labels.node_labels.clone();
        g.node_targets = self.labels.node_targets.clone();
        g.graph_label = self.labels.graph_label;
        Some(g)
    }

    pub fn complex(&self) -> &Complex {
        &self.complex
    }

    pub fn features(&self) -> &[DenseMatrix] {
        &self.features
    }

    pub fn feature(&self, rank: usize) -> Option<&DenseMatrix> {
        self.features.get(rank)
    }

    /// Feature width per rank.
    pub fn widths(&self) -> Vec<usize> {
        self.features.iter().map(DenseMatrix::cols).collect()
    }

    pub fn num_nodes(&self) -> usize {
        self.complex.num_nodes()
    }

    /// Extends to `max_rank` with empty ranks; new ranks get zero-row features
    /// of the given width.
    pub fn padded(&self, max_rank: usize, width: usize) -> Self {
        let complex = self.complex.padded(max_rank);
        let mut features = self.features.clone();
        while features.len() <= complex.max_rank().min(max_rank) {
            let r = features.len();
            features.push(DenseMatrix::zeros(complex.num_cells(r), width));
        }
        Self { complex, features, labels: self.labels.clone() }
    }

    pub(crate) fn from_parts_unchecked(complex: Complex, features: Vec<DenseMatrix>, labels: Labels) -> Self {
        Self { complex, features, labels }
    }
}
