//! Graph-to-domain liftings: a structural map paired with a feature map.

mod structural;

use serde::{Deserialize, Serialize};

pub use structural::{khop_candidates, lift_clique, lift_cycle, lift_khop, lift_knn, lift_neighborhood};

use crate::complex::{boundary_matrix, Complex, FeaturedComplex, Graph};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Which structural lifting to apply.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "lifting", rename_all = "snake_case")]
pub enum StructuralLifting {
    Clique { max_dim: usize },
    Neighborhood { max_dim: usize, max_neighborhood_size: usize },
    Cycle {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_cell_length: Option<usize>,
    },
    Khop { k: usize },
    Knn { k: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureLifting {
    #[default]
    ProjectedSum,
}

/// A structural lifting and the feature lifting that accompanies it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftingConfig {
    #[serde(flatten)]
    pub structural: StructuralLifting,
    #[serde(default)]
    pub feature: FeatureLifting,
}

impl LiftingConfig {
    pub fn new(structural: StructuralLifting) -> Self {
        Self { structural, feature: FeatureLifting::ProjectedSum }
    }

    /// Every violated parameter constraint.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self.structural {
            StructuralLifting::Clique { max_dim } => {
                if max_dim < 1 {
                    out.push("clique: max_dim must be >= 1".into());
                }
            }
            StructuralLifting::Neighborhood { max_dim, max_neighborhood_size } => {
                if max_dim < 1 {
                    out.push("neighborhood: max_dim must be >= 1".into());
                }
                if max_neighborhood_size < max_dim + 1 {
                    out.push("neighborhood: max_neighborhood_size must be >= max_dim + 1".into());
                }
            }
            StructuralLifting::Cycle { max_cell_length } => {
                if max_cell_length.is_some_and(|m| m < 3) {
                    out.push("cycle: max_cell_length must be >= 3".into());
                }
            }
            StructuralLifting::Khop { k } | StructuralLifting::Knn { k } => {
                if k < 1 {
                    out.push("k must be >= 1".into());
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

/// Applies only the structural half of a lifting.
pub fn lift_structure(g: &Graph, structural: &StructuralLifting) -> Result<Complex> {
    Ok(match *structural {
        StructuralLifting::Clique { max_dim } => Complex::Simplicial(lift_clique(g, max_dim)),
        StructuralLifting::Neighborhood { max_dim, max_neighborhood_size } => {
            Complex::Simplicial(lift_neighborhood(g, max_dim, max_neighborhood_size)?)
        }
        StructuralLifting::Cycle { max_cell_length } => Complex::Cell(lift_cycle(g, max_cell_length)?),
        StructuralLifting::Khop { k } => Complex::Hypergraph(lift_khop(g, k)?),
        StructuralLifting::Knn { k } => Complex::Hypergraph(lift_knn(g, k)?),
    })
}

/// Projected-sum feature lifting: rank-`r` features are the unsigned
/// incidence transpose applied to rank-`r-1` features, so each cell gets the
/// sum of its faces' features and every rank keeps the node feature width.
/// For hypergraphs a hyperedge gets the sum of its members.
///
/// Only rank-0 features and labels are taken from `source`.
pub fn lift_features_projected_sum(source: &FeaturedComplex, target: Complex) -> Result<FeaturedComplex> {
    let x0 = source
        .feature(0)
        .ok_or_else(|| Error::Unsupported("projected sum needs 0-cell features".into()))?;
    if x0.rows() != target.num_nodes() {
        return Err(Error::FeatureRows { rank: 0, rows: x0.rows(), expected: target.num_nodes() });
    }
    let mut features = vec![x0.clone()];
    for r in 1..=target.max_rank() {
        let b = boundary_matrix(&target, r, false)?;
        let next = DenseMatrix::sparse_left_t(&b, &features[r - 1])?;
        features.push(next);
    }
    FeaturedComplex::new(target, features, source.labels.clone())
}

/// Structural lifting followed by projected-sum feature lifting. A graph
/// without node features gets one all-ones column.
pub fn apply_lifting(g: &Graph, cfg: &LiftingConfig) -> Result<FeaturedComplex> {
    cfg.validate()?;
    let complex = lift_structure(g, &cfg.structural)?;
    complex.validate()?;
    let source = FeaturedComplex::from_graph(g);
    match cfg.feature {
        FeatureLifting::ProjectedSum => lift_features_projected_sum(&source, complex),
    }
}
