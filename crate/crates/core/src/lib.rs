//! Higher-order topological domains built from graphs, their sparse cochain
//! operators, and a message-passing training pipeline over them.

pub mod complex;
pub mod error;
pub mod homp;
pub mod lifting;
pub mod metrics;
pub mod numerics;
pub mod pipeline;
pub mod readout;

pub use complex::{
    build_graph, CellComplex, CombinatorialComplex, Complex, DomainKind, FeaturedComplex, Graph, Hypergraph,
    SimplicialComplex, SparseOperator,
};
pub use error::{Error, Result};
pub use homp::{HompModel, ModelConfig, ModelState};
pub use metrics::{metric, MetricKind, MetricReport, Targets};
pub use numerics::DenseMatrix;
