//! Topological domains and their sparse operator algebra.

mod cell;
mod combinatorial;
mod featured;
mod graph;
mod hypergraph;
pub mod io;
mod operators;
mod simplicial;
mod sparse;
mod union;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use cell::{canonical_cycle, CellComplex};
pub use combinatorial::CombinatorialComplex;
pub use featured::{FeaturedComplex, Labels};
pub use graph::{build_graph, BuildReport, Graph, GraphLabel};
pub use hypergraph::Hypergraph;
pub use operators::{adjacency_matrix, boundary_matrix, resolve_neighborhood, AdjacencyVia, NeighborhoodKind, NeighborhoodSpec};
pub use simplicial::{Simplex, SimplicialComplex};
pub use sparse::SparseOperator;
pub use union::{disjoint_union, BatchVectors};

/// The first invariant a domain value breaks, with the offending cell.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{invariant} violated at {cell:?}: {detail}")]
pub struct Violation {
    pub invariant: &'static str,
    pub cell: Vec<usize>,
    pub detail: String,
}

impl Violation {
    pub(crate) fn new(invariant: &'static str, cell: Vec<usize>, detail: impl Into<String>) -> Self {
        Self { invariant, cell, detail: detail.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Graph,
    Simplicial,
    Cell,
    Hypergraph,
    Combinatorial,
}

impl DomainKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DomainKind::Graph => "graph",
            DomainKind::Simplicial => "simplicial",
            DomainKind::Cell => "cell",
            DomainKind::Hypergraph => "hypergraph",
            DomainKind::Combinatorial => "combinatorial",
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Any supported topological domain.
#[derive(Clone, Debug, PartialEq)]
pub enum Complex {
    /// Structure only; annotations live on [`FeaturedComplex`].
    Graph(Graph),
    Simplicial(SimplicialComplex),
    Cell(CellComplex),
    Hypergraph(Hypergraph),
    Combinatorial(CombinatorialComplex),
}

/// Row label in a cell-count table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountKey {
    Rank(usize),
    Hyperedges,
}

impl fmt::Display for CountKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountKey::Rank(r) => write!(f, "{r}"),
            CountKey::Hyperedges => f.write_str("hyperedges"),
        }
    }
}

impl Complex {
    pub fn kind(&self) -> DomainKind {
        match self {
            Complex::Graph(_) => DomainKind::Graph,
            Complex::Simplicial(_) => DomainKind::Simplicial,
            Complex::Cell(_) => DomainKind::Cell,
            Complex::Hypergraph(_) => DomainKind::Hypergraph,
            Complex::Combinatorial(_) => DomainKind::Combinatorial,
        }
    }

    pub fn num_nodes(&self) -> usize {
        match self {
            Complex::Graph(g) => g.num_nodes(),
            Complex::Simplicial(s) => s.num_nodes(),
            Complex::Cell(c) => c.num_nodes(),
            Complex::Hypergraph(h) => h.num_nodes(),
            Complex::Combinatorial(c) => c.num_nodes(),
        }
    }

    /// Highest rank the domain defines (possibly with zero cells).
    pub fn max_rank(&self) -> usize {
        match self {
            Complex::Graph(_) | Complex::Hypergraph(_) => 1,
            Complex::Simplicial(s) => s.max_rank(),
            Complex::Cell(c) => c.max_rank(),
            Complex::Combinatorial(c) => c.max_rank(),
        }
    }

    pub fn num_cells(&self, rank: usize) -> usize {
        match self {
            Complex::Graph(g) => match rank {
                0 => g.num_nodes(),
                1 => g.num_edges(),
                _ => 0,
            },
            Complex::Simplicial(s) => s.num_cells(rank),
            Complex::Cell(c) => c.num_cells(rank),
            Complex::Hypergraph(h) => h.num_cells(rank),
            Complex::Combinatorial(c) => c.num_cells(rank),
        }
    }

    /// Per-rank cell counts. Hypergraphs report nodes and hyperedges; a graph
    /// without edges reports nodes only.
    pub fn cell_counts(&self) -> Vec<(CountKey, usize)> {
        match self {
            Complex::Hypergraph(h) => {
                vec![(CountKey::Rank(0), h.num_nodes()), (CountKey::Hyperedges, h.hyperedges().len())]
            }
            Complex::Graph(g) if g.num_edges() == 0 => vec![(CountKey::Rank(0), g.num_nodes())],
            _ => (0..=self.max_rank()).map(|r| (CountKey::Rank(r), self.num_cells(r))).collect(),
        }
    }

    /// Node sets of the rank-`rank` cells. For cell complexes the 2-cells
    /// come back as their canonical cycles.
    pub fn cell_sets(&self, rank: usize) -> Vec<Vec<usize>> {
        let nodes = || (0..self.num_nodes()).map(|v| vec![v]).collect();
        match (self, rank) {
            (_, 0) => nodes(),
            (Complex::Graph(g), 1) => g.edges().iter().map(|&(u, v)| vec![u, v]).collect(),
            (Complex::Cell(c), 1) => c.edges().iter().map(|&(u, v)| vec![u, v]).collect(),
            (Complex::Cell(c), 2) => c.two_cells().to_vec(),
            (Complex::Hypergraph(h), 1) => h.hyperedges().to_vec(),
            (Complex::Simplicial(s), r) => s.cells(r).iter().map(|x| x.vertices().to_vec()).collect(),
            (Complex::Combinatorial(c), r) => c.cells(r).to_vec(),
            _ => Vec::new(),
        }
    }

    /// Checks every type invariant and reports the first violation.
    pub fn validate(&self) -> Result<(), Violation> {
        match self {
            Complex::Graph(g) => g.check_structure(),
            Complex::Simplicial(s) => s.validate(),
            Complex::Cell(c) => c.validate(),
            Complex::Hypergraph(h) => h.validate(),
            Complex::Combinatorial(c) => c.validate(),
        }
    }

    /// Appends empty ranks so that `max_rank() >= max_rank`, where the kind allows it.
    pub fn padded(&self, max_rank: usize) -> Complex {
        match self {
            Complex::Simplicial(s) if s.max_rank() < max_rank => Complex::Simplicial(s.padded(max_rank)),
            Complex::Combinatorial(c) if c.max_rank() < max_rank => Complex::Combinatorial(c.padded(max_rank)),
            other => other.clone(),
        }
    }
}

/// Free-function form of [`Complex::validate`].
pub fn validate_complex(c: &Complex) -> Result<(), Violation> {
    c.validate()
}

/// Free-function form of [`Complex::cell_counts`].
pub fn cell_counts(c: &Complex) -> Vec<(CountKey, usize)> {
    c.cell_counts()
}
