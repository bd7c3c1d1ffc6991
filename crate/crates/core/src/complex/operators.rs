//! Incidence, adjacency and neighborhood operators.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::combinatorial::is_subset;
use super::{CellComplex, Complex, SparseOperator};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjacencyVia {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborhoodKind {
    UpIncidence,
    DownIncidence,
    UpAdjacency,
    DownAdjacency,
    Identity,
}

/// Which cells send messages to a rank-`rank` cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    pub kind: NeighborhoodKind,
    pub rank: usize,
    #[serde(default)]
    pub signed: bool,
}

impl NeighborhoodSpec {
    pub fn new(kind: NeighborhoodKind, rank: usize) -> Self {
        Self { kind, rank, signed: false }
    }

    /// Rank of the cells the neighborhood reads from.
    pub fn source_rank(&self) -> Option<usize> {
        match self.kind {
            NeighborhoodKind::UpIncidence => Some(self.rank + 1),
            NeighborhoodKind::DownIncidence => self.rank.checked_sub(1),
            _ => Some(self.rank),
        }
    }
}

fn not_populated(c: &Complex, rank: usize) -> Error {
    Error::RankNotPopulated { kind: c.kind().as_str(), rank, max_rank: c.max_rank() }
}

/// `B_{r-1,r}`: rows index rank-`r-1` cells, columns rank-`r` cells.
///
/// Signed simplicial entries are `(-1)^i` for the face that drops the `i`-th
/// vertex. Signed edges carry `-1` at the lower endpoint and `+1` at the
/// higher one; signed 2-cells carry `+1` where the canonical cycle walks an
/// edge low→high and `-1` otherwise.
pub fn boundary_matrix(c: &Complex, rank: usize, signed: bool) -> Result<SparseOperator> {
    if rank == 0 || rank > c.max_rank() {
        return Err(not_populated(c, rank));
    }
    let rows = c.num_cells(rank - 1);
    let cols = c.num_cells(rank);
    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    match c {
        Complex::Simplicial(sc) => {
            let faces = sc.index(rank - 1);
            for (j, s) in sc.cells(rank).iter().enumerate() {
                for i in 0..=rank {
                    let f = s.face(i);
                    let row = *faces.get(f.vertices()).ok_or_else(|| {
                        Error::Invalid(super::Violation::new("closure", s.vertices().to_vec(), "face missing"))
                    })?;
                    trip.push((row, j, if i % 2 == 0 { 1.0 } else { -1.0 }));
                }
            }
        }
        Complex::Graph(_) | Complex::Cell(_) if rank == 1 => {
            let edges = match c {
                Complex::Graph(g) => g.edges(),
                Complex::Cell(cc) => cc.edges(),
                _ => unreachable!(),
            };
            for (j, &(u, v)) in edges.iter().enumerate() {
                trip.push((u, j, -1.0));
                trip.push((v, j, 1.0));
            }
        }
        Complex::Cell(cc) => {
            let index: HashMap<(usize, usize), usize> =
                cc.edges().iter().enumerate().map(|(i, &e)| (e, i)).collect();
            for (j, cycle) in cc.two_cells().iter().enumerate() {
                for (e, sign) in CellComplex::cycle_edges(cycle) {
                    let row = *index.get(&e).ok_or_else(|| {
                        Error::Invalid(super::Violation::new("attaching", cycle.clone(), "edge missing"))
                    })?;
                    trip.push((row, j, sign));
                }
            }
        }
        Complex::Hypergraph(h) => {
            if signed {
                return Err(Error::Unsupported("hypergraphs only have unsigned incidence".into()));
            }
            for (j, e) in h.hyperedges().iter().enumerate() {
                trip.extend(e.iter().map(|&v| (v, j, 1.0)));
            }
        }
        Complex::Combinatorial(cc) => {
            if signed {
                return Err(Error::Unsupported("combinatorial complexes only have unsigned incidence".into()));
            }
            for (j, y) in cc.cells(rank).iter().enumerate() {
                for (i, x) in cc.cells(rank - 1).iter().enumerate() {
                    if is_subset(x, y) {
                        trip.push((i, j, 1.0));
                    }
                }
            }
        }
        Complex::Graph(_) => unreachable!("rank bounded by max_rank"),
    }
    let op = SparseOperator::from_triplets(rows, cols, trip, rank, rank - 1, signed)?;
    Ok(if signed { op } else { op.abs() })
}

/// Unsigned adjacency at `rank` through shared cofaces (`Up`) or faces (`Down`).
pub fn adjacency_matrix(c: &Complex, rank: usize, via: AdjacencyVia) -> Result<SparseOperator> {
    let prod = match via {
        AdjacencyVia::Up => {
            if rank >= c.max_rank() {
                return Err(not_populated(c, rank + 1));
            }
            let b = boundary_matrix(c, rank + 1, false)?;
            b.compose(&b.transpose())?
        }
        AdjacencyVia::Down => {
            if rank == 0 {
                return Err(Error::Unsupported("down adjacency needs rank ≥ 1".into()));
            }
            if rank > c.max_rank() {
                return Err(not_populated(c, rank));
            }
            let b = boundary_matrix(c, rank, false)?;
            b.transpose().compose(&b)?
        }
    };
    Ok(prod.off_diagonal_support().with_ranks(rank, rank))
}

/// Materializes a neighborhood function as an operator whose rows index the
/// receiving rank-`spec.rank` cells.
pub fn resolve_neighborhood(c: &Complex, spec: &NeighborhoodSpec) -> Result<SparseOperator> {
    let r = spec.rank;
    match spec.kind {
        NeighborhoodKind::Identity => {
            if r > c.max_rank() {
                return Err(not_populated(c, r));
            }
            Ok(SparseOperator::identity(c.num_cells(r), r))
        }
        NeighborhoodKind::UpIncidence => boundary_matrix(c, r + 1, spec.signed),
        NeighborhoodKind::DownIncidence => {
            if r == 0 {
                return Err(Error::Unsupported("down incidence needs rank ≥ 1".into()));
            }
            Ok(boundary_matrix(c, r, spec.signed)?.transpose())
        }
        NeighborhoodKind::UpAdjacency => adjacency_matrix(c, r, AdjacencyVia::Up),
        NeighborhoodKind::DownAdjacency => adjacency_matrix(c, r, AdjacencyVia::Down),
    }
}
