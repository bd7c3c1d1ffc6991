use std::collections::HashSet;

use super::Violation;
use crate::complex::Graph;
use crate::error::Result;

/// Regular 2-dimensional cell complex: a 1-skeleton plus 2-cells glued
/// along edge cycles.
///
/// Each 2-cell is kept in canonical form: rotated so the smallest vertex
/// comes first and oriented so the second vertex is smaller than the last.
#[derive(Clone, Debug, PartialEq)]
pub struct CellComplex {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    two_cells: Vec<Vec<usize>>,
}

/// Canonical rotation/orientation of a vertex cycle.
pub fn canonical_cycle(cycle: &[usize]) -> Vec<usize> {
    let m = cycle.len();
    if m == 0 {
        return Vec::new();
    }
    let start = (0..m).min_by_key(|&i| cycle[i]).unwrap();
    let forward: Vec<usize> = (0..m).map(|i| cycle[(start + i) % m]).collect();
    if m > 2 && forward[1] > forward[m - 1] {
        let mut rev = Vec::with_capacity(m);
        rev.push(forward[0]);
        rev.extend(forward[1..].iter().rev());
        rev
    } else {
        forward
    }
}

impl CellComplex {
    pub fn new(num_nodes: usize, edges: Vec<(usize, usize)>, two_cells: Vec<Vec<usize>>) -> Result<Self> {
        let c = Self::new_unchecked(num_nodes, edges, two_cells);
        c.validate()?;
        Ok(c)
    }

    pub fn new_unchecked(num_nodes: usize, edges: Vec<(usize, usize)>, two_cells: Vec<Vec<usize>>) -> Self {
        Self { num_nodes, edges, two_cells }
    }

    /// Canonicalizes, sorts and deduplicates `cycles` before building.
    pub fn from_cycles(graph: &Graph, cycles: impl IntoIterator<Item = Vec<usize>>) -> Result<Self> {
        let mut two_cells: Vec<Vec<usize>> = cycles.into_iter().map(|c| canonical_cycle(&c)).collect();
        two_cells.sort();
        two_cells.dedup();
        Self::new(graph.num_nodes(), graph.edges().to_vec(), two_cells)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn two_cells(&self) -> &[Vec<usize>] {
        &self.two_cells
    }

    pub fn max_rank(&self) -> usize {
        2
    }

    pub fn num_cells(&self, rank: usize) -> usize {
        match rank {
            0 => self.num_nodes,
            1 => self.edges.len(),
            2 => self.two_cells.len(),
            _ => 0,
        }
    }

    /// Boundary edges of a 2-cell in traversal order, each as
    /// `(edge, +1 | -1)` by whether the cycle walks it low→high.
    pub fn cycle_edges(cycle: &[usize]) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        let m = cycle.len();
        (0..m).map(move |i| {
            let (a, b) = (cycle[i], cycle[(i + 1) % m]);
            if a < b {
                ((a, b), 1.0)
            } else {
                ((b, a), -1.0)
            }
        })
    }

    pub fn validate(&self) -> Result<(), Violation> {
        let skeleton = Graph { num_nodes: self.num_nodes, edges: self.edges.clone(), ..Graph::default() };
        skeleton.check_structure()?;
        let edge_set: HashSet<(usize, usize)> = self.edges.iter().copied().collect();
        for (i, cell) in self.two_cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(Violation::new("cycle-length", cell.clone(), "2-cells need at least 3 vertices"));
            }
            if let Some(&v) = cell.iter().find(|&&v| v >= self.num_nodes) {
                return Err(Violation::new("range", cell.clone(), format!("vertex {v} is not a node")));
            }
            let distinct: HashSet<_> = cell.iter().collect();
            if distinct.len() != cell.len() {
                return Err(Violation::new("simple-cycle", cell.clone(), "cycle repeats a vertex"));
            }
            if canonical_cycle(cell) != *cell {
                return Err(Violation::new("canonical", cell.clone(), "2-cell not in canonical form"));
            }
            for (e, _) in Self::cycle_edges(cell) {
                if !edge_set.contains(&e) {
                    return Err(Violation::new(
                        "attaching",
                        cell.clone(),
                        format!("boundary edge {e:?} is not in the 1-skeleton"),
                    ));
                }
            }
            if i > 0 {
                if self.two_cells[i - 1] == *cell {
                    return Err(Violation::new("duplicate", cell.clone(), "2-cell listed twice"));
                }
                if self.two_cells[i - 1] > *cell {
                    return Err(Violation::new("order", cell.clone(), "2-cells not sorted"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms() {
        assert_eq!(canonical_cycle(&[2, 0, 1]), vec![0, 1, 2]);
        assert_eq!(canonical_cycle(&[0, 2, 1]), vec![0, 1, 2]);
        assert_eq!(canonical_cycle(&[3, 1, 2, 0]), vec![0, 2, 1, 3]);
        assert_eq!(canonical_cycle(&[1, 3, 2, 0]), vec![0, 1, 3, 2]);
    }

    #[test]
    fn missing_skeleton_edge() {
        let c = CellComplex::new_unchecked(3, vec![(0, 1), (1, 2)], vec![vec![0, 1, 2]]);
        assert_eq!(c.validate().unwrap_err().invariant, "attaching");
    }

    #[test]
    fn dedup_on_build() {
        let g = Graph::from_canonical_edges(3, vec![(0, 1), (0, 2), (1, 2)]).unwrap();
        let c = CellComplex::from_cycles(&g, [vec![0, 1, 2], vec![2, 1, 0]]).unwrap();
        assert_eq!(c.two_cells(), &[vec![0, 1, 2]]);
    }
}
