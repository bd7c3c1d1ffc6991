use super::Violation;

/// Node subsets carrying an order-preserving rank function.
///
/// Cells are grouped by rank: `cells[r]` holds the rank-`r` cells, each a
/// strictly increasing node list, sorted lexicographically.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinatorialComplex {
    num_nodes: usize,
    cells: Vec<Vec<Vec<usize>>>,
}

impl CombinatorialComplex {
    pub fn new(num_nodes: usize, cells: Vec<Vec<Vec<usize>>>) -> Result<Self, Violation> {
        let c = Self::new_unchecked(num_nodes, cells);
        c.validate()?;
        Ok(c)
    }

    pub fn new_unchecked(num_nodes: usize, cells: Vec<Vec<Vec<usize>>>) -> Self {
        Self { num_nodes, cells }
    }

    /// Groups `(cell, rank)` pairs by rank without validating.
    pub fn from_ranked(num_nodes: usize, ranked: impl IntoIterator<Item = (Vec<usize>, usize)>) -> Self {
        let mut cells: Vec<Vec<Vec<usize>>> = Vec::new();
        for (mut cell, rank) in ranked {
            cell.sort_unstable();
            if cells.len() <= rank {
                cells.resize(rank + 1, Vec::new());
            }
            cells[rank].push(cell);
        }
        for level in &mut cells {
            level.sort();
        }
        Self { num_nodes, cells }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn max_rank(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }

    pub fn cells(&self, rank: usize) -> &[Vec<usize>] {
        self.cells.get(rank).map_or(&[], Vec::as_slice)
    }

    pub fn all_cells(&self) -> &[Vec<Vec<usize>>] {
        &self.cells
    }

    pub fn num_cells(&self, rank: usize) -> usize {
        self.cells(rank).len()
    }

    /// Rank of a cell, if present.
    pub fn rank_of(&self, cell: &[usize]) -> Option<usize> {
        self.cells.iter().position(|level| level.binary_search_by(|c| c.as_slice().cmp(cell)).is_ok())
    }

    pub fn padded(&self, max_rank: usize) -> Self {
        let mut cells = self.cells.clone();
        while cells.len() <= max_rank {
            cells.push(Vec::new());
        }
        Self { num_nodes: self.num_nodes, cells }
    }

    pub fn validate(&self) -> Result<(), Violation> {
        let mut all: Vec<(&[usize], usize)> = Vec::new();
        for (r, level) in self.cells.iter().enumerate() {
            for (i, cell) in level.iter().enumerate() {
                if cell.is_empty() || !cell.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Violation::new("sorted", cell.clone(), "cells must be non-empty, strictly increasing"));
                }
                if let Some(&v) = cell.iter().find(|&&v| v >= self.num_nodes) {
                    return Err(Violation::new("range", cell.clone(), format!("vertex {v} is not a node")));
                }
                if i > 0 && level[i - 1] >= *cell {
                    return Err(Violation::new("order", cell.clone(), "rank not sorted or has duplicates"));
                }
                all.push((cell, r));
            }
        }
        all.sort();
        if let Some(w) = all.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Violation::new("duplicate", w[0].0.to_vec(), "cell listed at two ranks"));
        }
        for &(x, rx) in &all {
            for &(y, ry) in &all {
                if x.len() < y.len() && is_subset(x, y) && rx > ry {
                    return Err(Violation::new(
                        "order-preserving",
                        x.to_vec(),
                        format!("{x:?} ⊆ {y:?} but rank {rx} > {ry}"),
                    ));
                }
            }
        }
        for v in 0..self.num_nodes {
            if self.rank_of(&[v]) != Some(0) {
                return Err(Violation::new("singleton", vec![v], "every node must be a rank-0 cell"));
            }
        }
        Ok(())
    }
}

/// Both slices strictly increasing.
pub(crate) fn is_subset(small: &[usize], large: &[usize]) -> bool {
    let mut it = large.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_inversion_is_order_violation() {
        let c = CombinatorialComplex::from_ranked(2, [(vec![0], 1), (vec![1], 0), (vec![0, 1], 0)]);
        assert_eq!(c.validate().unwrap_err().invariant, "order-preserving");
    }

    #[test]
    fn valid_complex_and_rank_lookup() {
        let c = CombinatorialComplex::from_ranked(
            3,
            [(vec![0], 0), (vec![1], 0), (vec![2], 0), (vec![0, 1], 1), (vec![0, 1, 2], 2)],
        );
        assert!(c.validate().is_ok());
        assert_eq!(c.rank_of(&[0, 1, 2]), Some(2));
        assert_eq!(c.rank_of(&[1, 2]), None);
    }

    #[test]
    fn subset_helper() {
        assert!(is_subset(&[1, 3], &[0, 1, 2, 3]));
        assert!(!is_subset(&[1, 4], &[0, 1, 2, 3]));
    }
}
