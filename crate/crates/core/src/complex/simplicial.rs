use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::Violation;
use crate::error::{Error, Result};

/// A simplex, stored as its strictly increasing vertex list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Simplex(Vec<usize>);

impl Simplex {
    /// Sorts and deduplicates `vertices`. Fails on an empty set.
    pub fn new(mut vertices: Vec<usize>) -> Result<Self> {
        vertices.sort_unstable();
        vertices.dedup();
        if vertices.is_empty() {
            return Err(Error::Unsupported("a simplex needs at least one vertex".into()));
        }
        Ok(Simplex(vertices))
    }

    pub(crate) fn from_sorted(vertices: Vec<usize>) -> Self {
        Simplex(vertices)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len() - 1
    }

    /// Face obtained by deleting the `i`-th vertex.
    pub fn face(&self, i: usize) -> Simplex {
        let mut v = self.0.clone();
        v.remove(i);
        Simplex(v)
    }

    pub(crate) fn is_strictly_sorted(&self) -> bool {
        !self.0.is_empty() && self.0.windows(2).all(|w| w[0] < w[1])
    }
}

/// Downward-closed family of simplices, grouped by rank.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplicialComplex {
    cells: Vec<Vec<Simplex>>,
}

impl SimplicialComplex {
    /// Validating constructor.
    pub fn new(cells: Vec<Vec<Simplex>>) -> Result<Self> {
        let sc = Self::new_unchecked(cells);
        sc.validate()?;
        Ok(sc)
    }

    /// No invariant checks. Use [`SimplicialComplex::validate`] afterwards when
    /// the input is untrusted.
    pub fn new_unchecked(cells: Vec<Vec<Simplex>>) -> Self {
        Self { cells }
    }

    /// Downward closure of `simplices` over nodes `0..num_nodes`, truncated at
    /// `max_rank`. Simplices above `max_rank` are dropped, not split.
    pub fn from_closure<I>(num_nodes: usize, simplices: I, max_rank: usize) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<usize>>,
    {
        let mut levels: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); max_rank + 1];
        for s in simplices {
            let s = Simplex::new(s)?;
            if let Some(&v) = s.0.iter().find(|&&v| v >= num_nodes) {
                return Err(Error::NodeOutOfRange { id: v, num_nodes });
            }
            if s.rank() <= max_rank {
                levels[s.rank()].insert(s.0);
            }
        }
        for r in (1..=max_rank).rev() {
            let faces: Vec<Vec<usize>> = levels[r]
                .iter()
                .flat_map(|s| (0..s.len()).map(move |i| {
                    let mut f = s.clone();
                    f.remove(i);
                    f
                }))
                .collect();
            levels[r - 1].extend(faces);
        }
        levels[0] = (0..num_nodes).map(|v| vec![v]).collect();
        let cells = levels.into_iter().map(|l| l.into_iter().map(Simplex).collect()).collect();
        Ok(Self { cells })
    }

    pub fn num_nodes(&self) -> usize {
        self.cells.first().map_or(0, Vec::len)
    }

    pub fn max_rank(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }

    pub fn cells(&self, rank: usize) -> &[Simplex] {
        self.cells.get(rank).map_or(&[], Vec::as_slice)
    }

    pub fn all_cells(&self) -> &[Vec<Simplex>] {
        &self.cells
    }

    pub fn num_cells(&self, rank: usize) -> usize {
        self.cells(rank).len()
    }

    /// Cell → position lookup for one rank.
    pub fn index(&self, rank: usize) -> HashMap<&[usize], usize> {
        self.cells(rank).iter().enumerate().map(|(i, s)| (s.vertices(), i)).collect()
    }

    /// Same complex with empty ranks appended up to `max_rank`.
    pub fn padded(&self, max_rank: usize) -> Self {
        let mut cells = self.cells.clone();
        while cells.len() <= max_rank {
            cells.push(Vec::new());
        }
        Self { cells }
    }

    pub fn validate(&self) -> Result<(), Violation> {
        if self.cells.is_empty() {
            return Err(Violation::new("non-empty", vec![], "a simplicial complex needs rank 0"));
        }
        let n = self.num_nodes();
        for (v, s) in self.cells[0].iter().enumerate() {
            if s.vertices() != [v] {
                return Err(Violation::new(
                    "nodes",
                    s.0.clone(),
                    format!("rank 0 must list every node 0..{n} in order"),
                ));
            }
        }
        for (r, level) in self.cells.iter().enumerate() {
            for (i, s) in level.iter().enumerate() {
                if !s.is_strictly_sorted() {
                    return Err(Violation::new("sorted", s.0.clone(), "vertices must be strictly increasing"));
                }
                if s.rank() != r {
                    return Err(Violation::new(
                        "rank",
                        s.0.clone(),
                        format!("simplex of rank {} listed at rank {r}", s.rank()),
                    ));
                }
                if let Some(&v) = s.0.iter().find(|&&v| v >= n) {
                    return Err(Violation::new("range", s.0.clone(), format!("vertex {v} is not a node")));
                }
                if i > 0 {
                    if level[i - 1] == *s {
                        return Err(Violation::new("duplicate", s.0.clone(), "simplex listed twice"));
                    }
                    if level[i - 1] > *s {
                        return Err(Violation::new("order", s.0.clone(), "rank not lexicographically sorted"));
                    }
                }
            }
        }
        for r in 1..self.cells.len() {
            let below: HashSet<&[usize]> = self.cells[r - 1].iter().map(Simplex::vertices).collect();
            for s in &self.cells[r] {
                for i in 0..s.0.len() {
                    let f = s.face(i);
                    if !below.contains(f.vertices()) {
                        return Err(Violation::new(
                            "closure",
                            s.0.clone(),
                            format!("face {:?} is missing", f.vertices()),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sx(v: &[usize]) -> Simplex {
        Simplex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn closure_of_triangle() {
        let sc = SimplicialComplex::from_closure(3, [vec![2, 0, 1]], 2).unwrap();
        assert_eq!(sc.num_cells(0), 3);
        assert_eq!(sc.cells(1), &[sx(&[0, 1]), sx(&[0, 2]), sx(&[1, 2])]);
        assert_eq!(sc.cells(2), &[sx(&[0, 1, 2])]);
        assert!(sc.validate().is_ok());
    }

    #[test]
    fn missing_face_reports_closure() {
        let cells = vec![
            vec![sx(&[0]), sx(&[1]), sx(&[2])],
            vec![sx(&[0, 1]), sx(&[1, 2])],
            vec![sx(&[0, 1, 2])],
        ];
        let err = SimplicialComplex::new_unchecked(cells).validate().unwrap_err();
        assert_eq!(err.invariant, "closure");
        assert_eq!(err.cell, vec![0, 1, 2]);
    }

    #[test]
    fn unsorted_rank_rejected() {
        let cells = vec![vec![sx(&[0]), sx(&[1]), sx(&[2])], vec![sx(&[1, 2]), sx(&[0, 1])]];
        assert_eq!(SimplicialComplex::new_unchecked(cells).validate().unwrap_err().invariant, "order");
    }
}
