use super::Violation;
use crate::error::{Error, Result};

/// Nodes plus a set of non-empty node subsets.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypergraph {
    num_nodes: usize,
    hyperedges: Vec<Vec<usize>>,
}

impl Hypergraph {
    /// Sorts members, sorts hyperedges and drops duplicate sets.
    pub fn new(num_nodes: usize, raw: impl IntoIterator<Item = Vec<usize>>) -> Result<Self> {
        let mut hyperedges = Vec::new();
        for mut e in raw {
            e.sort_unstable();
            e.dedup();
            if e.is_empty() {
                return Err(Error::Unsupported("hyperedges must be non-empty".into()));
            }
            if let Some(&v) = e.iter().find(|&&v| v >= num_nodes) {
                return Err(Error::NodeOutOfRange { id: v, num_nodes });
            }
            hyperedges.push(e);
        }
        hyperedges.sort();
        hyperedges.dedup();
        Ok(Self { num_nodes, hyperedges })
    }

    pub fn new_unchecked(num_nodes: usize, hyperedges: Vec<Vec<usize>>) -> Self {
        Self { num_nodes, hyperedges }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn hyperedges(&self) -> &[Vec<usize>] {
        &self.hyperedges
    }

    pub fn num_cells(&self, rank: usize) -> usize {
        match rank {
            0 => self.num_nodes,
            1 => self.hyperedges.len(),
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<(), Violation> {
        for (i, e) in self.hyperedges.iter().enumerate() {
            if e.is_empty() {
                return Err(Violation::new("non-empty", e.clone(), "empty hyperedge"));
            }
            if !e.windows(2).all(|w| w[0] < w[1]) {
                return Err(Violation::new("sorted", e.clone(), "members must be strictly increasing"));
            }
            if let Some(&v) = e.iter().find(|&&v| v >= self.num_nodes) {
                return Err(Violation::new("range", e.clone(), format!("vertex {v} is not a node")));
            }
            if i > 0 {
                if self.hyperedges[i - 1] == *e {
                    return Err(Violation::new("duplicate", e.clone(), "hyperedge listed twice"));
                }
                if self.hyperedges[i - 1] > *e {
                    return Err(Violation::new("order", e.clone(), "hyperedges not sorted"));
                }
            }
        }
        Ok(())
    }
}
