use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Graph-level target: a class id or a real value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphLabel {
    Class(usize),
    Value(f64),
}

impl GraphLabel {
    pub fn as_f64(self) -> f64 {
        match self {
            GraphLabel::Class(c) => c as f64,
            GraphLabel::Value(v) => v,
        }
    }
}

/// Undirected simple graph with optional node/graph annotations.
///
/// Edges are stored as `(u, v)` with `u < v`, sorted lexicographically and
/// duplicate-free.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Graph {
    pub(crate) num_nodes: usize,
    pub(crate) edges: Vec<(usize, usize)>,
    pub node_features: Option<DenseMatrix>,
    pub node_labels: Option<Vec<usize>>,
    pub node_targets: Option<Vec<f64>>,
    pub graph_label: Option<GraphLabel>,
}

/// What `build_graph` discarded while canonicalizing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub duplicates_dropped: usize,
    pub self_loops_dropped: usize,
}

/// Canonicalizes a raw edge list into a [`Graph`].
pub fn build_graph(
    num_nodes: usize,
    raw_edges: &[(usize, usize)],
    features: Option<DenseMatrix>,
    labels: Option<Vec<usize>>,
) -> Result<(Graph, BuildReport)> {
    let mut report = BuildReport::default();
    let mut edges = Vec::with_capacity(raw_edges.len());
    for &(a, b) in raw_edges {
        for id in [a, b] {
            if id >= num_nodes {
                return Err(Error::NodeOutOfRange { id, num_nodes });
            }
        }
        if a == b {
            report.self_loops_dropped += 1;
            continue;
        }
        edges.push((a.min(b), a.max(b)));
    }
    edges.sort_unstable();
    let before = edges.len();
    edges.dedup();
    report.duplicates_dropped = before - edges.len();

    let mut g = Graph { num_nodes, edges, ..Graph::default() };
    g.set_features(features)?;
    g.set_labels(labels)?;
    Ok((g, report))
}

impl Graph {
    /// Structure-only graph. Edges must already be canonical.
    pub fn from_canonical_edges(num_nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let g = Graph { num_nodes, edges, ..Graph::default() };
        g.check_structure()?;
        Ok(g)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn set_features(&mut self, features: Option<DenseMatrix>) -> Result<()> {
        if let Some(f) = &features {
            if f.rows() != self.num_nodes {
                return Err(Error::FeatureRows { rank: 0, rows: f.rows(), expected: self.num_nodes });
            }
        }
        self.node_features = features;
        Ok(())
    }

    pub fn set_labels(&mut self, labels: Option<Vec<usize>>) -> Result<()> {
        if let Some(l) = &labels {
            if l.len() != self.num_nodes {
                return Err(Error::shape(
                    "node labels",
                    format!("{} labels for {} nodes", l.len(), self.num_nodes),
                ));
            }
        }
        self.node_labels = labels;
        Ok(())
    }

    /// Sorted neighbor lists.
    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Same structure with every annotation removed.
    pub fn structure(&self) -> Graph {
        Graph { num_nodes: self.num_nodes, edges: self.edges.clone(), ..Graph::default() }
    }

    pub(crate) fn check_structure(&self) -> Result<(), crate::complex::Violation> {
        use crate::complex::Violation;
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            if v >= self.num_nodes {
                return Err(Violation::new("range", vec![u, v], "endpoint out of range"));
            }
            if u >= v {
                return Err(Violation::new("edge-order", vec![u, v], "edge endpoints must satisfy u < v"));
            }
            if i > 0 && self.edges[i - 1] >= (u, v) {
                return Err(Violation::new("sorted", vec![u, v], "edges must be strictly increasing"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalizes_and_counts_drops() {
        let (g, rep) = build_graph(3, &[(1, 0), (0, 1), (2, 2), (1, 2)], None, None).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(rep, BuildReport { duplicates_dropped: 1, self_loops_dropped: 1 });
    }

    #[test]
    fn empty_and_reversed() {
        let (g, _) = build_graph(2, &[], None, None).unwrap();
        assert!(g.edges().is_empty());
        let (g, _) = build_graph(4, &[(3, 2), (2, 1), (1, 0)], None, None).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            build_graph(2, &[(0, 2)], None, None),
            Err(Error::NodeOutOfRange { id: 2, num_nodes: 2 })
        ));
        let f = DenseMatrix::zeros(3, 1);
        assert!(matches!(build_graph(2, &[], Some(f), None), Err(Error::FeatureRows { .. })));
    }
}
