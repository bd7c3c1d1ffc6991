//! JSON container documents for domains and featured domains.
//!
//! One document per complex, keys in this order: `kind`, `num_nodes`,
//! `cells`, `two_cells` (cell complexes only), `features`, `labels`,
//! `targets`, `graph_label`. `cells[r]` lists the rank-`r` cells as sorted
//! node-id arrays; rank 0 is always `[[0], [1], ...]`. Each feature block is
//! `{"cols": d, "data": [...]}` with `n_r * d` row-major values.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    CellComplex, CombinatorialComplex, Complex, DomainKind, FeaturedComplex, Graph, GraphLabel, Hypergraph,
    Labels, Simplex, SimplicialComplex,
};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

#[derive(Serialize, Deserialize)]
pub struct FeatureBlock {
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainerDoc {
    pub kind: DomainKind,
    pub num_nodes: usize,
    pub cells: Vec<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_cells: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub features: Vec<FeatureBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_label: Option<GraphLabel>,
}

fn to_doc(c: &Complex, features: &[DenseMatrix], labels: &Labels) -> ContainerDoc {
    let top = match c {
        Complex::Cell(_) => 1,
        _ => c.max_rank(),
    };
    let cells = (0..=top).map(|r| c.cell_sets(r)).collect();
    let two_cells = match c {
        Complex::Cell(cc) => Some(cc.two_cells().to_vec()),
        _ => None,
    };
    ContainerDoc {
        kind: c.kind(),
        num_nodes: c.num_nodes(),
        cells,
        two_cells,
        features: features.iter().map(|f| FeatureBlock { cols: f.cols(), data: f.data().to_vec() }).collect(),
        labels: labels.node_labels.clone(),
        targets: labels.node_targets.clone(),
        graph_label: labels.graph_label,
    }
}

fn complex_from_doc(doc: &ContainerDoc, loc: &str) -> Result<Complex> {
    let n = doc.num_nodes;
    let bad = |msg: String| Error::schema(loc, msg);
    let nodes = doc.cells.first().ok_or_else(|| bad("`cells` must contain rank 0".into()))?;
    if nodes.len() != n || nodes.iter().enumerate().any(|(v, c)| c.as_slice() != [v]) {
        return Err(bad(format!("`cells[0]` must be [[0], ..., [{}]]", n.saturating_sub(1))));
    }
    let level = |r: usize| doc.cells.get(r).cloned().unwrap_or_default();
    let as_edges = |cells: Vec<Vec<usize>>| -> Result<Vec<(usize, usize)>> {
        cells
            .into_iter()
            .map(|e| match e.as_slice() {
                [u, v] => Ok((*u, *v)),
                _ => Err(bad(format!("cell {e:?} in `cells[1]` is not an edge"))),
            })
            .collect()
    };
    let expect_ranks = |max: usize| -> Result<()> {
        if doc.cells.len() > max + 1 {
            return Err(bad(format!("{} domains have at most {} rank levels in `cells`", doc.kind, max + 1)));
        }
        Ok(())
    };
    if doc.two_cells.is_some() && doc.kind != DomainKind::Cell {
        return Err(bad("`two_cells` is only allowed for cell complexes".into()));
    }
    let complex = match doc.kind {
        DomainKind::Graph => {
            expect_ranks(1)?;
            Complex::Graph(Graph { num_nodes: n, edges: as_edges(level(1))?, ..Graph::default() })
        }
        DomainKind::Cell => {
            expect_ranks(1)?;
            let two = doc.two_cells.clone().unwrap_or_default();
            Complex::Cell(CellComplex::new_unchecked(n, as_edges(level(1))?, two))
        }
        DomainKind::Simplicial => {
            let cells = doc.cells.iter().map(|l| l.iter().cloned().map(Simplex::from_sorted).collect()).collect();
            Complex::Simplicial(SimplicialComplex::new_unchecked(cells))
        }
        DomainKind::Hypergraph => {
            expect_ranks(1)?;
            Complex::Hypergraph(Hypergraph::new_unchecked(n, level(1)))
        }
        DomainKind::Combinatorial => Complex::Combinatorial(CombinatorialComplex::new_unchecked(n, doc.cells.clone())),
    };
    complex.validate().map_err(|v| bad(format!("invalid cell {:?}: {}", v.cell, v)))?;
    Ok(complex)
}

fn featured_from_doc(doc: ContainerDoc, loc: &str) -> Result<FeaturedComplex> {
    let complex = complex_from_doc(&doc, loc)?;
    let mut features = Vec::with_capacity(doc.features.len());
    for (r, block) in doc.features.into_iter().enumerate() {
        let rows = complex.num_cells(r);
        let m = DenseMatrix::from_vec(rows, block.cols, block.data)
            .map_err(|e| Error::schema(format!("{loc}: features[{r}]"), e.to_string()))?;
        features.push(m);
    }
    if features.is_empty() {
        return Err(Error::schema(loc, "`features` must hold at least the rank-0 block"));
    }
    let labels = Labels { node_labels: doc.labels, node_targets: doc.targets, graph_label: doc.graph_label };
    FeaturedComplex::new(complex, features, labels).map_err(|e| Error::schema(loc, e.to_string()))
}

fn parse_doc(text: &str, loc: &str) -> Result<ContainerDoc> {
    serde_json::from_str(text).map_err(|e| Error::schema(format!("{loc}:{}:{}", e.line(), e.column()), e.to_string()))
}

pub fn featured_to_string(fc: &FeaturedComplex) -> String {
    serde_json::to_string(&to_doc(fc.complex(), fc.features(), &fc.labels)).expect("container serializes")
}

pub fn complex_to_string(c: &Complex) -> String {
    serde_json::to_string(&to_doc(c, &[], &Labels::default())).expect("container serializes")
}

pub fn featured_from_str(text: &str, loc: &str) -> Result<FeaturedComplex> {
    featured_from_doc(parse_doc(text, loc)?, loc)
}

pub fn complex_from_str(text: &str, loc: &str) -> Result<Complex> {
    complex_from_doc(&parse_doc(text, loc)?, loc)
}

pub fn write_featured(path: &Path, fc: &FeaturedComplex) -> Result<()> {
    fs::write(path, featured_to_string(fc)).map_err(|e| Error::io(path, e))
}

pub fn write_complex(path: &Path, c: &Complex) -> Result<()> {
    fs::write(path, complex_to_string(c)).map_err(|e| Error::io(path, e))
}

pub fn read_featured(path: &Path) -> Result<FeaturedComplex> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    featured_from_str(&text, &path.display().to_string())
}

pub fn read_complex(path: &Path) -> Result<Complex> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    complex_from_str(&text, &path.display().to_string())
}
