//! Dataset ingestion and synthetic generators.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::complex::io::{featured_to_string, read_featured};
use crate::complex::{build_graph, FeaturedComplex, Graph, GraphLabel};
use crate::error::{Error, Result};
use crate::homp::Task;
use crate::numerics::DenseMatrix;

/// A named collection of samples sharing one domain kind and feature widths.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetBundle {
    pub name: String,
    pub samples: Vec<FeaturedComplex>,
    pub task: Task,
}

impl DatasetBundle {
    /// Checks homogeneity and builds the bundle. `origins` name each sample
    /// in error messages.
    pub fn new(name: impl Into<String>, samples: Vec<FeaturedComplex>, task: Task, origins: &[String]) -> Result<Self> {
        let name = name.into();
        let first = samples.first().ok_or_else(|| Error::schema(&name, "dataset has no samples"))?;
        let origin = |i: usize| origins.get(i).cloned().unwrap_or_else(|| format!("sample {i}"));
        for (i, s) in samples.iter().enumerate().skip(1) {
            if s.complex().kind() != first.complex().kind() {
                return Err(Error::schema(
                    origin(i),
                    format!("domain kind {} differs from {} in {}", s.complex().kind(), first.complex().kind(), origin(0)),
                ));
            }
            let (a, b) = (first.widths(), s.widths());
            if a.iter().zip(&b).any(|(x, y)| x != y) {
                return Err(Error::schema(
                    origin(i),
                    format!("feature widths {b:?} differ from {a:?} in {}", origin(0)),
                ));
            }
        }
        if task.is_node_level() && samples.len() != 1 {
            return Err(Error::schema(&name, format!("node-level tasks need exactly one sample, found {}", samples.len())));
        }
        Ok(Self { name, samples, task })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of prediction targets: the node count for node tasks, the
    /// sample count for graph tasks.
    pub fn num_targets(&self) -> usize {
        if self.task.is_node_level() {
            self.samples[0].num_nodes()
        } else {
            self.samples.len()
        }
    }

    /// Prediction width: class count for classification, one otherwise.
    pub fn out_dim(&self) -> usize {
        if !self.task.is_classification() {
            return 1;
        }
        let max = self
            .samples
            .iter()
            .flat_map(|s| {
                let node = s.labels.node_labels.iter().flatten().copied();
                let graph = match s.labels.graph_label {
                    Some(GraphLabel::Class(c)) => Some(c),
                    _ => None,
                };
                node.chain(graph)
            })
            .max();
        max.map_or(1, |m| m + 1)
    }

    /// SHA-256 over the serialized samples.
    pub fn content_digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for s in &self.samples {
            h.update(featured_to_string(s).as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }
}

/// Infers the task from the annotations of the first sample.
pub fn infer_task(samples: &[FeaturedComplex]) -> Task {
    let Some(s) = samples.first() else {
        return Task::NodeClassification;
    };
    match s.labels.graph_label {
        Some(GraphLabel::Class(_)) => Task::GraphClassification,
        Some(GraphLabel::Value(_)) => Task::GraphRegression,
        None if s.labels.node_targets.is_some() => Task::NodeRegression,
        None => Task::NodeClassification,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    /// A container file, or a directory of `*.json` containers.
    Container,
    /// An edge-list file, a directory holding `edges.txt`, a directory of
    /// such directories, or a `*.cites`/`*.content` citation pair.
    EdgeListDir,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        out.push(entry.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

/// Parses `nodes N` followed by `u v` lines. Blank lines and `#` comments are skipped.
pub fn parse_edge_list(text: &str, loc: &str) -> Result<(usize, Vec<(usize, usize)>)> {
    let mut num_nodes = None;
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = || format!("{loc}:{}", i + 1);
        let toks: Vec<&str> = line.split_whitespace().collect();
        if num_nodes.is_none() {
            match toks.as_slice() {
                ["nodes", n] => {
                    num_nodes = Some(n.parse().map_err(|_| Error::schema(at(), format!("bad node count {n:?}")))?);
                    continue;
                }
                _ => return Err(Error::schema(at(), "expected header line `nodes N`")),
            }
        }
        let [u, v] = toks.as_slice() else {
            return Err(Error::schema(at(), format!("expected `u v`, got {line:?}")));
        };
        let parse = |t: &str| t.parse::<usize>().map_err(|_| Error::schema(at(), format!("bad node id {t:?}")));
        edges.push((parse(u)?, parse(v)?));
    }
    let n = num_nodes.ok_or_else(|| Error::schema(loc, "missing header line `nodes N`"))?;
    Ok((n, edges))
}

fn csv_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::schema(path.display().to_string(), e.to_string()))?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::schema(path.display().to_string(), e.to_string()))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    // a non-numeric first row is a header
    if rows.first().is_some_and(|r| r.iter().any(|c| c.parse::<f64>().is_err())) {
        rows.remove(0);
    }
    Ok(rows)
}

fn read_features(path: &Path, n: usize) -> Result<DenseMatrix> {
    let rows = csv_rows(path)?;
    let loc = path.display().to_string();
    if rows.len() != n {
        return Err(Error::schema(loc, format!("{} feature rows for {n} nodes", rows.len())));
    }
    let mut parsed = Vec::with_capacity(n);
    for (i, r) in rows.iter().enumerate() {
        let vals = r
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| Error::schema(format!("{loc}:{}", i + 1), format!("bad value {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        parsed.push(vals);
    }
    DenseMatrix::from_rows(&parsed).map_err(|e| Error::schema(loc, e.to_string()))
}

enum NodeLabels {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

fn read_labels(path: &Path, n: usize) -> Result<NodeLabels> {
    let rows = csv_rows(path)?;
    let loc = path.display().to_string();
    if rows.len() != n {
        return Err(Error::schema(loc, format!("{} label rows for {n} nodes", rows.len())));
    }
    let cells: Vec<&str> = rows.iter().map(|r| r.last().map_or("", String::as_str)).collect();
    if let Ok(classes) = cells.iter().map(|c| c.parse::<usize>()).collect::<std::result::Result<Vec<_>, _>>() {
        return Ok(NodeLabels::Classes(classes));
    }
    let values = cells
        .iter()
        .enumerate()
        .map(|(i, c)| c.parse::<f64>().map_err(|_| Error::schema(format!("{loc}:{}", i + 1), format!("bad label {c:?}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(NodeLabels::Values(values))
}

/// Reads an edge-list file and its optional `features.csv`, `labels.csv`
/// and `graph_label.txt` siblings.
pub fn load_edge_list_file(path: &Path) -> Result<Graph> {
    let loc = path.display().to_string();
    let (n, edges) = parse_edge_list(&read_text(path)?, &loc)?;
    let (mut g, _) = build_graph(n, &edges, None, None).map_err(|e| Error::schema(&loc, e.to_string()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let features = dir.join("features.csv");
    if features.is_file() {
        g.node_features = Some(read_features(&features, n)?);
    }
    let labels = dir.join("labels.csv");
    if labels.is_file() {
        match read_labels(&labels, n)? {
            NodeLabels::Classes(c) => g.node_labels = Some(c),
            NodeLabels::Values(v) => g.node_targets = Some(v),
        }
    }
    let gl = dir.join("graph_label.txt");
    if gl.is_file() {
        let text = read_text(&gl)?;
        let t = text.trim();
        g.graph_label = Some(if let Ok(c) = t.parse::<usize>() {
            GraphLabel::Class(c)
        } else {
            GraphLabel::Value(t.parse().map_err(|_| Error::schema(gl.display().to_string(), format!("bad graph label {t:?}")))?)
        });
    }
    Ok(g)
}

/// Reads a citation network in the `<name>.content` / `<name>.cites` layout:
/// content rows are `id feature... class`, cites rows are `cited citing`.
/// Nodes are numbered in content order and classes by sorted name.
/// Citations naming unknown ids are skipped.
pub fn load_citation_pair(content: &Path, cites: &Path) -> Result<Graph> {
    let cloc = content.display().to_string();
    let mut ids = BTreeMap::new();
    let mut rows = Vec::new();
    let mut class_names = Vec::new();
    for (i, line) in read_text(content)?.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() < 2 {
            return Err(Error::schema(format!("{cloc}:{}", i + 1), "expected id, features and class"));
        }
        if ids.insert(toks[0].to_string(), rows.len()).is_some() {
            return Err(Error::schema(format!("{cloc}:{}", i + 1), format!("duplicate id {}", toks[0])));
        }
        let feats = toks[1..toks.len() - 1]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| Error::schema(format!("{cloc}:{}", i + 1), format!("bad feature {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let class = toks[toks.len() - 1].to_string();
        class_names.push(class.clone());
        rows.push((feats, class));
    }
    class_names.sort();
    class_names.dedup();
    let n = rows.len();
    let labels = rows.iter().map(|(_, c)| class_names.binary_search(c).expect("collected above")).collect();
    let x = DenseMatrix::from_rows(&rows.into_iter().map(|(f, _)| f).collect::<Vec<_>>())
        .map_err(|e| Error::schema(&cloc, e.to_string()))?;
    let mut edges = Vec::new();
    for line in read_text(cites)?.lines() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if let [a, b] = toks.as_slice() {
            if let (Some(&u), Some(&v)) = (ids.get(*a), ids.get(*b)) {
                edges.push((u, v));
            }
        }
    }
    Ok(build_graph(n, &edges, Some(x), Some(labels))?.0)
}

fn find_with_ext(dir: &Path, ext: &str) -> Result<Option<PathBuf>> {
    Ok(sorted_entries(dir)?.into_iter().find(|p| p.extension().is_some_and(|e| e == ext)))
}

fn load_edge_list_dir(path: &Path) -> Result<(Vec<FeaturedComplex>, Vec<String>)> {
    if path.is_file() {
        return Ok((vec![FeaturedComplex::from_graph(&load_edge_list_file(path)?)], vec![path.display().to_string()]));
    }
    if let (Some(content), Some(cites)) = (find_with_ext(path, "content")?, find_with_ext(path, "cites")?) {
        return Ok((vec![FeaturedComplex::from_graph(&load_citation_pair(&content, &cites)?)], vec![content.display().to_string()]));
    }
    let single = path.join("edges.txt");
    if single.is_file() {
        return Ok((vec![FeaturedComplex::from_graph(&load_edge_list_file(&single)?)], vec![single.display().to_string()]));
    }
    let mut samples = Vec::new();
    let mut origins = Vec::new();
    for sub in sorted_entries(path)? {
        let f = sub.join("edges.txt");
        if f.is_file() {
            samples.push(FeaturedComplex::from_graph(&load_edge_list_file(&f)?));
            origins.push(f.display().to_string());
        }
    }
    Ok((samples, origins))
}

fn load_containers(path: &Path) -> Result<(Vec<FeaturedComplex>, Vec<String>)> {
    if path.is_file() {
        return Ok((vec![read_featured(path)?], vec![path.display().to_string()]));
    }
    let mut samples = Vec::new();
    let mut origins = Vec::new();
    for p in sorted_entries(path)? {
        if p.is_file() && p.extension().is_some_and(|e| e == "json") && p.file_name().is_some_and(|n| n != "manifest.json") {
            samples.push(read_featured(&p)?);
            origins.push(p.display().to_string());
        }
    }
    Ok((samples, origins))
}

/// Container when `path` is a `.json` file or a directory holding one,
/// edge list otherwise.
pub fn detect_format(path: &Path) -> DatasetFormat {
    let is_json = |p: &Path| p.is_file() && p.extension().is_some_and(|e| e == "json");
    if is_json(path) {
        return DatasetFormat::Container;
    }
    let has_json = path.is_dir() && sorted_entries(path).is_ok_and(|es| es.iter().any(|p| is_json(p)));
    if has_json {
        DatasetFormat::Container
    } else {
        DatasetFormat::EdgeListDir
    }
}

/// Reads every sample under `path` in file-name order, with the file each
/// came from.
pub fn load_samples(path: &Path, format: DatasetFormat) -> Result<(Vec<FeaturedComplex>, Vec<String>)> {
    if !path.exists() {
        return Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "dataset path does not exist")));
    }
    match format {
        DatasetFormat::Container => load_containers(path),
        DatasetFormat::EdgeListDir => load_edge_list_dir(path),
    }
}

/// Loads samples in file-name order. The task is taken from `task` or
/// inferred from the annotations.
pub fn load_dataset(path: &Path, format: DatasetFormat, task: Option<Task>) -> Result<DatasetBundle> {
    let (samples, origins) = load_samples(path, format)?;
    if samples.is_empty() {
        return Err(Error::schema(path.display().to_string(), "no samples found"));
    }
    let name = path.file_stem().map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
    let task = task.unwrap_or_else(|| infer_task(&samples));
    DatasetBundle::new(name, samples, task, &origins)
}

/// Parameters of a planted-partition graph with block-informative features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmSpec {
    pub nodes: usize,
    pub blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Feature columns; the first `blocks` carry the one-hot block code.
    pub feature_dim: usize,
    /// Standard deviation of the Gaussian noise added to every feature.
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SbmSpec {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.blocks < 1 || self.nodes < self.blocks {
            out.push("sbm: need 1 <= blocks <= nodes".into());
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                out.push(format!("sbm: {name} must lie in [0, 1]"));
            }
        }
        if self.feature_dim < self.blocks {
            out.push("sbm: feature_dim must be >= blocks".into());
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            out.push("sbm: noise must be a finite non-negative number".into());
        }
        out
    }
}

/// A seeded stochastic block model with node `i` in block `i mod blocks`.
pub fn synthetic_sbm(spec: &SbmSpec) -> Result<Graph> {
    let v = spec.violations();
    if !v.is_empty() {
        return Err(Error::Config(v));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let block: Vec<usize> = (0..spec.nodes).map(|i| i % spec.blocks).collect();
    let mut edges = Vec::new();
    for u in 0..spec.nodes {
        for w in u + 1..spec.nodes {
            let p = if block[u] == block[w] { spec.p_in } else { spec.p_out };
            if rng.random::<f64>() < p {
                edges.push((u, w));
            }
        }
    }
    let normal = Normal::new(0.0, spec.noise).map_err(|e| Error::Config(vec![format!("sbm noise: {e}")]))?;
    let mut x = DenseMatrix::zeros(spec.nodes, spec.feature_dim);
    for i in 0..spec.nodes {
        for j in 0..spec.feature_dim {
            let base = if j == block[i] { 1.0 } else { 0.0 };
            x.set(i, j, base + normal.sample(&mut rng));
        }
    }
    Ok(build_graph(spec.nodes, &edges, Some(x), Some(block))?.0)
}

/// Parameters of a two-class graph-classification set: class 0 graphs are
/// random trees, class 1 graphs are random trees plus extra chords that
/// close cycles and triangles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSetSpec {
    pub graphs: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Extra edges added to each class-1 graph.
    pub chords: usize,
    #[serde(default)]
    pub seed: u64,
}

impl GraphSetSpec {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.graphs < 2 {
            out.push("graph set: need at least 2 graphs".into());
        }
        if self.min_nodes < 3 || self.max_nodes < self.min_nodes {
            out.push("graph set: need 3 <= min_nodes <= max_nodes".into());
        }
        if self.chords < 1 {
            out.push("graph set: chords must be >= 1".into());
        }
        out
    }
}

pub fn synthetic_graph_set(spec: &GraphSetSpec) -> Result<Vec<Graph>> {
    let v = spec.violations();
    if !v.is_empty() {
        return Err(Error::Config(v));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.graphs);
    for k in 0..spec.graphs {
        let class = k % 2;
        let n = rng.random_range(spec.min_nodes..=spec.max_nodes);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut edges: Vec<(usize, usize)> =
            (1..n).map(|i| (order[rng.random_range(0..i)], order[i])).collect();
        if class == 1 {
            let mut added = 0;
            let mut tries = 0;
            while added < spec.chords && tries < 50 * spec.chords {
                tries += 1;
                let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
                let e = (a.min(b), a.max(b));
                if a != b && !edges.iter().any(|&(x, y)| (x.min(y), x.max(y)) == e) {
                    edges.push(e);
                    added += 1;
                }
            }
        }
        let (mut g, _) = build_graph(n, &edges, None, None)?;
        g.graph_label = Some(GraphLabel::Class(class));
        out.push(g);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_p3() {
        let (n, e) = parse_edge_list("nodes 3\n0 1\n1 2\n", "t").unwrap();
        let g = build_graph(n, &e, None, None).unwrap().0;
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn edge_list_reports_line() {
        let err = parse_edge_list("nodes 3\n0 x\n", "f.txt").unwrap_err();
        assert!(err.to_string().contains("f.txt:2"), "{err}");
        assert!(parse_edge_list("0 1\n", "f").is_err());
    }

    #[test]
    fn sbm_is_seeded() {
        let spec = SbmSpec { nodes: 20, blocks: 2, p_in: 0.5, p_out: 0.05, feature_dim: 4, noise: 0.5, seed: 7 };
        let a = synthetic_sbm(&spec).unwrap();
        let b = synthetic_sbm(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.node_labels.as_ref().unwrap()[3], 1);
    }

    #[test]
    fn graph_set_alternates_classes() {
        let spec = GraphSetSpec { graphs: 6, min_nodes: 5, max_nodes: 8, chords: 2, seed: 1 };
        let gs = synthetic_graph_set(&spec).unwrap();
        for (k, g) in gs.iter().enumerate() {
            let cyclomatic = g.num_edges() + 1 - g.num_nodes();
            assert_eq!(cyclomatic, if k % 2 == 0 { 0 } else { 2 });
        }
    }
}
