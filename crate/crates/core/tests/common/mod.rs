//! Independent oracles shared by integration tests. Nothing here calls the
//! library routine it is used to check.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topoforge::complex::{build_graph, Graph, SparseOperator};
use topoforge::homp::{IntraAgg, Update};
use topoforge::{DenseMatrix, ModelState};

/// Seeded Erdős–Rényi graph with `1..=max_n` nodes, random density and
/// Gaussian-ish node features of width `dim`.
pub fn random_graph(seed: u64, max_n: usize, dim: usize) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_n);
    let p: f64 = rng.random_range(0.05..0.6);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    let x: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
    build_graph(n, &edges, Some(DenseMatrix::from_vec(n, dim, x).unwrap()), Some(labels)).unwrap().0
}

pub fn adjacency_bits(g: &Graph) -> Vec<u64> {
    let mut adj = vec![0u64; g.num_nodes()];
    for &(u, v) in g.edges() {
        adj[u] |= 1 << v;
        adj[v] |= 1 << u;
    }
    adj
}

/// Counts vertex subsets of size `1..=max_dim+1` that are pairwise adjacent,
/// by enumerating every subset of each size in lexicographic order.
pub fn brute_clique_counts(g: &Graph, max_dim: usize) -> Vec<usize> {
    let n = g.num_nodes();
    assert!(n <= 64);
    let adj = adjacency_bits(g);
    let mut counts = vec![0; max_dim + 1];
    for size in 1..=max_dim + 1 {
        let mut combo: Vec<usize> = (0..size).collect();
        if size > n {
            continue;
        }
        loop {
            let clique = combo.iter().enumerate().all(|(i, &u)| combo[i + 1..].iter().all(|&v| adj[u] >> v & 1 == 1));
            if clique {
                counts[size - 1] += 1;
            }
            let mut i = size;
            while i > 0 && combo[i - 1] == n - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    counts
}

pub fn components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    let mut count = n;
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            count -= 1;
        }
    }
    count
}

/// Entries of a signed operator as exact integers.
pub fn integer_entries(op: &SparseOperator) -> HashMap<(usize, usize), i64> {
    let mut m = HashMap::new();
    for &(r, c, v) in op.entries() {
        assert_eq!(v, v.round(), "non-integer boundary entry {v}");
        *m.entry((r, c)).or_insert(0) += v as i64;
    }
    m
}

/// `a · b` in integer arithmetic, returning only the non-zero entries.
pub fn integer_product(a: &SparseOperator, b: &SparseOperator) -> HashMap<(usize, usize), i64> {
    assert_eq!(a.cols(), b.rows());
    let mut by_row: HashMap<usize, Vec<(usize, i64)>> = HashMap::new();
    for ((r, c), v) in integer_entries(b) {
        by_row.entry(r).or_default().push((c, v));
    }
    let mut out: HashMap<(usize, usize), i64> = HashMap::new();
    for ((i, k), v) in integer_entries(a) {
        for &(j, w) in by_row.get(&k).map(Vec::as_slice).unwrap_or(&[]) {
            *out.entry((i, j)).or_insert(0) += v * w;
        }
    }
    out.retain(|_, v| *v != 0);
    out
}

pub fn to_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn vec_mat(x: &[f64], w: &DenseMatrix) -> Vec<f64> {
    (0..w.cols()).map(|j| x.iter().enumerate().map(|(k, xk)| xk * w.get(k, j)).sum()).collect()
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

/// Node-level message passing written from the textbook recurrence:
/// `h_v ← ψ(h_v, ⊕_{u ∈ N(v)} φ(h_u))` with `φ(h) = h·W`, `⊕` a sum or a
/// mean, and `ψ` one of the three update rules. The input encoder is
/// `relu(x·E)`. Weights are read from a model state by id.
pub fn dense_graph_mp(g: &Graph, x: &DenseMatrix, state: &ModelState, layers: usize, intra: IntraAgg, update: Update) -> Vec<Vec<f64>> {
    let w = |id: &str| state.get(id).unwrap_or_else(|| panic!("missing {id}")).value.clone();
    let nbrs = g.adjacency_lists();
    let enc = w("encoder.0");
    let mut h: Vec<Vec<f64>> = to_rows(x).iter().map(|row| vec_mat(row, &enc).into_iter().map(relu).collect()).collect();
    for l in 0..layers {
        let wm = w(&format!("layer.{l}.rank.0.nbr.0"));
        let phi: Vec<Vec<f64>> = h.iter().map(|hu| vec_mat(hu, &wm)).collect();
        let mut next = Vec::with_capacity(h.len());
        for v in 0..h.len() {
            let mut m = vec![0.0; wm.cols()];
            for &u in &nbrs[v] {
                for (a, b) in m.iter_mut().zip(&phi[u]) {
                    *a += b;
                }
            }
            if intra == IntraAgg::Mean && !nbrs[v].is_empty() {
                let d = nbrs[v].len() as f64;
                m.iter_mut().for_each(|a| *a /= d);
            }
            next.push(match update {
                Update::Identity => m,
                Update::ReluPlain | Update::ReluResidual => {
                    let hu = vec_mat(&h[v], &w(&format!("layer.{l}.rank.0.update")));
                    let act = hu.iter().zip(&m).map(|(a, b)| relu(a + b));
                    if update == Update::ReluResidual {
                        act.zip(&h[v]).map(|(a, b)| a + b).collect()
                    } else {
                        act.collect()
                    }
                }
            });
        }
        h = next;
    }
    h
}

/// Applies a node relabelling `perm[old] = new` to a graph.
pub fn permute_graph(g: &Graph, x: &DenseMatrix, perm: &[usize]) -> Graph {
    let n = g.num_nodes();
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
    let mut px = DenseMatrix::zeros(n, x.cols());
    for old in 0..n {
        px.row_mut(perm[old]).copy_from_slice(x.row(old));
    }
    build_graph(n, &edges, Some(px), None).unwrap().0
}

pub fn factorial(r: usize) -> f64 {
    (1..=r).map(|k| k as f64).product()
}
