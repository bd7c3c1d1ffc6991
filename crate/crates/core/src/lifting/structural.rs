//! Structural liftings from graphs to higher-order domains.

use std::collections::VecDeque;

use crate::complex::{CellComplex, Graph, Hypergraph, Simplex, SimplicialComplex};
use crate::error::{Error, Result};

/// Clique complex: every `(r+1)`-clique becomes an `r`-simplex, for `r <= max_dim`.
///
/// Cliques are grown by ordered extension: a clique is only extended by
/// vertices larger than all its members, so each clique is produced once and
/// every rank comes out lexicographically sorted.
pub fn lift_clique(g: &Graph, max_dim: usize) -> SimplicialComplex {
    let n = g.num_nodes();
    let mut forward = vec![Vec::new(); n];
    for &(u, v) in g.edges() {
        forward[u].push(v);
    }
    let mut cells: Vec<Vec<Simplex>> = Vec::with_capacity(max_dim + 1);
    cells.push((0..n).map(|v| Simplex::from_sorted(vec![v])).collect());

    // (clique, common forward neighbors of all members)
    let mut frontier: Vec<(Vec<usize>, Vec<usize>)> = (0..n).map(|v| (vec![v], forward[v].clone())).collect();
    for _ in 1..=max_dim {
        let mut next = Vec::new();
        for (clique, cands) in &frontier {
            for &v in cands {
                let mut grown = clique.clone();
                grown.push(v);
                next.push((grown, intersect_sorted(cands, &forward[v])));
            }
        }
        cells.push(next.iter().map(|(c, _)| Simplex::from_sorted(c.clone())).collect());
        frontier = next;
    }
    SimplicialComplex::new_unchecked(cells)
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Calls `f` on every `k`-subset of `items`, in lexicographic order.
fn for_each_combination(items: &[usize], k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..=items.len() - (k - cur.len()) {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, f);
            cur.pop();
        }
    }
    if k <= items.len() {
        rec(items, k, 0, &mut Vec::with_capacity(k), f);
    }
}

/// Neighborhood complex: each closed neighborhood `{v} ∪ N(v)` spans a
/// simplex, split into its `(max_dim+1)`-subsets when it is larger than
/// that. Empty top ranks are trimmed, keeping at least ranks 0 and 1.
pub fn lift_neighborhood(g: &Graph, max_dim: usize, max_neighborhood_size: usize) -> Result<SimplicialComplex> {
    let adj = g.adjacency_lists();
    let mut simplices = Vec::new();
    for (v, nbrs) in adj.iter().enumerate() {
        let mut closed = nbrs.clone();
        closed.push(v);
        closed.sort_unstable();
        if closed.len() > max_neighborhood_size {
            return Err(Error::NeighborhoodTooLarge { node: v, size: closed.len(), limit: max_neighborhood_size });
        }
        if closed.len() <= max_dim + 1 {
            simplices.push(closed);
        } else {
            for_each_combination(&closed, max_dim + 1, &mut |s| simplices.push(s.to_vec()));
        }
    }
    let sc = SimplicialComplex::from_closure(g.num_nodes(), simplices, max_dim)?;
    let mut cells = sc.all_cells().to_vec();
    while cells.len() > 2 && cells.last().is_some_and(Vec::is_empty) {
        cells.pop();
    }
    Ok(SimplicialComplex::new_unchecked(cells))
}

/// Parent pointers and depths of a BFS forest. Roots are the smallest node
/// of each component; neighbors are expanded in ascending order.
pub(crate) fn bfs_forest(g: &Graph) -> (Vec<Option<usize>>, Vec<usize>, usize) {
    let adj = g.adjacency_lists();
    let n = g.num_nodes();
    let mut parent = vec![None; n];
    let mut depth = vec![0; n];
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        components += 1;
        seen[root] = true;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(u);
                    depth[w] = depth[u] + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    (parent, depth, components)
}

/// Cell complex whose 2-cells are the fundamental cycles of a BFS forest.
/// Cycles longer than `max_cell_length` are dropped.
pub fn lift_cycle(g: &Graph, max_cell_length: Option<usize>) -> Result<CellComplex> {
    let (parent, depth, _) = bfs_forest(g);
    let is_tree_edge = |u: usize, v: usize| parent[v] == Some(u) || parent[u] == Some(v);
    let mut cycles = Vec::new();
    for &(u, v) in g.edges() {
        if is_tree_edge(u, v) {
            continue;
        }
        // climb both endpoints to their lowest common ancestor
        let (mut a, mut b) = (u, v);
        let mut from_u = vec![a];
        let mut from_v = vec![b];
        while a != b {
            if depth[a] >= depth[b] {
                a = parent[a].expect("non-root has a parent");
                from_u.push(a);
            } else {
                b = parent[b].expect("non-root has a parent");
                from_v.push(b);
            }
        }
        from_v.pop();
        from_u.extend(from_v.into_iter().rev());
        if max_cell_length.is_none_or(|cap| from_u.len() <= cap) {
            cycles.push(from_u);
        }
    }
    CellComplex::from_cycles(g, cycles)
}

/// One candidate hyperedge per node: the closed ball of radius `k`, before
/// deduplication.
pub fn khop_candidates(g: &Graph, k: usize) -> Vec<Vec<usize>> {
    let adj = g.adjacency_lists();
    let n = g.num_nodes();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut out = Vec::with_capacity(n);
    for v in 0..n {
        let mut ball = vec![v];
        dist[v] = 0;
        queue.push_back(v);
        while let Some(u) = queue.pop_front() {
            if dist[u] == k {
                continue;
            }
            for &w in &adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    ball.push(w);
                    queue.push_back(w);
                }
            }
        }
        for &u in &ball {
            dist[u] = usize::MAX;
        }
        ball.sort_unstable();
        out.push(ball);
    }
    out
}

/// Hypergraph with one hyperedge per distinct closed `k`-ball.
pub fn lift_khop(g: &Graph, k: usize) -> Result<Hypergraph> {
    Hypergraph::new(g.num_nodes(), khop_candidates(g, k))
}

/// Hypergraph with one hyperedge per node: the node and its `k` nearest
/// other nodes by Euclidean feature distance, ties to the smaller id.
pub fn lift_knn(g: &Graph, k: usize) -> Result<Hypergraph> {
    let x = g
        .node_features
        .as_ref()
        .ok_or_else(|| Error::Unsupported("knn lifting needs node features".into()))?;
    let n = g.num_nodes();
    if k == 0 || k >= n {
        return Err(Error::config(format!("knn needs 1 <= k < num_nodes, got k={k}, n={n}")));
    }
    let mut edges = Vec::with_capacity(n);
    for v in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&u| u != v)
            .map(|u| {
                let d: f64 = x.row(u).iter().zip(x.row(v)).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, u)
            })
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut e: Vec<usize> = others[..k].iter().map(|&(_, u)| u).collect();
        e.push(v);
        edges.push(e);
    }
    Hypergraph::new(n, edges)
}
