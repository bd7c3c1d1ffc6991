mod common;

use std::collections::{BTreeSet, HashSet};

use common::*;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use topoforge::complex::{
    adjacency_matrix, boundary_matrix, disjoint_union, AdjacencyVia, Complex, FeaturedComplex, Graph, GraphLabel,
    NeighborhoodKind, SparseOperator,
};
use topoforge::homp::{DomainSignature, HompLayerConfig, InterAgg, IntraAgg, NeighborhoodEntry, RankTarget, ReadoutKind, Task, Update};
use topoforge::lifting::{apply_lifting, khop_candidates, lift_clique, lift_cycle, lift_khop, LiftingConfig, StructuralLifting};
use topoforge::metrics::auc_roc;
use topoforge::numerics::Tape;
use topoforge::{metric, DenseMatrix, HompModel, MetricKind, ModelConfig, Targets};

fn clique(g: &Graph, max_dim: usize) -> Complex {
    Complex::Simplicial(lift_clique(g, max_dim))
}

fn lifted(g: &Graph, s: StructuralLifting) -> FeaturedComplex {
    apply_lifting(g, &LiftingConfig::new(s)).unwrap()
}

fn small_model(task: Task, readout: ReadoutKind, sig: DomainSignature) -> (HompModel, topoforge::ModelState) {
    let mut cfg = ModelConfig::new(task);
    cfg.hidden_dim = 5;
    cfg.readout = readout;
    cfg.seed = 7;
    let model = HompModel::new(cfg, sig).unwrap();
    let state = model.init();
    (model, state)
}

fn latents(model: &HompModel, state: &topoforge::ModelState, samples: &[FeaturedComplex]) -> Vec<DenseMatrix> {
    let batch = model.prepare(samples).unwrap();
    let mut tape = Tape::new();
    let out = model.forward(&mut tape, state, &batch, false, &mut StdRng::seed_from_u64(0)).unwrap();
    out.iter().map(|&v| tape.value(v).clone()).collect()
}

fn predictions(model: &HompModel, state: &topoforge::ModelState, samples: &[FeaturedComplex]) -> DenseMatrix {
    let batch = model.prepare(samples).unwrap();
    let mut tape = Tape::new();
    let out = model.predict(&mut tape, state, &batch, false, &mut StdRng::seed_from_u64(0)).unwrap();
    tape.value(out).clone()
}

fn pairs(op: &SparseOperator) -> BTreeSet<(usize, usize)> {
    op.entries().iter().filter(|e| e.2 != 0.0).map(|&(r, c, _)| (r, c)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn boundary_of_boundary_vanishes(seed in any::<u64>()) {
        let g = random_graph(seed, 16, 1);
        let sc = clique(&g, 3);
        for r in 2..=sc.max_rank() {
            let a = boundary_matrix(&sc, r - 1, true).unwrap();
            let b = boundary_matrix(&sc, r, true).unwrap();
            prop_assert!(integer_product(&a, &b).is_empty());
        }
        let cc = Complex::Cell(lift_cycle(&g, None).unwrap());
        let prod = integer_product(&boundary_matrix(&cc, 1, true).unwrap(), &boundary_matrix(&cc, 2, true).unwrap());
        prop_assert!(prod.is_empty());
    }

    #[test]
    fn clique_counts_match_enumeration(seed in any::<u64>(), max_dim in 1usize..=3) {
        let g = random_graph(seed, 14, 1);
        let sc = clique(&g, max_dim);
        let counts: Vec<usize> = (0..=max_dim).map(|r| sc.num_cells(r)).collect();
        prop_assert_eq!(counts, brute_clique_counts(&g, max_dim));
    }

    #[test]
    fn cycle_rank_is_cyclomatic_number(seed in any::<u64>()) {
        let g = random_graph(seed, 20, 1);
        let cc = lift_cycle(&g, None).unwrap();
        let expected = g.num_edges() + components(g.num_nodes(), g.edges()) - g.num_nodes();
        prop_assert_eq!(cc.num_cells(2), expected);
        for cycle in cc.two_cells() {
            prop_assert!(cycle.len() >= 3);
        }
    }

    #[test]
    fn adjacency_matches_pairwise_definition(seed in any::<u64>()) {
        let g = random_graph(seed, 12, 1);
        let c = clique(&g, 2);
        let expect0: BTreeSet<(usize, usize)> = g.edges().iter().flat_map(|&(u, v)| [(u, v), (v, u)]).collect();
        prop_assert_eq!(pairs(&adjacency_matrix(&c, 0, AdjacencyVia::Up).unwrap()), expect0);

        let edges = c.cell_sets(1);
        let tris: HashSet<Vec<usize>> = c.cell_sets(2).into_iter().collect();
        let mut down = BTreeSet::new();
        let mut up = BTreeSet::new();
        for (i, a) in edges.iter().enumerate() {
            for (j, b) in edges.iter().enumerate() {
                if i == j {
                    continue;
                }
                if a.iter().any(|v| b.contains(v)) {
                    down.insert((i, j));
                    let mut t: Vec<usize> = a.iter().chain(b).copied().collect::<BTreeSet<_>>().into_iter().collect();
                    t.sort_unstable();
                    if tris.contains(&t) {
                        up.insert((i, j));
                    }
                }
            }
        }
        prop_assert_eq!(pairs(&adjacency_matrix(&c, 1, AdjacencyVia::Down).unwrap()), down);
        prop_assert_eq!(pairs(&adjacency_matrix(&c, 1, AdjacencyVia::Up).unwrap()), up);
    }

    #[test]
    fn union_operators_are_block_diagonal(seeds in prop::collection::vec(any::<u64>(), 1..4)) {
        let parts: Vec<FeaturedComplex> = seeds.iter().map(|&s| lifted(&random_graph(s, 10, 2), StructuralLifting::Clique { max_dim: 2 })).collect();
        let (u, batch) = disjoint_union(&parts).unwrap();
        for r in 1..=2 {
            let blocks: Vec<SparseOperator> = parts.iter().map(|p| boundary_matrix(&p.complex().padded(2), r, true).unwrap()).collect();
            let expected = SparseOperator::block_diagonal(&blocks).unwrap();
            prop_assert_eq!(boundary_matrix(u.complex(), r, true).unwrap().to_dense(), expected.to_dense());
        }
        let owners: Vec<usize> = parts.iter().enumerate().flat_map(|(k, p)| std::iter::repeat_n(k, p.num_nodes())).collect();
        prop_assert_eq!(batch.rank(0), owners.as_slice());
    }

    #[test]
    fn projected_sum_scales_vertex_sums(seed in any::<u64>()) {
        let g = random_graph(seed, 12, 2);
        let x = FeaturedComplex::from_graph(&g).features()[0].clone();
        let vertex_sum = |cell: &[usize], j: usize| cell.iter().map(|&v| x.get(v, j)).sum::<f64>();

        let sc = lifted(&g, StructuralLifting::Clique { max_dim: 3 });
        for r in 0..=3 {
            for (i, cell) in sc.complex().cell_sets(r).iter().enumerate() {
                for j in 0..2 {
                    let want = factorial(r) * vertex_sum(cell, j);
                    prop_assert!((sc.features()[r].get(i, j) - want).abs() <= 1e-12 * (1.0 + want.abs()));
                }
            }
        }
        let cc = lifted(&g, StructuralLifting::Cycle { max_cell_length: None });
        for (i, cycle) in cc.complex().cell_sets(2).iter().enumerate() {
            for j in 0..2 {
                let want = 2.0 * vertex_sum(cycle, j);
                prop_assert!((cc.features()[2].get(i, j) - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
        }
        let hg = lifted(&g, StructuralLifting::Khop { k: 1 });
        for (i, e) in hg.complex().cell_sets(1).iter().enumerate() {
            prop_assert!((hg.features()[1].get(i, 0) - vertex_sum(e, 0)).abs() <= 1e-12);
        }
    }

    #[test]
    fn khop_cardinality(seed in any::<u64>()) {
        let g = random_graph(seed, 15, 1);
        prop_assert_eq!(khop_candidates(&g, 1).len(), g.num_nodes());
        let h1 = lift_khop(&g, 1).unwrap();
        prop_assert!(h1.hyperedges().len() <= g.num_nodes());
        let distinct: HashSet<Vec<usize>> = g
            .adjacency_lists()
            .iter()
            .enumerate()
            .map(|(v, n)| n.iter().copied().chain([v]).collect::<BTreeSet<_>>().into_iter().collect())
            .collect();
        prop_assert_eq!(h1.hyperedges().len(), distinct.len());
        let far = lift_khop(&g, g.num_nodes().max(1)).unwrap();
        prop_assert_eq!(far.hyperedges().len(), components(g.num_nodes(), g.edges()));
    }

    #[test]
    fn node_latents_are_permutation_equivariant(seed in any::<u64>(), rot in 1usize..7) {
        let g = random_graph(seed, 12, 3);
        let n = g.num_nodes();
        let x = FeaturedComplex::from_graph(&g).features()[0].clone();
        let perm: Vec<usize> = (0..n).map(|i| (i * 5 + rot) % n).collect();
        let distinct: HashSet<usize> = perm.iter().copied().collect();
        prop_assume!(distinct.len() == n);
        let pg = permute_graph(&g, &x, &perm);
        let a = lifted(&g, StructuralLifting::Clique { max_dim: 2 });
        let b = lifted(&pg, StructuralLifting::Clique { max_dim: 2 });
        let (model, state) = small_model(Task::NodeClassification, ReadoutKind::Dr, DomainSignature::of(&a, 3));
        let ha = &latents(&model, &state, &[a])[0];
        let hb = &latents(&model, &state, &[b])[0];
        for v in 0..n {
            for j in 0..ha.cols() {
                prop_assert!((ha.get(v, j) - hb.get(perm[v], j)).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn batched_forward_equals_per_sample(seeds in prop::collection::vec(any::<u64>(), 2..5)) {
        let parts: Vec<FeaturedComplex> = seeds.iter().map(|&s| lifted(&random_graph(s, 10, 2), StructuralLifting::Clique { max_dim: 2 })).collect();
        let (model, state) = small_model(Task::NodeClassification, ReadoutKind::Dr, DomainSignature::new(vec![2, 2, 2], 3));
        let joint = latents(&model, &state, &parts);
        let mut offset = [0; 3];
        for p in &parts {
            let alone = latents(&model, &state, std::slice::from_ref(p));
            for r in 0..3 {
                let rows = p.complex().padded(2).num_cells(r);
                for i in 0..rows {
                    for j in 0..alone[r].cols() {
                        prop_assert!((joint[r].get(offset[r] + i, j) - alone[r].get(i, j)).abs() <= 1e-12);
                    }
                }
                offset[r] += rows;
            }
        }
    }

    #[test]
    fn mean_pool_is_node_order_invariant(seed in any::<u64>(), rot in 1usize..5) {
        let mut g = random_graph(seed, 12, 2);
        let n = g.num_nodes();
        let x = FeaturedComplex::from_graph(&g).features()[0].clone();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let mut pg = permute_graph(&g, &x, &perm);
        g.set_labels(None).unwrap();
        let tag = |g: &Graph| {
            let mut fc = lifted(g, StructuralLifting::Clique { max_dim: 2 });
            fc.labels.graph_label = Some(GraphLabel::Class(1));
            fc
        };
        let a = tag(&g);
        pg.set_labels(None).unwrap();
        let b = tag(&pg);
        for readout in [ReadoutKind::Dr, ReadoutKind::Sdp] {
            let (model, state) = small_model(Task::GraphClassification, readout, DomainSignature::new(vec![2, 2, 2], 2));
            let pa = predictions(&model, &state, std::slice::from_ref(&a));
            let pb = predictions(&model, &state, std::slice::from_ref(&b));
            prop_assert!(pa.max_abs_diff(&pb) <= 1e-10);
        }
    }

    #[test]
    fn auc_is_invariant_under_monotone_maps(scores in prop::collection::vec(-5.0f64..5.0, 4..60), bits in any::<u64>()) {
        let labels: Vec<bool> = (0..scores.len()).map(|i| bits >> (i % 64) & 1 == 1).collect();
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let base = auc_roc(&scores, &labels).unwrap();
        let warped: Vec<f64> = scores.iter().map(|s| (s * 0.5).exp() * 3.0 + 1.0).collect();
        prop_assert_eq!(auc_roc(&warped, &labels).unwrap(), base);
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        prop_assert!((auc_roc(&scores, &flipped).unwrap() - (1.0 - base)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn metrics_combine_by_sample_weight(values in prop::collection::vec(-3.0f64..3.0, 6..40), cut in 1usize..5) {
        let n = values.len();
        let cut = (n * cut / 6).clamp(1, n - 1);
        let preds = DenseMatrix::from_vec(n, 1, values.clone()).unwrap();
        let truth: Vec<f64> = values.iter().map(|v| (v * 1.7).sin()).collect();
        let targets = Targets::Values(truth);
        let (head, tail): (Vec<usize>, Vec<usize>) = ((0..cut).collect(), (cut..n).collect());
        for kind in [MetricKind::Mse, MetricKind::Mae] {
            let all = metric(kind, &preds, &targets).unwrap();
            let a = metric(kind, &preds.select_rows(&head).unwrap(), &targets.select(&head)).unwrap();
            let b = metric(kind, &preds.select_rows(&tail).unwrap(), &targets.select(&tail)).unwrap();
            let combined = (a.value * a.n as f64 + b.value * b.n as f64) / n as f64;
            prop_assert!((all.value - combined).abs() <= 1e-12 * (1.0 + all.value.abs()));
        }
        let logits = DenseMatrix::from_vec(n, 2, values.iter().flat_map(|&v| [v, -v]).collect()).unwrap();
        let classes = Targets::Classes((0..n).map(|i| i % 2).collect());
        let all = metric(MetricKind::Accuracy, &logits, &classes).unwrap();
        let a = metric(MetricKind::Accuracy, &logits.select_rows(&head).unwrap(), &classes.select(&head)).unwrap();
        let b = metric(MetricKind::Accuracy, &logits.select_rows(&tail).unwrap(), &classes.select(&tail)).unwrap();
        let correct = |r: &topoforge::MetricReport| (r.value * r.n as f64).round() as usize;
        prop_assert_eq!(correct(&all), correct(&a) + correct(&b));
    }
}

#[test]
fn single_neighborhood_rank0_model_is_graph_message_passing() {
    for seed in 0..20u64 {
        let g = random_graph(seed, 20, 3);
        let fc = FeaturedComplex::from_graph(&g);
        let intra = if seed % 2 == 0 { IntraAgg::Sum } else { IntraAgg::Mean };
        let update = [Update::ReluResidual, Update::ReluPlain, Update::Identity][seed as usize % 3];
        let mut cfg = ModelConfig::new(Task::NodeClassification);
        cfg.hidden_dim = 4;
        cfg.seed = seed;
        cfg.layer = HompLayerConfig {
            targets: vec![RankTarget { rank: 0, neighborhoods: vec![NeighborhoodEntry::new(NeighborhoodKind::UpAdjacency, 0)] }],
            intra_agg: intra,
            inter_agg: InterAgg::Sum,
            update,
        };
        let model = HompModel::new(cfg, DomainSignature::of(&fc, 3)).unwrap();
        let state = model.init();
        let h = &latents(&model, &state, std::slice::from_ref(&fc))[0];
        let oracle = dense_graph_mp(&g, &fc.features()[0], &state, 2, intra, update);
        for (v, row) in oracle.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                assert!((h.get(v, j) - want).abs() <= 1e-12, "seed {seed} node {v}");
            }
        }
    }
}

#[test]
fn dyadic_metric_combination_is_exact() {
    let preds = DenseMatrix::from_vec(8, 1, vec![0.5, 1.0, -0.25, 2.0, 0.0, 0.75, -1.5, 0.125]).unwrap();
    let targets = Targets::Values(vec![0.0, 1.5, 0.25, 1.0, -0.5, 0.75, -1.0, 0.0]);
    let (a, b): (Vec<usize>, Vec<usize>) = ((0..4).collect(), (4..8).collect());
    for kind in [MetricKind::Mse, MetricKind::Mae] {
        let all = metric(kind, &preds, &targets).unwrap().value;
        let ra = metric(kind, &preds.select_rows(&a).unwrap(), &targets.select(&a)).unwrap().value;
        let rb = metric(kind, &preds.select_rows(&b).unwrap(), &targets.select(&b)).unwrap().value;
        assert_eq!(all, (ra * 4.0 + rb * 4.0) / 8.0);
    }
}
