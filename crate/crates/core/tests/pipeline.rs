use std::fs;
use std::path::Path;

use proptest::prelude::*;
use topoforge::complex::io::write_featured;
use topoforge::homp::{ModelConfig, Task};
use topoforge::lifting::{LiftingConfig, StructuralLifting};
use topoforge::metrics::{metric, MetricKind};
use topoforge::pipeline::*;
use topoforge::{build_graph, FeaturedComplex};

fn config_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/sbm.toml")
}

fn sbm_config(tmp: &Path) -> RunConfig {
    let mut cfg = load_run_config(&config_path()).unwrap();
    cfg.output_dir = Some(tmp.join("out"));
    cfg
}

#[test]
fn bundled_sbm_config_trains() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = sbm_config(tmp.path());
    let mut cache = CacheStore::new(tmp.path().join("cache"));
    let report = run_experiment(&cfg, &mut cache).unwrap();
    let run = &report.runs[0];
    println!("train {} val {} test {} best {} epochs {}", run.train.value, run.val.value, run.test.value, run.best_epoch, run.epochs_run);
    assert!(run.train.value >= 0.9);
    assert!(run.test.value >= 0.8);
    assert_eq!(run.test_evaluations_during_training, 0);
}

#[test]
fn rerun_is_bitwise_identical_and_hits_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = sbm_config(tmp.path());
    cfg.trainer.max_epochs = 60;
    let mut cache = CacheStore::new(tmp.path().join("cache"));
    let a = run_experiment(&cfg, &mut cache).unwrap();
    let b = run_experiment(&cfg, &mut cache).unwrap();
    assert_eq!(a.cache.computed, 1);
    assert_eq!(b.cache.computed, 0);
    assert_eq!(b.cache.hits, a.num_samples);
    assert_eq!(a.deterministic_part().to_json(), b.deterministic_part().to_json());
    assert_eq!(a.metrics_csv(), b.metrics_csv());
}

fn graph_bundle(n: usize) -> DatasetBundle {
    let spec = GraphSetSpec { graphs: n, min_nodes: 5, max_nodes: 9, chords: 3, seed: 4 };
    let samples = synthetic_graph_set(&spec).unwrap().iter().map(FeaturedComplex::from_graph).collect();
    DatasetBundle::new("graphs", samples, Task::GraphClassification, &[]).unwrap()
}

#[test]
fn cache_counts_and_partial_recompute() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = graph_bundle(6);
    let lift = LiftingConfig::new(StructuralLifting::Clique { max_dim: 2 });
    let mut cache = CacheStore::new(tmp.path());
    let first = preprocess(&bundle, &lift, &mut cache).unwrap();
    assert_eq!(cache.counters, CacheCounters { computed: 6, hits: 0, corrupt: 0 });
    let second = preprocess(&bundle, &lift, &mut cache).unwrap();
    assert_eq!(cache.counters.hits, 6);
    assert_eq!(cache.counters.computed, 6);
    assert_eq!(first, second);

    let digest = transform_digest(&bundle.name, &bundle.content_digest(), &lift);
    let dir = cache.entry_dir(&digest).unwrap();
    fs::remove_file(dir.join("sample_000002.json")).unwrap();
    fs::write(dir.join("sample_000004.json"), "{not json").unwrap();
    let third = preprocess(&bundle, &lift, &mut cache).unwrap();
    assert_eq!(cache.counters, CacheCounters { computed: 8, hits: 10, corrupt: 1 });
    assert_eq!(first, third);

    let other = LiftingConfig::new(StructuralLifting::Clique { max_dim: 3 });
    assert_ne!(transform_digest(&bundle.name, &bundle.content_digest(), &other), digest);
    preprocess(&bundle, &other, &mut cache).unwrap();
    assert_eq!(cache.counters.computed, 14);
}

#[test]
fn digest_is_canonical() {
    let a: LiftingConfig = serde_json::from_str(r#"{"max_dim":2,"lifting":"clique"}"#).unwrap();
    let b: LiftingConfig = serde_json::from_str(r#"{ "lifting": "clique", "max_dim": 2 }"#).unwrap();
    assert_eq!(canonical_json(&a), canonical_json(&b));
    assert_eq!(transform_digest("d", "s", &a).len(), 64);
}

#[test]
fn container_directory_loads_in_name_order() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, n) in [("b.json", 4), ("a.json", 3), ("c.json", 5)] {
        let g = build_graph(n, &[(0, 1)], None, None).unwrap().0;
        write_featured(&tmp.path().join(name), &FeaturedComplex::from_graph(&g)).unwrap();
    }
    let b = load_dataset(tmp.path(), DatasetFormat::Container, Some(Task::GraphRegression)).unwrap();
    let sizes: Vec<usize> = b.samples.iter().map(|s| s.num_nodes()).collect();
    assert_eq!(sizes, vec![3, 4, 5]);
}

#[test]
fn mixed_widths_name_both_files() {
    let tmp = tempfile::tempdir().unwrap();
    let g = build_graph(2, &[(0, 1)], None, None).unwrap().0;
    write_featured(&tmp.path().join("one.json"), &FeaturedComplex::from_graph(&g)).unwrap();
    let wide = build_graph(2, &[(0, 1)], Some(topoforge::DenseMatrix::zeros(2, 3)), None).unwrap().0;
    write_featured(&tmp.path().join("two.json"), &FeaturedComplex::from_graph(&wide)).unwrap();
    let err = load_dataset(tmp.path(), DatasetFormat::Container, Some(Task::GraphRegression)).unwrap_err().to_string();
    assert!(err.contains("one.json") && err.contains("two.json"), "{err}");
}

#[test]
fn edge_list_directory_with_siblings() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("edges.txt"), "nodes 3\n0 1\n1 2\n").unwrap();
    fs::write(tmp.path().join("features.csv"), "a,b\n1,0\n0,1\n1,1\n").unwrap();
    fs::write(tmp.path().join("labels.csv"), "0\n1\n0\n").unwrap();
    let b = load_dataset(tmp.path(), DatasetFormat::EdgeListDir, None).unwrap();
    assert_eq!(b.task, Task::NodeClassification);
    let g = b.samples[0].to_graph().unwrap();
    assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    assert_eq!(g.node_features.unwrap().cols(), 2);
    assert_eq!(g.node_labels.unwrap(), vec![0, 1, 0]);
}

#[test]
fn citation_pair_layout() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("toy.content"), "10\t1\t0\tB\n20\t0\t1\tA\n30\t1\t1\tB\n").unwrap();
    fs::write(tmp.path().join("toy.cites"), "10\t20\n20\t30\n30\t99\n20\t10\n").unwrap();
    let b = load_dataset(tmp.path(), DatasetFormat::EdgeListDir, None).unwrap();
    let g = b.samples[0].to_graph().unwrap();
    assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    assert_eq!(g.node_labels.unwrap(), vec![1, 0, 1]);
}

#[test]
fn graph_level_training_runs_and_stops_on_cadence() {
    let bundle = graph_bundle(24);
    let lift = LiftingConfig::new(StructuralLifting::Cycle { max_cell_length: None });
    let lifted = preprocess(&bundle, &lift, &mut CacheStore::disabled()).unwrap();
    let splits = make_splits(lifted.len(), &SplitSpec::random(0.5, 0.25, 1)).unwrap();
    let mut mcfg = ModelConfig::new(Task::GraphClassification);
    mcfg.hidden_dim = 8;
    let tcfg = TrainConfig { max_epochs: 40, batch_size: 4, min_epochs: 10, ..Default::default() };
    let out = train(&mcfg, &lifted, &splits, &tcfg, &OptimizerConfig::default(), MetricKind::Accuracy).unwrap();
    assert!(out.report.history.iter().filter(|r| r.split == "val").all(|r| r.epoch % 5 == 0));
    let direct = evaluate(&out.model, &out.state, &lifted, &splits.test, MetricKind::Accuracy).unwrap();
    assert_eq!(direct, out.report.test);
}

#[test]
fn frozen_validation_stops_on_schedule() {
    // zero learning-signal: every node has the same label, so validation accuracy never moves
    let g = build_graph(12, &[(0, 1), (1, 2), (2, 3)], None, Some(vec![0; 12])).unwrap().0;
    let bundle = DatasetBundle::new("flat", vec![FeaturedComplex::from_graph(&g)], Task::NodeClassification, &[]).unwrap();
    let splits = make_splits(12, &SplitSpec::random(0.5, 0.25, 0)).unwrap();
    let mut mcfg = ModelConfig::new(Task::NodeClassification);
    mcfg.hidden_dim = 4;
    for (eval_every, patience, min_epochs) in [(1, 5, 3), (1, 5, 20), (3, 2, 1)] {
        let tcfg = TrainConfig {
            max_epochs: 100,
            eval_every: Some(eval_every),
            patience: Some(patience),
            min_epochs,
            ..Default::default()
        };
        let out = train(&mcfg, &bundle, &splits, &tcfg, &OptimizerConfig::default(), MetricKind::Accuracy).unwrap();
        assert_eq!(out.report.epochs_run, min_epochs.max(eval_every + patience * eval_every));
        assert_eq!(out.report.best_epoch, eval_every);
    }
}

#[test]
fn evaluate_matches_metric_on_collected_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = sbm_config(tmp.path());
    cfg.trainer.max_epochs = 20;
    cfg.trainer.min_epochs = 1;
    let raw = load_configured_dataset(&cfg).unwrap();
    let lifted = preprocess(&raw, cfg.transforms.as_ref().unwrap(), &mut CacheStore::disabled()).unwrap();
    let splits = make_splits(60, &cfg.split_for_run(0)).unwrap();
    let out = train(&cfg.model, &lifted, &splits, &cfg.trainer, &cfg.optimizer, MetricKind::Accuracy).unwrap();
    let ev = Evaluator::new(&out.model, &lifted, 32).unwrap();
    let preds = ev.predictions(&out.state, &splits.val).unwrap();
    let direct = metric(MetricKind::Accuracy, &preds, &ev.targets().select(&splits.val)).unwrap();
    assert_eq!(direct, out.report.val);
}

#[test]
fn config_violations_are_all_listed() {
    let mut cfg = load_run_config(&config_path()).unwrap();
    cfg.dataset.split = SplitSpec::random(0.9, 0.2, 0);
    cfg.model.dropout = 1.5;
    cfg.optimizer.lr = -1.0;
    let v = cfg.violations();
    assert!(v.iter().any(|m| m.contains("fractions exceed 1")), "{v:?}");
    assert!(v.len() >= 3);
    let text = cfg.to_toml();
    assert!(RunConfig::from_toml(&text).is_ok());
    assert!(RunConfig::from_toml("[dataset]\nbogus = 1\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_splits_partition(n in 3usize..1000, seed in 0u64..20) {
        let s = make_splits(n, &SplitSpec::random(0.5, 0.25, seed)).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn kfold_splits_partition(n in 3usize..1000, seed in 0u64..20, k in 3usize..8) {
        prop_assume!(n >= k);
        let mut tests = vec![0; n];
        for f in 0..k {
            let s = make_splits(n, &SplitSpec::kfold(k, f, seed)).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            for &i in &s.test {
                tests[i] += 1;
            }
        }
        prop_assert!(tests.iter().all(|&c| c == 1));
    }

    #[test]
    fn batches_cover_indices(n in 1usize..60, bs in 1usize..10, seed in 0u64..5, shuffle in any::<bool>()) {
        let idx: Vec<usize> = (0..n).collect();
        let b = batch_iter(&idx, bs, seed, shuffle).unwrap();
        prop_assert_eq!(b.len(), n.div_ceil(bs));
        let mut flat: Vec<usize> = b.concat();
        if !shuffle {
            prop_assert_eq!(&flat, &idx);
        }
        flat.sort_unstable();
        prop_assert_eq!(flat, idx);
    }
}

#[test]
fn fixed_split_rejects_overlap() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("s.json");
    fs::write(&p, r#"{"train":[0,1],"val":[2],"test":[2,3]}"#).unwrap();
    let spec = SplitSpec { strategy: SplitStrategy::Fixed { file: p }, seed: 0 };
    assert!(matches!(make_splits(4, &spec), Err(topoforge::Error::Config(_))));
}
