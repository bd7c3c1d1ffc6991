use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_topoforge"));
    c.env_remove("TOPOFORGE_CACHE");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_edges(dir: &Path, name: &str, n: usize, edges: &[(usize, usize)]) -> PathBuf {
    let mut text = format!("nodes {n}\n");
    for (u, v) in edges {
        text.push_str(&format!("{u} {v}\n"));
    }
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn repo_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/sbm.toml")
}

/// Number of vertex subsets of each size that are pairwise adjacent.
fn clique_counts(n: usize, edges: &[(usize, usize)], max_dim: usize) -> Vec<usize> {
    let adj = |u: usize, v: usize| edges.iter().any(|&(a, b)| (a, b) == (u, v) || (a, b) == (v, u));
    let mut counts = vec![0; max_dim + 1];
    for mask in 1u32..(1 << n) {
        let verts: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if verts.len() > max_dim + 1 {
            continue;
        }
        if verts.iter().enumerate().all(|(i, &u)| verts[i + 1..].iter().all(|&v| adj(u, v))) {
            counts[verts.len() - 1] += 1;
        }
    }
    counts
}

#[test]
fn lift_k4_clique_manifest_counts() {
    let dir = tempfile::tempdir().unwrap();
    let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let input = write_edges(dir.path(), "k4.txt", 4, &edges);
    let out = dir.path().join("lifted");
    let o = run(&["lift", "--input", s(&input), "--lifting", "clique", "--max-dim", "3", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let expected = clique_counts(4, &edges, 3);
    assert_eq!(expected, vec![4, 6, 4, 1]);
    for (r, n) in expected.iter().enumerate() {
        assert_eq!(manifest["counts"][r.to_string()].as_u64(), Some(*n as u64));
    }
    assert_eq!(manifest["digest"].as_str().map(str::len), Some(64));
    assert!(out.join("sample_000000.json").is_file());
}

#[test]
fn lift_p3_khop_has_three_hyperedges() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_edges(dir.path(), "p3.txt", 3, &[(0, 1), (1, 2)]);
    let out = dir.path().join("h");
    let o = run(&["lift", "--input", s(&input), "--lifting", "khop", "--k", "1", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stats = run(&["stats", "--input", s(&out)]);
    assert_eq!(stdout(&stats), "rank,count\n0,3\nhyperedges,3\n");
}

#[test]
fn neighborhood_guard_exits_3_naming_center() {
    let dir = tempfile::tempdir().unwrap();
    let edges: Vec<(usize, usize)> = (1..8).map(|v| (0, v)).collect();
    let input = write_edges(dir.path(), "star.txt", 8, &edges);
    let o = run(&[
        "lift",
        "--input",
        s(&input),
        "--lifting",
        "neighborhood",
        "--max-dim",
        "2",
        "--max-neighborhood-size",
        "5",
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("node 0"), "{}", stderr(&o));
}

#[test]
fn stats_empty_graph_and_formats() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_edges(dir.path(), "empty.txt", 7, &[]);
    assert_eq!(stdout(&run(&["stats", "--input", s(&input)])), "rank,count\n0,7\n");

    let edges = [(0, 1), (1, 2), (0, 2), (2, 3)];
    let g = write_edges(dir.path(), "tri.txt", 4, &edges);
    let out = dir.path().join("tri");
    assert_eq!(run(&["lift", "--input", s(&g), "--lifting", "clique", "--out", s(&out)]).status.code(), Some(0));
    let json: Value = serde_json::from_str(&stdout(&run(&["stats", "--input", s(&out), "--format", "json"]))).unwrap();
    assert_eq!(json, serde_json::json!({"0": 4, "1": 4, "2": 1}));
    assert_eq!(stdout(&run(&["stats", "--input", s(&out), "--format", "tsv"])), "rank\tcount\n0\t4\n1\t4\n2\t1\n");
}

#[test]
fn stats_matches_library_counts() {
    use topoforge::complex::io::read_featured;
    let dir = tempfile::tempdir().unwrap();
    let edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (4, 5)];
    let g = write_edges(dir.path(), "g.txt", 6, &edges);
    let out = dir.path().join("cells");
    assert_eq!(run(&["lift", "--input", s(&g), "--lifting", "cycle", "--out", s(&out)]).status.code(), Some(0));
    let fc = read_featured(&out.join("sample_000000.json")).unwrap();
    let mut expected = String::from("rank,count\n");
    for (k, n) in fc.complex().cell_counts() {
        expected.push_str(&format!("{k},{n}\n"));
    }
    assert_eq!(stdout(&run(&["stats", "--input", s(&out)])), expected);
    assert_eq!(expected, "rank,count\n0,6\n1,6\n2,1\n");
}

#[test]
fn malformed_container_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, "{\"kind\": \"graph\", \"num_nodes\": \"x\"}").unwrap();
    let o = run(&["stats", "--input", s(&p)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn split_sizes_and_fixed_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("splits.json");
    let o = run(&["split", "--n", "8", "--strategy", "random", "--seed", "0", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let sizes: Vec<usize> = ["train", "val", "test"].iter().map(|k| v[k].as_array().unwrap().len()).collect();
    assert_eq!(sizes, vec![4, 2, 2]);

    let bad = dir.path().join("overlap.json");
    fs::write(&bad, r#"{"train":[0,1,2],"val":[2,3],"test":[4]}"#).unwrap();
    let o = run(&["split", "--n", "8", "--strategy", "fixed", "--file", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(4));

    let o = run(&["split", "--n", "10", "--strategy", "kfold", "--k", "5", "--fold", "1", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "split,size\ntrain,6\nval,2\ntest,2\n");
}

#[test]
fn split_counts_nodes_of_an_input_graph() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_edges(dir.path(), "g.txt", 12, &[(0, 1)]);
    let out = dir.path().join("s.json");
    let o = run(&["split", "--input", s(&g), "--strategy", "random", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "split,size\ntrain,6\nval,3\ntest,3\n");
}

#[test]
fn run_bundled_config_and_rerun_hits_cache() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cache = dir.path().join("cache");
    let go = || {
        bin()
            .env("TOPOFORGE_CACHE", &cache)
            .args(["run", "--config", s(&repo_config()), "--out", s(&out)])
            .output()
            .unwrap()
    };
    let first = go();
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let line = stdout(&first).lines().last().unwrap().to_string();
    let acc: f64 = line.strip_prefix("TEST accuracy ").expect("final TEST line").parse().unwrap();
    assert!(acc >= 0.9, "{line}");
    assert!(out.join("metrics.csv").is_file());
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("split,epoch,metric,value\n"));

    let second = go();
    assert_eq!(second.status.code(), Some(0));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["cache"]["hits"], report["num_samples"]);
    assert_eq!(report["cache"]["computed"], 0);
    assert!(fs::read_dir(&cache).unwrap().count() > 0);
}

fn patched_config(dir: &Path, from: &str, to: &str) -> PathBuf {
    let text = fs::read_to_string(repo_config()).unwrap();
    assert!(text.contains(from));
    let p = dir.join("cfg.toml");
    fs::write(&p, text.replace(from, to).replace("output_dir = \"../runs/sbm\"", "output_dir = \"out\"")).unwrap();
    p
}

#[test]
fn run_rejects_overflowing_fractions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = patched_config(dir.path(), "train_frac = 0.5\nval_frac = 0.25", "train_frac = 0.9\nval_frac = 0.2");
    let o = run(&["run", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("fractions exceed 1"), "{}", stderr(&o));
}

#[test]
fn run_lists_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(repo_config())
        .unwrap()
        .replace("val_frac = 0.25", "val_frac = 0.75")
        .replace("lr = 0.01", "lr = -1.0");
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, text).unwrap();
    let o = run(&["run", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(4));
    let err = stderr(&o);
    assert!(err.contains("fractions exceed 1") && err.contains("lr"), "{err}");
}

#[test]
fn run_aborts_with_exit_5_on_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = patched_config(dir.path(), "lr = 0.01", "lr = 1e300");
    let o = bin().env("TOPOFORGE_CACHE", dir.path().join("c")).args(["run", "--config", s(&cfg)]).output().unwrap();
    assert_eq!(o.status.code(), Some(5), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn gradcheck_all_modes_passes() {
    let o = run(&["gradcheck", "--config", s(&repo_config()), "--all-modes", "--hidden-dim", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.contains('/')).count(), 24);
    assert!(out.lines().last().unwrap().starts_with("MAX_REL_ERROR "));
}

#[test]
fn help_lists_flags_and_unknown_flags_fail() {
    let o = run(&["lift", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let h = stdout(&o);
    for flag in ["--input", "--lifting", "--max-dim", "--max-neighborhood-size", "--max-cell-length", "--k", "--out"] {
        assert!(h.contains(flag), "{flag} missing from help");
    }
    let o = run(&["split", "--help"]);
    for flag in ["--n", "--input", "--strategy", "--seed", "--out", "--file"] {
        assert!(stdout(&o).contains(flag), "{flag} missing from help");
    }
    let o = run(&["stats", "--input", "x", "--verbose"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("--verbose"));
}
