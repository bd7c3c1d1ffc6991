use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dataset::DatasetBundle;
use crate::complex::io::{featured_from_str, featured_to_string};
use crate::error::{Error, Result};
use crate::complex::FeaturedComplex;
use crate::lifting::{apply_lifting, lift_features_projected_sum, lift_structure, FeatureLifting, LiftingConfig};

/// Environment variable overriding the cache root.
pub const CACHE_ENV: &str = "TOPOFORGE_CACHE";

/// Running totals of cache activity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheCounters {
    /// Samples lifted from scratch.
    pub computed: usize,
    /// Samples served from disk.
    pub hits: usize,
    /// Entries that failed to parse and were recomputed.
    pub corrupt: usize,
}

/// Lifted samples on disk, one directory per configuration digest.
#[derive(Clone, Debug)]
pub struct CacheStore {
    root: Option<PathBuf>,
    pub counters: CacheCounters,
}

/// Compact JSON with object keys in sorted order.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    // serde_json::Value keeps object keys in a BTreeMap
    let v = serde_json::to_value(value).expect("config serializes");
    serde_json::to_string(&v).expect("value serializes")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct KeyDoc<'a> {
    dataset: &'a str,
    source: &'a str,
    transforms: &'a LiftingConfig,
}

/// Cache key of a lifting applied to a dataset with the given content digest.
pub fn transform_digest(dataset: &str, source_digest: &str, cfg: &LiftingConfig) -> String {
    sha256_hex(canonical_json(&KeyDoc { dataset, source: source_digest, transforms: cfg }).as_bytes())
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(text.as_bytes()).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

impl CacheStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: Some(root.into()), counters: CacheCounters::default() }
    }

    /// A store that never touches disk.
    pub fn disabled() -> Self {
        Self { root: None, counters: CacheCounters::default() }
    }

    /// `$TOPOFORGE_CACHE` when set, otherwise `default_root`.
    pub fn from_env(default_root: impl Into<PathBuf>) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(p) if !p.is_empty() => Self::new(PathBuf::from(p)),
            _ => Self::new(default_root),
        }
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn entry_dir(&self, digest: &str) -> Option<PathBuf> {
        self.root.as_ref().map(|r| r.join(digest))
    }

    fn sample_path(dir: &Path, i: usize) -> PathBuf {
        dir.join(format!("sample_{i:06}.json"))
    }

    fn load(&mut self, dir: &Path, i: usize) -> Option<FeaturedComplex> {
        let path = Self::sample_path(dir, i);
        let text = fs::read_to_string(&path).ok()?;
        match featured_from_str(&text, &path.display().to_string()) {
            Ok(fc) => Some(fc),
            Err(_) => {
                self.counters.corrupt += 1;
                None
            }
        }
    }
}

/// Lifts one sample. Lifted graphs inherit features and labels; already
/// lifted samples are re-lifted from their 1-skeleton.
pub fn lift_sample(sample: &FeaturedComplex, cfg: &LiftingConfig) -> Result<FeaturedComplex> {
    if let Some(g) = sample.to_graph() {
        return apply_lifting(&g, cfg);
    }
    cfg.validate()?;
    let g = skeleton_graph(sample)?;
    let complex = lift_structure(&g, &cfg.structural)?;
    complex.validate()?;
    match cfg.feature {
        FeatureLifting::ProjectedSum => lift_features_projected_sum(sample, complex),
    }
}

fn skeleton_graph(sample: &FeaturedComplex) -> Result<crate::complex::Graph> {
    use crate::complex::Complex;
    let c = sample.complex();
    let edges: Vec<(usize, usize)> = match c {
        Complex::Graph(g) => g.edges().to_vec(),
        Complex::Simplicial(s) if s.max_rank() >= 1 => {
            s.cells(1).iter().map(|e| (e.vertices()[0], e.vertices()[1])).collect()
        }
        Complex::Cell(cc) => cc.edges().to_vec(),
        _ => return Err(Error::Unsupported(format!("cannot re-lift a {}", c.kind()))),
    };
    let mut g = crate::complex::build_graph(c.num_nodes(), &edges, sample.feature(0).cloned(), None)?.0;
    g.node_labels = sample.labels.node_labels.clone();
    g.node_targets = sample.labels.node_targets.clone();
    g.graph_label = sample.labels.graph_label;
    Ok(g)
}

/// Applies `cfg` to every sample, serving results from `cache` when the
/// configuration digest has been seen before. Lifting failures carry the
/// sample index.
pub fn preprocess(bundle: &DatasetBundle, cfg: &LiftingConfig, cache: &mut CacheStore) -> Result<DatasetBundle> {
    cfg.validate()?;
    let digest = transform_digest(&bundle.name, &bundle.content_digest(), cfg);
    let dir = cache.entry_dir(&digest);
    if let Some(dir) = &dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let cfg_path = dir.join("config.json");
        if !cfg_path.exists() {
            write_atomic(&cfg_path, &canonical_json(cfg))?;
        }
    }
    let mut out = Vec::with_capacity(bundle.samples.len());
    for (i, s) in bundle.samples.iter().enumerate() {
        if let Some(dir) = &dir {
            if let Some(fc) = cache.load(dir, i) {
                cache.counters.hits += 1;
                out.push(fc);
                continue;
            }
        }
        let lifted = lift_sample(s, cfg).map_err(|e| Error::Sample { index: i, source: Box::new(e) })?;
        cache.counters.computed += 1;
        if let Some(dir) = &dir {
            write_atomic(&CacheStore::sample_path(dir, i), &featured_to_string(&lifted))?;
        }
        out.push(lifted);
    }
    let origins: Vec<String> = (0..out.len()).map(|i| format!("{} sample {i}", bundle.name)).collect();
    DatasetBundle::new(bundle.name.clone(), out, bundle.task, &origins)
}
