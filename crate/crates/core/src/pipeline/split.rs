use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case", deny_unknown_fields)]
pub enum SplitStrategy {
    Random { train_frac: f64, val_frac: f64 },
    Kfold { k: usize, fold: usize },
    Fixed { file: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    #[serde(flatten)]
    pub strategy: SplitStrategy,
    #[serde(default)]
    pub seed: u64,
}

impl SplitSpec {
    pub fn random(train_frac: f64, val_frac: f64, seed: u64) -> Self {
        Self { strategy: SplitStrategy::Random { train_frac, val_frac }, seed }
    }

    pub fn kfold(k: usize, fold: usize, seed: u64) -> Self {
        Self { strategy: SplitStrategy::Kfold { k, fold }, seed }
    }

    /// Constraint violations that do not depend on the dataset size.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match &self.strategy {
            SplitStrategy::Random { train_frac, val_frac } => {
                if !(*train_frac > 0.0 && *val_frac > 0.0) {
                    out.push("split fractions must be positive".into());
                }
                if train_frac + val_frac >= 1.0 {
                    out.push(format!("split fractions exceed 1: train {train_frac} + val {val_frac} leaves no test data"));
                }
            }
            SplitStrategy::Kfold { k, fold } => {
                if *k < 3 {
                    out.push(format!("kfold needs k >= 3, got {k}"));
                }
                if fold >= k {
                    out.push(format!("fold index {fold} out of range for k = {k}"));
                }
            }
            SplitStrategy::Fixed { .. } => {}
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    /// Range and disjointness check.
    pub fn check(&self, n: usize) -> Result<()> {
        let mut owner = vec![None; n];
        for (name, idx) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            if idx.is_empty() {
                return Err(Error::Config(vec![format!("{name} split is empty")]));
            }
            for &i in idx {
                let slot = owner.get_mut(i).ok_or_else(|| {
                    Error::Config(vec![format!("{name} index {i} out of range for {n} items")])
                })?;
                if let Some(prev) = slot.replace(name) {
                    return Err(Error::Config(vec![format!("index {i} appears in both {prev} and {name}")]));
                }
            }
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::schema(path.display().to_string(), e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("splits serialize")
    }
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Train/validation/test index sets over `0..n`.
///
/// Random splits shuffle with the seed and take `max(1, floor(f·n))` items
/// for train and validation each. K-fold splits shuffle, cut `k` contiguous
/// folds (the first `n mod k` one item longer), and use fold `f` for test and
/// fold `f+1 mod k` for validation.
pub fn make_splits(n: usize, spec: &SplitSpec) -> Result<Splits> {
    let v = spec.violations();
    if !v.is_empty() {
        return Err(Error::Config(v));
    }
    let splits = match &spec.strategy {
        SplitStrategy::Random { train_frac, val_frac } => {
            if n < 3 {
                return Err(Error::Config(vec![format!("random split needs at least 3 items, got {n}")]));
            }
            let n_train = ((train_frac * n as f64).floor() as usize).max(1);
            let n_val = ((val_frac * n as f64).floor() as usize).max(1);
            if n_train + n_val >= n {
                return Err(Error::Config(vec![format!(
                    "split fractions exceed 1 at n = {n}: {n_train} train + {n_val} val leaves no test items"
                )]));
            }
            let p = permutation(n, spec.seed);
            Splits {
                train: p[..n_train].to_vec(),
                val: p[n_train..n_train + n_val].to_vec(),
                test: p[n_train + n_val..].to_vec(),
            }
        }
        SplitStrategy::Kfold { k, fold } => {
            if n < *k {
                return Err(Error::Config(vec![format!("kfold with k = {k} needs at least {k} items, got {n}")]));
            }
            let p = permutation(n, spec.seed);
            let (base, extra) = (n / k, n % k);
            let mut folds = Vec::with_capacity(*k);
            let mut at = 0;
            for f in 0..*k {
                let len = base + usize::from(f < extra);
                folds.push(p[at..at + len].to_vec());
                at += len;
            }
            let val_fold = (fold + 1) % k;
            let train = (0..*k).filter(|&f| f != *fold && f != val_fold).flat_map(|f| folds[f].clone()).collect();
            Splits { train, val: folds[val_fold].clone(), test: folds[*fold].clone() }
        }
        SplitStrategy::Fixed { file } => Splits::read(file)?,
    };
    splits.check(n)?;
    Ok(splits)
}

/// Chunks `indices` into batches of at most `batch_size`, after a seeded
/// shuffle when `shuffle` is set.
pub fn batch_iter(indices: &[usize], batch_size: usize, seed: u64, shuffle: bool) -> Result<Vec<Vec<usize>>> {
    if indices.is_empty() {
        return Err(Error::shape("batch_iter", "no indices"));
    }
    if batch_size == 0 {
        return Err(Error::Config(vec!["batch_size must be >= 1".into()]));
    }
    let mut order = indices.to_vec();
    if shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}
