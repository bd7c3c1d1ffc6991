use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::cache::{preprocess, CacheCounters, CacheStore};
use super::dataset::{load_dataset, synthetic_graph_set, synthetic_sbm, DatasetBundle, DatasetFormat, GraphSetSpec, SbmSpec};
use super::optim::OptimizerConfig;
use super::split::{make_splits, SplitSpec, SplitStrategy};
use super::train::{train, SplitReport, TrainConfig};
use crate::complex::FeaturedComplex;
use crate::error::{Error, Result};
use crate::homp::{ModelConfig, Task};
use crate::lifting::LiftingConfig;
use crate::metrics::MetricKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Sbm,
    GraphSet,
    Container,
    EdgeList,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub source: DatasetSource,
    /// File or directory for `container` and `edge_list` sources, relative
    /// to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sbm: Option<SbmSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_set: Option<GraphSetSpec>,
    pub split: SplitSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluatorConfig {
    /// Defaults to accuracy for classification and MSE for regression.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricKind>,
    /// Independent repetitions: random splits advance the split seed, k-fold
    /// splits advance the fold index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
}

/// A full experiment description, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    pub dataset: DatasetConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transforms: Option<LiftingConfig>,
    pub model: ModelConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub trainer: TrainConfig,
    #[serde(default)]
    pub evaluator: EvaluatorConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string().trim_end().to_string()]))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn metric(&self) -> MetricKind {
        self.evaluator.metric.unwrap_or(if self.model.task.is_classification() {
            MetricKind::Accuracy
        } else {
            MetricKind::Mse
        })
    }

    pub fn runs(&self) -> usize {
        self.evaluator.runs.unwrap_or(1)
    }

    /// Every violated constraint that can be checked without loading data.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let d = &self.dataset;
        match d.source {
            DatasetSource::Sbm => match &d.sbm {
                Some(s) => out.extend(s.violations()),
                None => out.push("dataset.source = \"sbm\" needs a [dataset.sbm] table".into()),
            },
            DatasetSource::GraphSet => match &d.graph_set {
                Some(s) => out.extend(s.violations()),
                None => out.push("dataset.source = \"graph_set\" needs a [dataset.graph_set] table".into()),
            },
            DatasetSource::Container | DatasetSource::EdgeList => {
                if d.path.is_none() {
                    out.push("dataset.path is required for file-based sources".into());
                }
            }
        }
        if let Some(t) = d.task {
            if t != self.model.task {
                out.push(format!("dataset.task {t:?} differs from model.task {:?}", self.model.task));
            }
        }
        let implied = match d.source {
            DatasetSource::Sbm => Some(Task::NodeClassification),
            DatasetSource::GraphSet => Some(Task::GraphClassification),
            _ => None,
        };
        if let Some(t) = implied {
            if t != self.model.task {
                out.push(format!("dataset source {:?} provides {t:?} but model.task is {:?}", d.source, self.model.task));
            }
        }
        out.extend(d.split.violations());
        if let Some(t) = &self.transforms {
            out.extend(t.violations());
        }
        out.extend(self.model.violations());
        out.extend(self.optimizer.violations());
        out.extend(self.trainer.violations());
        let m = self.metric();
        if m.is_classification() != self.model.task.is_classification() {
            out.push(format!("evaluator.metric {m} does not fit task {:?}", self.model.task));
        }
        if self.evaluator.runs == Some(0) {
            out.push("evaluator.runs must be >= 1".into());
        }
        if let (Some(r), SplitStrategy::Kfold { k, .. }) = (self.evaluator.runs, &d.split.strategy) {
            if r > *k {
                out.push(format!("evaluator.runs = {r} exceeds the {k} available folds"));
            }
        }
        if let (Some(r), SplitStrategy::Fixed { .. }) = (self.evaluator.runs, &d.split.strategy) {
            if r > 1 {
                out.push("fixed splits support a single run".into());
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Split spec of repetition `i`.
    pub fn split_for_run(&self, i: usize) -> SplitSpec {
        let mut s = self.dataset.split.clone();
        match &mut s.strategy {
            SplitStrategy::Random { .. } => s.seed = s.seed.wrapping_add(i as u64),
            SplitStrategy::Kfold { k, fold } => *fold = (*fold + i) % *k,
            SplitStrategy::Fixed { .. } => {}
        }
        s
    }

    /// Makes relative paths absolute against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = &mut self.dataset.path {
            fix(p);
        }
        if let SplitStrategy::Fixed { file } = &mut self.dataset.split.strategy {
            fix(file);
        }
        if let Some(p) = &mut self.output_dir {
            fix(p);
        }
        if let Some(p) = &mut self.cache_dir {
            fix(p);
        }
    }
}

/// Reads, path-resolves and validates a config file.
pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = RunConfig::from_toml(&text)?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    cfg.validate()?;
    Ok(cfg)
}

/// Builds the raw (unlifted) dataset a config points at.
pub fn load_configured_dataset(cfg: &RunConfig) -> Result<DatasetBundle> {
    let d = &cfg.dataset;
    let task = cfg.model.task;
    let bundle = match d.source {
        DatasetSource::Sbm => {
            let spec = d.sbm.as_ref().ok_or_else(|| Error::Config(vec!["missing [dataset.sbm]".into()]))?;
            let g = synthetic_sbm(spec)?;
            DatasetBundle::new(d.name.clone().unwrap_or_else(|| "sbm".into()), vec![FeaturedComplex::from_graph(&g)], task, &[])?
        }
        DatasetSource::GraphSet => {
            let spec = d.graph_set.as_ref().ok_or_else(|| Error::Config(vec!["missing [dataset.graph_set]".into()]))?;
            let samples = synthetic_graph_set(spec)?.iter().map(FeaturedComplex::from_graph).collect();
            DatasetBundle::new(d.name.clone().unwrap_or_else(|| "graph_set".into()), samples, task, &[])?
        }
        DatasetSource::Container | DatasetSource::EdgeList => {
            let path = d.path.as_ref().ok_or_else(|| Error::Config(vec!["dataset.path is required".into()]))?;
            let format = if d.source == DatasetSource::Container { DatasetFormat::Container } else { DatasetFormat::EdgeListDir };
            let mut b = load_dataset(path, format, Some(task))?;
            if let Some(n) = &d.name {
                b.name = n.clone();
            }
            b
        }
    };
    Ok(bundle)
}

/// Aggregate outcome of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub dataset: String,
    pub num_samples: usize,
    pub metric: MetricKind,
    pub runs: Vec<SplitReport>,
    pub test_mean: f64,
    pub test_std: f64,
    pub cache: CacheCounters,
    pub wall_clock_secs: f64,
}

impl RunReport {
    /// The report with run-dependent bookkeeping (timing and cache
    /// counters) cleared, for reproducibility comparisons.
    pub fn deterministic_part(&self) -> RunReport {
        RunReport { cache: CacheCounters::default(), wall_clock_secs: 0.0, ..self.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `split,epoch,metric,value` rows. Repetitions after the first carry a
    /// `#k` suffix on the split name.
    pub fn metrics_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["split", "epoch", "metric", "value"]).expect("in-memory write");
        for (k, run) in self.runs.iter().enumerate() {
            for row in &run.history {
                let split = if k == 0 { row.split.clone() } else { format!("{}#{}", row.split, k + 1) };
                w.write_record([split, row.epoch.to_string(), row.metric.clone(), format!("{:?}", row.value)])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Writes `report.json` and `metrics.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = dir.join("report.json");
        fs::write(&p, self.to_json()).map_err(|e| Error::io(&p, e))?;
        let p = dir.join("metrics.csv");
        fs::write(&p, self.metrics_csv()).map_err(|e| Error::io(&p, e))?;
        Ok(())
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Load, lift, split, train and evaluate as configured. Checkpoints of each
/// repetition go to `output_dir/model_<k>.json` when an output directory is
/// configured; reports are written by the caller.
pub fn run_experiment(cfg: &RunConfig, cache: &mut CacheStore) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let before = cache.counters;
    let raw = load_configured_dataset(cfg)?;
    let bundle = match &cfg.transforms {
        Some(t) => preprocess(&raw, t, cache)?,
        None => raw,
    };
    let kind = cfg.metric();
    let mut runs = Vec::with_capacity(cfg.runs());
    for k in 0..cfg.runs() {
        let splits = make_splits(bundle.num_targets(), &cfg.split_for_run(k))?;
        let outcome = train(&cfg.model, &bundle, &splits, &cfg.trainer, &cfg.optimizer, kind)?;
        if let Some(dir) = &cfg.output_dir {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let p = dir.join(format!("model_{k}.json"));
            fs::write(&p, outcome.state.to_json()).map_err(|e| Error::io(&p, e))?;
        }
        runs.push(outcome.report);
    }
    let tests: Vec<f64> = runs.iter().map(|r| r.test.value).collect();
    let (test_mean, test_std) = mean_std(&tests);
    let after = cache.counters;
    Ok(RunReport {
        config: cfg.clone(),
        dataset: bundle.name.clone(),
        num_samples: bundle.len(),
        metric: kind,
        runs,
        test_mean,
        test_std,
        cache: CacheCounters {
            computed: after.computed - before.computed,
            hits: after.hits - before.hits,
            corrupt: after.corrupt - before.corrupt,
        },
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}
