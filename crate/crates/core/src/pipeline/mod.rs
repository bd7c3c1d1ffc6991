//! Loading, lifting with a disk cache, splitting, training and evaluation.

mod cache;
mod dataset;
mod gradcheck;
mod optim;
mod run;
mod split;
mod train;

pub use cache::{canonical_json, lift_sample, preprocess, sha256_hex, transform_digest, CacheCounters, CacheStore, CACHE_ENV};
pub use dataset::{
    detect_format, infer_task, load_citation_pair, load_dataset, load_samples, load_edge_list_file, parse_edge_list, synthetic_graph_set,
    synthetic_sbm, DatasetBundle, DatasetFormat, GraphSetSpec, SbmSpec,
};
pub use gradcheck::{
    gradcheck_model, gradcheck_sample, mode_grid, mode_label, GRADCHECK_NODES, GRADCHECK_STEP, GRADCHECK_TOLERANCE,
};
pub use optim::{Adam, OptimizerConfig};
pub use run::{
    load_configured_dataset, load_run_config, run_experiment, DatasetConfig, DatasetSource, EvaluatorConfig, RunConfig,
    RunReport,
};
pub use split::{batch_iter, make_splits, SplitSpec, SplitStrategy, Splits};
pub use train::{evaluate, signature_of, train, Evaluator, HistoryRow, SplitReport, TrainConfig, TrainOutcome};
