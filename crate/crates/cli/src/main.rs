use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use topoforge::complex::io::write_featured;
use topoforge::complex::CountKey;
use topoforge::homp::Task;
use topoforge::lifting::{LiftingConfig, StructuralLifting};
use topoforge::pipeline::{
    detect_format, gradcheck_model, gradcheck_sample, infer_task, lift_sample, load_run_config, load_samples, make_splits,
    mode_grid, mode_label, run_experiment, sha256_hex, transform_digest, CacheStore, DatasetFormat, SplitSpec,
    SplitStrategy, GRADCHECK_TOLERANCE,
};
use topoforge::{Error, FeaturedComplex, ModelConfig};

const EXIT_SCHEMA: u8 = 2;
const EXIT_LIFTING: u8 = 3;
const EXIT_CONFIG: u8 = 4;
const EXIT_RUNTIME: u8 = 5;

#[derive(Parser)]
#[command(name = "topoforge", version, about = "Lift graphs to higher-order domains and train message-passing models on them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lift every sample under --input and write containers plus manifest.json to --out.
    Lift(LiftArgs),
    /// Print per-rank cell counts of a container, a directory of containers or an edge list.
    Stats(StatsArgs),
    /// Write train/val/test index sets as JSON.
    Split(SplitArgs),
    /// Run a configured experiment and write report.json and metrics.csv.
    Run(RunArgs),
    /// Compare analytic and finite-difference gradients on a 10-node synthetic complex.
    Gradcheck(GradcheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Auto,
    Container,
    EdgeList,
}

impl InputFormat {
    fn resolve(self, path: &Path) -> DatasetFormat {
        match self {
            InputFormat::Auto => detect_format(path),
            InputFormat::Container => DatasetFormat::Container,
            InputFormat::EdgeList => DatasetFormat::EdgeListDir,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LiftingName {
    Clique,
    Neighborhood,
    Cycle,
    Khop,
    Knn,
}

#[derive(Args)]
struct LiftArgs {
    /// Container file, directory of containers, edge-list file or directory.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    input_format: InputFormat,
    #[arg(long, value_enum)]
    lifting: LiftingName,
    /// Top simplex dimension for clique and neighborhood liftings.
    #[arg(long, default_value_t = 2)]
    max_dim: usize,
    /// Neighborhood-lifting guard on the closed-neighborhood size.
    #[arg(long, default_value_t = 32)]
    max_neighborhood_size: usize,
    /// Drop cycles longer than this in the cycle lifting.
    #[arg(long)]
    max_cell_length: Option<usize>,
    /// Hop radius for khop, neighbor count for knn.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

impl LiftArgs {
    fn config(&self) -> LiftingConfig {
        LiftingConfig::new(match self.lifting {
            LiftingName::Clique => StructuralLifting::Clique { max_dim: self.max_dim },
            LiftingName::Neighborhood => StructuralLifting::Neighborhood {
                max_dim: self.max_dim,
                max_neighborhood_size: self.max_neighborhood_size,
            },
            LiftingName::Cycle => StructuralLifting::Cycle { max_cell_length: self.max_cell_length },
            LiftingName::Khop => StructuralLifting::Khop { k: self.k },
            LiftingName::Knn => StructuralLifting::Knn { k: self.k },
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Tsv,
    Json,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    input_format: InputFormat,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyName {
    Random,
    Kfold,
    Fixed,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("size").required(true).args(["n", "input"]))]
struct SplitArgs {
    /// Number of items to split.
    #[arg(long)]
    n: Option<usize>,
    /// Dataset whose prediction targets are split (nodes of a single graph, otherwise samples).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    input_format: InputFormat,
    #[arg(long, value_enum)]
    strategy: StrategyName,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    train_frac: f64,
    #[arg(long, default_value_t = 0.25)]
    val_frac: f64,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    fold: usize,
    /// Splits file checked by the fixed strategy.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Run config whose [model] and [transforms] are checked; defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sweep every intra × inter × update × readout combination.
    #[arg(long)]
    all_modes: bool,
    /// Overrides the model hidden width.
    #[arg(long)]
    hidden_dim: Option<usize>,
    /// Seed of the synthetic complex.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Lifting refusals are reported with their own code when they come from the lifting step.
struct Failure {
    error: Error,
    lifting: bool,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure { error, lifting: false }
    }
}

fn lifting_failure(error: Error) -> Failure {
    Failure { error, lifting: true }
}

fn exit_code(f: &Failure) -> u8 {
    match f.error.root() {
        Error::NeighborhoodTooLarge { .. } => EXIT_LIFTING,
        Error::Config(_) => EXIT_CONFIG,
        _ if f.lifting => EXIT_LIFTING,
        Error::Schema { .. }
        | Error::Io { .. }
        | Error::Invalid(_)
        | Error::FeatureRows { .. }
        | Error::NodeOutOfRange { .. } => EXIT_SCHEMA,
        _ => EXIT_RUNTIME,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Error::Io { path: path.to_path_buf(), source: e }.into()
}

type CmdResult = Result<u8, Failure>;

fn counts_of(samples: &[FeaturedComplex]) -> Vec<(String, usize)> {
    let mut ranks: BTreeMap<usize, usize> = BTreeMap::new();
    let mut hyperedges: Option<usize> = None;
    for s in samples {
        for (key, n) in s.complex().cell_counts() {
            match key {
                CountKey::Rank(r) => *ranks.entry(r).or_default() += n,
                CountKey::Hyperedges => *hyperedges.get_or_insert(0) += n,
            }
        }
    }
    let mut rows: Vec<(String, usize)> = ranks.into_iter().map(|(r, n)| (r.to_string(), n)).collect();
    if let Some(n) = hyperedges {
        rows.push(("hyperedges".into(), n));
    }
    rows
}

fn counts_json(rows: &[(String, usize)]) -> Value {
    Value::Object(rows.iter().map(|(k, n)| (k.clone(), json!(n))).collect::<Map<_, _>>())
}

fn cmd_lift(a: &LiftArgs) -> CmdResult {
    let cfg = a.config();
    cfg.validate()?;
    let (samples, origins) = load_samples(&a.input, a.input_format.resolve(&a.input))?;
    if samples.is_empty() {
        return Err(Error::Schema { location: a.input.display().to_string(), message: "no samples found".into() }.into());
    }
    let mut lifted = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let fc = lift_sample(s, &cfg).map_err(|e| lifting_failure(Error::Sample { index: i, source: Box::new(e) }))?;
        lifted.push(fc);
    }
    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    let mut entries = Vec::with_capacity(lifted.len());
    for (i, fc) in lifted.iter().enumerate() {
        let file = format!("sample_{i:06}.json");
        write_featured(&a.out.join(&file), fc)?;
        entries.push(json!({
            "file": file,
            "source": origins[i],
            "kind": fc.complex().kind().as_str(),
            "counts": counts_json(&counts_of(std::slice::from_ref(fc))),
        }));
    }
    let source_digest = {
        let joined: String = samples.iter().map(topoforge::complex::io::featured_to_string).collect::<Vec<_>>().join("\n");
        sha256_hex(joined.as_bytes())
    };
    let name = a.input.file_stem().map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
    let totals = counts_of(&lifted);
    let manifest = json!({
        "dataset": name,
        "digest": transform_digest(&name, &source_digest, &cfg),
        "lifting": cfg,
        "counts": counts_json(&totals),
        "samples": entries,
    });
    let path = a.out.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes")).map_err(io_err(&path))?;
    println!("lifted {} sample(s) into {}", lifted.len(), a.out.display());
    print_table(&totals, TableFormat::Csv);
    Ok(0)
}

fn print_table(rows: &[(String, usize)], format: TableFormat) {
    match format {
        TableFormat::Json => println!("{}", counts_json(rows)),
        TableFormat::Csv | TableFormat::Tsv => {
            let sep = if matches!(format, TableFormat::Csv) { ',' } else { '\t' };
            println!("rank{sep}count");
            for (k, n) in rows {
                println!("{k}{sep}{n}");
            }
        }
    }
}

fn cmd_stats(a: &StatsArgs) -> CmdResult {
    let (samples, _) = load_samples(&a.input, a.input_format.resolve(&a.input))?;
    if samples.is_empty() {
        return Err(Error::Schema { location: a.input.display().to_string(), message: "no samples found".into() }.into());
    }
    print_table(&counts_of(&samples), a.format);
    Ok(0)
}

fn split_size(a: &SplitArgs) -> Result<usize, Failure> {
    if let Some(n) = a.n {
        return Ok(n);
    }
    let path = a.input.as_ref().expect("clap requires --n or --input");
    let (samples, _) = load_samples(path, a.input_format.resolve(path))?;
    Ok(match samples.as_slice() {
        [one] if infer_task(&samples).is_node_level() => one.num_nodes(),
        _ => samples.len(),
    })
}

fn cmd_split(a: &SplitArgs) -> CmdResult {
    let strategy = match a.strategy {
        StrategyName::Random => SplitStrategy::Random { train_frac: a.train_frac, val_frac: a.val_frac },
        StrategyName::Kfold => SplitStrategy::Kfold { k: a.k, fold: a.fold },
        StrategyName::Fixed => SplitStrategy::Fixed {
            file: a.file.clone().ok_or_else(|| Error::Config(vec!["--strategy fixed needs --file".into()]))?,
        },
    };
    let spec = SplitSpec { strategy, seed: a.seed };
    let n = split_size(a)?;
    let splits = make_splits(n, &spec).map_err(|e| match e {
        // A malformed splits file is a configuration problem for this command.
        Error::Schema { location, message } if a.file.is_some() => Error::Config(vec![format!("{location}: {message}")]),
        other => other,
    })?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(&a.out, splits.to_json()).map_err(io_err(&a.out))?;
    println!("split,size");
    println!("train,{}", splits.train.len());
    println!("val,{}", splits.val.len());
    println!("test,{}", splits.test.len());
    Ok(0)
}

fn cmd_run(a: &RunArgs) -> CmdResult {
    let mut cfg = load_run_config(&a.config)?;
    if let Some(out) = &a.out {
        cfg.output_dir = Some(out.clone());
    }
    let out = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("runs"));
    cfg.output_dir = Some(out.clone());
    let default_cache = cfg.cache_dir.clone().unwrap_or_else(|| out.join("cache"));
    let mut cache = CacheStore::from_env(default_cache);
    let report = run_experiment(&cfg, &mut cache)?;
    report.write(&out)?;
    for (k, r) in report.runs.iter().enumerate() {
        println!(
            "run {k}: best_epoch {} epochs {} train {} val {} test {}",
            r.best_epoch, r.epochs_run, r.train.value, r.val.value, r.test.value
        );
    }
    println!(
        "cache: computed {} hits {} corrupt {}",
        report.cache.computed, report.cache.hits, report.cache.corrupt
    );
    println!("TEST {} {}", report.metric, report.test_mean);
    Ok(0)
}

fn cmd_gradcheck(a: &GradcheckArgs) -> CmdResult {
    let (mut model, lifting, loss) = match &a.config {
        Some(p) => {
            let cfg = load_run_config(p)?;
            let lifting = cfg.transforms.clone().unwrap_or_else(default_gradcheck_lifting);
            (cfg.model, lifting, cfg.trainer.loss)
        }
        None => (ModelConfig::new(Task::NodeClassification), default_gradcheck_lifting(), None),
    };
    if let Some(h) = a.hidden_dim {
        model.hidden_dim = h;
    }
    let sample = gradcheck_sample(model.task, &lifting, a.seed).map_err(lifting_failure)?;
    let configs = if a.all_modes { mode_grid(&model, sample.complex().max_rank()) } else { vec![model] };
    let mut worst = 0.0_f64;
    println!("mode,max_rel_error,coordinates");
    for cfg in &configs {
        let rep = gradcheck_model(cfg, &sample, loss)?;
        println!("{},{:e},{}", mode_label(cfg), rep.max_rel_error, rep.coordinates);
        worst = worst.max(rep.max_rel_error);
    }
    println!("MAX_REL_ERROR {worst:e}");
    if worst <= GRADCHECK_TOLERANCE {
        Ok(0)
    } else {
        eprintln!("gradient check failed: {worst:e} exceeds {GRADCHECK_TOLERANCE:e}");
        Ok(EXIT_RUNTIME)
    }
}

fn default_gradcheck_lifting() -> LiftingConfig {
    LiftingConfig::new(StructuralLifting::Clique { max_dim: 2 })
}

fn dispatch(cmd: &Command) -> CmdResult {
    match cmd {
        Command::Lift(a) => cmd_lift(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Split(a) => cmd_split(a),
        Command::Run(a) => cmd_run(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(exit_code(&f))
        }
    }
}
