//! Command-line interface: profile, recommend, calibrate, evaluate, serve.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use synthony_core::bench::{
    render_text_report, run_benchmark, split_datasets, BenchInputs, SelectorSpec, SplitSpec,
};
use synthony_core::cache::{now_unix, ProfileCache, ProfileCacheEntry};
use synthony_core::calibrate::{
    apply_calibration, calibrate, train_pair, CalibrationConfig, CalibrationResult, ObjectiveKind,
    TrainPair, Variant,
};
use synthony_core::data::{load_csv, ColumnKind, Dataset};
use synthony_core::dims::{Intent, DIMENSION_NAMES};
use synthony_core::engine::{recommend, RecommendRequest};
use synthony_core::metrics::OracleTable;
use synthony_core::registry::{
    builtin_registry, load_registry, IntentScaleFactors, Registry, UserConstraints,
};
use synthony_core::report::ProfileReport;
use synthony_core::rpc::{serve, ServerContext};
use synthony_core::{Error, Result};

const EXIT_EMPTY_POOL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "synthony",
    version,
    about = "Stress-aware selection of tabular-data synthesizers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Profile a CSV dataset: stress statistics, flags, requirement vector.
    Profile(ProfileArgs),
    /// Rank synthesizers for a dataset under an optional intent.
    Recommend(RecommendArgs),
    /// Calibrate scale factors (and capabilities) against oracle rankings.
    Calibrate(CalibrateArgs),
    /// Evaluate selectors over a benchmark and write report files.
    Evaluate(EvaluateArgs),
    /// Run the JSON-RPC 2.0 server over stdin/stdout.
    Serve(ServeArgs),
}

#[derive(Args)]
struct ProfileArgs {
    /// CSV file to profile.
    path: PathBuf,
    /// Emit the machine-readable JSON document instead of the text report.
    #[arg(long)]
    json: bool,
    /// Column type override, e.g. `--type price=numeric` (repeatable).
    #[arg(long = "type", value_name = "COL=KIND")]
    types: Vec<String>,
    /// File of `column=kind` lines with the same meaning as --type.
    #[arg(long)]
    types_file: Option<PathBuf>,
    /// Registry file (for configurable bins/thresholds); defaults to the
    /// built-in registry.
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Profile cache directory.
    #[arg(long, default_value = ".synthony_cache")]
    cache_dir: PathBuf,
    /// Skip writing a cache entry.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Copy, Clone, ValueEnum)]
enum IntentArg {
    Privacy,
    Fidelity,
    Utility,
}

impl From<IntentArg> for Intent {
    fn from(value: IntentArg) -> Intent {
        match value {
            IntentArg::Privacy => Intent::Privacy,
            IntentArg::Fidelity => Intent::Fidelity,
            IntentArg::Utility => Intent::Utility,
        }
    }
}

#[derive(Args)]
struct RecommendArgs {
    /// CSV file to rank synthesizers for.
    path: PathBuf,
    /// Optimization objective; without it, scoring runs with unit scale
    /// factors.
    #[arg(long, value_enum)]
    intent: Option<IntentArg>,
    /// Keep only models that run without a GPU.
    #[arg(long)]
    cpu_only: bool,
    /// Keep only DP-certified models (privacy_dp >= 3).
    #[arg(long)]
    strict_dp: bool,
    /// Prefer the faster model when the top two scores tie.
    #[arg(long)]
    prefer_speed: bool,
    /// How many ranked alternatives to list.
    #[arg(long, default_value_t = 3)]
    top_n: usize,
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Scale factors to apply: a calibration result file (joint results also
    /// override capabilities) or a bare scale-factor document.
    #[arg(long)]
    scale_factors: Option<PathBuf>,
    /// Column type override (repeatable).
    #[arg(long = "type", value_name = "COL=KIND")]
    types: Vec<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Copy, Clone, ValueEnum)]
enum VariantArg {
    SfOnly,
    Joint,
}

#[derive(Copy, Clone, ValueEnum)]
enum ObjectiveArg {
    Spearman,
    Top1,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Directory of dataset CSV files.
    #[arg(long)]
    datasets: PathBuf,
    /// Oracle metric table (dataset,model,metric,value CSV).
    #[arg(long)]
    oracle: PathBuf,
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "sf-only")]
    variant: VariantArg,
    /// Trial budget; defaults to 200 for sf-only and 500 for joint.
    #[arg(long)]
    trials: Option<usize>,
    /// Random startup trials; defaults to 20 for sf-only and 50 for joint.
    #[arg(long)]
    startup_trials: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Training objective; defaults to top1 for sf-only and spearman for
    /// joint.
    #[arg(long, value_enum)]
    objective: Option<ObjectiveArg>,
    /// Restrict training pairs to this split file's train side.
    #[arg(long)]
    split_file: Option<PathBuf>,
    /// Where to write the calibration result JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    datasets: PathBuf,
    #[arg(long)]
    oracle: PathBuf,
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Explicit split file; bypasses the seeded shuffle.
    #[arg(long)]
    split_file: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Training datasets when shuffling (ignored with --split-file).
    #[arg(long, default_value_t = 4)]
    train_count: usize,
    /// Selector to evaluate: synthony, knn, random, static, majority,
    /// oracle (repeatable; default: synthony knn random static majority).
    #[arg(long = "selector")]
    selectors: Vec<String>,
    /// Calibration result whose parameters override the registry.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Append the four-variant ablation table.
    #[arg(long)]
    ablations: bool,
    #[arg(long, default_value_t = 1000)]
    random_trials: usize,
    #[arg(long, default_value_t = 3)]
    knn_k: usize,
    /// Directory for report.txt and report.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Directory of dataset CSV files served by name.
    #[arg(long)]
    data_root: PathBuf,
    /// Profile cache directory.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Profile(args) => cmd_profile(args),
        Command::Recommend(args) => cmd_recommend(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Serve(args) => cmd_serve(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::EmptyPool) => {
            eprintln!("error: no eligible models after hard filters (relax --cpu-only/--strict-dp or extend the registry)");
            ExitCode::from(EXIT_EMPTY_POOL)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn resolve_registry(path: &Option<PathBuf>) -> Result<Registry> {
    match path {
        Some(p) => load_registry(p),
        None => Ok(builtin_registry()),
    }
}

fn parse_type_overrides(
    pairs: &[String],
    file: Option<&Path>,
) -> Result<BTreeMap<String, ColumnKind>> {
    let mut map = BTreeMap::new();
    let mut lines: Vec<String> = Vec::new();
    if let Some(path) = file {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        lines.extend(
            text.lines()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        );
    }
    lines.extend(pairs.iter().cloned());
    for entry in lines {
        let (column, kind) = entry.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("bad type override `{entry}` (expected COL=KIND)"))
        })?;
        map.insert(column.trim().to_string(), ColumnKind::parse(kind.trim())?);
    }
    Ok(map)
}

fn cmd_profile(args: ProfileArgs) -> Result<()> {
    let registry = resolve_registry(&args.registry)?;
    let overrides = parse_type_overrides(&args.types, args.types_file.as_deref())?;
    let dataset = load_csv(&args.path, &overrides)?;
    let hash = ProfileCache::content_hash(&args.path)?;
    let report = ProfileReport::build(&dataset, &registry.engine, Some(hash.clone()));

    if !args.no_cache {
        let cache = ProfileCache::open(&args.cache_dir)?;
        cache.store(&ProfileCacheEntry {
            content_hash: hash,
            dataset: report.dataset.clone(),
            profile: report.profile,
            requirements: report.requirements,
            meta_features: report.meta_features,
            hard_problem: report.hard_problem,
            created_unix: now_unix(),
        })?;
    }

    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    let p = &report.profile;
    println!(
        "dataset: {} ({} rows x {} columns)",
        report.dataset, report.row_count, report.column_count
    );
    println!("stress profile:");
    println!(
        "  max |skewness|       {:>10.4}   flag: {}",
        p.max_abs_skewness,
        yes_no(p.flags.skew_flag)
    );
    println!(
        "  max cardinality      {:>10}   flag: {}",
        p.max_cardinality,
        yes_no(p.flags.cardinality_flag)
    );
    println!(
        "  zipf top-20% share   {:>10.4}   flag: {}",
        p.max_zipf_ratio,
        yes_no(p.flags.zipf_flag)
    );
    println!(
        "  row count            {:>10}   small-data flag: {}",
        p.row_count,
        yes_no(p.flags.small_data_flag)
    );
    println!("  correlation density  {:>10.4}", p.correlation_density);
    let levels = report.requirements.to_array();
    let rendered: Vec<String> = DIMENSION_NAMES
        .iter()
        .zip(levels)
        .map(|(name, level)| format!("{name}={level}"))
        .collect();
    println!("requirements: {}", rendered.join(" "));
    println!("hard problem: {}", yes_no(report.hard_problem));
    if let Some(id) = &report.cache_id {
        println!("content hash: {id}");
    }
    Ok(())
}

fn yes_no(flag: bool) -> &'static str {
    if flag {
        "yes"
    } else {
        "no"
    }
}

/// Reads `--scale-factors`: either a calibration result (applied as registry
/// overrides) or a bare scale-factor document.
fn apply_scale_factor_file(registry: Registry, path: &Path) -> Result<Registry> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    if let Ok(result) = serde_json::from_str::<CalibrationResult>(&text) {
        return apply_calibration(&registry, &result);
    }
    let factors: IntentScaleFactors = serde_json::from_str(&text)?;
    let mut registry = registry;
    registry.scale_factors = Some(factors);
    registry.validate()?;
    Ok(registry)
}

fn cmd_recommend(args: RecommendArgs) -> Result<()> {
    let mut registry = resolve_registry(&args.registry)?;
    if let Some(path) = &args.scale_factors {
        registry = apply_scale_factor_file(registry, path)?;
    }
    let overrides = parse_type_overrides(&args.types, None)?;
    let dataset = load_csv(&args.path, &overrides)?;
    let request = RecommendRequest {
        constraints: UserConstraints {
            cpu_only: args.cpu_only,
            strict_dp: args.strict_dp,
        },
        prefer_speed: args.prefer_speed,
        top_n: args.top_n.max(1),
        ..RecommendRequest::new(args.intent.map(Intent::from))
    };
    let recommendation = recommend(&dataset, &registry, &request)?;

    if args.json {
        println!("{}", serde_json::to_string_pretty(&recommendation.clipped())?);
        return Ok(());
    }
    println!(
        "dataset: {}   intent: {}",
        recommendation.dataset,
        recommendation
            .intent
            .map(|i| i.to_string())
            .unwrap_or_else(|| "(none)".to_string())
    );
    if !recommendation.reasoning.scale_factors_active {
        println!("scoring: unit scale factors (no intent weighting applied)");
    }
    println!(
        "primary: {}   confidence: {:.3}",
        recommendation.primary, recommendation.confidence
    );
    println!("{:<4} {:<18} {:>8}", "rank", "model", "score");
    for (index, entry) in recommendation.top().iter().enumerate() {
        println!(
            "{:<4} {:<18} {:>8.3}",
            index + 1,
            entry.name,
            entry.total_score
        );
    }
    if let Some(route) = &recommendation.reasoning.routed_to {
        println!("hard-problem route: {route}");
    }
    if let Some(tb) = &recommendation.reasoning.tie_break {
        println!("tie-break: rule {} chose {}", tb.rule, tb.winner);
    }
    if !recommendation.reasoning.missed_dimensions.is_empty() {
        println!(
            "primary falls short on: {}",
            recommendation.reasoning.missed_dimensions.join(", ")
        );
    }
    println!("pipeline:");
    for stage in &recommendation.reasoning.stages {
        println!("  [{}] {}: {}", stage.stage, stage.node, stage.decision);
    }
    Ok(())
}

fn load_dataset_dir(dir: &Path) -> Result<BTreeMap<String, Dataset>> {
    let mut datasets = BTreeMap::new();
    let entries =
        std::fs::read_dir(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir.display().to_string(), e))?;
        let path = entry.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let dataset = load_csv(&path, &BTreeMap::new())?;
            datasets.insert(dataset.name().to_string(), dataset);
        }
    }
    if datasets.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no CSV datasets under {}",
            dir.display()
        )));
    }
    Ok(datasets)
}

fn build_pairs(
    datasets: &BTreeMap<String, Dataset>,
    names: &[String],
    oracle: &OracleTable,
    registry: &Registry,
) -> Result<Vec<TrainPair>> {
    let mut pairs = Vec::new();
    for name in names {
        let dataset = datasets
            .get(name)
            .ok_or_else(|| Error::InvalidArgument(format!("dataset `{name}` not found")))?;
        for intent in Intent::ALL {
            match oracle.oracle_ranking(name, intent) {
                Ok(ranking) => pairs.push(train_pair(dataset, intent, ranking, registry)),
                Err(Error::MissingOracle { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(pairs)
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<()> {
    let registry = resolve_registry(&args.registry)?;
    let datasets = load_dataset_dir(&args.datasets)?;
    let oracle = OracleTable::from_path(&args.oracle)?;
    let names: Vec<String> = match &args.split_file {
        Some(path) => SplitSpec::from_path(path)?.train,
        None => datasets.keys().cloned().collect(),
    };
    let pairs = build_pairs(&datasets, &names, &oracle, &registry)?;

    let mut config = match args.variant {
        VariantArg::SfOnly => CalibrationConfig::sf_only(),
        VariantArg::Joint => CalibrationConfig::joint(),
    };
    config.seed = args.seed;
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(startup) = args.startup_trials {
        config.startup_trials = startup;
    }
    if let Some(objective) = args.objective {
        config.objective = match objective {
            ObjectiveArg::Spearman => ObjectiveKind::Spearman,
            ObjectiveArg::Top1 => ObjectiveKind::Top1,
        };
    }

    let result = calibrate(&config, &pairs, &registry)?;
    std::fs::write(&args.out, serde_json::to_string_pretty(&result)?)
        .map_err(|e| Error::io(args.out.display().to_string(), e))?;

    println!(
        "calibrated {} over {} pairs: best {} = {:.4} ({} trials, seed {})",
        match config.variant {
            Variant::SfOnly => "scale factors",
            Variant::Joint => "capabilities + scale factors",
        },
        pairs.len(),
        match config.objective {
            ObjectiveKind::Spearman => "mean Spearman",
            ObjectiveKind::Top1 => "Top-1",
        },
        result.best_objective,
        config.trials,
        config.seed
    );
    let factors = IntentScaleFactors::from(&result.best_params);
    for intent in Intent::ALL {
        let values = factors.get(intent).to_array();
        let rendered: Vec<String> = values.iter().map(|v| format!("{v:.2}")).collect();
        println!("  alpha[{intent}]: [{}]", rendered.join(", "));
    }
    println!("result written to {}", args.out.display());
    Ok(())
}

fn selector_specs(args: &EvaluateArgs) -> Result<Vec<SelectorSpec>> {
    let names: Vec<String> = if args.selectors.is_empty() {
        ["synthony", "knn", "random", "static", "majority"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    } else {
        args.selectors.clone()
    };
    names
        .iter()
        .map(|name| match name.as_str() {
            "synthony" => Ok(SelectorSpec::engine_full("synthony")),
            "knn" => Ok(SelectorSpec::Knn { k: args.knn_k }),
            "random" => Ok(SelectorSpec::Random {
                trials: args.random_trials,
            }),
            "static" => Ok(SelectorSpec::StaticHeuristic),
            "majority" => Ok(SelectorSpec::MajorityVote),
            "oracle" => Ok(SelectorSpec::OracleReplay),
            other => Err(Error::InvalidArgument(format!(
                "unknown selector `{other}` (expected synthony, knn, random, static, majority, oracle)"
            ))),
        })
        .collect()
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let mut registry = resolve_registry(&args.registry)?;
    if let Some(path) = &args.calibration {
        registry = apply_scale_factor_file(registry, path)?;
    }
    let datasets = load_dataset_dir(&args.datasets)?;
    let oracle = OracleTable::from_path(&args.oracle)?;
    let split = match &args.split_file {
        Some(path) => SplitSpec::from_path(path)?,
        None => {
            let names: Vec<String> = datasets.keys().cloned().collect();
            split_datasets(&names, args.seed, args.train_count)?
        }
    };
    let inputs = BenchInputs {
        datasets: &datasets,
        oracle: &oracle,
        registry: &registry,
        split: &split,
        seed: args.seed,
    };
    let specs = selector_specs(&args)?;
    let ablation_factors = if args.ablations {
        Some(registry.scale_factors.ok_or_else(|| {
            Error::InvalidArgument(
                "--ablations needs scale factors (registry or --calibration)".to_string(),
            )
        })?)
    } else {
        None
    };
    let run = run_benchmark(&inputs, &specs, ablation_factors.as_ref())?;

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::io(args.out_dir.display().to_string(), e))?;
    let text = render_text_report(&run);
    let json = serde_json::to_string_pretty(&run)?;
    let text_path = args.out_dir.join("report.txt");
    let json_path = args.out_dir.join("report.json");
    std::fs::write(&text_path, &text).map_err(|e| Error::io(text_path.display().to_string(), e))?;
    std::fs::write(&json_path, &json).map_err(|e| Error::io(json_path.display().to_string(), e))?;

    print!("{text}");
    println!(
        "reports written to {} and {}",
        text_path.display(),
        json_path.display()
    );
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<()> {
    let registry = resolve_registry(&args.registry)?;
    let mut ctx = ServerContext::new(registry, &args.data_root);
    if let Some(dir) = &args.cache_dir {
        ctx = ctx.with_cache(ProfileCache::open(dir)?);
    }
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    serve(stdin.lock(), stdout.lock(), &ctx)
        .map_err(|e| Error::io("stdio".to_string(), e))?;
    std::io::stdout()
        .flush()
        .map_err(|e| Error::io("stdout".to_string(), e))?;
    Ok(())
}
