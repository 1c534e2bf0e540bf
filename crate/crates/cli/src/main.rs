//! `entstruct`: generate datasets, train classifiers, sweep state families
//! and extract separability bounds.
//!
//! Exit codes: 0 on success, 1 on runtime or IO failure, 2 on usage errors.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use entstruct::analysis::{
    gen_ghz_accuracy, noised_ghz_accuracy, predict_measurements, predictions_csv, read_measurements,
    sweep_gen_ghz, sweep_noised_ghz, sweep_validation_set, Family, SweepResult, DEFAULT_SWEEP_POINTS,
};
use entstruct::dataset::{generate, Dataset, Split, DEFAULT_PER_COMPOSITION};
use entstruct::mlp::{
    build_base_config, build_ghz_config, evaluate, history_csv, train, MlpModel, SelectionSet, Validation,
};

use manifest::ManifestBuilder;

#[derive(Debug, Parser)]
#[command(
    name = "entstruct",
    version,
    about = "Entanglement structure classification pipeline"
)]
struct Cli {
    /// Worker threads for generation, training and sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labelled dataset.
    Gen(GenArgs),
    /// Train a classifier on a dataset.
    Train(TrainArgs),
    /// Accuracy of a model on one split of a dataset.
    Eval(EvalArgs),
    /// Sweep a state family through a model.
    Sweep(SweepArgs),
    /// Extract intactness/depth bounds from a noised-GHZ sweep CSV.
    Bounds(BoundsArgs),
    /// Predict structure for measured feature vectors.
    Predict(PredictArgs),
}

#[derive(Debug, Args, Serialize)]
struct GenArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=16))]
    n: u64,
    /// Samples per composition.
    #[arg(long = "per-comp", default_value_t = DEFAULT_PER_COMPOSITION, value_parser = parse_per_comp)]
    per_comp: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Arch {
    Base,
    Ghz,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    /// Dataset file written by `gen`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = Arch::Base)]
    arch: Arch,
    /// Expected qubit count; checked against the dataset.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the preset epoch count.
    #[arg(long)]
    epochs: Option<usize>,
    /// Grid size of the noised-GHZ validation set used by `--arch ghz`.
    #[arg(long, default_value_t = 1000)]
    sweep_val_points: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SplitArg {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Kind {
    GenGhz,
    NoisedGhz,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = DEFAULT_SWEEP_POINTS, value_parser = parse_points)]
    points: usize,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct BoundsArgs {
    /// Noised-GHZ sweep CSV written by `sweep --kind noised-ghz`.
    #[arg(long)]
    sweep: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV with header `state_id,n,mz,mx,az,ax,true_m,true_d`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_per_comp(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v < 6 {
        return Err("must be at least 6".into());
    }
    Ok(v)
}

fn parse_points(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v < 2 {
        return Err("must be at least 2".into());
    }
    Ok(v)
}

/// Bad invocation detected after argument parsing.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn require_file(path: &Path, what: &str) -> anyhow::Result<()> {
    if !path.is_file() {
        return Err(UsageError(format!("{what} {} does not exist", path.display())).into());
    }
    Ok(())
}

fn prepare_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_model(path: &Path, n: Option<usize>) -> anyhow::Result<MlpModel> {
    require_file(path, "model file")?;
    let model = MlpModel::load(path)?;
    let model_n = model.qubits().expect("loaded models carry n");
    if let Some(n) = n {
        if n != model_n {
            return Err(UsageError(format!("--n {n} but model is for n = {model_n}")).into());
        }
    }
    Ok(model)
}

fn cmd_gen(args: &GenArgs) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::start("gen", args, Some(args.seed));
    prepare_out(&args.out)?;
    let data = generate(args.n as usize, args.per_comp, args.seed)?;
    let path = args.out.join("dataset.txt");
    data.save(&path)?;
    manifest.output(&path);
    println!("wrote {} records to {}", data.records.len(), path.display());
    manifest.finish(&args.out)?;
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> anyhow::Result<()> {
    require_file(&args.data, "dataset")?;
    let mut manifest = ManifestBuilder::start("train", args, Some(args.seed));
    manifest.input(&args.data);
    let data = Dataset::load(&args.data)?;
    if let Some(n) = args.n {
        if n != data.n {
            return Err(UsageError(format!("--n {n} but dataset is for n = {}", data.n)).into());
        }
    }
    let n = data.n;
    let (dims, mut cfg) = match args.arch {
        Arch::Base => build_base_config(n)?,
        Arch::Ghz => build_ghz_config(n)?,
    };
    cfg.seed = args.seed;
    if let Some(e) = args.epochs {
        if e == 0 {
            return Err(UsageError("--epochs must be positive".into()).into());
        }
        cfg.epochs = e;
    }
    let validation = match cfg.selection_set {
        SelectionSet::RandomValidation => Validation::exact(data.samples(Split::Validation)),
        SelectionSet::SweepValidation => sweep_validation_set(n, args.sweep_val_points)?,
    };
    let model = MlpModel::init(&dims, args.seed)?.for_qubits(n)?;
    let outcome = train(model, &data.samples(Split::Train), &validation, &cfg)?;

    prepare_out(&args.out)?;
    let model_path = args.out.join("model.txt");
    outcome.model.save(&model_path)?;
    let history_path = args.out.join("history.csv");
    write(&history_path, &history_csv(&outcome.history))?;
    manifest.output(&model_path);
    manifest.output(&history_path);
    let test_acc = evaluate(&outcome.model, &data.samples(Split::Test))?;
    println!(
        "trained {:?} for {} epochs (selected epoch {:?}); test accuracy {test_acc:.4}",
        dims, cfg.epochs, outcome.model.meta.selected_epoch
    );
    manifest.finish(&args.out)?;
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> anyhow::Result<()> {
    require_file(&args.data, "dataset")?;
    let model = load_model(&args.model, None)?;
    let mut manifest = ManifestBuilder::start("eval", args, None);
    manifest.input(&args.model);
    manifest.input(&args.data);
    let data = Dataset::load(&args.data)?;
    if Some(data.n) != model.qubits() {
        bail!(
            "dataset is for n = {}, model for n = {:?}",
            data.n,
            model.qubits()
        );
    }
    let split = match args.split {
        SplitArg::Train => Split::Train,
        SplitArg::Validation => Split::Validation,
        SplitArg::Test => Split::Test,
    };
    let accuracy = evaluate(&model, &data.samples(split))?;
    prepare_out(&args.out)?;
    let path = args.out.join("eval.json");
    let report = serde_json::json!({ "n": data.n, "split": args.split, "accuracy": accuracy });
    write(&path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    manifest.output(&path);
    println!("accuracy {accuracy:.6}");
    manifest.finish(&args.out)?;
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<()> {
    let model = load_model(&args.model, args.n)?;
    let n = model.qubits().expect("loaded models carry n");
    let mut manifest = ManifestBuilder::start("sweep", args, None);
    manifest.input(&args.model);
    let (sweep, name, accuracy) = match args.kind {
        Kind::GenGhz => {
            let (s, _) = sweep_gen_ghz(&model, n, args.points)?;
            let acc = gen_ghz_accuracy(&s);
            (s, "sweep-gen-ghz.csv", acc)
        }
        Kind::NoisedGhz => {
            let s = sweep_noised_ghz(&model, n, args.points)?;
            let acc = noised_ghz_accuracy(&s);
            (s, "sweep-noised-ghz.csv", acc)
        }
    };
    prepare_out(&args.out)?;
    let path = args.out.join(name);
    write(&path, &sweep.to_csv())?;
    manifest.output(&path);
    println!("{} points, accuracy {accuracy:.6}", sweep.points.len());
    manifest.finish(&args.out)?;
    Ok(())
}

fn cmd_bounds(args: &BoundsArgs) -> anyhow::Result<()> {
    require_file(&args.sweep, "sweep file")?;
    let mut manifest = ManifestBuilder::start("bounds", args, None);
    manifest.input(&args.sweep);
    let text =
        fs::read_to_string(&args.sweep).with_context(|| format!("reading {}", args.sweep.display()))?;
    let sweep = SweepResult::from_csv(&text, args.n, Family::NoisedGhz)?;
    let report = sweep.bounds();
    prepare_out(&args.out)?;
    let path = args.out.join("bounds.csv");
    write(&path, &report.to_csv())?;
    manifest.output(&path);
    print!("{}", report.to_csv());
    manifest.finish(&args.out)?;
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> anyhow::Result<()> {
    require_file(&args.input, "measurement file")?;
    let model = load_model(&args.model, None)?;
    let mut manifest = ManifestBuilder::start("predict", args, None);
    manifest.input(&args.model);
    manifest.input(&args.input);
    let text =
        fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let records = read_measurements(&text)?;
    let preds = predict_measurements(&model, &records)?;
    prepare_out(&args.out)?;
    let path = args.out.join("predictions.csv");
    let csv = predictions_csv(&preds);
    write(&path, &csv)?;
    manifest.output(&path);
    print!("{csv}");
    manifest.finish(&args.out)?;
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Predict(a) => cmd_predict(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
