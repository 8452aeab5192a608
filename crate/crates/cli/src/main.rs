//! `combi`: counting, training, prediction, sampling and partition-function
//! estimation over combinatorial output spaces.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array1;

use combi_core::counting::{parse_spec, StructureSpace};
use combi_core::decode::{predict_structure, LinearScorer};
use combi_core::error::{Error, Result};
use combi_core::harness::{run_experiment, ExperimentConfig};
use combi_core::online::{sgd_train, SgdConfig, Truncation};
use combi_core::partition::{estimate_partition, LevelSampler};
use combi_core::ridge::io::{model_from_json, model_to_json, parse_dataset};
use combi_core::ridge::{train_ncg, KernelKind, RidgeConfig};
use combi_core::rng::RngStream;
use combi_core::sampling::{cftp_sample, default_cftp_budget, ConditionalTarget, ExpFamilyModel};

#[derive(Parser)]
#[command(
    name = "combi",
    about = "Structured prediction over combinatorial output spaces",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the exact statistics (|Y|, Psi, C) of a structure space.
    Count(CountArgs),
    /// Train a model on a dataset file.
    Train(TrainArgs),
    /// Predict one structure per input row.
    Predict(PredictArgs),
    /// Draw structures uniformly or from a trained model's distribution.
    Sample(SampleArgs),
    /// Estimate the partition function of a trained model at one input.
    EstimateZ(EstimateZArgs),
    /// Run a named experiment from a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct CountArgs {
    /// Space spec, e.g. multilabel:d=3 or subtrees:tree=FILE.
    spec: String,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset file: rows `label_set | idx:val idx:val ...`.
    dataset: PathBuf,
    /// Space spec the labels belong to.
    #[arg(long)]
    space: String,
    /// Output model file (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Trainer: ncg (batch Newton conjugate gradient) or sgd.
    #[arg(long, default_value = "ncg")]
    method: String,
    /// Regularisation parameter; defaults to |Y| * (sum |Y_i|) / m.
    #[arg(long)]
    lambda: Option<f64>,
    /// Kernel: linear, poly:<degree>:<offset>, rbf:<bandwidth>.
    #[arg(long, default_value = "linear")]
    kernel: String,
    /// Relative gradient tolerance (ncg).
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Divide the loss by |Y| (for huge spaces).
    #[arg(long)]
    rescale_loss: bool,
    /// SGD step-size numerator.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// SGD truncation horizon (columns).
    #[arg(long, default_value_t = 500)]
    tau: usize,
    /// SGD passes over the data.
    #[arg(long, default_value_t = 1)]
    passes: usize,
    /// Seed for the SGD shuffle.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the SGD training log CSV here.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Model file from `train`.
    model: PathBuf,
    /// Input rows: `idx:val idx:val ...` (a leading `label |` part is ignored).
    inputs: PathBuf,
    /// Write predictions here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Enumeration budget for families without a polynomial decoder.
    #[arg(long, default_value_t = 1_000_000)]
    limit: u64,
    /// Seed for randomised decoders (sibling systems).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SampleArgs {
    /// Space spec to sample from.
    spec: String,
    /// Number of samples.
    #[arg(long, default_value_t = 10)]
    count: u64,
    #[arg(long)]
    seed: u64,
    /// Model file: sample from p(y|x,w) instead of uniformly.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Input row for the model's conditional distribution.
    #[arg(long)]
    input: Option<String>,
    /// Write samples here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a coalescence-step histogram JSON here.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Step budget per draw for model sampling; default 100 * exp(2BR).
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct EstimateZArgs {
    /// Model file from `train`.
    model: PathBuf,
    /// Input row `idx:val idx:val ...`.
    #[arg(long)]
    input: String,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Cooling constant (>= 3).
    #[arg(long, default_value_t = 3)]
    p: u32,
    #[arg(long)]
    seed: u64,
    /// Sampler: cftp, chain:<steps>, or exact.
    #[arg(long, default_value = "cftp")]
    sampler: String,
    /// Enumeration budget for the exact sampler.
    #[arg(long, default_value_t = 1_000_000)]
    limit: u64,
    /// Write the result JSON (without wall time) here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config JSON.
    config: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Ok(threads) = std::env::var("COMBI_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: COMBI_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Count(args) => count(args),
        Command::Train(args) => train(args),
        Command::Predict(args) => predict(args),
        Command::Sample(args) => sample(args),
        Command::EstimateZ(args) => estimate_z(args),
        Command::Experiment(args) => experiment(args),
    }
}

fn read_file(path: &str) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read `{path}`: {e}")))
}

fn load_space(spec: &str) -> Result<StructureSpace> {
    parse_spec(spec, &|path| read_file(path))
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, content.as_bytes())?;
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn count(args: CountArgs) -> Result<()> {
    let space = load_space(&args.spec)?;
    let stats = space.stats()?;
    let json =
        serde_json::to_string_pretty(&stats.to_json()).map_err(|e| Error::Parse(e.to_string()))?;
    emit(&args.out, &format!("{json}\n"))
}

fn parse_kernel(text: &str) -> Result<KernelKind> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        ["linear"] => Ok(KernelKind::Linear),
        ["poly", degree, offset] => Ok(KernelKind::Polynomial {
            degree: degree
                .parse()
                .map_err(|_| Error::Parse(format!("bad degree `{degree}`")))?,
            offset: offset
                .parse()
                .map_err(|_| Error::Parse(format!("bad offset `{offset}`")))?,
        }),
        ["rbf", bandwidth] => Ok(KernelKind::Rbf {
            bandwidth: bandwidth
                .parse()
                .map_err(|_| Error::Parse(format!("bad bandwidth `{bandwidth}`")))?,
        }),
        _ => Err(Error::Parse(format!(
            "unknown kernel `{text}`; use linear, poly:<degree>:<offset> or rbf:<bandwidth>"
        ))),
    }
}

fn train(args: TrainArgs) -> Result<()> {
    let space = load_space(&args.space)?;
    let text = std::fs::read_to_string(&args.dataset)?;
    let data = parse_dataset(space, &text, None)?;
    let kernel = parse_kernel(&args.kernel)?;
    let model = match args.method.as_str() {
        "ncg" => {
            let config = RidgeConfig {
                kernel,
                lambda: args.lambda,
                tol: args.tol,
                max_iter: 200,
                rescale_loss: args.rescale_loss,
            };
            let (model, report) = train_ncg(&data, &config)?;
            log::info!(
                "ncg: converged={} iterations={} grad_norm={:e} objective={computed:e}",
                report.converged,
                report.iterations,
                report.grad_norm,
                computed = report.objective
            );
            model
        }
        "sgd" => {
            let config = SgdConfig {
                kernel,
                p: args.p,
                tau: Truncation::Count(args.tau),
                lambda: args.lambda,
                passes: args.passes,
                rescale_loss: args.rescale_loss,
            };
            let (model, train_log) = sgd_train(&data, &config, args.seed)?;
            if let Some(path) = &args.log {
                std::fs::write(path, train_log.to_csv())?;
            }
            model
        }
        other => {
            return Err(Error::Validation(format!(
                "unknown method `{other}`; use ncg or sgd"
            )))
        }
    };
    std::fs::write(&args.out, model_to_json(&model)?)?;
    log::info!("model written to {}", args.out.display());
    Ok(())
}

fn parse_input_row(line: &str, n: usize) -> Result<Array1<f64>> {
    let feats = line.rsplit('|').next().unwrap_or(line);
    let mut x = Array1::zeros(n);
    for pair in feats.split_whitespace() {
        let (idx, val) = pair
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected idx:val, found `{pair}`")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| Error::Parse(format!("bad index `{idx}`")))?;
        if idx >= n {
            return Err(Error::Parse(format!(
                "feature index {idx} out of range 0..{n}"
            )));
        }
        x[idx] = val
            .parse()
            .map_err(|_| Error::Parse(format!("bad value `{val}`")))?;
    }
    Ok(x)
}

fn predict(args: PredictArgs) -> Result<()> {
    let model = model_from_json(&std::fs::read_to_string(&args.model)?)?;
    let n = model
        .train_inputs
        .as_ref()
        .map(|x| x.ncols())
        .ok_or_else(|| Error::Unsupported("model lacks training inputs".into()))?;
    let text = std::fs::read_to_string(&args.inputs)?;
    let mut output = String::new();
    let stream = RngStream::new(args.seed);
    for (row, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let x = parse_input_row(line, n)?;
        let w = model.input_weights(x.view())?;
        let scorer = LinearScorer::new(w)?;
        let mut rng = stream.at(row as u64);
        let (y, score) = predict_structure(&model.space, &scorer, args.limit, &mut rng)?;
        output.push_str(&format!("{} {}\n", y.format_label(), score));
    }
    emit(&args.out, &output)
}

fn sample(args: SampleArgs) -> Result<()> {
    let space = load_space(&args.spec)?;
    let stream = RngStream::new(args.seed);
    let mut output = String::new();
    let mut histogram: std::collections::BTreeMap<u64, u64> = std::collections::BTreeMap::new();
    match (&args.model, &args.input) {
        (None, _) => {
            for i in 0..args.count {
                let mut rng = stream.at(i);
                let y = combi_core::sampling::uniform_structure(&space, &mut rng)?;
                output.push_str(&y.format_label());
                output.push('\n');
            }
        }
        (Some(model_path), input) => {
            let model = model_from_json(&std::fs::read_to_string(model_path)?)?;
            let n = model.train_inputs.as_ref().map(|x| x.ncols()).unwrap_or(0);
            let input = input.as_ref().ok_or_else(|| {
                Error::Validation("--model needs --input to fix the conditional".into())
            })?;
            let x = parse_input_row(input, n)?;
            let u = model.input_weights(x.view())?;
            let r = space.embedding_norm_bound();
            let b = u.dot(&u).sqrt();
            let br = b * r;
            let target = ConditionalTarget::from_weights(&space, u);
            let budget = args.budget.unwrap_or_else(|| default_cftp_budget(br));
            for i in 0..args.count {
                let (y, steps) = cftp_sample(&target, br, &stream.substream(i), budget)?;
                *histogram.entry(steps).or_insert(0) += 1;
                output.push_str(&y.format_label());
                output.push('\n');
            }
        }
    }
    emit(&args.out, &output)?;
    if let Some(path) = &args.diagnostics {
        let json = serde_json::json!({ "coalescence_histogram": histogram });
        let text = serde_json::to_string_pretty(&json).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(path, text.as_bytes())?;
    }
    Ok(())
}

fn parse_sampler(text: &str, limit: u64) -> Result<LevelSampler> {
    if text == "cftp" {
        return Ok(LevelSampler::Cftp);
    }
    if text == "exact" {
        return Ok(LevelSampler::Exact { limit });
    }
    if let Some(steps) = text.strip_prefix("chain:") {
        let steps: u64 = steps
            .parse()
            .map_err(|_| Error::Parse(format!("bad chain step count `{steps}`")))?;
        return Ok(LevelSampler::Chain { steps });
    }
    Err(Error::Parse(format!(
        "unknown sampler `{text}`; use cftp, chain:<steps> or exact"
    )))
}

fn estimate_z(args: EstimateZArgs) -> Result<()> {
    let model = model_from_json(&std::fs::read_to_string(&args.model)?)?;
    let n = model.train_inputs.as_ref().map(|x| x.ncols()).unwrap_or(0);
    let x = parse_input_row(&args.input, n)?;
    let u = model.input_weights(x.view())?;
    let space = model.space.clone();
    let r = space.embedding_norm_bound();
    let exp_model = ExpFamilyModel::new(u, 1, r)?;
    let sampler = parse_sampler(&args.sampler, args.limit)?;
    let stream = RngStream::new(args.seed);
    let start = std::time::Instant::now();
    let est = estimate_partition(
        &exp_model,
        Array1::from_vec(vec![1.0]).view(),
        &space,
        args.epsilon,
        args.p,
        &sampler,
        &stream,
    )?;
    let wall = start.elapsed().as_millis() as u64;
    let mut json = serde_json::json!({
        "Z": est.value,
        "S": est.samples_per_level,
        "l": est.levels,
        "epsilon": est.epsilon,
        "confidence": est.confidence,
    });
    if let Some(path) = &args.out {
        let text = serde_json::to_string_pretty(&json).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(path, format!("{text}\n"))?;
    }
    json["wall_time_ms"] = serde_json::json!(wall);
    let text = serde_json::to_string_pretty(&json).map_err(|e| Error::Parse(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("config: {e}")))?;
    let out = run_experiment(&config)?;
    log::info!("wrote {} and {}", out.csv.display(), out.json.display());
    Ok(())
}
