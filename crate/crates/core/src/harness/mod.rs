//! Dataset generators, evaluation losses and desk-scale experiment
//! pipelines, all deterministic given (config, seed).

mod data;
pub mod losses;

pub use data::{
    balanced_taxonomy, generate_dicycle_dataset, generate_hierarchy_dataset,
    generate_multilabel_dataset, DicycleData, DicyclePolicy,
};

use std::path::{Path, PathBuf};

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::Structure;
use crate::decode::{predict_structure, LinearScorer};
use crate::error::{Error, Result};
use crate::online::{sgd_train, SgdConfig, Truncation};
use crate::ridge::{train_ncg, KernelKind, RidgeConfig, RidgeModel, RidgeProblem};

/// Mean cosine similarity between the learned per-instance policy vectors
/// and the hidden policy, over test inputs. Zero-norm learned policies
/// contribute 0 with a warning instead of NaN.
pub fn eval_policy_cosine(
    model: &RidgeModel,
    test_inputs: ArrayView2<f64>,
    policy: &DicyclePolicy,
) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..test_inputs.nrows() {
        let learned = model.input_weights(test_inputs.row(i))?;
        let truth = policy.pair_vector(test_inputs.row(i));
        let ln = learned.dot(&learned).sqrt();
        let tn = truth.dot(&truth).sqrt();
        if ln == 0.0 || tn == 0.0 {
            log::warn!("zero-norm policy vector at test instance {i}; contributes 0");
            continue;
        }
        total += learned.dot(&truth) / (ln * tn);
    }
    Ok(total / test_inputs.nrows() as f64)
}

/// Declarative experiment description; all randomness derives from `seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// One of: multilabel, hierarchical, dicycle, sgd_vs_ncg.
    pub experiment: String,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "defaults::m")]
    pub m: usize,
    #[serde(default = "defaults::m_test")]
    pub m_test: usize,
    #[serde(default = "defaults::n_features")]
    pub n_features: usize,
    /// Alphabet size (dicycle vertices, taxonomy nodes, label count).
    #[serde(default = "defaults::sigma")]
    pub sigma: usize,
    #[serde(default = "defaults::noise")]
    pub noise: f64,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "defaults::p")]
    pub p: f64,
    #[serde(default = "defaults::tau")]
    pub tau: usize,
    #[serde(default = "defaults::tol")]
    pub tol: f64,
    #[serde(default = "defaults::labels_per_instance")]
    pub labels_per_instance: usize,
    #[serde(default = "defaults::argmax_draws")]
    pub argmax_draws: usize,
    /// Training-set sizes for the dicycle learning curve.
    #[serde(default = "defaults::train_sizes")]
    pub train_sizes: Vec<usize>,
    /// Independent trials per configuration point.
    #[serde(default = "defaults::trials")]
    pub trials: usize,
}

mod defaults {
    pub fn m() -> usize {
        100
    }
    pub fn m_test() -> usize {
        100
    }
    pub fn n_features() -> usize {
        10
    }
    pub fn sigma() -> usize {
        6
    }
    pub fn noise() -> f64 {
        0.1
    }
    pub fn p() -> f64 {
        0.5
    }
    pub fn tau() -> usize {
        500
    }
    pub fn tol() -> f64 {
        1e-6
    }
    pub fn labels_per_instance() -> usize {
        1
    }
    pub fn argmax_draws() -> usize {
        200
    }
    pub fn train_sizes() -> Vec<usize> {
        vec![50, 100, 200, 400]
    }
    pub fn trials() -> usize {
        1
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("m", self.m),
            ("m_test", self.m_test),
            ("n_features", self.n_features),
            ("sigma", self.sigma),
            ("labels_per_instance", self.labels_per_instance),
            ("argmax_draws", self.argmax_draws),
            ("trials", self.trials),
        ] {
            if v == 0 {
                return Err(Error::Validation(format!("{name} must be positive")));
            }
        }
        if self.train_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Validation("train_sizes must be positive".into()));
        }
        match self.experiment.as_str() {
            "multilabel" | "hierarchical" | "dicycle" | "sgd_vs_ncg" => Ok(()),
            other => Err(Error::Validation(format!("unknown experiment `{other}`"))),
        }
    }
}

/// Paths of the files an experiment produced.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutput {
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Run the configured pipeline, writing `metrics.csv` and `run.json` into
/// the output directory. Any stage error aborts with the stage name and
/// removes partial outputs. File contents depend only on (config, seed).
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir)?;
    let csv_path = config.output_dir.join("metrics.csv");
    let json_path = config.output_dir.join("run.json");
    let result = dispatch(config);
    match result {
        Ok(csv) => {
            std::fs::write(&csv_path, csv)?;
            let echo = serde_json::json!({
                "config": config,
                "environment": {
                    "crate_version": env!("CARGO_PKG_VERSION"),
                    "threads": rayon::current_num_threads(),
                },
            });
            let json =
                serde_json::to_string_pretty(&echo).map_err(|e| Error::Parse(e.to_string()))?;
            std::fs::write(&json_path, json.as_bytes())?;
            Ok(ExperimentOutput {
                csv: csv_path,
                json: json_path,
            })
        }
        Err((stage, err)) => {
            let _ = std::fs::remove_file(&csv_path);
            let _ = std::fs::remove_file(&json_path);
            Err(Error::Validation(format!(
                "experiment stage `{stage}` failed: {err}"
            )))
        }
    }
}

type StageResult = std::result::Result<String, (&'static str, Error)>;

fn dispatch(config: &ExperimentConfig) -> StageResult {
    match config.experiment.as_str() {
        "multilabel" => multilabel_experiment(config),
        "hierarchical" => hierarchical_experiment(config),
        "dicycle" => dicycle_experiment(config),
        "sgd_vs_ncg" => sgd_vs_ncg_experiment(config),
        _ => unreachable!("validated"),
    }
}

fn stage<T>(name: &'static str, r: Result<T>) -> std::result::Result<T, (&'static str, Error)> {
    r.map_err(|e| (name, e))
}

fn multilabel_experiment(config: &ExperimentConfig) -> StageResult {
    let (train, _) = stage(
        "generate",
        generate_multilabel_dataset(
            config.m,
            config.n_features,
            config.sigma,
            config.noise,
            config.seed,
        ),
    )?;
    let (test, _) = stage(
        "generate",
        generate_multilabel_dataset(
            config.m_test,
            config.n_features,
            config.sigma,
            config.noise,
            config.seed ^ 0x7e57,
        ),
    )?;
    let ridge_config = RidgeConfig {
        kernel: KernelKind::Linear,
        lambda: config.lambda,
        tol: config.tol,
        max_iter: 200,
        rescale_loss: false,
    };
    let start = std::time::Instant::now();
    let (model, report) = stage("train", train_ncg(&train, &ridge_config))?;
    log::info!(
        "multilabel training took {:?} ({report:?})",
        start.elapsed()
    );
    let mut zero_one = 0.0;
    let mut hamming = 0.0;
    let mut ranking = 0.0;
    let x_test = stage("predict", test.features())?;
    let mut rng = crate::rng::derive(config.seed, 3);
    for i in 0..test.len() {
        let w = stage("predict", model.input_weights(x_test.row(i)))?;
        let scorer = stage("predict", LinearScorer::new(w.clone()))?;
        let (pred, _) = stage(
            "predict",
            predict_structure(&test.space, &scorer, 1 << 20, &mut rng),
        )?;
        let truth = &test.label_sets[i][0];
        let (z1, ham) = stage("metrics", losses::set_losses(&pred, truth))?;
        zero_one += z1;
        hamming += ham;
        let relevant: Vec<bool> = match truth {
            Structure::Subset(bits) => bits.clone(),
            _ => unreachable!(),
        };
        ranking += stage(
            "metrics",
            losses::ranking_loss(w.as_slice().unwrap(), &relevant),
        )?;
    }
    let m = test.len() as f64;
    let mut csv = String::from("m,m_test,d_labels,zero_one,hamming,ranking,converged\n");
    csv.push_str(&format!(
        "{},{},{},{},{},{},{}\n",
        config.m,
        config.m_test,
        config.sigma,
        zero_one / m,
        hamming / m,
        ranking / m,
        report.converged
    ));
    Ok(csv)
}

fn hierarchical_experiment(config: &ExperimentConfig) -> StageResult {
    let tree = stage("generate", balanced_taxonomy(config.sigma, 2))?;
    let train = stage(
        "generate",
        generate_hierarchy_dataset(&tree, config.m, config.noise, config.seed),
    )?;
    let test = stage(
        "generate",
        generate_hierarchy_dataset(&tree, config.m_test, config.noise, config.seed ^ 0x7e57),
    )?;
    let ridge_config = RidgeConfig {
        kernel: KernelKind::Linear,
        lambda: config.lambda,
        tol: config.tol,
        max_iter: 200,
        rescale_loss: false,
    };
    let (model, _) = stage("train", train_ncg(&train, &ridge_config))?;
    let x_test = stage("predict", test.features())?;
    let mut l01 = 0.0;
    let mut l_delta = 0.0;
    let mut l_h = 0.0;
    let mut rng = crate::rng::derive(config.seed, 4);
    for i in 0..test.len() {
        let w = stage("predict", model.input_weights(x_test.row(i)))?;
        let scorer = stage("predict", LinearScorer::new(w))?;
        let (pred, _) = stage(
            "predict",
            predict_structure(&test.space, &scorer, 1 << 20, &mut rng),
        )?;
        let (pred_node, true_node) = match (&pred, &test.label_sets[i][0]) {
            (Structure::Label(a), Structure::Label(b)) => (*a, *b),
            _ => unreachable!(),
        };
        let zm = losses::microlabels(&tree, pred_node);
        let ym = losses::microlabels(&tree, true_node);
        if pred_node != true_node {
            l01 += 1.0;
        }
        l_delta += zm.iter().zip(ym.iter()).filter(|(a, b)| a != b).count() as f64;
        l_h += stage("metrics", losses::hierarchical_loss(&zm, &ym, &tree))?;
    }
    let m = test.len() as f64;
    let mut csv = String::from("m,m_test,nodes,l01,lDelta,lH\n");
    csv.push_str(&format!(
        "{},{},{},{},{},{}\n",
        config.m,
        config.m_test,
        config.sigma,
        l01 / m,
        l_delta / m,
        l_h / m
    ));
    Ok(csv)
}

fn dicycle_experiment(config: &ExperimentConfig) -> StageResult {
    let mut rows: Vec<(usize, u64, f64)> = Vec::new();
    let points: Vec<(usize, u64)> = config
        .train_sizes
        .iter()
        .flat_map(|&m| (0..config.trials as u64).map(move |t| (m, t)))
        .collect();
    let results: Vec<std::result::Result<(usize, u64, f64), (&'static str, Error)>> = points
        .par_iter()
        .map(|&(m, trial)| {
            let seed = crate::rng::RngStream::new(config.seed)
                .substream(trial)
                .seed();
            let data = stage(
                "generate",
                generate_dicycle_dataset(
                    config.n_features,
                    m,
                    config.m_test,
                    config.sigma,
                    config.labels_per_instance,
                    config.argmax_draws,
                    seed,
                ),
            )?;
            let ridge_config = RidgeConfig {
                kernel: KernelKind::Linear,
                lambda: config.lambda,
                tol: config.tol,
                max_iter: 200,
                rescale_loss: false,
            };
            let (model, _) = stage("train", train_ncg(&data.train, &ridge_config))?;
            let cosine = stage(
                "evaluate",
                eval_policy_cosine(&model, data.test_inputs.view(), &data.policy),
            )?;
            Ok((m, trial, cosine))
        })
        .collect();
    for r in results {
        rows.push(r?);
    }
    let mut csv = String::from("m,trial,cosine\n");
    for (m, trial, cosine) in rows {
        csv.push_str(&format!("{m},{trial},{cosine}\n"));
    }
    Ok(csv)
}

fn sgd_vs_ncg_experiment(config: &ExperimentConfig) -> StageResult {
    let (train, _) = stage(
        "generate",
        generate_multilabel_dataset(
            config.m,
            config.n_features,
            config.sigma,
            config.noise,
            config.seed,
        ),
    )?;
    let count = stage("stats", train.space.stats())?.count_f64();
    let lambda_batch = config
        .lambda
        .unwrap_or(count * train.total_labels() as f64 / train.len() as f64);
    let ridge_config = RidgeConfig {
        kernel: KernelKind::Linear,
        lambda: Some(lambda_batch),
        tol: config.tol,
        max_iter: 200,
        rescale_loss: false,
    };
    let t0 = std::time::Instant::now();
    let (ncg_model, ncg_report) = stage("train", train_ncg(&train, &ridge_config))?;
    let ncg_time = t0.elapsed();
    let problem = stage("train", RidgeProblem::new(&train, &ridge_config))?;
    let ncg_obj = stage("train", problem.objective(&ncg_model.alpha))?;

    // The instantaneous objective pairs the full regulariser with one
    // example's loss; lambda is scaled down so the single-pass dynamics
    // track the batch optimum.
    let sgd_config = SgdConfig {
        kernel: KernelKind::Linear,
        p: config.p,
        tau: Truncation::Count(config.tau),
        lambda: Some(lambda_batch / 10.0),
        passes: 1,
        rescale_loss: false,
    };
    let t1 = std::time::Instant::now();
    let (sgd_model, log) = stage("train", sgd_train(&train, &sgd_config, config.seed))?;
    let sgd_time = t1.elapsed();
    let sgd_obj = stage("train", problem.objective(&sgd_model.alpha))?;
    log::info!(
        "sgd_vs_ncg wall times: ncg {:?} ({} iterations), sgd {:?} ({} steps)",
        ncg_time,
        ncg_report.iterations,
        sgd_time,
        log.records.len()
    );
    let mut csv = String::from("method,final_objective,steps\n");
    csv.push_str(&format!("ncg,{ncg_obj},{}\n", ncg_report.iterations));
    csv.push_str(&format!("sgd,{sgd_obj},{}\n", log.records.len()));
    Ok(csv)
}

/// Convenience for tests: run and read back the metrics file.
pub fn run_experiment_in(config: &ExperimentConfig, dir: &Path) -> Result<String> {
    let mut c = config.clone();
    c.output_dir = dir.to_path_buf();
    let out = run_experiment(&c)?;
    Ok(std::fs::read_to_string(out.csv)?)
}
