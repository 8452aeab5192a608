//! Stochastic gradient descent in the kernel parameterisation.
//!
//! Each step works on the instantaneous objective of the current example:
//! the full regulariser over the columns seen so far plus that example's
//! loss. Updates follow the kernel-expansion form: every retained column is
//! shrunk by (1 - lambda eta_t), the current example's column receives the
//! loss gradient, and columns older than the truncation horizon tau are
//! dropped entirely.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::EmbeddingStats;
use crate::error::{Error, Result};
use crate::ridge::{Dataset, KernelKind, RidgeModel};
use crate::rng;

/// Units for the truncation horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Keep at most this many coefficient columns.
    Count(usize),
    /// Keep at most ceil(fraction * m) columns.
    FractionOfData(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SgdConfig {
    pub kernel: KernelKind,
    /// Step-size numerator: eta_t = p / (lambda t). Values above 1 violate
    /// 0 <= 1 - lambda eta_t < 1 at t = 1 and are clipped with a warning.
    pub p: f64,
    pub tau: Truncation,
    /// None selects the default lambda = |Y| * (sum_i |Y_i|) / m.
    pub lambda: Option<f64>,
    pub passes: usize,
    pub rescale_loss: bool,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            kernel: KernelKind::Linear,
            p: 0.5,
            tau: Truncation::Count(500),
            lambda: None,
            passes: 1,
            rescale_loss: false,
        }
    }
}

/// One record per SGD step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SgdStepRecord {
    pub step: u64,
    pub eta: f64,
    pub instantaneous_objective: f64,
    pub active_columns: usize,
}

/// Training log; renders to the CSV format `step,eta,instantaneous_objective,active_columns`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SgdLog {
    pub records: Vec<SgdStepRecord>,
}

impl SgdLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,eta,instantaneous_objective,active_columns\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.step, r.eta, r.instantaneous_objective, r.active_columns
            ));
        }
        out
    }
}

/// Instantaneous objective at time t:
/// lambda tr(aKa') + 1/2 k'a'Cak + Psi'ak + (|Y|/2)(yak)^2 - |Y| yak - Psi'ak yak,
/// where k is the current example's kernel column and y its Y-matrix row.
pub fn instantaneous_objective(
    alpha: &Array2<f64>,
    gram: &Array2<f64>,
    k: &Array1<f64>,
    y_row: &Array1<f64>,
    stats: &EmbeddingStats,
    lambda: f64,
) -> Result<f64> {
    check_dims(alpha, gram, k, y_row, stats)?;
    let n = stats.count_f64();
    let f = alpha.dot(k);
    let reg = lambda * (alpha * &alpha.dot(gram)).sum();
    let s = stats.psi.dot(&f);
    let v = y_row.dot(&f);
    Ok(reg + 0.5 * f.dot(&stats.cov.dot(&f)) + s + 0.5 * n * v * v - n * v - s * v)
}

/// Gradient of the instantaneous objective with respect to alpha (d x t).
pub fn instantaneous_gradient(
    alpha: &Array2<f64>,
    gram: &Array2<f64>,
    k: &Array1<f64>,
    y_row: &Array1<f64>,
    stats: &EmbeddingStats,
    lambda: f64,
) -> Result<Array2<f64>> {
    check_dims(alpha, gram, k, y_row, stats)?;
    let f = alpha.dot(k);
    let mut grad = alpha.dot(gram) * (2.0 * lambda);
    let front = loss_gradient_front(&f, y_row, stats);
    // rank-one update: grad += front k'
    let t = k.len();
    let d = front.len();
    for j in 0..t {
        let kj = k[j];
        if kj == 0.0 {
            continue;
        }
        for l in 0..d {
            grad[[l, j]] += front[l] * kj;
        }
    }
    Ok(grad)
}

/// Product of the instantaneous Hessian with a direction v (d x t).
pub fn instantaneous_hessian_vector(
    dir: &Array2<f64>,
    gram: &Array2<f64>,
    k: &Array1<f64>,
    y_row: &Array1<f64>,
    stats: &EmbeddingStats,
    lambda: f64,
) -> Result<Array2<f64>> {
    check_dims(dir, gram, k, y_row, stats)?;
    let n = stats.count_f64();
    let fv = dir.dot(k);
    let mut out = dir.dot(gram) * (2.0 * lambda);
    let vv = y_row.dot(&fv);
    let sv = stats.psi.dot(&fv);
    let front = stats.cov.dot(&fv) + &(y_row * (n * vv - sv)) - &(&stats.psi * vv);
    let (d, t) = (front.len(), k.len());
    for j in 0..t {
        let kj = k[j];
        if kj == 0.0 {
            continue;
        }
        for l in 0..d {
            out[[l, j]] += front[l] * kj;
        }
    }
    Ok(out)
}

/// Derivative of the example loss with respect to f = alpha k:
/// C f + Psi + |Y|(yf) y' - |Y| y' - (yf) Psi - (Psi'f) y'.
fn loss_gradient_front(
    f: &Array1<f64>,
    y_row: &Array1<f64>,
    stats: &EmbeddingStats,
) -> Array1<f64> {
    let n = stats.count_f64();
    let v = y_row.dot(f);
    let s = stats.psi.dot(f);
    let mut front = stats.cov.dot(f);
    front += &stats.psi;
    front.scaled_add(n * v - n - s, y_row);
    front.scaled_add(-v, &stats.psi);
    front
}

fn check_dims(
    alpha: &Array2<f64>,
    gram: &Array2<f64>,
    k: &Array1<f64>,
    y_row: &Array1<f64>,
    stats: &EmbeddingStats,
) -> Result<()> {
    let d = stats.psi.len();
    let t = alpha.ncols();
    if alpha.nrows() != d {
        return Err(Error::Dimension(format!(
            "alpha has {} rows, expected {d}",
            alpha.nrows()
        )));
    }
    if gram.nrows() != t || gram.ncols() != t {
        return Err(Error::Dimension(format!(
            "gram is {}x{}, expected {t}x{t}",
            gram.nrows(),
            gram.ncols()
        )));
    }
    if k.len() != t {
        return Err(Error::Dimension(format!(
            "kernel column has length {}, expected {t}",
            k.len()
        )));
    }
    if y_row.len() != d {
        return Err(Error::Dimension(format!(
            "Y row has length {}, expected {d}",
            y_row.len()
        )));
    }
    Ok(())
}

/// Single- or multi-pass SGD over a shuffled dataset.
///
/// Divergence is detected when the instantaneous objective passes 1e12.
pub fn sgd_train(data: &Dataset, config: &SgdConfig, seed: u64) -> Result<(RidgeModel, SgdLog)> {
    let m = data.len();
    let stats = data.space.stats()?;
    let count = stats.count_f64();
    let lambda = match config.lambda {
        Some(l) => l,
        None => count * data.total_labels() as f64 / m as f64,
    };
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Validation(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if config.passes == 0 {
        return Err(Error::Validation("passes must be at least 1".into()));
    }
    let eff_stats = if config.rescale_loss {
        if !count.is_finite() {
            return Err(Error::Numeric(
                "|Y| exceeds the float range even for rescaling".into(),
            ));
        }
        EmbeddingStats {
            count: num_bigint::BigUint::from(1u32),
            psi: &stats.psi / count,
            cov: &stats.cov / count,
        }
    } else {
        stats.clone()
    };
    if config.p > 1.0 {
        log::warn!(
            "step-size numerator p = {} violates 0 <= 1 - lambda*eta at t = 1; eta is clipped",
            config.p
        );
    }
    let tau = match config.tau {
        Truncation::Count(c) => c,
        Truncation::FractionOfData(fr) => {
            if !(0.0..=1.0).contains(&fr) {
                return Err(Error::Validation(format!(
                    "tau fraction {fr} outside [0,1]"
                )));
            }
            ((fr * m as f64).ceil() as usize).max(1)
        }
    };
    if tau == 0 {
        return Err(Error::Validation(
            "truncation horizon must be at least 1".into(),
        ));
    }

    let x = data.features()?;
    let y_all = data.y_matrix()?;
    let d = data.space.embedding_dim();

    // retained expansion: training-data indices and their coefficient columns
    let mut retained: Vec<usize> = Vec::new();
    let mut alpha_cols: Vec<Array1<f64>> = Vec::new();
    let mut log = SgdLog::default();
    let mut t_global = 0u64;

    for pass in 0..config.passes {
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng::derive(seed, pass as u64));
        for &i in &order {
            t_global += 1;
            let eta = config.p.min(t_global as f64) / (lambda * t_global as f64);
            // kernel column of x_i against the retained expansion plus itself
            let mut k = Array1::zeros(retained.len() + 1);
            for (j, &r) in retained.iter().enumerate() {
                k[j] = config.kernel.eval(x.row(r), x.row(i));
            }
            let self_k = config.kernel.eval(x.row(i), x.row(i));
            k[retained.len()] = self_k;
            // f = alpha k over retained columns (new column starts at zero)
            let mut f = Array1::zeros(d);
            for (j, col) in alpha_cols.iter().enumerate() {
                f.scaled_add(k[j], col);
            }
            let y_row = y_all.row(i).to_owned();
            let front = loss_gradient_front(&f, &y_row, &eff_stats);
            // shrink retained columns, then install the loss step on column t
            let shrink = 1.0 - lambda * eta;
            for col in alpha_cols.iter_mut() {
                col.mapv_inplace(|v| v * shrink);
            }
            retained.push(i);
            alpha_cols.push(&front * (-eta));
            if retained.len() > tau {
                let drop = retained.len() - tau;
                retained.drain(..drop);
                alpha_cols.drain(..drop);
            }
            // instantaneous objective at the updated parameters
            let t = retained.len();
            let mut gram_t = Array2::zeros((t, t));
            for a in 0..t {
                for b in 0..=a {
                    let v = config.kernel.eval(x.row(retained[a]), x.row(retained[b]));
                    gram_t[[a, b]] = v;
                    gram_t[[b, a]] = v;
                }
            }
            let mut alpha_t = Array2::zeros((d, t));
            for (j, col) in alpha_cols.iter().enumerate() {
                alpha_t.column_mut(j).assign(col);
            }
            let k_t = gram_t.column(t - 1).to_owned();
            let obj = instantaneous_objective(&alpha_t, &gram_t, &k_t, &y_row, &eff_stats, lambda)?;
            if !obj.is_finite() || obj > 1e12 {
                return Err(Error::Numeric(format!(
                    "instantaneous objective {obj:e} at step {t_global}: step size too large \
                     (p = {}, eta = {eta:e}); reduce p or rescale the loss",
                    config.p
                )));
            }
            log.records.push(SgdStepRecord {
                step: t_global,
                eta,
                instantaneous_objective: obj,
                active_columns: t,
            });
        }
    }

    // assemble the final model over the full training set (dropped columns zero)
    let mut alpha = Array2::zeros((d, m));
    for (j, &r) in retained.iter().enumerate() {
        // multiple passes can revisit an index; later columns accumulate
        let mut col = alpha.column_mut(r);
        col += &alpha_cols[j];
    }
    let model = RidgeModel {
        alpha,
        lambda,
        kernel: config.kernel.clone(),
        train_inputs: Some(x.to_owned()),
        space: data.space.clone(),
        stats,
    };
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{Family, Structure, StructureSpace};
    use crate::ridge::{Inputs, RidgeConfig, RidgeProblem};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_data(m: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = StructureSpace::new(Family::Multilabel { d: 3 }).unwrap();
        let x = Array2::from_shape_fn((m, 2), |_| rng.gen_range(-1.0..1.0));
        let labels = (0..m)
            .map(|_| vec![Structure::subset_from_indices(3, &[rng.gen_range(0..3)])])
            .collect();
        Dataset::new(space, Inputs::Features(x), labels).unwrap()
    }

    #[test]
    fn instantaneous_reduces_to_ridge_at_t1() {
        let data = toy_data(1, 5);
        let config = RidgeConfig {
            lambda: Some(1.3),
            ..Default::default()
        };
        let problem = RidgeProblem::new(&data, &config).unwrap();
        let stats = data.space.stats().unwrap();
        let alpha = array![[0.2], [-0.4], [0.1]];
        let k = problem.gram.column(0).to_owned();
        let y_row = data.y_matrix().unwrap().row(0).to_owned();
        let inst = instantaneous_objective(&alpha, &problem.gram, &k, &y_row, &stats, 1.3).unwrap();
        let ridge = problem.objective(&alpha).unwrap();
        assert!((inst - ridge).abs() <= 1e-12 * ridge.abs().max(1.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = toy_data(3, 7);
        let stats = data.space.stats().unwrap();
        let config = RidgeConfig {
            lambda: Some(0.9),
            ..Default::default()
        };
        let problem = RidgeProblem::new(&data, &config).unwrap();
        let k = problem.gram.column(2).to_owned();
        let y_row = data.y_matrix().unwrap().row(2).to_owned();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let alpha = Array2::from_shape_fn((3, 3), |_| rng.gen_range(-0.3..0.3));
        let grad = instantaneous_gradient(&alpha, &problem.gram, &k, &y_row, &stats, 0.9).unwrap();
        let h = 1e-5;
        for l in 0..3 {
            for j in 0..3 {
                let mut ap = alpha.clone();
                let mut am = alpha.clone();
                ap[[l, j]] += h;
                am[[l, j]] -= h;
                let op =
                    instantaneous_objective(&ap, &problem.gram, &k, &y_row, &stats, 0.9).unwrap();
                let om =
                    instantaneous_objective(&am, &problem.gram, &k, &y_row, &stats, 0.9).unwrap();
                let fd = (op - om) / (2.0 * h);
                let rel = (fd - grad[[l, j]]).abs() / grad[[l, j]].abs().max(1.0);
                assert!(rel <= 1e-5, "gradient entry ({l},{j}) off by {rel:e}");
            }
        }
    }

    #[test]
    fn hessian_vector_matches_gradient_differences() {
        let data = toy_data(3, 11);
        let stats = data.space.stats().unwrap();
        let config = RidgeConfig {
            lambda: Some(0.9),
            ..Default::default()
        };
        let problem = RidgeProblem::new(&data, &config).unwrap();
        let k = problem.gram.column(1).to_owned();
        let y_row = data.y_matrix().unwrap().row(1).to_owned();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let alpha = Array2::from_shape_fn((3, 3), |_| rng.gen_range(-0.3..0.3));
        let v = Array2::from_shape_fn((3, 3), |_| rng.gen_range(-1.0..1.0));
        let hv = instantaneous_hessian_vector(&v, &problem.gram, &k, &y_row, &stats, 0.9).unwrap();
        let h = 1e-5;
        let gp = instantaneous_gradient(
            &(&alpha + &(&v * h)),
            &problem.gram,
            &k,
            &y_row,
            &stats,
            0.9,
        )
        .unwrap();
        let gm = instantaneous_gradient(
            &(&alpha - &(&v * h)),
            &problem.gram,
            &k,
            &y_row,
            &stats,
            0.9,
        )
        .unwrap();
        let fd = (&gp - &gm) / (2.0 * h);
        let num = (&fd - &hv).mapv(f64::abs).sum();
        let den = hv.mapv(f64::abs).sum().max(1.0);
        assert!(num / den <= 1e-4);
    }

    #[test]
    fn lambda_term_gradient_is_isolated() {
        let data = toy_data(2, 13);
        let stats = data.space.stats().unwrap();
        let config = RidgeConfig {
            lambda: Some(1.0),
            ..Default::default()
        };
        let problem = RidgeProblem::new(&data, &config).unwrap();
        let k = Array1::zeros(2);
        let y_row = Array1::zeros(3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let alpha = Array2::from_shape_fn((3, 2), |_| rng.gen_range(-0.5..0.5));
        // k = 0 kills every loss term, leaving 2 lambda alpha K
        let grad = instantaneous_gradient(&alpha, &problem.gram, &k, &y_row, &stats, 2.5).unwrap();
        let expect = alpha.dot(&problem.gram) * 5.0;
        assert!((&grad - &expect).mapv(f64::abs).sum() <= 1e-12);
    }

    #[test]
    fn tiny_steps_leave_alpha_near_zero() {
        let data = toy_data(5, 17);
        let config = SgdConfig {
            p: 1e-6,
            lambda: Some(1.0),
            tau: Truncation::Count(5),
            ..Default::default()
        };
        let (model, log) = sgd_train(&data, &config, 1).unwrap();
        assert!(model.alpha.mapv(f64::abs).sum() < 1e-3);
        assert_eq!(log.records.len(), 5);
    }

    #[test]
    fn tau_one_keeps_only_last_column() {
        let data = toy_data(6, 19);
        let config = SgdConfig {
            p: 0.5,
            lambda: Some(1.0),
            tau: Truncation::Count(1),
            ..Default::default()
        };
        let (model, log) = sgd_train(&data, &config, 2).unwrap();
        let nonzero: Vec<usize> = (0..6)
            .filter(|&j| model.alpha.column(j).iter().any(|&v| v != 0.0))
            .collect();
        assert_eq!(nonzero.len(), 1);
        assert!(log.records.iter().all(|r| r.active_columns == 1));
    }

    #[test]
    fn identical_seeds_give_identical_logs() {
        let data = toy_data(8, 23);
        let config = SgdConfig {
            p: 0.5,
            lambda: Some(2.0),
            tau: Truncation::Count(8),
            ..Default::default()
        };
        let (_, log1) = sgd_train(&data, &config, 9).unwrap();
        let (_, log2) = sgd_train(&data, &config, 9).unwrap();
        assert_eq!(log1.to_csv(), log2.to_csv());
        let (_, log3) = sgd_train(&data, &config, 10).unwrap();
        assert_ne!(log1.to_csv(), log3.to_csv());
    }
}
