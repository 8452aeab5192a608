//! Structured ridge regression over combinatorial output spaces.
//!
//! The quadratic surrogate of the pairwise ranking loss touches the output
//! space only through (|Y|, Psi, C), so training reduces to an unconstrained
//! quadratic in the dual matrix alpha (d x m), solved by Newton conjugate
//! gradient with Hessian-vector products.

mod diagnostics;
pub mod io;
mod kernel;
mod nystrom;

pub use diagnostics::{auc_loss_enumerated, exp_loss_enumerated, surrogate_loss_enumerated};
pub use kernel::KernelKind;
pub use nystrom::nystrom_embed;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::counting::{EmbeddingStats, Structure, StructureSpace};
use crate::error::{Error, Result};

/// Training inputs: feature rows, or a precomputed Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Inputs {
    Features(Array2<f64>),
    Gram(Array2<f64>),
}

/// A structured training set: inputs plus one non-empty set of positive
/// structures per instance.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub space: StructureSpace,
    pub inputs: Inputs,
    pub label_sets: Vec<Vec<Structure>>,
}

impl Dataset {
    pub fn new(
        space: StructureSpace,
        inputs: Inputs,
        label_sets: Vec<Vec<Structure>>,
    ) -> Result<Self> {
        let m = match &inputs {
            Inputs::Features(x) => x.nrows(),
            Inputs::Gram(k) => {
                if k.nrows() != k.ncols() {
                    return Err(Error::Dimension(format!(
                        "gram matrix is {}x{}",
                        k.nrows(),
                        k.ncols()
                    )));
                }
                k.nrows()
            }
        };
        if label_sets.len() != m {
            return Err(Error::Dimension(format!(
                "{} label sets for {m} inputs",
                label_sets.len()
            )));
        }
        for (i, set) in label_sets.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::Validation(format!(
                    "instance {i} has an empty label set"
                )));
            }
            for y in set {
                space.check_membership(y)?;
            }
        }
        Ok(Dataset {
            space,
            inputs,
            label_sets,
        })
    }

    pub fn len(&self) -> usize {
        self.label_sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label_sets.is_empty()
    }

    pub fn features(&self) -> Result<ArrayView2<'_, f64>> {
        match &self.inputs {
            Inputs::Features(x) => Ok(x.view()),
            Inputs::Gram(_) => Err(Error::Unsupported(
                "dataset holds a precomputed gram matrix; raw features unavailable".into(),
            )),
        }
    }

    pub fn gram(&self, kernel: &KernelKind) -> Result<Array2<f64>> {
        match &self.inputs {
            Inputs::Features(x) => Ok(kernel.gram(x.view())),
            Inputs::Gram(k) => Ok(k.clone()),
        }
    }

    /// The m x d matrix with row i = sum of psi over the instance's label set.
    pub fn y_matrix(&self) -> Result<Array2<f64>> {
        let d = self.space.embedding_dim();
        let mut y = Array2::zeros((self.len(), d));
        for (i, set) in self.label_sets.iter().enumerate() {
            for s in set {
                let psi = self.space.embed(s)?;
                y.row_mut(i).scaled_add(1.0, &psi);
            }
        }
        Ok(y)
    }

    /// Total number of positive structures across instances.
    pub fn total_labels(&self) -> usize {
        self.label_sets.iter().map(Vec::len).sum()
    }
}

/// Training configuration for [`train_ncg`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RidgeConfig {
    pub kernel: KernelKind,
    /// None selects the default lambda = |Y| * (sum_i |Y_i|) / m.
    pub lambda: Option<f64>,
    /// Relative gradient-norm stopping tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Divide the loss (not the regulariser) by |Y|; keeps magnitudes in
    /// float range for huge spaces. Changes the lambda interpretation.
    pub rescale_loss: bool,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        RidgeConfig {
            kernel: KernelKind::Linear,
            lambda: None,
            tol: 1e-6,
            max_iter: 200,
            rescale_loss: false,
        }
    }
}

/// Outcome report of a training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    pub objective: f64,
    /// Objective after each accepted Newton step (starts at the alpha = 0
    /// value); non-increasing by the line-search contract.
    pub objective_trace: Vec<f64>,
}

/// A trained model: dual coefficients plus everything needed to score.
#[derive(Debug, Clone)]
pub struct RidgeModel {
    /// d x m dual parameter matrix.
    pub alpha: Array2<f64>,
    pub lambda: f64,
    pub kernel: KernelKind,
    pub train_inputs: Option<Array2<f64>>,
    pub space: StructureSpace,
    pub stats: EmbeddingStats,
}

impl RidgeModel {
    /// The per-input weight vector w_x = alpha k(x) in embedding space.
    pub fn input_weights(&self, x: ndarray::ArrayView1<f64>) -> Result<Array1<f64>> {
        let train = self.train_inputs.as_ref().ok_or_else(|| {
            Error::Unsupported(
                "model was trained on a precomputed gram; cannot score new inputs".into(),
            )
        })?;
        let k = self.kernel.column(train.view(), x);
        Ok(self.alpha.dot(&k))
    }

    /// f(x, y) = <alpha k(x), psi(y)>.
    pub fn score(&self, x: ndarray::ArrayView1<f64>, y: &Structure) -> Result<f64> {
        let w = self.input_weights(x)?;
        Ok(self.space.embed(y)?.dot(&w))
    }
}

/// The assembled quadratic problem: Gram and Y matrices, statistics and the
/// effective (possibly rescaled) aggregate coefficients.
pub struct RidgeProblem {
    pub gram: Array2<f64>,
    pub y: Array2<f64>,
    pub stats: EmbeddingStats,
    pub lambda: f64,
    /// Effective |Y| after optional rescaling.
    n_eff: f64,
    /// Effective Psi / C after optional rescaling.
    psi: Array1<f64>,
    cov: Array2<f64>,
    label_embeddings: Vec<Vec<Array1<f64>>>,
}

impl RidgeProblem {
    pub fn new(data: &Dataset, config: &RidgeConfig) -> Result<Self> {
        let stats = data.space.stats()?;
        let count = stats.count_f64();
        let lambda = match config.lambda {
            Some(l) => l,
            None => count * data.total_labels() as f64 / data.len() as f64,
        };
        if !(lambda > 0.0) {
            return Err(Error::Validation(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !lambda.is_finite() {
            return Err(Error::Numeric(
                "default lambda overflowed; enable loss rescaling and pass a finite lambda".into(),
            ));
        }
        let (n_eff, psi, cov) = if config.rescale_loss {
            if !count.is_finite() {
                return Err(Error::Numeric(
                    "|Y| exceeds the float range even for rescaling".into(),
                ));
            }
            (1.0, &stats.psi / count, &stats.cov / count)
        } else {
            (count, stats.psi.clone(), stats.cov.clone())
        };
        let mut label_embeddings = Vec::with_capacity(data.len());
        for set in &data.label_sets {
            let embs: Vec<Array1<f64>> = set
                .iter()
                .map(|y| data.space.embed(y))
                .collect::<Result<_>>()?;
            label_embeddings.push(embs);
        }
        Ok(RidgeProblem {
            gram: data.gram(&config.kernel)?,
            y: data.y_matrix()?,
            stats,
            lambda,
            n_eff,
            psi,
            cov,
            label_embeddings,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.psi.len(), self.gram.nrows())
    }

    fn check_alpha(&self, alpha: &Array2<f64>) -> Result<()> {
        let (d, m) = self.dims();
        if alpha.nrows() != d || alpha.ncols() != m {
            return Err(Error::Dimension(format!(
                "alpha is {}x{}, expected {d}x{m}",
                alpha.nrows(),
                alpha.ncols()
            )));
        }
        Ok(())
    }

    /// The aggregate objective
    /// lambda tr(aKa') + 1/2 tr(Ka'CaK) + Psi'aK1 + (|Y|/2)||diag(YaK)||^2
    ///   - |Y| tr(YaK) - Psi'aK diag(YaK).
    pub fn objective(&self, alpha: &Array2<f64>) -> Result<f64> {
        self.check_alpha(alpha)?;
        let m_mat = alpha.dot(&self.gram);
        let reg = self.lambda * (alpha * &m_mat).sum();
        let cm = self.cov.dot(&m_mat);
        let quad = 0.5 * (&m_mat * &cm).sum();
        let s = self.psi.dot(&m_mat); // length m
        let v = diag_of_product(&self.y, &m_mat); // length m
        let vsq = v.dot(&v);
        let loss = quad + s.sum() + 0.5 * self.n_eff * vsq - self.n_eff * v.sum() - s.dot(&v);
        Ok(reg + loss)
    }

    /// Per-instance loss term of the aggregate objective (the Y-row form);
    /// summing these over i and adding the regulariser reproduces
    /// [`Self::objective`] exactly.
    pub fn yrow_loss(&self, alpha: &Array2<f64>, i: usize) -> Result<f64> {
        self.check_alpha(alpha)?;
        let f = alpha.dot(&self.gram.column(i));
        let s = self.psi.dot(&f);
        let v = self.y.row(i).dot(&f);
        Ok(0.5 * f.dot(&self.cov.dot(&f)) + s + 0.5 * self.n_eff * v * v - self.n_eff * v - s * v)
    }

    /// The surrogate loss of instance i as the explicit pairwise sum over
    /// Y_i x (Y \ Y_i), assembled from aggregate identities (sums over the
    /// complement are obtained by subtracting the label set's contributions).
    /// Coincides with [`Self::yrow_loss`] when |Y_i| = 1. Rescaled problems
    /// return the pairwise sum uniformly divided by |Y|.
    pub fn surrogate_loss(&self, alpha: &Array2<f64>, i: usize) -> Result<f64> {
        self.check_alpha(alpha)?;
        if i >= self.label_embeddings.len() {
            return Err(Error::Dimension(format!("instance index {i} out of range")));
        }
        let f = alpha.dot(&self.gram.column(i));
        let count = self.stats.count_f64();
        // recover whole-space sums at the true |Y| scale
        let s1 = self.psi.dot(&f) * count / self.n_eff;
        let s2 = f.dot(&self.cov.dot(&f)) * count / self.n_eff;
        let n_i = self.label_embeddings[i].len() as f64;
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        for psi_y in &self.label_embeddings[i] {
            let h = psi_y.dot(&f);
            p1 += h;
            p2 += h * h;
        }
        let loss = full_pairwise(count, n_i, s1, s2, p1, p2);
        Ok(loss * self.n_eff / count)
    }

    /// Gradient of the aggregate objective, d x m.
    pub fn gradient(&self, alpha: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_alpha(alpha)?;
        let m_mat = alpha.dot(&self.gram);
        let s = self.psi.dot(&m_mat);
        let v = diag_of_product(&self.y, &m_mat);
        // inner = 2 lambda alpha + C M + Psi 1' - Y' diag(s) - |Y| Y'
        //         + |Y| Y' diag(v) - Psi v'
        let mut inner = self.cov.dot(&m_mat);
        inner.scaled_add(2.0 * self.lambda, alpha);
        let yt = self.y.t();
        let (d, m) = self.dims();
        for j in 0..m {
            let coeff_y = -s[j] - self.n_eff + self.n_eff * v[j];
            let coeff_psi = 1.0 - v[j];
            for l in 0..d {
                inner[[l, j]] += coeff_y * yt[[l, j]] + coeff_psi * self.psi[l];
            }
        }
        Ok(inner.dot(&self.gram))
    }

    /// Product of the Hessian with a direction v (d x m).
    pub fn hessian_vector(&self, dir: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_alpha(dir)?;
        let m_dir = dir.dot(&self.gram);
        let s_dir = self.psi.dot(&m_dir);
        let v_dir = diag_of_product(&self.y, &m_dir);
        let mut inner = self.cov.dot(&m_dir);
        inner.scaled_add(2.0 * self.lambda, dir);
        let yt = self.y.t();
        let (d, m) = self.dims();
        for j in 0..m {
            let coeff_y = self.n_eff * v_dir[j] - s_dir[j];
            let coeff_psi = -v_dir[j];
            for l in 0..d {
                inner[[l, j]] += coeff_y * yt[[l, j]] + coeff_psi * self.psi[l];
            }
        }
        Ok(inner.dot(&self.gram))
    }
}

/// diag(A B) for A (m x d) and B (d x m).
fn diag_of_product(a: &Array2<f64>, b: &Array2<f64>) -> Array1<f64> {
    Array1::from_iter(
        a.axis_iter(Axis(0))
            .zip(b.axis_iter(Axis(1)))
            .map(|(row, col)| row.dot(&col)),
    )
}

/// The pairwise surrogate over Y_i x (Y \ Y_i) in terms of whole-space sums
/// (S1, S2) and label-set sums (P1, P2).
fn full_pairwise(n: f64, n_i: f64, s1: f64, s2: f64, p1: f64, p2: f64) -> f64 {
    n_i * (s1 - p1) + 0.5 * n_i * (s2 - p2) - (n - n_i) * p1 - p1 * (s1 - p1) + 0.5 * (n - n_i) * p2
}

/// Newton conjugate gradient on the aggregate objective from alpha = 0.
///
/// Inner CG solves H p = -g to residual 0.1 ||g||; steps pass a backtracking
/// Armijo test (c = 1e-4, halving).
pub fn train_ncg(data: &Dataset, config: &RidgeConfig) -> Result<(RidgeModel, TrainReport)> {
    let problem = RidgeProblem::new(data, config)?;
    let (d, m) = problem.dims();
    let mut alpha = Array2::zeros((d, m));
    let mut objective = problem.objective(&alpha)?;
    if !objective.is_finite() {
        return Err(Error::Numeric(
            "objective is not finite at alpha = 0; |Y|-scale terms overflow. \
             Enable loss rescaling (rescale_loss) and pass an explicit lambda"
                .into(),
        ));
    }
    let mut grad = problem.gradient(&alpha)?;
    let g0 = frob(&grad).max(1.0);
    let mut converged = false;
    let mut iterations = 0;
    let mut objective_trace = vec![objective];
    for _ in 0..config.max_iter {
        let gnorm = frob(&grad);
        if gnorm <= config.tol * g0 {
            converged = true;
            break;
        }
        iterations += 1;
        let step = cg_solve(&problem, &grad, 0.1 * gnorm, (d * m).min(1000))?;
        let descent = (&step * &grad).sum();
        let (step, descent) = if descent < 0.0 {
            (step, descent)
        } else {
            (-&grad, -gnorm * gnorm) // fall back to steepest descent
        };
        let mut t = 1.0;
        let mut accepted = false;
        while t >= 1e-12 {
            let candidate = &alpha + &(&step * t);
            let cand_obj = problem.objective(&candidate)?;
            if cand_obj.is_finite() && cand_obj <= objective + 1e-4 * t * descent {
                alpha = candidate;
                objective = cand_obj;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break; // no progress possible at floating-point resolution
        }
        objective_trace.push(objective);
        grad = problem.gradient(&alpha)?;
        if !objective.is_finite() {
            return Err(Error::Numeric(
                "objective overflowed during training; enable loss rescaling".into(),
            ));
        }
    }
    let grad_norm = frob(&grad);
    if !converged && grad_norm <= config.tol * g0 {
        converged = true;
    }
    let model = RidgeModel {
        alpha,
        lambda: problem.lambda,
        kernel: config.kernel.clone(),
        train_inputs: match &data.inputs {
            Inputs::Features(x) => Some(x.clone()),
            Inputs::Gram(_) => None,
        },
        space: data.space.clone(),
        stats: problem.stats.clone(),
    };
    Ok((
        model,
        TrainReport {
            converged,
            iterations,
            grad_norm,
            objective,
            objective_trace,
        },
    ))
}

/// Conjugate gradient for H p = -g with relative residual tolerance.
fn cg_solve(
    problem: &RidgeProblem,
    grad: &Array2<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Array2<f64>> {
    let mut x = Array2::zeros(grad.raw_dim());
    let mut r = -grad; // residual of Hx = -g at x = 0
    let mut p = r.clone();
    let mut rs = (&r * &r).sum();
    if rs.sqrt() <= tol {
        return Ok(x);
    }
    for _ in 0..max_iter {
        let hp = problem.hessian_vector(&p)?;
        let php = (&p * &hp).sum();
        if php <= 0.0 {
            if frob(&x) == 0.0 {
                return Ok(r); // negative curvature straight away: use -g
            }
            return Ok(x);
        }
        let a = rs / php;
        x.scaled_add(a, &p);
        r.scaled_add(-a, &hp);
        let rs_new = (&r * &r).sum();
        if rs_new.sqrt() <= tol {
            break;
        }
        let beta = rs_new / rs;
        p = &r + &(&p * beta);
        rs = rs_new;
    }
    Ok(x)
}

fn frob(a: &Array2<f64>) -> f64 {
    (a * a).sum().sqrt()
}
