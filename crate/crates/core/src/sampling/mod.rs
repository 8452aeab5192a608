//! Exact uniform samplers per structure family, the Metropolis chain over
//! exponential-family distributions, coupling-from-the-past exact sampling,
//! and the single-site hypercube chain.

pub mod analysis;
mod cube;
mod meta;
mod uniform;

pub use cube::{mc_cube_step, mc_cube_transition_matrix};
pub use meta::{cftp_sample, coupling_mixing_bound, default_cftp_budget, meta_step, ChainState};
pub use uniform::{
    sattolo, uniform_cyclic, uniform_ell_subset, uniform_hypercube, uniform_permutation,
    uniform_structure, uniform_subtree, uniform_tournament, uniform_undirected_cycle,
};

use ndarray::{Array1, Array2, ArrayView1};

use crate::counting::{Structure, StructureSpace};
use crate::error::{Error, Result};

/// Conditional exponential-family model p(y | x, w) with joint features
/// phi(x, y) = psi(y) (x) x (Kronecker), laid out psi-major.
#[derive(Debug, Clone)]
pub struct ExpFamilyModel {
    /// Weight vector of length embedding_dim * input_dim.
    pub weights: Array1<f64>,
    pub input_dim: usize,
    /// Bound on the feature norm: ||phi(x, y)|| <= R.
    pub r_bound: f64,
    /// Bound on the weight norm: ||w|| <= B.
    pub b_bound: f64,
}

impl ExpFamilyModel {
    /// B defaults to the exact norm of `weights`.
    pub fn new(weights: Array1<f64>, input_dim: usize, r_bound: f64) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Validation("input dimension must be positive".into()));
        }
        if weights.len() % input_dim != 0 {
            return Err(Error::Dimension(format!(
                "weight length {} is not a multiple of input dimension {input_dim}",
                weights.len()
            )));
        }
        if !(r_bound >= 0.0) {
            return Err(Error::Validation("R bound must be non-negative".into()));
        }
        let b_bound = weights.dot(&weights).sqrt();
        Ok(ExpFamilyModel {
            weights,
            input_dim,
            r_bound,
            b_bound,
        })
    }

    pub fn with_b_bound(mut self, b: f64) -> Self {
        self.b_bound = b;
        self
    }

    pub fn embedding_dim(&self) -> usize {
        self.weights.len() / self.input_dim
    }

    /// phi(x, y) = psi(y) (x) x.
    pub fn phi(space: &StructureSpace, x: ArrayView1<f64>, y: &Structure) -> Result<Array1<f64>> {
        let psi = space.embed(y)?;
        let n = x.len();
        let mut out = Array1::zeros(psi.len() * n);
        for (l, &p) in psi.iter().enumerate() {
            if p != 0.0 {
                for (j, &xv) in x.iter().enumerate() {
                    out[l * n + j] = p * xv;
                }
            }
        }
        Ok(out)
    }

    /// Collapse the weights against an input: u = W x, so that
    /// <w, phi(x,y)> = <u, psi(y)>.
    pub fn collapse(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.input_dim
            )));
        }
        let d = self.embedding_dim();
        let mut u = Array1::zeros(d);
        for l in 0..d {
            let mut acc = 0.0;
            for j in 0..self.input_dim {
                acc += self.weights[l * self.input_dim + j] * x[j];
            }
            u[l] = acc;
        }
        Ok(u)
    }

    pub fn score(&self, space: &StructureSpace, x: ArrayView1<f64>, y: &Structure) -> Result<f64> {
        let u = self.collapse(x)?;
        Ok(space.embed(y)?.dot(&u))
    }
}

/// The per-input unnormalised log-density <u, psi(y)> used by the chains.
pub struct ConditionalTarget<'a> {
    pub space: &'a StructureSpace,
    pub u: Array1<f64>,
}

impl<'a> ConditionalTarget<'a> {
    pub fn new(
        model: &ExpFamilyModel,
        space: &'a StructureSpace,
        x: ArrayView1<f64>,
    ) -> Result<Self> {
        Ok(ConditionalTarget {
            space,
            u: model.collapse(x)?,
        })
    }

    /// From a pre-collapsed weight vector in embedding space.
    pub fn from_weights(space: &'a StructureSpace, u: Array1<f64>) -> Self {
        ConditionalTarget { space, u }
    }

    pub fn log_density(&self, y: &Structure) -> Result<f64> {
        Ok(self.space.embed(y)?.dot(&self.u))
    }

    /// Exact conditional probabilities by enumeration (test oracle).
    pub fn exact_distribution(&self, limit: u64) -> Result<(Vec<Structure>, Array1<f64>)> {
        let ys = self.space.enumerate_small(limit)?;
        let logs: Vec<f64> = ys
            .iter()
            .map(|y| self.log_density(y))
            .collect::<Result<_>>()?;
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let unnorm: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let z = crate::numeric::kahan_sum(unnorm.iter().copied());
        Ok((ys, Array1::from_iter(unnorm.into_iter().map(|u| u / z))))
    }
}

/// Exact Meta transition matrix on an enumerable space (test oracle):
/// uniform proposal, Metropolis acceptance.
pub fn meta_transition_matrix(
    target: &ConditionalTarget,
    limit: u64,
) -> Result<(Vec<Structure>, Array2<f64>)> {
    let ys = target.space.enumerate_small(limit)?;
    let n = ys.len();
    let logs: Vec<f64> = ys
        .iter()
        .map(|y| target.log_density(y))
        .collect::<Result<_>>()?;
    let mut p = Array2::zeros((n, n));
    for i in 0..n {
        let mut stay = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let acc = (logs[j] - logs[i]).exp().min(1.0);
            p[[i, j]] = acc / n as f64;
            stay += (1.0 - acc) / n as f64;
        }
        p[[i, i]] = 1.0 / n as f64 + stay;
    }
    Ok((ys, p))
}
