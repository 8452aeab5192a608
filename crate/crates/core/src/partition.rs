//! Partition-function machinery: the exact small-space oracle, the
//! randomised approximation scheme over a telescoping product with the
//! standard cooling schedule, the counting-based Taylor approximation,
//! Hoeffding-bounded gradient estimation, and weighted-partition moments.

use ndarray::ArrayView1;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{EmbeddingStats, Structure, StructureSpace};
use crate::error::{Error, Result};
use crate::numeric::{kahan_sum, ln_big, pairwise_sum};
use crate::rng::RngStream;
use crate::sampling::{
    cftp_sample, default_cftp_budget, meta_step, uniform_structure, ChainState, ConditionalTarget,
    ExpFamilyModel,
};

/// Inverse-temperature ladder 0 = beta_0 < ... < beta_l = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoolingSchedule {
    pub betas: Vec<f64>,
    /// Grid denominator q = p R ||w||.
    pub q: f64,
    pub p: u32,
}

impl CoolingSchedule {
    /// Number of consecutive ratios (levels) in the telescoping product.
    pub fn levels(&self) -> usize {
        self.betas.len() - 1
    }
}

/// The explicit ladder 0, 1/q, 2/q, ..., p*floor(R||w||)/q, 1 with
/// q = p R ||w||; degenerates to [0, 1] when R||w|| = 0.
pub fn cooling_schedule(r_bound: f64, w_norm: f64, p: u32) -> Result<CoolingSchedule> {
    if p < 3 {
        return Err(Error::Validation(format!(
            "cooling constant p must be >= 3, got {p}"
        )));
    }
    if !(r_bound >= 0.0 && w_norm >= 0.0) {
        return Err(Error::Validation("R and ||w|| must be non-negative".into()));
    }
    let rw = r_bound * w_norm;
    if rw == 0.0 {
        return Ok(CoolingSchedule {
            betas: vec![0.0, 1.0],
            q: 0.0,
            p,
        });
    }
    if !rw.is_finite() || p as f64 * rw > 1e6 {
        return Err(Error::Budget(format!(
            "cooling schedule would have ~{:.0} levels (R||w|| = {rw}); \
             normalise the features or weights first",
            p as f64 * rw
        )));
    }
    let q = p as f64 * rw;
    let top = p as u64 * rw.floor() as u64;
    let mut betas = Vec::with_capacity(top as usize + 2);
    betas.push(0.0);
    for j in 1..=top {
        let beta = j as f64 / q;
        if beta < 1.0 {
            betas.push(beta);
        }
    }
    betas.push(1.0);
    Ok(CoolingSchedule { betas, q, p })
}

/// Outcome of a partition-function estimation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZEstimate {
    pub value: f64,
    pub epsilon: f64,
    pub samples_per_level: u64,
    pub levels: usize,
    /// Success probability of the randomised scheme (at least 3/4).
    pub confidence: f64,
}

/// Per-level sample source for the telescoping estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevelSampler {
    /// Coupling from the past: exact draws; the theorem's setting.
    Cftp,
    /// A truncated Meta chain run for `steps` transitions from a uniform
    /// start. Choose steps with [`chain_steps_for`] to keep the contract.
    Chain { steps: u64 },
    /// Inverse-CDF sampling from the enumerated distribution (small spaces).
    Exact { limit: u64 },
}

/// Sample size per level: ceil(65 eps^-2 l exp(2/p)).
pub fn fpras_sample_size(epsilon: f64, levels: usize, p: u32) -> u64 {
    (65.0 * epsilon.powi(-2) * levels as f64 * (2.0 / p as f64).exp()).ceil() as u64
}

/// Chain length giving per-level variation distance eps / (5 l exp(2/p)).
pub fn chain_steps_for(epsilon: f64, levels: usize, p: u32, b: f64, r: f64) -> u64 {
    let target = epsilon / (5.0 * levels as f64 * (2.0 / p as f64).exp());
    crate::sampling::coupling_mixing_bound(b, r, target.min(0.5))
}

/// Exact partition function by enumeration with compensated summation.
pub fn exact_partition(target: &ConditionalTarget, limit: u64) -> Result<f64> {
    let ys = target.space.enumerate_small(limit)?;
    let terms: Vec<f64> = ys
        .iter()
        .map(|y| target.log_density(y).map(f64::exp))
        .collect::<Result<_>>()?;
    Ok(kahan_sum(terms))
}

fn draw_level_sample(
    target: &ConditionalTarget,
    br: f64,
    sampler: &LevelSampler,
    stream: &RngStream,
    sample_idx: u64,
) -> Result<Structure> {
    match sampler {
        LevelSampler::Cftp => {
            let (y, _) = cftp_sample(
                target,
                br,
                &stream.substream(sample_idx),
                default_cftp_budget(br),
            )?;
            Ok(y)
        }
        LevelSampler::Chain { steps } => {
            let mut rng = stream.substream(sample_idx).at(0);
            let start = uniform_structure(target.space, &mut rng)?;
            let mut state = ChainState::new(start);
            for _ in 0..*steps {
                meta_step(&mut state, target, &mut rng)?;
            }
            Ok(state.current)
        }
        LevelSampler::Exact { limit } => {
            let (ys, probs) = target.exact_distribution(*limit)?;
            let mut rng = stream.substream(sample_idx).at(0);
            let draw: f64 = rng.gen();
            let mut acc = 0.0;
            for (y, p) in ys.iter().zip(probs.iter()) {
                acc += p;
                if draw < acc {
                    return Ok(y.clone());
                }
            }
            Ok(ys.last().unwrap().clone())
        }
    }
}

/// The randomised approximation scheme for Z(w|x): estimates each telescoping
/// ratio rho_i = Z(beta_{i-1} w | x) / Z(beta_i w | x) as the sample mean of
/// f_i(y) = exp[(beta_{i-1} - beta_i) <phi(x,y), w>] over S draws from
/// p(y | x, beta_i w), and returns |Y| divided by the product of the means.
/// With exact per-level samples, the estimate lies within ratio (1 +- eps/4)
/// of Z with probability at least 3/4.
pub fn estimate_partition(
    model: &ExpFamilyModel,
    x: ArrayView1<f64>,
    space: &StructureSpace,
    epsilon: f64,
    p: u32,
    sampler: &LevelSampler,
    stream: &RngStream,
) -> Result<ZEstimate> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Validation(format!(
            "epsilon must lie in (0,1), got {epsilon}"
        )));
    }
    let u = model.collapse(x)?;
    let w_norm = model.weights.dot(&model.weights).sqrt();
    let schedule = cooling_schedule(model.r_bound, w_norm, p)?;
    let levels = schedule.levels();
    let samples = fpras_sample_size(epsilon, levels, p);
    let count = space.stats()?;
    let mut product = 1.0f64;
    for i in 1..=levels {
        let beta_prev = schedule.betas[i - 1];
        let beta = schedule.betas[i];
        let scaled = ConditionalTarget::from_weights(space, &u * beta);
        let br = beta * model.r_bound * w_norm.min(model.b_bound);
        let level_stream = stream.substream(i as u64);
        let values: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|j| {
                let y = draw_level_sample(&scaled, br, sampler, &level_stream, j)?;
                let score = space.embed(&y)?.dot(&u);
                Ok(((beta_prev - beta) * score).exp())
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean = pairwise_sum(&values) / samples as f64;
        if !(mean > 0.0) {
            return Err(Error::Numeric(format!(
                "level {i} ratio estimate {mean} not positive"
            )));
        }
        product *= mean;
    }
    let count_f = crate::numeric::big_to_f64(&count.count);
    if !count_f.is_finite() {
        return Err(Error::Numeric(
            "|Y| exceeds the float range; the estimate would overflow".into(),
        ));
    }
    let value = count_f / product;
    Ok(ZEstimate {
        value,
        epsilon,
        samples_per_level: samples,
        levels,
        confidence: 0.75,
    })
}

/// [`estimate_partition`] with truncated-chain draws; the contract holds when
/// `chain_steps` meets the per-level variation-distance target
/// eps / (5 l exp(2/p)), see [`chain_steps_for`]. Shorter chains are
/// permitted but void the guarantee.
pub fn estimate_partition_approx_sampler(
    model: &ExpFamilyModel,
    x: ArrayView1<f64>,
    space: &StructureSpace,
    epsilon: f64,
    p: u32,
    chain_steps: u64,
    stream: &RngStream,
) -> Result<ZEstimate> {
    estimate_partition(
        model,
        x,
        space,
        epsilon,
        p,
        &LevelSampler::Chain { steps: chain_steps },
        stream,
    )
}

/// Second-order approximation of Z from the counting statistics:
/// |Y| + <w, Psi (x) x> + c2 * w' (C (x) xx') w, where c2 is the true Taylor
/// coefficient 1/2, or 1 when `paper_literal` reproduces the displayed sum.
/// Only indicator embeddings (psi into {0,1}^d) are supported.
pub fn taylor_partition(
    space: &StructureSpace,
    stats: &EmbeddingStats,
    model: &ExpFamilyModel,
    x: ArrayView1<f64>,
    paper_literal: bool,
) -> Result<f64> {
    if !space.is_indicator_family() {
        return Err(Error::Unsupported(
            "the Taylor partition approximation needs an indicator embedding family".into(),
        ));
    }
    let u = model.collapse(x)?;
    let coeff = if paper_literal { 1.0 } else { 0.5 };
    Ok(stats.count_f64() + stats.psi.dot(&u) + coeff * u.dot(&stats.cov.dot(&u)))
}

/// Enumerated bound on the Taylor remainder: sum over y of e |f|^3 / 6
/// (valid while |f(x,y)| <= 1).
pub fn taylor_remainder_bound(target: &ConditionalTarget, limit: u64) -> Result<f64> {
    let ys = target.space.enumerate_small(limit)?;
    let terms: Vec<f64> = ys
        .iter()
        .map(|y| {
            target
                .log_density(y)
                .map(|f| std::f64::consts::E * f.abs().powi(3) / 6.0)
        })
        .collect::<Result<_>>()?;
    Ok(kahan_sum(terms))
}

/// Hoeffding sample size ceil(2 R^2 G^2 ln(2/delta) / eps^2).
pub fn hoeffding_sample_size(r: f64, g: f64, delta: f64, epsilon: f64) -> u64 {
    (2.0 * r * r * g * g * (2.0 / delta).ln() / (epsilon * epsilon)).ceil() as u64
}

/// Estimate <grad ln Z, z> = E[<phi(x,y), z>] by the sample mean over
/// S = ceil(2 R^2 G^2 ln(2/delta) / eps^2) exact draws; the deviation exceeds
/// eps with probability at most delta.
pub fn hoeffding_gradient_dot(
    model: &ExpFamilyModel,
    x: ArrayView1<f64>,
    z_vec: ArrayView1<f64>,
    delta: f64,
    epsilon: f64,
    sampler: &LevelSampler,
    stream: &RngStream,
    space: &StructureSpace,
) -> Result<f64> {
    if z_vec.len() != model.weights.len() {
        return Err(Error::Dimension(format!(
            "z has length {}, weights have {}",
            z_vec.len(),
            model.weights.len()
        )));
    }
    if !(delta > 0.0 && delta < 1.0 && epsilon > 0.0) {
        return Err(Error::Validation(
            "need delta in (0,1) and epsilon > 0".into(),
        ));
    }
    let g = z_vec.dot(&z_vec).sqrt();
    let samples = hoeffding_sample_size(model.r_bound, g, delta, epsilon).max(1);
    let u = model.collapse(x)?;
    let target = ConditionalTarget::from_weights(space, u);
    // collapse z the same way so <phi(x,y), z> = <psi(y), Z x>
    let z_model = ExpFamilyModel::new(z_vec.to_owned(), model.input_dim, model.r_bound)?;
    let zu = z_model.collapse(x)?;
    let w_norm = model.weights.dot(&model.weights).sqrt();
    let br = model.r_bound * w_norm.min(model.b_bound);
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|j| {
            let y = draw_level_sample(&target, br, sampler, stream, j)?;
            Ok(space.embed(&y)?.dot(&zu))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&values) / samples as f64)
}

/// Exact E[<phi(x,y), z>] by enumeration (test oracle).
pub fn exact_gradient_dot(
    model: &ExpFamilyModel,
    x: ArrayView1<f64>,
    z_vec: ArrayView1<f64>,
    space: &StructureSpace,
    limit: u64,
) -> Result<f64> {
    let u = model.collapse(x)?;
    let z_model = ExpFamilyModel::new(z_vec.to_owned(), model.input_dim, model.r_bound)?;
    let zu = z_model.collapse(x)?;
    let ys = space.enumerate_small(limit)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for y in &ys {
        let psi = space.embed(y)?;
        let w = psi.dot(&u).exp();
        num += w * psi.dot(&zu);
        den += w;
    }
    Ok(num / den)
}

/// Estimate the j-th coordinate of grad ln Z as Z_j / Z, where
/// Z_j = sum over the restricted support of phi_j exp(<phi, w>) is computed
/// by the same telescoping scheme with per-level draws restricted to
/// structures with |phi_j(x,y)| >= gamma (hard rejection filter inside the
/// uniform proposal). Indicator embeddings only; the feature's input factor
/// must be positive. Both telescoping products share substreams, so a
/// feature with phi_j identically 1 returns exactly 1.
pub fn estimate_moment(
    model: &ExpFamilyModel,
    x: ArrayView1<f64>,
    feature: usize,
    epsilon: f64,
    gamma: f64,
    p: u32,
    space: &StructureSpace,
    stream: &RngStream,
) -> Result<f64> {
    if !space.is_indicator_family() {
        return Err(Error::Unsupported(
            "weighted-partition moments need an indicator embedding (the log-weight \
             transform requires one-signed features)"
                .into(),
        ));
    }
    if feature >= model.weights.len() {
        return Err(Error::Dimension(format!(
            "feature index {feature} out of range 0..{}",
            model.weights.len()
        )));
    }
    let l = feature / model.input_dim;
    let k = feature % model.input_dim;
    let xk = x[k];
    if xk <= 0.0 {
        return Err(Error::Unsupported(format!(
            "phi_{feature} takes sign of x[{k}] = {xk}; the restriction needs positive weights"
        )));
    }
    if gamma > xk {
        return Err(Error::Validation(format!(
            "gamma = {gamma} excludes the whole support (|phi_j| = {xk} on it)"
        )));
    }
    let stats = space.stats()?;
    let support_count = stats.psi[l];
    if support_count <= 0.0 {
        return Err(Error::Validation(format!(
            "feature component {l} is zero on every structure"
        )));
    }
    let u = model.collapse(x)?;
    let w_norm = model.weights.dot(&model.weights).sqrt();
    let schedule = cooling_schedule(model.r_bound, w_norm, p)?;
    let levels = schedule.levels();
    let samples = fpras_sample_size(epsilon, levels, p);
    let mut product = 1.0f64;
    for i in 1..=levels {
        let beta_prev = schedule.betas[i - 1];
        let beta = schedule.betas[i];
        let scaled = ConditionalTarget::from_weights(space, &u * beta);
        let br = beta * model.r_bound * w_norm.min(model.b_bound);
        let level_stream = stream.substream(i as u64);
        let values: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|j| {
                let y = restricted_cftp(&scaled, l, br, &level_stream.substream(j))?;
                let score = space.embed(&y)?.dot(&u);
                Ok(((beta_prev - beta) * score).exp())
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean = pairwise_sum(&values) / samples as f64;
        if !(mean > 0.0) {
            return Err(Error::Numeric(format!(
                "level {i} ratio estimate {mean} not positive"
            )));
        }
        product *= mean;
    }
    let z_j = xk * support_count / product;
    let z = estimate_partition(model, x, space, epsilon, p, &LevelSampler::Cftp, stream)?;
    Ok(z_j / z.value)
}

/// CFTP on the support restricted to psi_l(y) = 1, with uniform proposals
/// filtered by rejection.
fn restricted_cftp(
    target: &ConditionalTarget,
    component: usize,
    br: f64,
    stream: &RngStream,
) -> Result<Structure> {
    let max_steps = default_cftp_budget(br);
    let mut proposals: Vec<(Structure, f64, f64)> = Vec::new();
    let mut start = None;
    't: for t in 0..max_steps {
        let mut step_rng = stream.at_signed(-(t as i64) - 1);
        // rejection: uniform over the restricted support
        let mut z = None;
        for _ in 0..100_000u32 {
            let cand = uniform_structure(target.space, &mut step_rng)?;
            if target.space.embed(&cand)?[component] == 1.0 {
                z = Some(cand);
                break;
            }
        }
        let z = z.ok_or_else(|| {
            Error::Budget(format!(
                "support of feature component {component} too thin to sample"
            ))
        })?;
        let u: f64 = step_rng.gen();
        let score = target.log_density(&z)?;
        proposals.push((z, score, u));
        if u <= (score - br).exp() {
            start = Some(proposals.len() - 1);
            break 't;
        }
    }
    let start = start.ok_or_else(|| {
        Error::Budget(format!(
            "no coalescence within {max_steps} steps on the restricted chain"
        ))
    })?;
    let mut current = proposals[start].0.clone();
    let mut cur_score = proposals[start].1;
    for t in (0..start).rev() {
        let (z, score, u) = &proposals[t];
        if *u <= (score - cur_score).exp() {
            current = z.clone();
            cur_score = *score;
        }
    }
    Ok(current)
}

/// Norm bound of the trained exponential-family parameter:
/// sqrt(ln |Y| / lambda).
pub fn weight_norm_bound(space: &StructureSpace, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Validation(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let count = space.cardinality()?;
    Ok((ln_big(&count) / lambda).sqrt())
}
