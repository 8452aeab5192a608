//! The Meta chain: uniform proposals with Metropolis acceptance, and exact
//! sampling from its stationary distribution by coupling from the past.

use rand::Rng;

use crate::counting::Structure;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sampling::uniform::uniform_structure;
use crate::sampling::ConditionalTarget;

/// A Markov chain position with its replay cursor.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub current: Structure,
    pub step: u64,
}

impl ChainState {
    pub fn new(current: Structure) -> Self {
        ChainState { current, step: 0 }
    }
}

/// One Meta transition: propose z uniformly at random, accept with
/// probability min[1, p(z|x,w) / p(y|x,w)] (the partition function cancels).
pub fn meta_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    target: &ConditionalTarget,
    rng: &mut R,
) -> Result<()> {
    let proposal = uniform_structure(target.space, rng)?;
    let log_ratio = target.log_density(&proposal)? - target.log_density(&state.current)?;
    let accept = log_ratio >= 0.0 || rng.gen::<f64>() < log_ratio.exp();
    if accept {
        state.current = proposal;
    }
    state.step += 1;
    Ok(())
}

/// Mixing-time bound of Meta with an exact uniform sampler:
/// ceil( ln(1/eps) / ln(1 / (1 - exp(-2BR))) ).
pub fn coupling_mixing_bound(b: f64, r: f64, epsilon: f64) -> u64 {
    assert!(b >= 0.0 && r >= 0.0, "bounds must be non-negative");
    assert!(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0,1)");
    let update = (-2.0 * b * r).exp();
    if update >= 1.0 {
        return 0; // every step couples
    }
    let denom = (1.0 - update).recip().ln();
    ((1.0 / epsilon).ln() / denom).ceil() as u64
}

/// Default step budget for [`cftp_sample`]: 100 * exp(2BR), saturating.
pub fn default_cftp_budget(br: f64) -> u64 {
    let raw = 100.0 * (2.0 * br).exp();
    if raw >= u64::MAX as f64 {
        u64::MAX
    } else {
        raw.ceil() as u64
    }
}

/// Exact sample from p(y | x, w) by coupling from the past on the Meta chain.
///
/// All virtual replicas share each step's proposal z_t and acceptance draw
/// u_t. When u_t <= exp(score(z_t) - BR), every replica accepts (the ratio
/// against any state is at least that), so the step is a joint update and
/// horizons past it are irrelevant. The sampler scans backwards through
/// doubled horizons -1, -2, -4, ... replaying identical per-step randomness
/// from `stream`, finds the most recent joint update, and rolls the single
/// surviving trajectory forward to time zero with ordinary Meta transitions.
///
/// Returns the sample and the coalescence depth (steps looked back).
pub fn cftp_sample(
    target: &ConditionalTarget,
    br_bound: f64,
    stream: &RngStream,
    max_steps: u64,
) -> Result<(Structure, u64)> {
    if br_bound < 0.0 {
        return Err(Error::Validation("B*R bound must be non-negative".into()));
    }
    // Proposals and acceptance draws per backward step, step t = -(index+1).
    let mut proposals: Vec<(Structure, f64, f64)> = Vec::new();
    let coalesce_at: Option<usize>;
    let mut horizon: u64 = 1;
    'search: loop {
        while (proposals.len() as u64) < horizon {
            let t = proposals.len() as u64;
            if t >= max_steps {
                return Err(Error::Budget(format!(
                    "no coalescence within {max_steps} steps (B*R = {br_bound}); \
                     raise the budget or reduce the weight/feature bounds"
                )));
            }
            let mut step_rng = stream.at_signed(-(t as i64) - 1);
            let z = uniform_structure(target.space, &mut step_rng)?;
            let u: f64 = step_rng.gen();
            let score = target.log_density(&z)?;
            proposals.push((z, score, u));
            if u <= (score - br_bound).exp() {
                coalesce_at = Some(proposals.len() - 1);
                break 'search;
            }
        }
        horizon = horizon.saturating_mul(2);
    }
    let start = coalesce_at.expect("loop exits only on coalescence");
    // Single trajectory from the joint update at time -(start+1) to time 0.
    let mut current = proposals[start].0.clone();
    let mut cur_score = proposals[start].1;
    for t in (0..start).rev() {
        let (z, score, u) = &proposals[t];
        // same inclusive rule as the joint-update detector
        if *u <= (score - cur_score).exp() {
            current = z.clone();
            cur_score = *score;
        }
    }
    Ok((current, start as u64 + 1))
}
