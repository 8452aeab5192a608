//! Enumerated ranking losses for validation on small spaces.

use ndarray::Array1;

use crate::counting::{Structure, StructureSpace};
use crate::error::Result;

fn step(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else if a < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Unnormalised AUC loss of the per-input scorer `w` against the label set:
/// number of pairs (y in Y_i, z outside) ordered wrongly, ties counting 1/2.
pub fn auc_loss_enumerated(
    space: &StructureSpace,
    w: &Array1<f64>,
    labels: &[Structure],
    limit: u64,
) -> Result<f64> {
    pair_sum(space, w, labels, limit, |hz, hy| step(hz - hy))
}

/// Exponential upper bound: sum of exp(1 + h(z) - h(y)) over the same pairs.
pub fn exp_loss_enumerated(
    space: &StructureSpace,
    w: &Array1<f64>,
    labels: &[Structure],
    limit: u64,
) -> Result<f64> {
    pair_sum(space, w, labels, limit, |hz, hy| (1.0 + hz - hy).exp())
}

/// The quadratic surrogate evaluated by explicit double sum; the oracle for
/// the closed-form loss.
pub fn surrogate_loss_enumerated(
    space: &StructureSpace,
    w: &Array1<f64>,
    labels: &[Structure],
    limit: u64,
) -> Result<f64> {
    pair_sum(space, w, labels, limit, |hz, hy| {
        hz - hy + 0.5 * hz * hz - hz * hy + 0.5 * hy * hy
    })
}

fn pair_sum(
    space: &StructureSpace,
    w: &Array1<f64>,
    labels: &[Structure],
    limit: u64,
    term: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    let all = space.enumerate_small(limit)?;
    let label_set: std::collections::HashSet<&Structure> = labels.iter().collect();
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for y in &all {
        let h = space.embed(y)?.dot(w);
        if label_set.contains(y) {
            positives.push(h);
        } else {
            negatives.push(h);
        }
    }
    let mut total = 0.0;
    for &hy in &positives {
        for &hz in &negatives {
            total += term(hz, hy);
        }
    }
    Ok(total)
}
