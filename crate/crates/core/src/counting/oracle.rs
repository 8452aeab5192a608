//! Brute-force aggregates over enumerable spaces.
//!
//! These deliberately avoid the closed forms in [`crate::counting::space`]:
//! they walk `enumerate_small` and accumulate embeddings directly, so tests
//! can compare the two routes.

use ndarray::{Array1, Array2};
use num_bigint::BigUint;

use crate::counting::{EmbeddingStats, Structure, StructureSpace};
use crate::error::Result;

/// (|Y|, Psi, C) by exhaustive enumeration.
pub fn brute_force_stats(space: &StructureSpace, limit: u64) -> Result<EmbeddingStats> {
    let ys = space.enumerate_small(limit)?;
    let dim = space.embedding_dim();
    let mut embeddings = Array2::<f64>::zeros((ys.len(), dim));
    for (i, y) in ys.iter().enumerate() {
        embeddings.row_mut(i).assign(&space.embed(y)?);
    }
    let psi = embeddings.sum_axis(ndarray::Axis(0));
    let cov = embeddings.t().dot(&embeddings);
    Ok(EmbeddingStats {
        count: BigUint::from(ys.len()),
        psi,
        cov,
    })
}

/// Sum of exp(<w, psi(y)>) over the whole space, by enumeration.
pub fn brute_force_partition(
    space: &StructureSpace,
    weights: &Array1<f64>,
    limit: u64,
) -> Result<f64> {
    let ys = space.enumerate_small(limit)?;
    let terms: Vec<f64> = ys
        .iter()
        .map(|y| space.embed(y).map(|psi| psi.dot(weights).exp()))
        .collect::<Result<_>>()?;
    Ok(crate::numeric::kahan_sum(terms))
}

/// Argmax of <w, psi(y)> with ties broken by canonical enumeration order.
pub fn brute_force_argmax(
    space: &StructureSpace,
    weights: &Array1<f64>,
    limit: u64,
) -> Result<(Structure, f64)> {
    let ys = space.enumerate_small(limit)?;
    let mut best: Option<(Structure, f64)> = None;
    for y in ys {
        let score = space.embed(&y)?.dot(weights);
        match &best {
            Some((_, s)) if *s >= score => {}
            _ => best = Some((y, score)),
        }
    }
    Ok(best.expect("space is never empty"))
}
