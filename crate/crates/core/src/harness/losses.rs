//! Evaluation losses for set-valued and hierarchical predictions.

use crate::counting::{RootedTree, Structure};
use crate::error::{Error, Result};

/// Hierarchical loss over microlabel vectors: a node counts as a mistake
/// only when every ancestor is labelled correctly.
pub fn hierarchical_loss(z: &[bool], y: &[bool], tree: &RootedTree) -> Result<f64> {
    if z.len() != tree.len() || y.len() != tree.len() {
        return Err(Error::Dimension(format!(
            "microlabel vectors of length {} and {} for {} nodes",
            z.len(),
            y.len(),
            tree.len()
        )));
    }
    let mut loss = 0.0;
    for i in 0..tree.len() {
        if z[i] != y[i] && tree.ancestors(i).iter().all(|&a| z[a] == y[a]) {
            loss += 1.0;
        }
    }
    Ok(loss)
}

/// Microlabel vector of a taxonomy node: the node and all its ancestors.
pub fn microlabels(tree: &RootedTree, node: usize) -> Vec<bool> {
    let mut bits = vec![false; tree.len()];
    bits[node] = true;
    for a in tree.ancestors(node) {
        bits[a] = true;
    }
    bits
}

/// Zero-one and normalised Hamming loss between two set structures.
pub fn set_losses(z: &Structure, y: &Structure) -> Result<(f64, f64)> {
    match (z, y) {
        (Structure::Subset(a), Structure::Subset(b)) if a.len() == b.len() => {
            let diff = a.iter().zip(b.iter()).filter(|(x, y)| x != y).count();
            let zero_one = if diff == 0 { 0.0 } else { 1.0 };
            Ok((zero_one, diff as f64 / a.len() as f64))
        }
        _ => Err(Error::Dimension(
            "set losses need equal-length bit vectors".into(),
        )),
    }
}

/// Ranking loss of per-label scores against a relevant set: the fraction of
/// (relevant, irrelevant) pairs ordered wrongly, ties counting one half.
pub fn ranking_loss(scores: &[f64], relevant: &[bool]) -> Result<f64> {
    if scores.len() != relevant.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} relevance flags",
            scores.len(),
            relevant.len()
        )));
    }
    let mut pairs = 0u64;
    let mut bad = 0.0;
    for (p, &rel) in relevant.iter().enumerate() {
        if !rel {
            continue;
        }
        for (q, &rel2) in relevant.iter().enumerate() {
            if rel2 {
                continue;
            }
            pairs += 1;
            if scores[p] < scores[q] {
                bad += 1.0;
            } else if scores[p] == scores[q] {
                bad += 0.5;
            }
        }
    }
    if pairs == 0 {
        return Ok(0.0);
    }
    Ok(bad / pairs as f64)
}
