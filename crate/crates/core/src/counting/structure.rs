//! Concrete combinatorial structures and their canonical representations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single output structure, tagged by payload shape.
///
/// Cycles are stored as a vertex sequence in canonical rotation: the smallest
/// vertex first; undirected cycles additionally fix the direction so the
/// second vertex is smaller than the last. Tournaments store (winner, loser)
/// pairs sorted by the unordered pair they orient.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Structure {
    /// Bit vector over the alphabet: set systems, cliques (vertex set),
    /// subtrees (vertex set).
    Subset(Vec<bool>),
    /// A single label: multiclass, ordinal, poset regression, hierarchy.
    Label(usize),
    /// Permutation as an order array, best first.
    Ranking(Vec<usize>),
    /// Directed simple cycle as a canonical vertex sequence (length >= 3).
    DirectedCycle(Vec<usize>),
    /// Undirected simple cycle as a canonical vertex sequence (length >= 3).
    UndirectedCycle(Vec<usize>),
    /// Partial tournament as sorted (winner, loser) pairs.
    Tournament(Vec<(usize, usize)>),
}

impl Structure {
    pub fn subset_from_indices(d: usize, indices: &[usize]) -> Structure {
        let mut bits = vec![false; d];
        for &i in indices {
            bits[i] = true;
        }
        Structure::Subset(bits)
    }

    pub fn empty_subset(d: usize) -> Structure {
        Structure::Subset(vec![false; d])
    }

    /// Canonicalise a directed cycle: rotate so the minimum vertex leads.
    pub fn dicycle(seq: Vec<usize>) -> Structure {
        Structure::DirectedCycle(rotate_min_first(seq))
    }

    /// Canonicalise an undirected cycle: minimum vertex first, direction with
    /// the smaller second vertex.
    pub fn cycle(seq: Vec<usize>) -> Structure {
        let seq = rotate_min_first(seq);
        if seq.len() >= 3 && seq[1] > seq[seq.len() - 1] {
            let mut rev = seq.clone();
            rev[1..].reverse();
            Structure::UndirectedCycle(rev)
        } else {
            Structure::UndirectedCycle(seq)
        }
    }

    pub fn tournament(mut pairs: Vec<(usize, usize)>) -> Structure {
        pairs.sort_by_key(|&(u, v)| (u.min(v), u.max(v)));
        Structure::Tournament(pairs)
    }

    /// Successor pairs of a directed cycle.
    pub fn cycle_pairs(seq: &[usize]) -> Vec<(usize, usize)> {
        (0..seq.len())
            .map(|i| (seq[i], seq[(i + 1) % seq.len()]))
            .collect()
    }

    /// Dataset label syntax. Sets: comma-separated ids or `-` for empty;
    /// labels: the id; rankings: `a>b>c`; cycles: `u,v;v,w;...` pair lists;
    /// tournaments: `u>v` pairs joined by `;`.
    pub fn format_label(&self) -> String {
        match self {
            Structure::Subset(bits) => {
                let ids: Vec<String> = bits
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &b)| b.then(|| i.to_string()))
                    .collect();
                if ids.is_empty() {
                    "-".into()
                } else {
                    ids.join(",")
                }
            }
            Structure::Label(l) => l.to_string(),
            Structure::Ranking(order) => order
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(">"),
            Structure::DirectedCycle(seq) | Structure::UndirectedCycle(seq) => {
                Structure::cycle_pairs(seq)
                    .iter()
                    .map(|(u, v)| format!("{u},{v}"))
                    .collect::<Vec<_>>()
                    .join(";")
            }
            Structure::Tournament(pairs) => {
                if pairs.is_empty() {
                    "-".into()
                } else {
                    pairs
                        .iter()
                        .map(|(u, v)| format!("{u}>{v}"))
                        .collect::<Vec<_>>()
                        .join(";")
                }
            }
        }
    }
}

fn rotate_min_first(seq: Vec<usize>) -> Vec<usize> {
    if seq.is_empty() {
        return seq;
    }
    let pos = seq
        .iter()
        .enumerate()
        .min_by_key(|(_, &v)| v)
        .map(|(i, _)| i)
        .unwrap();
    let mut out = Vec::with_capacity(seq.len());
    out.extend_from_slice(&seq[pos..]);
    out.extend_from_slice(&seq[..pos]);
    out
}

/// Reassemble a directed cycle sequence from successor pairs.
pub fn cycle_from_pairs(pairs: &[(usize, usize)]) -> Result<Vec<usize>> {
    if pairs.len() < 3 {
        return Err(Error::Membership(format!(
            "a cycle needs at least 3 pairs, found {}",
            pairs.len()
        )));
    }
    let mut next = std::collections::BTreeMap::new();
    for &(u, v) in pairs {
        if next.insert(u, v).is_some() {
            return Err(Error::Membership(format!("vertex {u} has two successors")));
        }
    }
    let start = pairs[0].0;
    let mut seq = vec![start];
    let mut cur = start;
    for _ in 1..pairs.len() {
        cur = *next
            .get(&cur)
            .ok_or_else(|| Error::Membership(format!("vertex {cur} has no successor")))?;
        if cur == start || seq.contains(&cur) {
            return Err(Error::Membership(
                "pairs do not form a single simple cycle".into(),
            ));
        }
        seq.push(cur);
    }
    if next.get(&cur) != Some(&start) {
        return Err(Error::Membership("pairs do not close into a cycle".into()));
    }
    Ok(seq)
}
