//! Partial orders over a finite alphabet and the small kernels on them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A strict partial order over `0..n`, stored as the full relation p(>).
///
/// The edge set must be irreflexive, asymmetric and transitively closed;
/// construction validates all three.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Poset {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Poset {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let edges: BTreeSet<(usize, usize)> = edges.into_iter().collect();
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(Error::Validation(format!(
                    "edge ({u},{v}) out of range 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::Validation(format!("reflexive edge ({u},{u})")));
            }
            if edges.contains(&(v, u)) {
                return Err(Error::Validation(format!(
                    "relation is not asymmetric: both ({u},{v}) and ({v},{u}) present"
                )));
            }
        }
        for &(a, b) in &edges {
            for &(b2, c) in edges.range((b, 0)..(b + 1, 0)) {
                debug_assert_eq!(b, b2);
                if !edges.contains(&(a, c)) {
                    return Err(Error::Validation(format!(
                        "relation is not transitively closed: ({a},{b}),({b},{c}) without ({a},{c})"
                    )));
                }
            }
        }
        Ok(Poset { n, edges })
    }

    /// Parse the on-disk format: one `u v` pair per line meaning u > v.
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let u: usize = it
                .next()
                .ok_or_else(|| Error::Parse(format!("bad poset line: {line}")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad id in: {line}")))?;
            let v: usize = it
                .next()
                .ok_or_else(|| Error::Parse(format!("missing second id in: {line}")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad id in: {line}")))?;
            edges.push((u, v));
        }
        Poset::new(n, edges)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn dominates(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u, v))
    }

    /// Elements strictly above `v`.
    pub fn above(&self, v: usize) -> Vec<usize> {
        (0..self.n).filter(|&u| self.dominates(u, v)).collect()
    }

    /// The dual order (every edge reversed).
    pub fn dual(&self) -> Poset {
        Poset {
            n: self.n,
            edges: self.edges.iter().map(|&(u, v)| (v, u)).collect(),
        }
    }

    /// Number of elements strictly above `u` (the "position" of u).
    fn position(&self, u: usize) -> usize {
        self.above(u).len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosetKernelKind {
    /// Sum over elements of a base kernel on the positions; base = product.
    Position,
    /// Size of the intersection of the two relations.
    Edge,
    /// Edge kernel minus the edge kernel against the dual.
    SignedEdge,
}

/// Kernels on partial orders over the same alphabet.
pub fn poset_kernel(kind: PosetKernelKind, a: &Poset, b: &Poset) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "posets over different alphabets: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let value = match kind {
        PosetKernelKind::Position => (0..a.len())
            .map(|u| (a.position(u) as f64) * (b.position(u) as f64))
            .sum(),
        PosetKernelKind::Edge => a.edges().filter(|&(u, v)| b.dominates(u, v)).count() as f64,
        PosetKernelKind::SignedEdge => {
            let direct = a.edges().filter(|&(u, v)| b.dominates(u, v)).count() as f64;
            let dual = a.edges().filter(|&(u, v)| b.dominates(v, u)).count() as f64;
            direct - dual
        }
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_is_valid_after_closure() {
        // a>b>c closed: needs (a,c)
        assert!(Poset::new(3, [(0, 1), (1, 2)]).is_err());
        let p = Poset::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!(p.dominates(0, 2));
    }

    #[test]
    fn edge_kernel_self_intersection() {
        let p = Poset::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(poset_kernel(PosetKernelKind::Edge, &p, &p).unwrap(), 3.0);
    }

    #[test]
    fn signed_edge_on_reversed_pair() {
        let a = Poset::new(2, [(0, 1)]).unwrap();
        let b = Poset::new(2, [(1, 0)]).unwrap();
        assert_eq!(
            poset_kernel(PosetKernelKind::SignedEdge, &a, &b).unwrap(),
            -1.0
        );
    }

    #[test]
    fn edge_kernel_disjoint() {
        let a = Poset::new(4, [(0, 1)]).unwrap();
        let b = Poset::new(4, [(2, 3)]).unwrap();
        assert_eq!(poset_kernel(PosetKernelKind::Edge, &a, &b).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_alphabets_error() {
        let a = Poset::new(2, [(0, 1)]).unwrap();
        let b = Poset::new(3, [(0, 1)]).unwrap();
        assert!(poset_kernel(PosetKernelKind::Edge, &a, &b).is_err());
    }

    #[test]
    fn position_kernel_product_base() {
        // a>b>c vs itself: positions (0,1,2) -> 0*0+1*1+2*2 = 5
        let p = Poset::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(
            poset_kernel(PosetKernelKind::Position, &p, &p).unwrap(),
            5.0
        );
    }
}
