//! Structure spaces: families, embeddings and exact aggregate statistics.

use ndarray::{Array1, Array2};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, factorial};
use crate::counting::tree::{count_subtrees, count_subtrees_containing, RootedTree};
use crate::counting::Poset;
use crate::error::{Error, Result};
use crate::numeric::big_to_f64;

/// One combinatorial output family with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Multiclass {
        d: usize,
    },
    Multilabel {
        d: usize,
    },
    EllSubsets {
        d: usize,
        ell: usize,
    },
    Ordinal {
        d: usize,
    },
    PosetRegression {
        poset: Poset,
    },
    Hierarchy {
        tree: RootedTree,
    },
    Permutations {
        d: usize,
    },
    /// Orientation-or-absence per vertex pair. Also the tractable relaxation
    /// for poset-valued outputs, where no exact C is known.
    PartialTournaments {
        n: usize,
    },
    Cliques {
        n: usize,
    },
    UndirectedCycles {
        n: usize,
    },
    DirectedCycles {
        n: usize,
    },
    Subtrees {
        tree: RootedTree,
        include_empty: bool,
    },
}

/// A descriptor of one output space together with its embedding psi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureSpace {
    family: Family,
}

/// The exact triple (|Y|, Psi, C) of a space.
///
/// The count stays an arbitrary-precision integer; Psi and C are converted to
/// floating point at this boundary because the optimiser consumes reals.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStats {
    pub count: BigUint,
    pub psi: Array1<f64>,
    pub cov: Array2<f64>,
}

impl EmbeddingStats {
    pub fn count_f64(&self) -> f64 {
        big_to_f64(&self.count)
    }

    /// JSON export: {"count": decimal string, "psi": [..], "C": [[..]]}.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "count": self.count.to_string(),
            "psi": self.psi.to_vec(),
            "C": self.cov.outer_iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
        })
    }
}

/// Index of the unordered pair {u, v} (u < v) in lexicographic pair order.
pub fn pair_index(u: usize, v: usize, n: usize) -> usize {
    debug_assert!(u < v && v < n);
    u * (2 * n - u - 1) / 2 + (v - u - 1)
}

/// Inverse of [`pair_index`].
pub fn pair_at(index: usize, n: usize) -> (usize, usize) {
    let mut idx = index;
    for u in 0..n {
        let row = n - u - 1;
        if idx < row {
            return (u, u + 1 + idx);
        }
        idx -= row;
    }
    panic!("pair index {index} out of range for n={n}");
}

impl StructureSpace {
    pub fn new(family: Family) -> Result<Self> {
        match &family {
            Family::Multiclass { d } | Family::Multilabel { d } | Family::Ordinal { d } => {
                if *d == 0 {
                    return Err(Error::Validation("alphabet size must be positive".into()));
                }
            }
            Family::EllSubsets { d, ell } => {
                if *d == 0 {
                    return Err(Error::Validation("alphabet size must be positive".into()));
                }
                if ell > d {
                    return Err(Error::Validation(format!(
                        "subset size {ell} exceeds alphabet size {d}"
                    )));
                }
            }
            Family::PosetRegression { poset } => {
                if poset.len() == 0 {
                    return Err(Error::Validation("poset alphabet must be non-empty".into()));
                }
            }
            Family::Hierarchy { .. } | Family::Subtrees { .. } => {}
            Family::Permutations { d } => {
                if *d == 0 {
                    return Err(Error::Validation("alphabet size must be positive".into()));
                }
            }
            Family::PartialTournaments { n } | Family::Cliques { n } => {
                if *n < 2 {
                    return Err(Error::Validation("need at least 2 vertices".into()));
                }
            }
            Family::UndirectedCycles { n } | Family::DirectedCycles { n } => {
                if *n < 3 {
                    return Err(Error::Validation(
                        "cycle spaces need at least 3 vertices (subset size >= 3)".into(),
                    ));
                }
            }
        }
        Ok(StructureSpace { family })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Dimension of the embedding psi.
    pub fn embedding_dim(&self) -> usize {
        match &self.family {
            Family::Multiclass { d }
            | Family::Multilabel { d }
            | Family::EllSubsets { d, .. }
            | Family::Ordinal { d } => *d,
            Family::PosetRegression { poset } => poset.len(),
            Family::Hierarchy { tree } => tree.len(),
            Family::Permutations { d } => d * (d - 1) / 2,
            Family::PartialTournaments { n }
            | Family::Cliques { n }
            | Family::UndirectedCycles { n }
            | Family::DirectedCycles { n } => n * (n - 1) / 2,
            Family::Subtrees { tree, .. } => tree.len(),
        }
    }

    /// Exact cardinality |Y| from the family's closed form.
    pub fn cardinality(&self) -> Result<BigUint> {
        Ok(match &self.family {
            Family::Multiclass { d } | Family::Ordinal { d } => BigUint::from(*d),
            Family::Multilabel { d } => BigUint::one() << *d,
            Family::EllSubsets { d, ell } => binomial(*d as u64, *ell as u64),
            Family::PosetRegression { poset } => BigUint::from(poset.len()),
            Family::Hierarchy { tree } => BigUint::from(tree.len()),
            Family::Permutations { d } => factorial(*d as u64),
            Family::PartialTournaments { n } => BigUint::from(3u32).pow((n * (n - 1) / 2) as u32),
            Family::Cliques { n } => BigUint::one() << *n,
            Family::UndirectedCycles { n } => {
                let n = *n as u64;
                let mut total = BigUint::zero();
                for i in 3..=n {
                    total += binomial(n, i) * factorial(i - 1) / BigUint::from(2u32);
                }
                total
            }
            Family::DirectedCycles { n } => {
                let n = *n as u64;
                let mut total = BigUint::zero();
                for i in 3..=n {
                    total += binomial(n, i) * factorial(i - 1);
                }
                total
            }
            Family::Subtrees {
                tree,
                include_empty,
            } => {
                let f = count_subtrees(tree);
                let total = f[tree.root()].clone();
                if *include_empty {
                    total
                } else {
                    total - BigUint::one()
                }
            }
        })
    }

    /// Psi = sum over Y of psi(y), from the family's closed form.
    pub fn psi_sum(&self) -> Result<Array1<f64>> {
        let dim = self.embedding_dim();
        Ok(match &self.family {
            Family::Multiclass { d } => Array1::ones(*d),
            Family::Multilabel { d } => {
                let per = big_to_f64(&(BigUint::one() << (*d - 1)));
                Array1::from_elem(*d, per)
            }
            Family::EllSubsets { d, ell } => {
                let per = if *ell == 0 {
                    0.0
                } else {
                    big_to_f64(&binomial(*d as u64 - 1, *ell as u64 - 1))
                };
                Array1::from_elem(*d, per)
            }
            Family::Ordinal { d } => Array1::from_iter((0..*d).map(|i| (*d - i) as f64)),
            Family::PosetRegression { poset } => {
                Array1::from_iter((0..poset.len()).map(|i| poset.above(i).len() as f64))
            }
            Family::Hierarchy { tree } => {
                let sizes = tree.subtree_sizes();
                Array1::from_iter(sizes.iter().map(|&s| s as f64))
            }
            // Signed pair features cancel in pairs over these families.
            Family::Permutations { .. }
            | Family::PartialTournaments { .. }
            | Family::DirectedCycles { .. } => Array1::zeros(dim),
            Family::Cliques { n } => {
                let per = big_to_f64(&(BigUint::one() << (*n - 2)));
                Array1::from_elem(dim, per)
            }
            Family::UndirectedCycles { n } => {
                let per = big_to_f64(&cyc_series(*n as u64 - 2, 1));
                Array1::from_elem(dim, per)
            }
            Family::Subtrees { tree, .. } => {
                let f = count_subtrees(tree);
                Array1::from_iter(
                    (0..tree.len()).map(|v| big_to_f64(&count_subtrees_containing(tree, &f, &[v]))),
                )
            }
        })
    }

    /// C = sum over Y of psi(y) psi(y)^T, from the family's closed form.
    pub fn psi_cov(&self) -> Result<Array2<f64>> {
        let dim = self.embedding_dim();
        Ok(match &self.family {
            Family::Multiclass { d } => Array2::eye(*d),
            Family::Multilabel { d } => {
                let d = *d;
                let diag = big_to_f64(&(BigUint::one() << (d - 1)));
                let off = if d >= 2 {
                    big_to_f64(&(BigUint::one() << (d - 2)))
                } else {
                    0.0
                };
                let mut c = Array2::from_elem((d, d), off);
                for i in 0..d {
                    c[[i, i]] = diag;
                }
                c
            }
            Family::EllSubsets { d, ell } => {
                let (d, ell) = (*d as u64, *ell as u64);
                let diag = if ell == 0 {
                    0.0
                } else {
                    big_to_f64(&binomial(d - 1, ell - 1))
                };
                let off = if ell < 2 {
                    0.0
                } else {
                    big_to_f64(&binomial(d - 2, ell - 2))
                };
                let mut c = Array2::from_elem((dim, dim), off);
                for i in 0..dim {
                    c[[i, i]] = diag;
                }
                c
            }
            Family::Ordinal { d } => {
                let d = *d;
                Array2::from_shape_fn((d, d), |(i, j)| (d - i.max(j)) as f64)
            }
            Family::PosetRegression { poset } => {
                let n = poset.len();
                Array2::from_shape_fn((n, n), |(i, j)| {
                    (0..n)
                        .filter(|&k| poset.dominates(k, i) && poset.dominates(k, j))
                        .count() as f64
                })
            }
            Family::Hierarchy { tree } => {
                let sizes = tree.subtree_sizes();
                let n = tree.len();
                Array2::from_shape_fn((n, n), |(i, j)| {
                    if tree.is_ancestor_or_self(i, j) {
                        sizes[j] as f64
                    } else if tree.is_ancestor_or_self(j, i) {
                        sizes[i] as f64
                    } else {
                        0.0
                    }
                })
            }
            Family::Permutations { d } => {
                let n = *d;
                let diag = big_to_f64(&factorial(n as u64));
                let third = diag / 3.0;
                signed_pair_cov(n, diag, third, -third, 0.0)
            }
            Family::PartialTournaments { n } => {
                // Pair states are independent across unordered pairs, so all
                // cross terms vanish and only the diagonal survives.
                let eta = (n * (n - 1) / 2) as u32;
                let diag = big_to_f64(&(BigUint::from(2u32) * BigUint::from(3u32).pow(eta - 1)));
                Array2::eye(dim) * diag
            }
            Family::Cliques { n } => {
                let n = *n;
                Array2::from_shape_fn((dim, dim), |(a, b)| {
                    let (u1, v1) = pair_at(a, n);
                    let (u2, v2) = pair_at(b, n);
                    let union = union_size(u1, v1, u2, v2);
                    big_to_f64(&(BigUint::one() << (n - union)))
                })
            }
            Family::UndirectedCycles { n } => {
                let n = *n;
                let diag = big_to_f64(&cyc_series(n as u64 - 2, 1));
                let shared = big_to_f64(&cyc_series(n as u64 - 3, 0));
                let disjoint = if n >= 4 {
                    big_to_f64(&cyc_series_disjoint(n as u64 - 4))
                } else {
                    0.0
                };
                Array2::from_shape_fn((dim, dim), |(a, b)| {
                    let (u1, v1) = pair_at(a, n);
                    let (u2, v2) = pair_at(b, n);
                    match union_size(u1, v1, u2, v2) {
                        2 => diag,
                        3 => shared,
                        _ => disjoint,
                    }
                })
            }
            Family::DirectedCycles { n } => {
                let n = *n;
                let mut diag = BigUint::zero();
                let mut adj = BigUint::zero();
                for i in 3..=(n as u64) {
                    diag += binomial(n as u64 - 2, i - 2) * factorial(i - 2);
                    if i >= 3 {
                        adj += binomial(n as u64 - 3, i - 3) * factorial(i - 3);
                    }
                }
                let diag = 2.0 * big_to_f64(&diag);
                let adj = 2.0 * big_to_f64(&adj);
                // Shared vertex on the same side of both pairs: -adj; on
                // opposite sides: +adj (a vertex has one successor and one
                // predecessor in any dicycle).
                signed_pair_cov(n, diag, -adj, adj, 0.0)
            }
            Family::Subtrees { tree, .. } => {
                let f = count_subtrees(tree);
                let n = tree.len();
                Array2::from_shape_fn((n, n), |(u, v)| {
                    big_to_f64(&count_subtrees_containing(tree, &f, &[u, v]))
                })
            }
        })
    }

    /// The full (|Y|, Psi, C) triple.
    pub fn stats(&self) -> Result<EmbeddingStats> {
        Ok(EmbeddingStats {
            count: self.cardinality()?,
            psi: self.psi_sum()?,
            cov: self.psi_cov()?,
        })
    }

    /// Upper bound on ||psi(y)|| over the space (exact for permutations and
    /// tournaments-free families, a valid bound everywhere).
    pub fn embedding_norm_bound(&self) -> f64 {
        match &self.family {
            Family::Multiclass { .. } => 1.0,
            Family::Ordinal { d } => (*d as f64).sqrt(),
            Family::EllSubsets { ell, .. } => (*ell as f64).sqrt(),
            Family::Multilabel { d } => (*d as f64).sqrt(),
            Family::PosetRegression { poset } => {
                let max_dominated = (0..poset.len())
                    .map(|z| (0..poset.len()).filter(|&i| poset.dominates(z, i)).count())
                    .max()
                    .unwrap_or(0);
                (max_dominated as f64).sqrt()
            }
            Family::Hierarchy { tree } => {
                let max_depth = (0..tree.len())
                    .map(|v| tree.ancestors(v).len() + 1)
                    .max()
                    .unwrap_or(1);
                (max_depth as f64).sqrt()
            }
            Family::Permutations { d } => ((d * (d - 1) / 2) as f64).sqrt(),
            Family::PartialTournaments { n } => ((n * (n - 1) / 2) as f64).sqrt(),
            Family::Cliques { n } => ((n * (n - 1) / 2) as f64).sqrt(),
            Family::UndirectedCycles { n } | Family::DirectedCycles { n } => (*n as f64).sqrt(),
            Family::Subtrees { tree, .. } => (tree.len() as f64).sqrt(),
        }
    }

    /// True when the family's embedding is an indicator map into {0,1}^d.
    pub fn is_indicator_family(&self) -> bool {
        !matches!(
            self.family,
            Family::Permutations { .. }
                | Family::PartialTournaments { .. }
                | Family::DirectedCycles { .. }
        )
    }
}

/// Sum over subset sizes used by cycle counts: sum_{i=lo}^{m} C(m, i) * i!.
fn cyc_series(m: u64, lo: u64) -> BigUint {
    let mut total = BigUint::zero();
    for i in lo..=m {
        total += binomial(m, i) * factorial(i);
    }
    total
}

/// Disjoint-pair cycle count: sum_{i=0}^{m} C(m, i) * 2 * (i+1)!.
fn cyc_series_disjoint(m: u64) -> BigUint {
    let mut total = BigUint::zero();
    for i in 0..=m {
        total += binomial(m, i) * factorial(i + 1) * BigUint::from(2u32);
    }
    total
}

fn union_size(u1: usize, v1: usize, u2: usize, v2: usize) -> usize {
    let mut vs = [u1, v1, u2, v2];
    vs.sort_unstable();
    let mut k = 1;
    for i in 1..4 {
        if vs[i] != vs[i - 1] {
            k += 1;
        }
    }
    k
}

/// Covariance over signed unordered-pair features with the four-case pattern:
/// same pair, shared element on the same side, shared element on opposite
/// sides, disjoint pairs.
fn signed_pair_cov(
    n: usize,
    diag: f64,
    same_side: f64,
    opposite: f64,
    disjoint: f64,
) -> Array2<f64> {
    let dim = n * (n - 1) / 2;
    Array2::from_shape_fn((dim, dim), |(a, b)| {
        let (u1, v1) = pair_at(a, n);
        let (u2, v2) = pair_at(b, n);
        if a == b {
            diag
        } else if u1 == u2 || v1 == v2 {
            same_side
        } else if u1 == v2 || v1 == u2 {
            opposite
        } else {
            disjoint
        }
    })
}
