//! Prediction-time approximate inference with z-approximation guarantees,
//! plus a brute-force exact decoder for tests and small spaces.

use ndarray::Array1;
use rand::Rng;

use crate::counting::{oracle, pair_index, Family, Structure, StructureSpace};
use crate::error::{Error, Result};
use crate::sampling::{uniform_hypercube, uniform_structure};

/// A per-input linear scorer in embedding space: f(y) = <w, psi(y)>.
#[derive(Debug, Clone)]
pub struct LinearScorer {
    pub weights: Array1<f64>,
}

impl LinearScorer {
    pub fn new(weights: Array1<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Validation("scorer weights must be finite".into()));
        }
        Ok(LinearScorer { weights })
    }
}

/// Output spaces with an involution r and constant c such that
/// psi(y) + psi(r(y)) = c and <c, psi(y)> = 0 for every y. All shipped
/// systems have c = 0 (sign-flip siblings).
#[derive(Debug, Clone, PartialEq)]
pub enum SiblingSystem {
    /// Hypercube with the signed embedding psi in {-1,+1}^d; the sibling is
    /// the complement.
    SignedMultilabel { d: usize },
    /// Permutations with the signed pair embedding; the sibling reverses the
    /// ranking.
    Permutations { d: usize },
    /// Directed cycles; the sibling reverses the orientation.
    DirectedCycles { n: usize },
}

impl SiblingSystem {
    pub fn embedding_dim(&self) -> usize {
        match self {
            SiblingSystem::SignedMultilabel { d } => *d,
            SiblingSystem::Permutations { d } => d * (d - 1) / 2,
            SiblingSystem::DirectedCycles { n } => n * (n - 1) / 2,
        }
    }

    /// The counting-space twin for membership and enumeration. Signed
    /// multilabel shares structures with the multilabel family but embeds
    /// into {-1,+1}^d.
    pub fn space(&self) -> StructureSpace {
        let family = match self {
            SiblingSystem::SignedMultilabel { d } => Family::Multilabel { d: *d },
            SiblingSystem::Permutations { d } => Family::Permutations { d: *d },
            SiblingSystem::DirectedCycles { n } => Family::DirectedCycles { n: *n },
        };
        StructureSpace::new(family).expect("parameters validated at construction")
    }

    pub fn embed(&self, y: &Structure) -> Result<Array1<f64>> {
        match self {
            SiblingSystem::SignedMultilabel { d } => match y {
                Structure::Subset(bits) if bits.len() == *d => {
                    Ok(Array1::from_iter(bits.iter().map(|&b| {
                        if b {
                            1.0
                        } else {
                            -1.0
                        }
                    })))
                }
                _ => Err(Error::Membership(format!("expected a {d}-bit vector"))),
            },
            _ => self.space().embed(y),
        }
    }

    /// The involution r.
    pub fn sibling(&self, y: &Structure) -> Result<Structure> {
        self.space().check_membership(y)?;
        Ok(match (self, y) {
            (SiblingSystem::SignedMultilabel { .. }, Structure::Subset(bits)) => {
                Structure::Subset(bits.iter().map(|&b| !b).collect())
            }
            (SiblingSystem::Permutations { .. }, Structure::Ranking(order)) => {
                Structure::Ranking(order.iter().rev().copied().collect())
            }
            (SiblingSystem::DirectedCycles { .. }, Structure::DirectedCycle(seq)) => {
                let mut rev = seq.clone();
                rev[1..].reverse();
                Structure::DirectedCycle(rev)
            }
            _ => unreachable!("membership admitted a mismatched payload"),
        })
    }

    /// The constant c = psi(y) + psi(r(y)); zero for every shipped system.
    pub fn c_vector(&self) -> Array1<f64> {
        Array1::zeros(self.embedding_dim())
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Structure> {
        match self {
            SiblingSystem::SignedMultilabel { d } => Ok(uniform_hypercube(*d, rng)),
            _ => uniform_structure(&self.space(), rng),
        }
    }

    pub fn enumerate(&self, limit: u64) -> Result<Vec<Structure>> {
        self.space().enumerate_small(limit)
    }

    /// Check the sibling conditions psi(y) + psi(r(y)) = c and
    /// <c, psi(y)> = 0 on `samples` random structures (or everything when
    /// the space is small enough).
    pub fn verify<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> Result<()> {
        let c = self.c_vector();
        let probe: Vec<Structure> = match self.enumerate(1000) {
            Ok(all) => all,
            Err(_) => (0..samples)
                .map(|_| self.sample_uniform(rng))
                .collect::<Result<_>>()?,
        };
        for y in &probe {
            let psi = self.embed(y)?;
            let sib = self.embed(&self.sibling(y)?)?;
            let sum = &psi + &sib;
            if sum.iter().zip(c.iter()).any(|(a, b)| (a - b).abs() > 1e-12) {
                return Err(Error::Validation(format!(
                    "sibling condition psi(y)+psi(r(y)) = c violated at {y:?}"
                )));
            }
            if c.dot(&psi).abs() > 1e-12 {
                return Err(Error::Validation(format!("<c, psi(y)> != 0 at {y:?}")));
            }
        }
        Ok(())
    }

    fn score(&self, scorer: &LinearScorer, y: &Structure) -> Result<f64> {
        Ok(self.embed(y)?.dot(&scorer.weights))
    }
}

/// The 1/2-factor z-approximate decoder for sibling systems: draw y
/// uniformly; keep it if its score is non-negative, otherwise return its
/// sibling. With c = 0 the returned score is |f(y)| >= 0, which meets
/// f(yhat) >= max/2 + min/2.
pub fn decode_sibling<R: Rng + ?Sized>(
    system: &SiblingSystem,
    scorer: &LinearScorer,
    rng: &mut R,
) -> Result<(Structure, f64)> {
    let y = system.sample_uniform(rng)?;
    let s = system.score(scorer, &y)?;
    if s >= 0.0 {
        Ok((y, s))
    } else {
        let sib = system.sibling(&y)?;
        let s_sib = system.score(scorer, &sib)?;
        Ok((sib, s_sib))
    }
}

/// Enumerate the 1/2-z-approximation set of a sibling system: internally
/// lists Y and emits the better of {y, r(y)} per pair, suppressing
/// duplicates. Only nu = 1/2 is realised by the emission rule.
pub fn enumerate_z_approx(
    system: &SiblingSystem,
    scorer: &LinearScorer,
    nu: f64,
    limit: u64,
) -> Result<Vec<Structure>> {
    if (nu - 0.5).abs() > 1e-12 {
        return Err(Error::Unsupported(format!(
            "the sibling emission rule realises nu = 1/2 exactly; requested nu = {nu}"
        )));
    }
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for y in system.enumerate(limit)? {
        let s = system.score(scorer, &y)?;
        let sib = system.sibling(&y)?;
        let s_sib = system.score(scorer, &sib)?;
        let pick = if s > s_sib {
            y
        } else if s_sib > s {
            sib
        } else {
            y.min(sib)
        };
        if seen.insert(pick.clone()) {
            out.push(pick);
        }
    }
    Ok(out)
}

/// A hereditary set family over 0..sigma with a polynomial membership test
/// and the indicator-style embedding psi_u(z) = sqrt(mu(u)) for u in z.
pub struct IndependenceSystem<'a> {
    pub sigma: usize,
    /// Element measures; None means mu = 1.
    pub mu: Option<Vec<f64>>,
    member: Box<dyn Fn(&[usize]) -> bool + 'a>,
}

impl<'a> IndependenceSystem<'a> {
    pub fn new(sigma: usize, member: impl Fn(&[usize]) -> bool + 'a) -> Self {
        IndependenceSystem {
            sigma,
            mu: None,
            member: Box::new(member),
        }
    }

    pub fn with_mu(mut self, mu: Vec<f64>) -> Result<Self> {
        if mu.len() != self.sigma {
            return Err(Error::Dimension(format!(
                "mu has {} entries for alphabet size {}",
                mu.len(),
                self.sigma
            )));
        }
        if mu.iter().any(|&m| m < 0.0) {
            return Err(Error::Validation("mu must be non-negative".into()));
        }
        self.mu = Some(mu);
        Ok(self)
    }

    /// All subsets are members.
    pub fn free(sigma: usize) -> Self {
        IndependenceSystem::new(sigma, |_| true)
    }

    pub fn is_member(&self, sorted_elements: &[usize]) -> bool {
        (self.member)(sorted_elements)
    }

    fn weight(&self, u: usize) -> f64 {
        self.mu.as_ref().map_or(1.0, |m| m[u].sqrt())
    }

    fn score(&self, scorer: &LinearScorer, elements: &[usize]) -> f64 {
        elements
            .iter()
            .map(|&u| scorer.weights[u] * self.weight(u))
            .sum()
    }
}

/// The (1 - log2|S|/|S|)-factor z-approximate decoder for independence
/// systems: partition the alphabet into ceil(|S|/log2|S|) blocks of size at
/// most ceil(log2|S|), exhaustively score the member subsets of each block
/// (pruning supersets of non-members, valid by heredity) and return the best
/// block optimum; the empty set is always a candidate with score 0.
pub fn decode_independence(
    system: &IndependenceSystem,
    scorer: &LinearScorer,
) -> Result<(Structure, f64)> {
    let sigma = system.sigma;
    if sigma == 0 {
        return Err(Error::Validation("alphabet must be non-empty".into()));
    }
    if scorer.weights.len() != sigma {
        return Err(Error::Dimension(format!(
            "scorer has {} weights for alphabet size {sigma}",
            scorer.weights.len()
        )));
    }
    // ceil(log2 sigma), floored at 2 so a 2-element alphabet is a single
    // exhaustive block; fewer, larger blocks only strengthen the guarantee.
    let block_size = if sigma == 1 {
        1
    } else {
        ((sigma as f64).log2().ceil() as usize).max(2)
    };
    let mut best: Vec<usize> = Vec::new(); // empty set, member by heredity
    let mut best_score = 0.0f64;
    let mut block_start = 0;
    while block_start < sigma {
        let block: Vec<usize> = (block_start..(block_start + block_size).min(sigma)).collect();
        let mut stack: Vec<(Vec<usize>, usize)> = vec![(Vec::new(), 0)];
        while let Some((subset, next)) = stack.pop() {
            for pos in next..block.len() {
                let mut extended = subset.clone();
                extended.push(block[pos]);
                if !system.is_member(&extended) {
                    continue; // heredity: no superset can be a member
                }
                let score = system.score(scorer, &extended);
                if score > best_score {
                    best = extended.clone();
                    best_score = score;
                }
                stack.push((extended, pos + 1));
            }
        }
        block_start += block_size;
    }
    Ok((Structure::subset_from_indices(sigma, &best), best_score))
}

/// Exact argmax by enumeration; ties break on canonical order.
pub fn decode_exact_small(
    space: &StructureSpace,
    scorer: &LinearScorer,
    limit: u64,
) -> Result<(Structure, f64)> {
    oracle::brute_force_argmax(space, &scorer.weights, limit)
}

/// Prediction dispatch: closed-form exact decoders where the family admits
/// one, sibling decoding for sign-symmetric families, exhaustive search
/// otherwise (refusing beyond `limit`).
pub fn predict_structure<R: Rng + ?Sized>(
    space: &StructureSpace,
    scorer: &LinearScorer,
    limit: u64,
    rng: &mut R,
) -> Result<(Structure, f64)> {
    let w = &scorer.weights;
    match space.family() {
        // argmax over single labels is exhaustive over the alphabet
        Family::Multiclass { .. }
        | Family::Ordinal { .. }
        | Family::PosetRegression { .. }
        | Family::Hierarchy { .. } => decode_exact_small(space, scorer, u64::MAX),
        // per-coordinate sign rule is exact
        Family::Multilabel { d } => {
            let bits: Vec<bool> = (0..*d).map(|l| w[l] >= 0.0).collect();
            let y = Structure::Subset(bits);
            let s = space.embed(&y)?.dot(w);
            Ok((y, s))
        }
        // top-ell coordinates are exact
        Family::EllSubsets { d, ell } => {
            let mut idx: Vec<usize> = (0..*d).collect();
            idx.sort_by(|&a, &b| w[b].partial_cmp(&w[a]).unwrap().then(a.cmp(&b)));
            let y = Structure::subset_from_indices(*d, &idx[..*ell]);
            let s = space.embed(&y)?.dot(w);
            Ok((y, s))
        }
        // max-weight rooted subtree by tree dynamic programming
        Family::Subtrees {
            tree,
            include_empty,
        } => {
            let n = tree.len();
            let mut gain = vec![0.0f64; n];
            for &v in tree.dfs_order().iter().rev() {
                gain[v] = w[v]
                    + tree
                        .children(v)
                        .iter()
                        .map(|&c| gain[c].max(0.0))
                        .sum::<f64>();
            }
            let root = tree.root();
            if *include_empty && gain[root] < 0.0 {
                let y = Structure::empty_subset(n);
                return Ok((y, 0.0));
            }
            let mut bits = vec![false; n];
            bits[root] = true;
            let mut stack = vec![root];
            while let Some(v) = stack.pop() {
                for &c in tree.children(v) {
                    if gain[c] > 0.0 {
                        bits[c] = true;
                        stack.push(c);
                    }
                }
            }
            let y = Structure::Subset(bits);
            let s = space.embed(&y)?.dot(w);
            Ok((y, s))
        }
        Family::Permutations { d } => {
            let system = SiblingSystem::Permutations { d: *d };
            decode_sibling(&system, scorer, rng)
        }
        Family::DirectedCycles { n } => {
            let system = SiblingSystem::DirectedCycles { n: *n };
            decode_sibling(&system, scorer, rng)
        }
        // tournaments: orient each pair by the sign of its weight (exact:
        // coordinates are independent)
        Family::PartialTournaments { n } => {
            let mut pairs = Vec::new();
            for u in 0..*n {
                for v in (u + 1)..*n {
                    let wt = w[pair_index(u, v, *n)];
                    if wt > 0.0 {
                        pairs.push((u, v));
                    } else if wt < 0.0 {
                        pairs.push((v, u));
                    }
                }
            }
            let y = Structure::tournament(pairs);
            let s = space.embed(&y)?.dot(w);
            Ok((y, s))
        }
        // no polynomial exact rule: exhaustive with a limit
        Family::Cliques { .. } | Family::UndirectedCycles { .. } => {
            decode_exact_small(space, scorer, limit)
        }
    }
}
