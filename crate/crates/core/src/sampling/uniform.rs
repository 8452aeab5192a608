//! Exact uniform samplers for the supported structure families.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;

use crate::combinatorics::{binomial, factorial, uniform_biguint_below};
use crate::counting::{count_subtrees, Family, RootedTree, Structure, StructureSpace};
use crate::error::{Error, Result};

/// Uniform vertex of the d-dimensional hypercube: d unbiased coin tosses.
pub fn uniform_hypercube<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Structure {
    Structure::Subset((0..d).map(|_| rng.gen::<bool>()).collect())
}

/// Uniform permutation by sampling labels without replacement (Fisher-Yates).
pub fn uniform_permutation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Structure {
    let mut order: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    Structure::Ranking(order)
}

/// Uniform subset of size ell by partial shuffle.
pub fn uniform_ell_subset<R: Rng + ?Sized>(d: usize, ell: usize, rng: &mut R) -> Structure {
    let mut pool: Vec<usize> = (0..d).collect();
    for i in 0..ell {
        let j = rng.gen_range(i..d);
        pool.swap(i, j);
    }
    Structure::subset_from_indices(d, &pool[..ell])
}

/// Uniform partial tournament: each unordered pair independently absent or
/// oriented either way.
pub fn uniform_tournament<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Structure {
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            match rng.gen_range(0..3u8) {
                1 => pairs.push((u, v)),
                2 => pairs.push((v, u)),
                _ => {}
            }
        }
    }
    Structure::tournament(pairs)
}

/// Sattolo's algorithm: permute `items` in place so that the permutation
/// "position i holds the successor of the element previously at i" is a
/// uniform single cycle.
pub fn sattolo<R: Rng + ?Sized>(items: &mut [usize], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..i);
        items.swap(i, j);
    }
}

/// Uniform directed cyclic permutation over subsets of size >= 3: subset size
/// drawn proportional to C(n,i)(i-1)!, then a uniform subset, then Sattolo.
pub fn uniform_cyclic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Structure> {
    let seq = cycle_support(n, false, rng)?;
    Ok(Structure::dicycle(seq))
}

/// Uniform undirected cycle: sizes weighted by C(n,i)(i-1)!/2; a uniform
/// directed cycle on the chosen subset collapses onto one undirected cycle.
pub fn uniform_undirected_cycle<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Structure> {
    let seq = cycle_support(n, true, rng)?;
    Ok(Structure::cycle(seq))
}

fn cycle_support<R: Rng + ?Sized>(n: usize, undirected: bool, rng: &mut R) -> Result<Vec<usize>> {
    if n < 3 {
        return Err(Error::Validation(format!(
            "cycles need subsets of size >= 3; alphabet has {n} elements"
        )));
    }
    let mut weights = Vec::new();
    let mut total = BigUint::zero();
    for i in 3..=(n as u64) {
        let mut w = binomial(n as u64, i) * factorial(i - 1);
        if undirected {
            w /= BigUint::from(2u32);
        }
        total += &w;
        weights.push((i as usize, w));
    }
    let mut draw = uniform_biguint_below(&total, rng);
    let mut size = weights.last().unwrap().0;
    for (i, w) in &weights {
        if draw < *w {
            size = *i;
            break;
        }
        draw -= w;
    }
    // uniform subset of the chosen size
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..size {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    let mut members: Vec<usize> = pool[..size].to_vec();
    members.sort_unstable();
    // Sattolo on positions; read off the cycle starting from the minimum
    let mut perm: Vec<usize> = (0..size).collect();
    sattolo(&mut perm, rng);
    let mut seq = Vec::with_capacity(size);
    let mut pos = 0;
    for _ in 0..size {
        seq.push(members[pos]);
        pos = perm[pos];
    }
    Ok(seq)
}

/// Uniform rooted subtree via prefix-conditional biased coins; never rejects.
/// `counts` are the per-vertex subtree counts from [`count_subtrees`].
pub fn uniform_subtree<R: Rng + ?Sized>(
    tree: &RootedTree,
    counts: &[BigUint],
    include_empty: bool,
    rng: &mut R,
) -> Structure {
    let mut bits = vec![false; tree.len()];
    let root = tree.root();
    if include_empty {
        // empty with probability 1 / f(root)
        let draw = uniform_biguint_below(&counts[root], rng);
        if draw.is_zero() {
            return Structure::Subset(bits);
        }
    }
    bits[root] = true;
    // Decide children in depth-first order: include child c of an included
    // vertex with probability (f(c) - 1) / f(c).
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        for &c in tree.children(v).iter().rev() {
            let draw = uniform_biguint_below(&counts[c], rng);
            if draw < &counts[c] - BigUint::one() {
                bits[c] = true;
                stack.push(c);
            }
        }
    }
    Structure::Subset(bits)
}

/// Uniform sample from any supported space.
pub fn uniform_structure<R: Rng + ?Sized>(
    space: &StructureSpace,
    rng: &mut R,
) -> Result<Structure> {
    Ok(match space.family() {
        Family::Multiclass { d } | Family::Ordinal { d } => Structure::Label(rng.gen_range(0..*d)),
        Family::PosetRegression { poset } => Structure::Label(rng.gen_range(0..poset.len())),
        Family::Hierarchy { tree } => Structure::Label(rng.gen_range(0..tree.len())),
        Family::Multilabel { d } => uniform_hypercube(*d, rng),
        Family::EllSubsets { d, ell } => uniform_ell_subset(*d, *ell, rng),
        Family::Cliques { n } => uniform_hypercube(*n, rng),
        Family::Permutations { d } => uniform_permutation(*d, rng),
        Family::PartialTournaments { n } => uniform_tournament(*n, rng),
        Family::DirectedCycles { n } => uniform_cyclic(*n, rng)?,
        Family::UndirectedCycles { n } => uniform_undirected_cycle(*n, rng)?,
        Family::Subtrees {
            tree,
            include_empty,
        } => {
            let counts = count_subtrees(tree);
            uniform_subtree(tree, &counts, *include_empty, rng)
        }
    })
}
