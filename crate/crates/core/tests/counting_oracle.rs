//! Closed-form statistics must reproduce brute-force enumeration exactly.

use combi_core::counting::oracle::brute_force_stats;
use combi_core::counting::{Family, Poset, RootedTree, StructureSpace};

fn check_space(space: &StructureSpace, what: &str) {
    let exact = space.stats().unwrap();
    let brute = brute_force_stats(space, 1_000_000).unwrap();
    assert_eq!(exact.count, brute.count, "{what}: cardinality");
    for (i, (a, b)) in exact.psi.iter().zip(brute.psi.iter()).enumerate() {
        let tol = 1e-12 * b.abs().max(1.0);
        assert!(
            (a - b).abs() <= tol,
            "{what}: psi[{i}] closed={a} brute={b}"
        );
    }
    for ((i, j), a) in exact.cov.indexed_iter() {
        let b = brute.cov[[i, j]];
        let tol = 1e-12 * b.abs().max(1.0);
        assert!(
            (a - b).abs() <= tol,
            "{what}: C[{i},{j}] closed={a} brute={b}"
        );
    }
}

fn chain_poset(n: usize) -> Poset {
    // 0 > 1 > ... > n-1, transitively closed
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            edges.push((u, v));
        }
    }
    Poset::new(n, edges).unwrap()
}

fn diamond_poset() -> Poset {
    // 0 above 1 and 2, both above 3
    Poset::new(4, [(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)]).unwrap()
}

fn caterpillar(n: usize) -> RootedTree {
    // alternating spine/leaf tree to exercise branching
    let parents: Vec<Option<usize>> = (0..n)
        .map(|v| if v == 0 { None } else { Some((v - 1) / 2 * 2) })
        .collect();
    RootedTree::from_parents(&parents).unwrap()
}

#[test]
fn set_families_match_enumeration() {
    for d in 1..=10 {
        check_space(
            &StructureSpace::new(Family::Multilabel { d }).unwrap(),
            &format!("multilabel d={d}"),
        );
        check_space(
            &StructureSpace::new(Family::Multiclass { d }).unwrap(),
            &format!("multiclass d={d}"),
        );
        check_space(
            &StructureSpace::new(Family::Ordinal { d }).unwrap(),
            &format!("ordinal d={d}"),
        );
        for ell in 0..=d {
            check_space(
                &StructureSpace::new(Family::EllSubsets { d, ell }).unwrap(),
                &format!("ell_subsets d={d} ell={ell}"),
            );
        }
    }
}

#[test]
fn signed_pair_families_match_enumeration() {
    for d in 2..=6 {
        check_space(
            &StructureSpace::new(Family::Permutations { d }).unwrap(),
            &format!("permutations d={d}"),
        );
    }
    for n in 2..=5 {
        check_space(
            &StructureSpace::new(Family::PartialTournaments { n }).unwrap(),
            &format!("tournaments n={n}"),
        );
    }
    for n in 3..=7 {
        check_space(
            &StructureSpace::new(Family::DirectedCycles { n }).unwrap(),
            &format!("dicycles n={n}"),
        );
    }
}

#[test]
fn graph_families_match_enumeration() {
    for n in 2..=10 {
        check_space(
            &StructureSpace::new(Family::Cliques { n }).unwrap(),
            &format!("cliques n={n}"),
        );
    }
    for n in 3..=7 {
        check_space(
            &StructureSpace::new(Family::UndirectedCycles { n }).unwrap(),
            &format!("undirected cycles n={n}"),
        );
    }
}

#[test]
fn poset_and_tree_families_match_enumeration() {
    check_space(
        &StructureSpace::new(Family::PosetRegression {
            poset: chain_poset(5),
        })
        .unwrap(),
        "poset regression over a chain",
    );
    check_space(
        &StructureSpace::new(Family::PosetRegression {
            poset: diamond_poset(),
        })
        .unwrap(),
        "poset regression over a diamond",
    );
    for n in [1, 2, 5, 9, 12] {
        let tree = caterpillar(n);
        check_space(
            &StructureSpace::new(Family::Hierarchy { tree: tree.clone() }).unwrap(),
            &format!("hierarchy n={n}"),
        );
        check_space(
            &StructureSpace::new(Family::Subtrees {
                tree: tree.clone(),
                include_empty: true,
            })
            .unwrap(),
            &format!("subtrees n={n} with empty"),
        );
        check_space(
            &StructureSpace::new(Family::Subtrees {
                tree,
                include_empty: false,
            })
            .unwrap(),
            &format!("subtrees n={n} without empty"),
        );
    }
}

#[test]
fn psi_is_zero_for_sign_symmetric_families() {
    for space in [
        StructureSpace::new(Family::Permutations { d: 5 }).unwrap(),
        StructureSpace::new(Family::DirectedCycles { n: 5 }).unwrap(),
        StructureSpace::new(Family::PartialTournaments { n: 4 }).unwrap(),
    ] {
        assert!(space.psi_sum().unwrap().iter().all(|&x| x == 0.0));
    }
}

#[test]
fn count_subtrees_matches_enumeration_to_twelve_vertices() {
    for n in 1..=12 {
        let tree = caterpillar(n);
        let f = combi_core::counting::count_subtrees(&tree);
        let space = StructureSpace::new(Family::Subtrees {
            tree: tree.clone(),
            include_empty: true,
        })
        .unwrap();
        let total = space.enumerate_small(1 << 13).unwrap().len();
        // f(root) = 1 + |nonempty rooted subtrees|
        assert_eq!(f[tree.root()].to_string(), total.to_string());
    }
}
