//! Oracles for the ridge machinery: finite differences, enumerated double
//! sums, and the hand-solved single-instance optimum.

use combi_core::counting::{Family, RootedTree, Structure, StructureSpace};
use combi_core::ridge::{
    surrogate_loss_enumerated, train_ncg, Dataset, Inputs, RidgeConfig, RidgeProblem,
};
use ndarray::{array, Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn random_dataset(space: StructureSpace, m: usize, n: usize, rng: &mut ChaCha8Rng) -> Dataset {
    let x = Array2::from_shape_fn((m, n), |_| rng.gen_range(-1.0..1.0));
    let all = space.enumerate_small(100_000).unwrap();
    let label_sets: Vec<Vec<Structure>> = (0..m)
        .map(|_| {
            let k = rng.gen_range(1..=2usize);
            (0..k)
                .map(|_| all.choose(rng).unwrap().clone())
                .collect::<Vec<_>>()
        })
        .map(|mut set: Vec<Structure>| {
            set.dedup();
            set
        })
        .collect();
    Dataset::new(space, Inputs::Features(x), label_sets).unwrap()
}

fn random_alpha(d: usize, m: usize, scale: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((d, m), |_| rng.gen_range(-scale..scale))
}

fn spaces_for_tests() -> Vec<StructureSpace> {
    let tree = RootedTree::from_parents(&[None, Some(0), Some(0), Some(1)]).unwrap();
    vec![
        StructureSpace::new(Family::Multiclass { d: 3 }).unwrap(),
        StructureSpace::new(Family::Multilabel { d: 4 }).unwrap(),
        StructureSpace::new(Family::EllSubsets { d: 5, ell: 2 }).unwrap(),
        StructureSpace::new(Family::Ordinal { d: 4 }).unwrap(),
        StructureSpace::new(Family::Permutations { d: 4 }).unwrap(),
        StructureSpace::new(Family::DirectedCycles { n: 4 }).unwrap(),
        StructureSpace::new(Family::PartialTournaments { n: 3 }).unwrap(),
        StructureSpace::new(Family::Cliques { n: 4 }).unwrap(),
        StructureSpace::new(Family::Subtrees {
            tree,
            include_empty: true,
        })
        .unwrap(),
    ]
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for space in spaces_for_tests() {
        let data = random_dataset(space, 4, 3, &mut rng);
        let config = RidgeConfig {
            lambda: Some(1.5),
            ..Default::default()
        };
        let problem = RidgeProblem::new(&data, &config).unwrap();
        let (d, m) = problem.dims();
        let alpha = random_alpha(d, m, 0.2, &mut rng);
        let grad = problem.gradient(&alpha).unwrap();
        let h = 1e-5;
        let mut max_rel = 0.0f64;
        for l in 0..d {
            for j in 0..m {
                let mut ap = alpha.clone();
                let mut am = alpha.clone();
                ap[[l, j]] += h;
                am[[l, j]] -= h;
                let fd =
                    (problem.objective(&ap).unwrap() - problem.objective(&am).unwrap()) / (2.0 * h);
                let denom = grad[[l, j]].abs().max(1.0);
                max_rel = max_rel.max((fd - grad[[l, j]]).abs() / denom);
            }
        }
        assert!(
            max_rel <= 1e-5,
            "finite-difference gradient mismatch: {max_rel:e}"
        );
        checked += 1;
    }
    assert!(checked >= 9);
}

#[test]
fn hessian_vector_matches_gradient_differences_and_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for space in spaces_for_tests().into_iter().take(5) {
        let data = random_dataset(space, 3, 2, &mut rng);
        let config = RidgeConfig {
            lambda: Some(0.7),
            ..Default::default()
        };
        let problem = RidgeProblem::new(&data, &config).unwrap();
        let (d, m) = problem.dims();
        let alpha = random_alpha(d, m, 0.2, &mut rng);
        let v = random_alpha(d, m, 1.0, &mut rng);
        let hv = problem.hessian_vector(&v).unwrap();
        let h = 1e-5;
        let gp = problem.gradient(&(&alpha + &(&v * h))).unwrap();
        let gm = problem.gradient(&(&alpha - &(&v * h))).unwrap();
        let fd = (&gp - &gm) / (2.0 * h);
        let num = (&fd - &hv).mapv(f64::abs).sum();
        let den = hv.mapv(f64::abs).sum().max(1.0);
        assert!(num / den <= 1e-4, "hvp mismatch {:e}", num / den);

        let u = random_alpha(d, m, 1.0, &mut rng);
        let hu = problem.hessian_vector(&u).unwrap();
        let uhv = (&u * &hv).sum();
        let vhu = (&v * &hu).sum();
        let scale = uhv.abs().max(vhu.abs()).max(1.0);
        assert!((uhv - vhu).abs() / scale <= 1e-10, "hessian not symmetric");
    }
}

#[test]
fn objective_decomposes_into_yrow_losses() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for space in spaces_for_tests() {
        let data = random_dataset(space, 5, 3, &mut rng);
        let config = RidgeConfig {
            lambda: Some(2.0),
            ..Default::default()
        };
        let problem = RidgeProblem::new(&data, &config).unwrap();
        let (d, m) = problem.dims();
        let alpha = random_alpha(d, m, 0.3, &mut rng);
        let obj = problem.objective(&alpha).unwrap();
        let m_mat = alpha.dot(&problem.gram);
        let reg = problem.lambda * (&alpha * &m_mat).sum();
        let mut total = reg;
        for i in 0..m {
            total += problem.yrow_loss(&alpha, i).unwrap();
        }
        let rel = (obj - total).abs() / obj.abs().max(1.0);
        assert!(rel <= 1e-10, "objective does not decompose: rel {rel:e}");
    }
}

#[test]
fn surrogate_matches_enumerated_double_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for space in spaces_for_tests() {
        let data = random_dataset(space, 4, 3, &mut rng);
        let config = RidgeConfig {
            lambda: Some(1.0),
            ..Default::default()
        };
        let problem = RidgeProblem::new(&data, &config).unwrap();
        let (d, m) = problem.dims();
        let alpha = random_alpha(d, m, 0.25, &mut rng);
        for i in 0..m {
            let w = alpha.dot(&problem.gram.column(i));
            let brute =
                surrogate_loss_enumerated(&data.space, &w, &data.label_sets[i], 100_000).unwrap();
            let fast = problem.surrogate_loss(&alpha, i).unwrap();
            let rel = (brute - fast).abs() / brute.abs().max(1.0);
            assert!(
                rel <= 1e-9,
                "pairwise surrogate mismatch at i={i}: rel {rel:e}"
            );
            if data.label_sets[i].len() == 1 {
                let closed = problem.yrow_loss(&alpha, i).unwrap();
                let rel = (closed - fast).abs() / closed.abs().max(1.0);
                assert!(rel <= 1e-9, "closed form differs for singleton label set");
            }
        }
    }
}

#[test]
fn exp_loss_upper_bounds_auc_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for space in spaces_for_tests() {
        let d = space.embedding_dim();
        for _ in 0..20 {
            let w = Array1::from_shape_fn(d, |_| rng.gen_range(-1.0..1.0));
            let all = space.enumerate_small(100_000).unwrap();
            let labels = vec![all.choose(&mut rng).unwrap().clone()];
            let auc = combi_core::ridge::auc_loss_enumerated(&space, &w, &labels, 100_000).unwrap();
            let expl =
                combi_core::ridge::exp_loss_enumerated(&space, &w, &labels, 100_000).unwrap();
            assert!(expl >= auc, "exp loss {expl} below auc loss {auc}");
        }
    }
}

#[test]
fn gradient_at_zero_matches_hand_value() {
    // multiclass d=2, m=1, K=[1], Y row = e1: gradient = Psi - |Y| Y^T = (-1, 1)
    let space = StructureSpace::new(Family::Multiclass { d: 2 }).unwrap();
    let data = Dataset::new(
        space,
        Inputs::Features(array![[1.0]]),
        vec![vec![Structure::Label(0)]],
    )
    .unwrap();
    let config = RidgeConfig {
        lambda: Some(1.0),
        ..Default::default()
    };
    let problem = RidgeProblem::new(&data, &config).unwrap();
    let grad = problem.gradient(&Array2::zeros((2, 1))).unwrap();
    assert!((grad[[0, 0]] - -1.0).abs() < 1e-14);
    assert!((grad[[1, 0]] - 1.0).abs() < 1e-14);
}

#[test]
fn ncg_reaches_hand_solved_optimum() {
    // Single multiclass instance, lambda = 1: stationary point (1/4, -1/4).
    let space = StructureSpace::new(Family::Multiclass { d: 2 }).unwrap();
    let data = Dataset::new(
        space,
        Inputs::Features(array![[1.0]]),
        vec![vec![Structure::Label(0)]],
    )
    .unwrap();
    let config = RidgeConfig {
        lambda: Some(1.0),
        tol: 1e-12,
        ..Default::default()
    };
    let (model, report) = train_ncg(&data, &config).unwrap();
    assert!(report.converged, "trainer did not converge: {report:?}");
    assert!(
        (model.alpha[[0, 0]] - 0.25).abs() <= 1e-8,
        "alpha = {:?}",
        model.alpha
    );
    assert!((model.alpha[[1, 0]] - -0.25).abs() <= 1e-8);
}

#[test]
fn duplicate_instances_get_identical_columns() {
    let space = StructureSpace::new(Family::Multilabel { d: 3 }).unwrap();
    let x = array![[0.5, 1.0], [0.5, 1.0], [1.0, -0.5]];
    let labels = vec![
        vec![Structure::subset_from_indices(3, &[0])],
        vec![Structure::subset_from_indices(3, &[0])],
        vec![Structure::subset_from_indices(3, &[1, 2])],
    ];
    let data = Dataset::new(space, Inputs::Features(x), labels).unwrap();
    let config = RidgeConfig {
        lambda: Some(1.0),
        tol: 1e-10,
        ..Default::default()
    };
    let (model, _) = train_ncg(&data, &config).unwrap();
    for l in 0..3 {
        assert!(
            (model.alpha[[l, 0]] - model.alpha[[l, 1]]).abs() <= 1e-6,
            "columns of duplicate instances differ"
        );
    }
}

#[test]
fn training_is_invariant_to_instance_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let space = StructureSpace::new(Family::Multilabel { d: 3 }).unwrap();
    let data = random_dataset(space.clone(), 6, 2, &mut rng);
    let config = RidgeConfig {
        lambda: Some(1.0),
        tol: 1e-10,
        ..Default::default()
    };
    let (model, _) = train_ncg(&data, &config).unwrap();

    let perm = [3usize, 1, 5, 0, 4, 2];
    let x = data.features().unwrap();
    let xp = Array2::from_shape_fn((6, 2), |(i, j)| x[[perm[i], j]]);
    let labels_p: Vec<_> = perm.iter().map(|&i| data.label_sets[i].clone()).collect();
    let data_p = Dataset::new(space, Inputs::Features(xp), labels_p).unwrap();
    let (model_p, _) = train_ncg(&data_p, &config).unwrap();
    for (new_col, &old) in perm.iter().enumerate() {
        for l in 0..3 {
            assert!(
                (model.alpha[[l, old]] - model_p.alpha[[l, new_col]]).abs() <= 1e-6,
                "solution changed under data permutation"
            );
        }
    }
}

#[test]
fn score_is_antisymmetric_under_permutation_reversal() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let space = StructureSpace::new(Family::Permutations { d: 4 }).unwrap();
    let data = random_dataset(space, 3, 2, &mut rng);
    let config = RidgeConfig {
        lambda: Some(1.0),
        ..Default::default()
    };
    let (model, _) = train_ncg(&data, &config).unwrap();
    let x = array![0.3, -0.7];
    let y = Structure::Ranking(vec![2, 0, 3, 1]);
    let rev = Structure::Ranking(vec![1, 3, 0, 2]);
    let s = model.score(x.view(), &y).unwrap();
    let sr = model.score(x.view(), &rev).unwrap();
    assert!((s + sr).abs() <= 1e-10 * s.abs().max(1.0));
}

#[test]
fn objective_linear_in_lambda() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let space = StructureSpace::new(Family::Multilabel { d: 3 }).unwrap();
    let data = random_dataset(space, 4, 2, &mut rng);
    let c1 = RidgeConfig {
        lambda: Some(1.0),
        ..Default::default()
    };
    let c2 = RidgeConfig {
        lambda: Some(2.0),
        ..Default::default()
    };
    let p1 = RidgeProblem::new(&data, &c1).unwrap();
    let p2 = RidgeProblem::new(&data, &c2).unwrap();
    let (d, m) = p1.dims();
    let alpha = random_alpha(d, m, 0.3, &mut rng);
    let reg = (&alpha * &alpha.dot(&p1.gram)).sum();
    let diff = p2.objective(&alpha).unwrap() - p1.objective(&alpha).unwrap();
    assert!((diff - reg).abs() <= 1e-9 * reg.abs().max(1.0));
}

#[test]
fn rescaled_loss_divides_loss_terms_by_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let space = StructureSpace::new(Family::Multilabel { d: 5 }).unwrap();
    let data = random_dataset(space.clone(), 4, 2, &mut rng);
    let plain = RidgeConfig {
        lambda: Some(1.0),
        ..Default::default()
    };
    let scaled = RidgeConfig {
        lambda: Some(1.0),
        rescale_loss: true,
        ..Default::default()
    };
    let pp = RidgeProblem::new(&data, &plain).unwrap();
    let ps = RidgeProblem::new(&data, &scaled).unwrap();
    let (d, m) = pp.dims();
    let alpha = random_alpha(d, m, 0.2, &mut rng);
    let count = 32.0;
    let reg = (&alpha * &alpha.dot(&pp.gram)).sum();
    let lhs = ps.objective(&alpha).unwrap() - reg;
    let rhs = (pp.objective(&alpha).unwrap() - reg) / count;
    assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
}
