//! Statistical contracts of the partition machinery on enumerable spaces.

use combi_core::counting::{Family, StructureSpace};
use combi_core::partition::{
    chain_steps_for, cooling_schedule, estimate_partition, estimate_partition_approx_sampler,
    exact_gradient_dot, exact_partition, fpras_sample_size, hoeffding_gradient_dot,
    taylor_partition, taylor_remainder_bound, LevelSampler,
};
use combi_core::rng::RngStream;
use combi_core::sampling::{ConditionalTarget, ExpFamilyModel};
use ndarray::{array, Array1};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Weights with ||w|| = 1 for the d=3 multilabel space scaled so R = 1.
fn unit_model(d: usize, rng: &mut ChaCha8Rng) -> (ExpFamilyModel, Array1<f64>) {
    let mut w: Array1<f64> = Array1::from_shape_fn(d, |_| rng.gen_range(-1.0..1.0));
    let norm = w.dot(&w).sqrt();
    w.mapv_inplace(|v| v / norm);
    // x = 1/sqrt(d) makes ||phi|| = ||psi||/sqrt(d) <= 1
    let x = array![1.0 / (d as f64).sqrt()];
    (ExpFamilyModel::new(w, 1, 1.0).unwrap(), x)
}

#[test]
fn telescoping_identity_with_exact_expectations() {
    // With exact per-level expectations, prod rho_i * Z = |Y|.
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for space in [
        StructureSpace::new(Family::Multilabel { d: 6 }).unwrap(),
        StructureSpace::new(Family::Permutations { d: 5 }).unwrap(),
        StructureSpace::new(Family::DirectedCycles { n: 5 }).unwrap(),
    ] {
        let d = space.embedding_dim();
        let u: Array1<f64> = Array1::from_shape_fn(d, |_| rng.gen_range(-0.4..0.4));
        let w_norm = u.dot(&u).sqrt();
        let r = 3.0; // generous feature bound
        let schedule = cooling_schedule(r, w_norm, 3).unwrap();
        let mut product = 1.0;
        for i in 1..=schedule.levels() {
            let prev = ConditionalTarget::from_weights(&space, &u * schedule.betas[i - 1]);
            let cur = ConditionalTarget::from_weights(&space, &u * schedule.betas[i]);
            let rho = exact_partition(&prev, 5000).unwrap() / exact_partition(&cur, 5000).unwrap();
            product *= rho;
        }
        let z = exact_partition(&ConditionalTarget::from_weights(&space, u), 5000).unwrap();
        let count = space.stats().unwrap().count_f64();
        let rel = (product * z - count).abs() / count;
        assert!(rel <= 1e-9, "telescoping identity off by {rel:e}");
    }
}

#[test]
fn exact_ratios_are_bracketed() {
    // Every exact rho_i lies in [exp(-1/p), exp(1/p)] when R||w|| lands on
    // the grid (integer R||w||; the final jump of a fractional schedule can
    // be wider, which the schedule test covers separately).
    let space = StructureSpace::new(Family::Multilabel { d: 4 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for p in [3u32, 4, 5] {
        // ||w|| = 2, features scaled by x = 1/2 so ||phi|| <= ||psi||/2 <= 1 = R
        let mut w: Array1<f64> = Array1::from_shape_fn(4, |_| rng.gen_range(-1.0..1.0));
        let norm = w.dot(&w).sqrt();
        w.mapv_inplace(|v| v * 2.0 / norm);
        let u = &w * 0.5; // collapsed weights: score(y) = <u, psi(y)>, |score| <= 2
        let schedule = cooling_schedule(1.0, 2.0, p).unwrap();
        let bracket = (1.0 / p as f64).exp();
        for i in 1..=schedule.levels() {
            let prev = ConditionalTarget::from_weights(&space, &u * schedule.betas[i - 1]);
            let cur = ConditionalTarget::from_weights(&space, &u * schedule.betas[i]);
            let rho = exact_partition(&prev, 100).unwrap() / exact_partition(&cur, 100).unwrap();
            assert!(
                rho <= bracket + 1e-12 && rho >= 1.0 / bracket - 1e-12,
                "p={p} level {i}: rho {rho} outside [{}, {bracket}]",
                1.0 / bracket
            );
        }
    }
}

#[test]
fn per_level_estimator_range_and_variance_bound() {
    // f_i samples lie in [exp(-1/p), exp(1/p)] and the relative variance is
    // bounded by exp(2/p) (checked with 3 standard errors of slack).
    let mut rng = ChaCha8Rng::seed_from_u64(57);
    let space = StructureSpace::new(Family::Multilabel { d: 3 }).unwrap();
    let (model, x) = unit_model(3, &mut rng);
    let p = 3u32;
    let u = model.collapse(x.view()).unwrap();
    let schedule = cooling_schedule(1.0, 1.0, p).unwrap();
    let stream = RngStream::new(71);
    for i in 1..=schedule.levels() {
        let beta_prev = schedule.betas[i - 1];
        let beta = schedule.betas[i];
        let target = ConditionalTarget::from_weights(&space, &u * beta);
        let (ys, probs) = target.exact_distribution(100).unwrap();
        // exact relative variance by enumeration
        let f = |idx: usize| -> f64 {
            let score = space.embed(&ys[idx]).unwrap().dot(&u);
            ((beta_prev - beta) * score).exp()
        };
        let mean: f64 = (0..ys.len()).map(|j| probs[j] * f(j)).sum();
        let second: f64 = (0..ys.len()).map(|j| probs[j] * f(j) * f(j)).sum();
        let rel_var = (second - mean * mean) / (mean * mean);
        assert!(
            rel_var <= (2.0 / p as f64).exp(),
            "exact B_i violated at level {i}"
        );
        // sampled f_i range check
        let bracket = (1.0 / p as f64).exp();
        let mut rngl = stream.substream(i as u64).at(0);
        for _ in 0..500 {
            let draw: f64 = rngl.gen();
            let mut acc = 0.0;
            let mut idx = ys.len() - 1;
            for (j, pr) in probs.iter().enumerate() {
                acc += pr;
                if draw < acc {
                    idx = j;
                    break;
                }
            }
            let v = f(idx);
            assert!(v <= bracket + 1e-12 && v >= 1.0 / bracket - 1e-12);
        }
    }
}

#[test]
fn fpras_contract_on_multilabel() {
    // eps = 0.5, p = 3, S = ceil(65 eps^-2 l e^{2/p}): estimate within
    // (1 +- eps) of exact Z in at least 70 of 100 seeded trials.
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let space = StructureSpace::new(Family::Multilabel { d: 3 }).unwrap();
    let epsilon = 0.5;
    let p = 3u32;
    let mut hits = 0;
    let mut hits_chain = 0;
    let trials = 100u64;
    for trial in 0..trials {
        let (model, x) = unit_model(3, &mut rng);
        let target = ConditionalTarget::from_weights(&space, model.collapse(x.view()).unwrap());
        let exact = exact_partition(&target, 100).unwrap();
        let stream = RngStream::new(9000 + trial);
        let est = estimate_partition(
            &model,
            x.view(),
            &space,
            epsilon,
            p,
            &LevelSampler::Cftp,
            &stream,
        )
        .unwrap();
        assert_eq!(
            est.samples_per_level,
            fpras_sample_size(epsilon, est.levels, p)
        );
        if est.value >= (1.0 - epsilon) * exact && est.value <= (1.0 + epsilon) * exact {
            hits += 1;
        }
        // approximate-sampler variant with the bound-derived chain length
        let steps = chain_steps_for(epsilon, est.levels, p, 1.0, 1.0);
        let est2 = estimate_partition_approx_sampler(
            &model,
            x.view(),
            &space,
            epsilon,
            p,
            steps,
            &stream.substream(999),
        )
        .unwrap();
        if est2.value >= (1.0 - epsilon) * exact && est2.value <= (1.0 + epsilon) * exact {
            hits_chain += 1;
        }
    }
    assert!(hits >= 70, "exact-sampler FPRAS hit only {hits}/100");
    assert!(
        hits_chain >= 70,
        "chain-sampler FPRAS hit only {hits_chain}/100"
    );
}

#[test]
fn taylor_error_within_remainder_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(67);
    for space in [
        StructureSpace::new(Family::Multilabel { d: 4 }).unwrap(),
        StructureSpace::new(Family::EllSubsets { d: 5, ell: 2 }).unwrap(),
        StructureSpace::new(Family::Cliques { n: 3 }).unwrap(),
    ] {
        let stats = space.stats().unwrap();
        let d = space.embedding_dim();
        for _ in 0..20 {
            // scale scores so max|f| <= 1 (the lambda >= R^2 ln|Y| regime)
            let mut u: Array1<f64> = Array1::from_shape_fn(d, |_| rng.gen_range(-1.0..1.0));
            let max_psi_norm = (d as f64).sqrt();
            let norm = u.dot(&u).sqrt();
            u.mapv_inplace(|v| v / (norm * max_psi_norm));
            let model = ExpFamilyModel::new(u.clone(), 1, max_psi_norm).unwrap();
            let x = array![1.0];
            let target = ConditionalTarget::from_weights(&space, u);
            let exact = exact_partition(&target, 100_000).unwrap();
            let taylor = taylor_partition(&space, &stats, &model, x.view(), false).unwrap();
            let bound = taylor_remainder_bound(&target, 100_000).unwrap();
            assert!(
                (taylor - exact).abs() <= bound + 1e-12,
                "remainder bound violated: |{taylor} - {exact}| > {bound}"
            );
        }
    }
}

#[test]
fn hoeffding_failure_rate_within_delta() {
    // S = ceil(2 R^2 G^2 ln(2/delta)/eps^2): empirical failure rate over 500
    // trials at most delta + 0.02.
    let space = StructureSpace::new(Family::Multilabel { d: 2 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let delta = 0.05;
    let epsilon = 0.25;
    let trials = 500u64;
    let mut failures = 0;
    for trial in 0..trials {
        let (model, x) = unit_model(2, &mut rng);
        let mut z: Array1<f64> = Array1::from_shape_fn(2, |_| rng.gen_range(-1.0..1.0));
        let zn = z.dot(&z).sqrt();
        z.mapv_inplace(|v| v / zn); // G = 1
        let exact = exact_gradient_dot(&model, x.view(), z.view(), &space, 100).unwrap();
        let est = hoeffding_gradient_dot(
            &model,
            x.view(),
            z.view(),
            delta,
            epsilon,
            &LevelSampler::Cftp,
            &RngStream::new(40_000 + trial),
            &space,
        )
        .unwrap();
        if (est - exact).abs() > epsilon {
            failures += 1;
        }
    }
    let rate = failures as f64 / trials as f64;
    assert!(
        rate <= delta + 0.02,
        "failure rate {rate} above delta + 0.02"
    );
}

#[test]
fn moment_estimates_track_exact_expectation() {
    // d=2 multilabel, small weights: ratio within 10% of E[phi_j] in at
    // least 70 of 100 trials at eps = 0.5.
    let space = StructureSpace::new(Family::Multilabel { d: 2 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    let mut hits = 0;
    let trials = 100u64;
    for trial in 0..trials {
        let mut w: Array1<f64> = Array1::from_shape_fn(2, |_| rng.gen_range(-0.5..0.5));
        let norm = w.dot(&w).sqrt();
        w.mapv_inplace(|v| v * 0.5 / norm); // small weights
        let model = ExpFamilyModel::new(w.clone(), 1, (2f64).sqrt()).unwrap();
        let x = array![1.0];
        // exact E[phi_0] by enumeration
        let e1 = Array1::from_vec(vec![1.0, 0.0]);
        let exact = exact_gradient_dot(&model, x.view(), e1.view(), &space, 100).unwrap();
        let est = combi_core::partition::estimate_moment(
            &model,
            x.view(),
            0,
            0.5,
            0.5,
            3,
            &space,
            &RngStream::new(70_000 + trial),
        )
        .unwrap();
        if (est - exact).abs() <= 0.10 * exact.abs().max(0.05) {
            hits += 1;
        }
    }
    assert!(hits >= 70, "moment estimate hit only {hits}/100");
}
