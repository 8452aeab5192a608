//! Synthetic dataset generators with documented recipes, all reproducible by
//! seed.

use ndarray::{Array1, Array2};
use rand::prelude::*;

use crate::counting::{Family, RootedTree, Structure, StructureSpace};
use crate::error::{Error, Result};
use crate::ridge::{Dataset, Inputs};
use crate::rng;
use crate::sampling::uniform_cyclic;

/// The hidden dicycle policy: n antisymmetric reward matrices over Sigma.
#[derive(Debug, Clone)]
pub struct DicyclePolicy {
    pub matrices: Vec<Array2<f64>>,
}

impl DicyclePolicy {
    /// Reward matrix of one input: sum_j x_j A^(j).
    pub fn reward_matrix(&self, x: ndarray::ArrayView1<f64>) -> Array2<f64> {
        let sigma = self.matrices[0].nrows();
        let mut w = Array2::zeros((sigma, sigma));
        for (a, &xj) in self.matrices.iter().zip(x.iter()) {
            w.scaled_add(xj, a);
        }
        w
    }

    /// The reward matrix flattened into the signed unordered-pair embedding:
    /// entry {u < v} is W[u, v].
    pub fn pair_vector(&self, x: ndarray::ArrayView1<f64>) -> Array1<f64> {
        let w = self.reward_matrix(x);
        let sigma = w.nrows();
        let mut out = Array1::zeros(sigma * (sigma - 1) / 2);
        let mut idx = 0;
        for u in 0..sigma {
            for v in (u + 1)..sigma {
                out[idx] = w[[u, v]];
                idx += 1;
            }
        }
        out
    }
}

/// Train/test split for the dicycle policy-estimation experiment.
pub struct DicycleData {
    pub train: Dataset,
    pub test_inputs: Array2<f64>,
    pub policy: DicyclePolicy,
}

fn cycle_reward(w: &Array2<f64>, y: &Structure) -> f64 {
    match y {
        Structure::DirectedCycle(seq) => Structure::cycle_pairs(seq)
            .iter()
            .map(|&(u, v)| w[[u, v]])
            .sum(),
        _ => f64::NEG_INFINITY,
    }
}

/// Dicycle dataset: inputs uniform in [0,1]^n; the hidden policy holds n
/// antisymmetric matrices with entries uniform in [-1,1]; each instance's
/// label is the best of `argmax_draws` uniformly random dicycles under its
/// reward matrix (the approximate argmax), keeping the top
/// `labels_per_instance` distinct structures.
pub fn generate_dicycle_dataset(
    n: usize,
    m: usize,
    m_test: usize,
    sigma: usize,
    labels_per_instance: usize,
    argmax_draws: usize,
    seed: u64,
) -> Result<DicycleData> {
    if sigma < 3 {
        return Err(Error::Validation(
            "dicycles need at least 3 vertices".into(),
        ));
    }
    if n == 0 || m == 0 || labels_per_instance == 0 || argmax_draws == 0 {
        return Err(Error::Validation("all sizes must be positive".into()));
    }
    let mut rng = rng::derive(seed, 0);
    let mut matrices = Vec::with_capacity(n);
    for _ in 0..n {
        let mut a = Array2::zeros((sigma, sigma));
        for u in 0..sigma {
            for v in (u + 1)..sigma {
                let val = rng.gen_range(-1.0..1.0);
                a[[u, v]] = val;
                a[[v, u]] = -val;
            }
        }
        matrices.push(a);
    }
    let policy = DicyclePolicy { matrices };
    let x = Array2::from_shape_fn((m + m_test, n), |_| rng.gen_range(0.0..1.0));
    let space = StructureSpace::new(Family::DirectedCycles { n: sigma })?;
    let mut label_sets = Vec::with_capacity(m);
    for i in 0..m {
        let w = policy.reward_matrix(x.row(i));
        let mut scored: Vec<(Structure, f64)> = Vec::with_capacity(argmax_draws);
        for _ in 0..argmax_draws {
            let y = uniform_cyclic(sigma, &mut rng)?;
            let r = cycle_reward(&w, &y);
            scored.push((y, r));
        }
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        scored.dedup_by(|a, b| a.0 == b.0);
        let set: Vec<Structure> = scored
            .into_iter()
            .take(labels_per_instance)
            .map(|(y, _)| y)
            .collect();
        label_sets.push(set);
    }
    let train_x = x.slice(ndarray::s![..m, ..]).to_owned();
    let test_x = x.slice(ndarray::s![m.., ..]).to_owned();
    let train = Dataset::new(space, Inputs::Features(train_x), label_sets)?;
    Ok(DicycleData {
        train,
        test_inputs: test_x,
        policy,
    })
}

/// Planted multilabel dataset: inputs uniform in [-1,1]^n; a hidden weight
/// matrix V (entries uniform in [-1,1]) with one shared latent row that
/// correlates labels; label l is on when (V x)_l + noise * e_l >= 0 with e_l
/// uniform in [-1,1]. With noise = 0 the planted V recovers every label.
pub fn generate_multilabel_dataset(
    m: usize,
    d_features: usize,
    d_labels: usize,
    noise: f64,
    seed: u64,
) -> Result<(Dataset, Array2<f64>)> {
    if m == 0 || d_features == 0 || d_labels == 0 {
        return Err(Error::Validation("all sizes must be positive".into()));
    }
    if noise < 0.0 {
        return Err(Error::Validation("noise must be non-negative".into()));
    }
    let mut rng = rng::derive(seed, 1);
    let shared = Array1::from_shape_fn(d_features, |_| rng.gen_range(-1.0..1.0));
    let mut v = Array2::from_shape_fn((d_labels, d_features), |_| rng.gen_range(-1.0..1.0));
    for mut row in v.outer_iter_mut() {
        row.scaled_add(0.5, &shared); // label correlation through a shared direction
    }
    let x = Array2::from_shape_fn((m, d_features), |_| rng.gen_range(-1.0..1.0));
    let space = StructureSpace::new(Family::Multilabel { d: d_labels })?;
    let mut label_sets = Vec::with_capacity(m);
    for i in 0..m {
        let scores = v.dot(&x.row(i));
        let bits: Vec<bool> = scores
            .iter()
            .map(|&s| s + noise * rng.gen_range(-1.0..1.0) >= 0.0)
            .collect();
        label_sets.push(vec![Structure::Subset(bits)]);
    }
    let data = Dataset::new(space, Inputs::Features(x), label_sets)?;
    Ok((data, v))
}

/// A balanced taxonomy with the given branching factor, `nodes` vertices.
pub fn balanced_taxonomy(nodes: usize, branching: usize) -> Result<RootedTree> {
    if nodes == 0 || branching == 0 {
        return Err(Error::Validation("taxonomy sizes must be positive".into()));
    }
    let parents: Vec<Option<usize>> = (0..nodes)
        .map(|v| {
            if v == 0 {
                None
            } else {
                Some((v - 1) / branching)
            }
        })
        .collect();
    RootedTree::from_parents(&parents)
}

/// Hierarchical dataset: the class of an instance is a uniform taxonomy
/// node; features are the node's microlabel vector (itself plus ancestors)
/// plus uniform noise.
pub fn generate_hierarchy_dataset(
    tree: &RootedTree,
    m: usize,
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::Validation("dataset size must be positive".into()));
    }
    let mut rng = rng::derive(seed, 2);
    let space = StructureSpace::new(Family::Hierarchy { tree: tree.clone() })?;
    let n = tree.len();
    let mut x = Array2::zeros((m, n));
    let mut label_sets = Vec::with_capacity(m);
    for i in 0..m {
        let class = rng.gen_range(0..n);
        let psi = space.embed(&Structure::Label(class))?;
        for j in 0..n {
            x[[i, j]] = psi[j] + noise * rng.gen_range(-1.0..1.0);
        }
        label_sets.push(vec![Structure::Label(class)]);
    }
    Dataset::new(space, Inputs::Features(x), label_sets)
}
