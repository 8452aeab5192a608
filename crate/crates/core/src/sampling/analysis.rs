//! Small statistical helpers shared by diagnostics and tests.

use ndarray::Array2;

/// Pearson chi-square statistic against expected cell counts.
pub fn chi_square_statistic(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    observed
        .iter()
        .zip(expected.iter())
        .map(|(&o, &e)| {
            let diff = o as f64 - e;
            diff * diff / e
        })
        .sum()
}

/// Total variation distance between rows of a distribution vector and a
/// reference.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p
        .iter()
        .zip(q.iter())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
}

/// Worst-case total variation of P^t rows from the stationary distribution.
pub fn tv_from_stationary(transition_power: &Array2<f64>, stationary: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for row in transition_power.outer_iter() {
        let tv = total_variation(row.as_slice().unwrap(), stationary);
        worst = worst.max(tv);
    }
    worst
}

/// Maximum detailed-balance violation |pi_u P_uv - pi_v P_vu| over all pairs.
pub fn detailed_balance_gap(transition: &Array2<f64>, stationary: &[f64]) -> f64 {
    let n = stationary.len();
    let mut worst = 0.0f64;
    for u in 0..n {
        for v in 0..n {
            let gap =
                (stationary[u] * transition[[u, v]] - stationary[v] * transition[[v, u]]).abs();
            worst = worst.max(gap);
        }
    }
    worst
}
