//! The single-site hypercube chain: pick (i, b) in [d] x {0,1}, set bit i to
//! b with the Metropolis probability.

use rand::Rng;

use crate::counting::Structure;
use crate::error::{Error, Result};
use crate::sampling::ChainState;

/// One transition. `log_pi` is the unnormalised log target density.
pub fn mc_cube_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    log_pi: &impl Fn(&[bool]) -> f64,
    rng: &mut R,
) -> Result<()> {
    let bits = match &state.current {
        Structure::Subset(b) => b.clone(),
        other => {
            return Err(Error::Validation(format!(
                "hypercube chain needs a bit-vector state, found {other:?}"
            )))
        }
    };
    let d = bits.len();
    let i = rng.gen_range(0..d);
    let b = rng.gen::<bool>();
    if bits[i] != b {
        let mut flipped = bits.clone();
        flipped[i] = b;
        let log_ratio = log_pi(&flipped) - log_pi(&bits);
        if log_ratio >= 0.0 || rng.gen::<f64>() < log_ratio.exp() {
            state.current = Structure::Subset(flipped);
        }
    }
    state.step += 1;
    Ok(())
}

/// Exact transition matrix of the chain on {0,1}^d (test oracle): holds with
/// probability at least 1/2, moves to Hamming-1 neighbours with
/// min(1, pi(v)/pi(u)) / (2d).
pub fn mc_cube_transition_matrix(
    d: usize,
    log_pi: &impl Fn(&[bool]) -> f64,
) -> ndarray::Array2<f64> {
    let n = 1usize << d;
    let to_bits = |mask: usize| -> Vec<bool> { (0..d).map(|i| mask >> i & 1 == 1).collect() };
    let mut p = ndarray::Array2::zeros((n, n));
    for u in 0..n {
        let bu = to_bits(u);
        let mut hold = d as f64 / (2.0 * d as f64); // choosing b = current bit
        for i in 0..d {
            let v = u ^ (1 << i);
            let bv = to_bits(v);
            let acc = (log_pi(&bv) - log_pi(&bu)).exp().min(1.0);
            p[[u, v]] = acc / (2.0 * d as f64);
            hold += (1.0 - acc) / (2.0 * d as f64);
        }
        p[[u, u]] = hold;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn uniform_target_has_half_self_loops() {
        let p = mc_cube_transition_matrix(3, &|_| 0.0);
        for u in 0..8 {
            assert!((p[[u, u]] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn rows_sum_to_one() {
        let log_pi = |b: &[bool]| b.iter().filter(|&&x| x).count() as f64 * 0.7;
        let p = mc_cube_transition_matrix(4, &log_pi);
        for u in 0..16 {
            let s: f64 = p.row(u).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_state_chain_reaches_target_stationary() {
        // d = 1: states {0}, {1}; pi proportional to (1, e)
        let log_pi = |b: &[bool]| if b[0] { 1.0 } else { 0.0 };
        let p = mc_cube_transition_matrix(1, &log_pi);
        // power the matrix
        let mut pk: Array2<f64> = Array2::eye(2);
        for _ in 0..200 {
            pk = pk.dot(&p);
        }
        let z = 1.0 + 1f64.exp();
        assert!((pk[[0, 0]] - 1.0 / z).abs() < 1e-10);
        assert!((pk[[0, 1]] - 1f64.exp() / z).abs() < 1e-10);
    }

    #[test]
    fn step_preserves_dimension_and_counts() {
        let mut state = ChainState::new(Structure::Subset(vec![false; 5]));
        let mut rng = crate::rng::derive(5, 0);
        let log_pi = |_: &[bool]| 0.0;
        for _ in 0..64 {
            mc_cube_step(&mut state, &log_pi, &mut rng).unwrap();
        }
        assert_eq!(state.step, 64);
        match &state.current {
            Structure::Subset(b) => assert_eq!(b.len(), 5),
            _ => panic!(),
        }
    }
}
