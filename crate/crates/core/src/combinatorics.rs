//! Exact integer combinatorics in arbitrary precision.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;

/// Binomial coefficient C(n, k); zero when k > n.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut num = BigUint::one();
    for j in 0..k {
        num *= n - j;
        num /= j + 1; // exact: prefix products of C are integers
    }
    num
}

pub fn factorial(n: u64) -> BigUint {
    let mut f = BigUint::one();
    for j in 2..=n {
        f *= j;
    }
    f
}

/// Uniform integer in [0, bound) by rejection on the top bit block.
pub fn uniform_biguint_below<R: Rng + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    assert!(!bound.is_zero(), "bound must be positive");
    let bits = bound.bits();
    let bytes = ((bits + 7) / 8) as usize;
    let mask_shift = bytes as u64 * 8 - bits;
    loop {
        let mut buf = vec![0u8; bytes];
        rng.fill_bytes(&mut buf);
        buf[0] >>= mask_shift; // big-endian top byte
        let candidate = BigUint::from_bytes_be(&buf);
        if &candidate < bound {
            return candidate;
        }
    }
}
