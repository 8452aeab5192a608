//! Compensated summation and big-integer/float bridges.

use num_bigint::BigUint;
use num_traits::ToPrimitive;

/// Kahan-compensated sum; used wherever partition-scale magnitudes accumulate.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Pairwise sum with a fixed reduction tree; order-independent of worker count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Nearest-f64 conversion; +inf when the integer exceeds the float range.
pub fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// Natural log of a big integer, stable for values far beyond the f64 range.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 53 {
        return big_to_f64(x).ln();
    }
    // ln(x) = ln(top 53 bits) + (shift) * ln 2
    let shift = bits - 53;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}
