//! Seed derivation for reproducible, replayable randomness.
//!
//! Every stochastic routine in this crate takes either a `ChaCha8Rng` or an
//! [`RngStream`]. A stream is a factory of independent generators indexed by a
//! step (or sample) number, so coupling-from-the-past can replay the exact
//! randomness of step `-t` regardless of the horizon it is visited from, and
//! parallel sample loops stay reproducible for any worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser; decorrelates consecutive seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent generator from a base seed and a stream index.
pub fn derive(seed: u64, stream: u64) -> ChaCha8Rng {
    let a = mix(seed ^ 0x243f_6a88_85a3_08d3);
    let b = mix(a ^ stream);
    let c = mix(b.wrapping_add(stream));
    let mut bytes = [0u8; 32];
    bytes[0..8].copy_from_slice(&a.to_le_bytes());
    bytes[8..16].copy_from_slice(&b.to_le_bytes());
    bytes[16..24].copy_from_slice(&c.to_le_bytes());
    bytes[24..32].copy_from_slice(&mix(c).to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

/// A named position in a family of derived generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for step `index`; identical across calls.
    pub fn at(&self, index: u64) -> ChaCha8Rng {
        derive(self.seed, index)
    }

    /// Generator for a signed step index (CFTP counts steps backwards).
    pub fn at_signed(&self, index: i64) -> ChaCha8Rng {
        derive(self.seed, index as u64)
    }

    /// A sub-stream for nested loops (level/sample, trial/step, ...).
    pub fn substream(&self, index: u64) -> RngStream {
        RngStream {
            seed: mix(self.seed ^ mix(index)),
        }
    }
}
