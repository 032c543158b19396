//! Seed derivation and the portable random streams used across the crate.
//!
//! Every random draw goes through a ChaCha stream keyed by a 64-bit seed.
//! Substreams are derived by folding indices into the master seed with
//! SplitMix64, so results depend only on (seed, index path) and never on
//! scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Identifier written into instance files. Bump the suffix whenever the
/// draw procedure changes.
pub const PRNG_ID: &str = "chacha20-seed_from_u64+box_muller-v1";

/// One step of the SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a substream seed from a master seed and an index path.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &i| splitmix64(acc ^ splitmix64(i.wrapping_add(0x632b_e59b_d9b4_e019))))
}

pub fn stream(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Uniform draw on (0, 1] with 53 bits of resolution.
pub fn unit_open<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via the basic Box-Muller transform (one output per pair of uniforms).
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    let u1 = unit_open(rng);
    let u2 = unit_open(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Unit-rate exponential draw.
pub fn exponential<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    -unit_open(rng).ln()
}
