//! Reproducible random streams keyed by (experiment seed, purpose, index).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// The generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// splitmix64 finalizer, used to fold keys into a seed.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a list of keys into a single 64-bit seed.
pub fn derive_seed(base: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix64(base), |acc, &k| mix64(acc ^ mix64(k)))
}

/// Independent stream for `(seed, keys...)`, with `index` selecting the
/// ChaCha stream so per-trial generators never overlap.
pub fn stream(seed: u64, keys: &[u64], index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, keys));
    rng.set_stream(index);
    rng
}

/// Circular complex Gaussian with total variance `var` (each part `var / 2`).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let scale = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Stable key for a floating-point scenario parameter.
pub fn float_key(v: f64) -> u64 {
    v.to_bits()
}
