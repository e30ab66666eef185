//! Seeded, splittable normal-variate substreams.
//!
//! Each path gets its own ChaCha12 stream keyed by `(master_seed, path_index)`
//! through a SplitMix64 expansion, so an ensemble is a pure function of the
//! master seed and path index — independent of how paths are distributed over
//! workers. Standard normals come from the inverse CDF applied to uniform
//! draws, never from rejection sampling, keeping the draw count per path fixed.

use crate::math;
use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the 256-bit ChaCha key for one path substream.
fn substream_key(master_seed: u64, path: u64) -> [u8; 32] {
    let mut state = master_seed ^ path.wrapping_mul(0xA24B_AED4_963E_E407);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

pub(crate) struct NormalStream {
    rng: ChaCha12Rng,
}

impl NormalStream {
    pub(crate) fn for_path(master_seed: u64, path: u64) -> Self {
        NormalStream {
            rng: ChaCha12Rng::from_seed(substream_key(master_seed, path)),
        }
    }

    /// One standard normal draw via the inverse CDF of a (0,1) uniform.
    pub(crate) fn next_normal(&mut self) -> f64 {
        // (k + 1/2)·2^{−53} with k in [0, 2^53): strictly inside (0,1).
        let k = self.rng.next_u64() >> 11;
        let u = (k as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0);
        math::inverse_normal_cdf(u)
    }

    pub(crate) fn fill_normals(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.next_normal();
        }
    }
}

/// Plain uniform substream for non-Gaussian needs (synthetic Bernoulli tests).
pub(crate) struct UniformStream {
    rng: ChaCha12Rng,
}

impl UniformStream {
    pub(crate) fn for_stream(master_seed: u64, stream: u64) -> Self {
        UniformStream {
            rng: ChaCha12Rng::from_seed(substream_key(master_seed, stream)),
        }
    }

    pub(crate) fn next_uniform(&mut self) -> f64 {
        let k = self.rng.next_u64() >> 11;
        (k as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_are_deterministic_and_distinct() {
        let mut a1 = NormalStream::for_path(42, 0);
        let mut a2 = NormalStream::for_path(42, 0);
        let mut b = NormalStream::for_path(42, 1);
        let x1 = a1.next_normal();
        let x2 = a2.next_normal();
        let y = b.next_normal();
        assert_eq!(x1.to_bits(), x2.to_bits());
        assert_ne!(x1.to_bits(), y.to_bits());
    }

    #[test]
    fn normals_have_sane_moments() {
        let mut s = NormalStream::for_path(7, 3);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let z = s.next_normal();
            sum += z;
            sum2 += z * z;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
}
