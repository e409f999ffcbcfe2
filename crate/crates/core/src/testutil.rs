//! Shared helpers for unit tests: deterministic pseudo-randomness and
//! construction of complex matrices from `[re, im]` literal tables.

use num_complex::Complex64;

use crate::linalg::CMat;

/// Builds a complex matrix from nested `[re, im]` pairs, the layout used for
/// reference literals generated offline.
pub(crate) fn from_parts<const N: usize>(parts: &[[[f64; 2]; N]; N]) -> CMat<N> {
    let mut m = [[Complex64::ZERO; N]; N];
    for i in 0..N {
        for j in 0..N {
            m[i][j] = Complex64::new(parts[i][j][0], parts[i][j][1]);
        }
    }
    m
}

/// SplitMix64: tiny, seedable, reproducible. Plenty for test-case sampling;
/// pulling in a full RNG crate for this would be overkill.
pub(crate) struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
