//! Deterministic pseudo-randomness.
//!
//! Every stochastic step in this crate (weight initialization, minibatch
//! shuffling, simulation draws, posterior sampling, permutation tests) pulls
//! from the SplitMix64 generator below, so a fixed seed plus a fixed
//! configuration reproduces every artifact byte-for-byte on one platform.
//!
//! Standard-normal variates use the Marsaglia polar method on top of the
//! uniform stream; the pair member left over from each accepted draw is
//! cached and consumed before the stream advances again. Both generators are
//! small enough to reimplement exactly in another language when cross-checks
//! are needed (moment-level agreement is all we promise across languages;
//! bit compatibility holds only within one platform/binary).

/// SplitMix64: Steele, Lea & Flood's 64-bit mixer with a Weyl sequence.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    spare_normal: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 {
            state: seed,
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Bernoulli draw.
    pub fn below(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Uniform index in 0..n. The modulo bias is below 2^-53 for any n that
    /// fits in memory; acceptable for shuffles and permutation tests.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via the Marsaglia polar method.
    pub fn normal(&mut self) -> f64 {
        if let Some(s) = self.spare_normal.take() {
            return s;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * f);
                return u * f;
            }
        }
    }

    /// Normal with the given mean and *variance*.
    pub fn normal_mv(&mut self, mean: f64, variance: f64) -> f64 {
        mean + variance.sqrt() * self.normal()
    }

    /// Fisher–Yates shuffle, descending.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.index(i + 1);
            xs.swap(i, j);
        }
    }

    /// A random permutation of 0..n.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }
}

/// Derive an independent stream seed for a named sub-purpose, so that e.g.
/// weight initialization and batch shuffling never share a stream.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    SplitMix64::new(seed ^ tag.wrapping_mul(0xA24B_AED4_963E_E407)).next_u64()
}

/// Stream tags used across the crate.
pub mod tags {
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const SIM: u64 = 3;
    pub const POSTERIOR: u64 = 4;
    pub const PERMUTATION: u64 = 5;
    pub const SPLIT: u64 = 6;
}
