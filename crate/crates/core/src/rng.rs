//! Counter-based randomness.
//!
//! Every random variate in the crate is a pure function of a 64-bit key and a
//! short path of integer words (draw kind, trial, round, pair, ...). There is no
//! hidden generator state, so batches and trials can be produced in any order or
//! on any number of threads and still agree bit for bit.
//!
//! Derivation, version 1:
//!
//! ```text
//! mix(z)         = splitmix64 finalizer of z
//! derive(key, w) = mix(rotl(key, 23) ^ mix(w ^ 0x9E3779B97F4A7C15))
//! uniform(bits)  = (bits >> 11) * 2^-53            in [0, 1)
//! bernoulli(q)   = uniform(bits) < q
//! ```
//!
//! A draw for pair `(i, j)`, `i < j`, in round `k` of kind `K` under `seed` uses
//! `derive(derive(derive(seed, K), k), i * n + j)`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Version tag of the derivation above. Bump when any constant changes.
pub const DERIVATION_VERSION: u32 = 1;

/// Purpose of a draw. The discriminant is the first derivation word, so draws
/// of different kinds never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum DrawKind {
    Mask = 1,
    Outcome = 2,
    Permutation = 3,
    CVariable = 4,
    Trial = 5,
}

#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn derive(key: u64, word: u64) -> u64 {
    mix(key.rotate_left(23) ^ mix(word ^ GOLDEN))
}

/// Folds a path of words into a key.
pub fn derive_path(key: u64, words: &[u64]) -> u64 {
    words.iter().fold(key, |k, &w| derive(k, w))
}

#[inline]
pub fn uniform(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn bernoulli(bits: u64, prob: f64) -> bool {
    uniform(bits) < prob
}

/// Sequential view over a derived key: the `k`-th output is `derive(key, k)`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = derive(self.key, self.counter);
        self.counter += 1;
        out
    }

    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        uniform(self.next_u64())
    }

    /// Unbiased integer in `0..bound` (Lemire's multiply-and-reject).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let wide = (self.next_u64() as u128) * (bound as u128);
            if (wide as u64) >= threshold {
                return (wide >> 64) as u64;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
