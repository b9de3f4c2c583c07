//! Randomness used by the selectors.
//!
//! Production selectors draw from ChaCha20, seeded from a 64-bit seed and a
//! per-context stream number. [`ScriptedRng`] replays a fixed list of values
//! for trace-level tests.

use std::collections::VecDeque;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};

/// The random draws an IPID selector needs.
pub trait IpidRng {
    fn next_u16(&mut self) -> u16;

    fn next_u64(&mut self) -> u64;

    /// Uniform integer in `lo..=hi`.
    fn uniform_inclusive(&mut self, lo: u64, hi: u64) -> u64;
}

macro_rules! impl_ipid_rng {
    ($($ty:ty),*) => {$(
        impl IpidRng for $ty {
            #[inline]
            fn next_u16(&mut self) -> u16 {
                RngCore::next_u32(self) as u16
            }

            #[inline]
            fn next_u64(&mut self) -> u64 {
                RngCore::next_u64(self)
            }

            #[inline]
            fn uniform_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
                if lo == hi {
                    lo
                } else {
                    self.random_range(lo..=hi)
                }
            }
        }
    )*};
}

impl_ipid_rng!(ChaCha20Rng, ChaCha8Rng, rand::rngs::StdRng);

/// Cryptographic-quality generator used by selectors.
pub type SecureRng = ChaCha20Rng;

/// A deterministic secure generator for `(seed, stream)`.
pub fn secure_rng(seed: u64, stream: u64) -> SecureRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fast generator for simulations, one stream per `(seed, stream)`.
pub fn sim_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Test double that replays scripted values.
///
/// `next_u16` and `next_u64` return the next value truncated to width;
/// `uniform_inclusive` returns the next value and panics if it falls outside
/// the requested range.
#[derive(Debug, Clone, Default)]
pub struct ScriptedRng {
    values: VecDeque<u64>,
    consumed: usize,
}

impl ScriptedRng {
    pub fn new<I: IntoIterator<Item = u64>>(values: I) -> Self {
        ScriptedRng {
            values: values.into_iter().collect(),
            consumed: 0,
        }
    }

    /// Number of values handed out so far.
    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn remaining(&self) -> usize {
        self.values.len()
    }

    fn pop(&mut self) -> u64 {
        self.consumed += 1;
        self.values
            .pop_front()
            .unwrap_or_else(|| panic!("script exhausted after {} draws", self.consumed - 1))
    }
}

impl IpidRng for ScriptedRng {
    fn next_u16(&mut self) -> u16 {
        self.pop() as u16
    }

    fn next_u64(&mut self) -> u64 {
        self.pop()
    }

    fn uniform_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        let v = self.pop();
        assert!(
            (lo..=hi).contains(&v),
            "scripted value {v} outside requested range {lo}..={hi}"
        );
        v
    }
}
