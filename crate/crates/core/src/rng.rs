//! Deterministic random streams for reproducible trials.
//!
//! The generator is xoshiro256++ seeded through splitmix64, hand-rolled so
//! that streams are stable across platforms, compilers and releases. Nothing
//! here is cryptographically secure.
//!
//! # Stream splitting
//!
//! Trial `i` of a run with master seed `s` draws from
//! `SimRng::substream(s, i)`. The substream state is the first four outputs
//! of a splitmix64 chain started at `s ^ mix64((i + 1) * 0x9E3779B97F4A7C15)`,
//! where `mix64` is the splitmix64 output mixer. Serial and parallel
//! execution therefore see identical per-trial randomness.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn splitmix_next(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    mix64(*state)
}

/// A deterministic pseudo-random stream (xoshiro256++).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRng {
    s: [u64; 4],
}

impl SimRng {
    /// Master stream for `seed`; identical to `substream(seed, 0)`.
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    /// Independent stream `stream` derived from `seed` (see module docs).
    pub fn substream(seed: u64, stream: u64) -> Self {
        let mut sm = seed ^ mix64(stream.wrapping_add(1).wrapping_mul(GOLDEN));
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = splitmix_next(&mut sm);
        }
        if s == [0, 0, 0, 0] {
            s[0] = GOLDEN;
        }
        Self { s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = (self.s[0].wrapping_add(self.s[3]))
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform draw from `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from `0..bound` (widening-multiply method).
    ///
    /// # Panics
    ///
    /// Panics if `bound` is zero.
    #[inline]
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be non-zero");
        ((u128::from(self.next_u64()) * u128::from(bound)) >> 64) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = SimRng::new(42);
        let mut b = SimRng::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn substreams_differ() {
        let mut a = SimRng::substream(7, 0);
        let mut b = SimRng::substream(7, 1);
        assert_ne!(
            (0..4).map(|_| a.next_u64()).collect::<Vec<_>>(),
            (0..4).map(|_| b.next_u64()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn unit_interval() {
        let mut rng = SimRng::new(1);
        for _ in 0..10_000 {
            let u = rng.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn next_below_in_range() {
        let mut rng = SimRng::new(3);
        for _ in 0..10_000 {
            assert!(rng.next_below(13) < 13);
        }
    }

    #[test]
    fn next_below_roughly_uniform() {
        let mut rng = SimRng::new(5);
        let mut counts = [0u32; 8];
        for _ in 0..80_000 {
            counts[rng.next_below(8) as usize] += 1;
        }
        for &c in &counts {
            // 10k expected per bin; 5% slack is ~16 standard deviations.
            assert!((9_500..10_500).contains(&c), "bin count {c} out of range");
        }
    }
}
