//! Seeded random streams and the samplers the model draws from.
//!
//! Randomness comes from ChaCha8 (via `rand_chacha`, whose output is
//! reproducible across platforms and releases). A [`RngStream`] is one
//! substream of a 64-bit master seed: the 32-byte ChaCha key is derived by
//! taking four successive SplitMix64 outputs seeded with
//! `master_seed XOR (stream_id * 0x9E37_79B9_7F4A_7C15)`, serialized
//! little-endian. Substreams with distinct ids are statistically independent,
//! so consumers (arrivals, sizes, each project's own draws) cannot perturb
//! one another.
//!
//! Draw accounting, so a whole run can be audited draw by draw:
//!
//! - `u01`, [`RngStream::exp_sample`], [`RngStream::bernoulli`] and
//!   [`RngStream::size_sample`] consume exactly one 64-bit output each;
//! - [`RngStream::uniform_int`] consumes one 64-bit output, plus further
//!   ones with probability below `range / 2^64` (Lemire's unbiased
//!   multiply-shift with rejection; for the ranges used here that is
//!   under 2^-60).

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::model::Size;

/// Contract violations in sampler arguments.
#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("exponential mean must be positive, got {0}")]
    NonPositiveMean(f64),
    #[error("integer range is empty: lo {lo} > hi {hi}")]
    EmptyRange { lo: i64, hi: i64 },
    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("size probabilities must lie in [0, 1] and sum to 1, got ({0}, {1}, {2})")]
    InvalidDistribution(f64, f64, f64),
}

const STREAM_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One independent, reproducible stream of randomness.
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    /// Substream `stream_id` of `master_seed`. Equal arguments yield the
    /// same sample sequence on every platform and build.
    pub fn substream(master_seed: u64, stream_id: u64) -> RngStream {
        let mut state = master_seed ^ stream_id.wrapping_mul(STREAM_MIX);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        RngStream {
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in `[0, 1)` from the top 53 bits of one 64-bit output.
    fn u01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential draw with the given mean: `-mean * ln(1 - u)`.
    pub fn exp_sample(&mut self, mean: f64) -> Result<f64, SampleError> {
        if mean <= 0.0 || !mean.is_finite() {
            return Err(SampleError::NonPositiveMean(mean));
        }
        let u = self.u01();
        Ok(-mean * (1.0 - u).ln())
    }

    /// Uniform integer in `lo..=hi`, each value with probability
    /// `1 / (hi - lo + 1)`.
    pub fn uniform_int(&mut self, lo: i64, hi: i64) -> Result<i64, SampleError> {
        if lo > hi {
            return Err(SampleError::EmptyRange { lo, hi });
        }
        let width_minus_one = hi.wrapping_sub(lo) as u64;
        if width_minus_one == u64::MAX {
            return Ok(lo.wrapping_add(self.next_u64() as i64));
        }
        let range = width_minus_one + 1;
        let mut m = (self.next_u64() as u128) * (range as u128);
        let mut low_bits = m as u64;
        if low_bits < range {
            let threshold = range.wrapping_neg() % range;
            while low_bits < threshold {
                m = (self.next_u64() as u128) * (range as u128);
                low_bits = m as u64;
            }
        }
        Ok(lo.wrapping_add((m >> 64) as i64))
    }

    /// True with probability `p`.
    pub fn bernoulli(&mut self, p: f64) -> Result<bool, SampleError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(SampleError::InvalidProbability(p));
        }
        Ok(self.u01() < p)
    }

    /// Draws a project size: one uniform draw checked against the cumulative
    /// thresholds in small, medium, large order.
    pub fn size_sample(&mut self, dist: &SizeDistribution) -> Size {
        let u = self.u01();
        if u < dist.small {
            Size::Small
        } else if u < dist.small + dist.medium {
            Size::Medium
        } else {
            Size::Large
        }
    }
}

/// Probabilities of a project being small, medium, or large.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SizeDistribution {
    small: f64,
    medium: f64,
    large: f64,
}

impl SizeDistribution {
    /// Validates that each probability lies in `[0, 1]` and that they sum
    /// to 1 within `1e-9`.
    pub fn new(small: f64, medium: f64, large: f64) -> Result<SizeDistribution, SampleError> {
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        if !in_unit(small) || !in_unit(medium) || !in_unit(large) {
            return Err(SampleError::InvalidDistribution(small, medium, large));
        }
        if (small + medium + large - 1.0).abs() > 1e-9 {
            return Err(SampleError::InvalidDistribution(small, medium, large));
        }
        Ok(SizeDistribution { small, medium, large })
    }

    pub fn probability(&self, size: Size) -> f64 {
        match size {
            Size::Small => self.small,
            Size::Medium => self.medium,
            Size::Large => self.large,
        }
    }
}
