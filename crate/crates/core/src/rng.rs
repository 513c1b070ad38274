//! Reproducible per-path random streams.
//!
//! Every Monte Carlo path owns a [`RngStream`] identified by `(seed, stream_id)`.
//! The stream is realised as two ChaCha8 sequences sharing the same key and
//! stream id: the variance sub-stream starts at word 0 and the orthogonal
//! sub-stream (Gaussians driving the price's independent Brownian part) starts
//! at word 2^64. Toggling the price layer therefore never shifts the draws
//! consumed by the variance scheme, and path `i` does not depend on which
//! worker simulates it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Word offset of the orthogonal sub-stream inside a path's ChaCha stream.
const ORTHOGONAL_WORD_OFFSET: u128 = 1 << 64;

/// Identity of a random stream: a global seed plus a path index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Instantiates the generators for this stream, positioned at the start.
    pub fn open(&self) -> PathRng {
        let mut variance = ChaCha8Rng::seed_from_u64(self.seed);
        variance.set_stream(self.stream_id);
        let mut orthogonal = variance.clone();
        orthogonal.set_word_pos(ORTHOGONAL_WORD_OFFSET);
        PathRng {
            variance,
            orthogonal,
        }
    }
}

/// The pair of draws consumed by every variance step: one standard Gaussian
/// and one uniform on `[0, 1)`, drawn in that order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDraws {
    pub gaussian: f64,
    pub uniform: f64,
}

/// Live generator state for a single path.
#[derive(Clone, Debug)]
pub struct PathRng {
    variance: ChaCha8Rng,
    orthogonal: ChaCha8Rng,
}

impl PathRng {
    /// Draws for the next variance step.
    #[inline]
    pub fn step_draws(&mut self) -> StepDraws {
        let gaussian = self.variance.sample(StandardNormal);
        let uniform = self.variance.random::<f64>();
        StepDraws { gaussian, uniform }
    }

    /// Next Gaussian from the orthogonal sub-stream.
    #[inline]
    pub fn orthogonal_gaussian(&mut self) -> f64 {
        self.orthogonal.sample(StandardNormal)
    }

    /// Direct access to the variance sub-stream, for samplers used outside a
    /// path simulation.
    pub fn variance_rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.variance
    }
}
