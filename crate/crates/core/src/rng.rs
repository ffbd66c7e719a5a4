//! Deterministic random streams and binomial shot sampling.
//!
//! Every stream is a ChaCha8 generator keyed by a `(seed, purpose)` pair, so
//! a run's randomness does not depend on scheduling or on how many other
//! streams were consumed before it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// What a stream is used for. The discriminant selects the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    TeacherParams = 1,
    Inputs = 2,
    StudentInit = 3,
    Shots = 4,
}

pub fn stream(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// Draws binomial measurement outcomes and counts the shots spent.
#[derive(Debug, Clone)]
pub struct ShotSampler<R = ChaCha8Rng> {
    rng: R,
    shots_taken: u64,
}

impl<R: Rng> ShotSampler<R> {
    pub fn new(rng: R) -> Self {
        Self {
            rng,
            shots_taken: 0,
        }
    }

    /// Unclipped estimate `k / shots` with `k ~ Binomial(shots, p)`.
    pub fn estimate(&mut self, p: f64, shots: u32) -> Result<f64> {
        if shots == 0 {
            return Err(Error::config("shots", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::numeric(format!("probability {p} outside [0, 1]")));
        }
        let dist = Binomial::new(u64::from(shots), p)
            .map_err(|e| Error::numeric(format!("binomial({shots}, {p}): {e}")))?;
        let k = dist.sample(&mut self.rng);
        self.shots_taken += u64::from(shots);
        Ok(k as f64 / f64::from(shots))
    }

    pub fn shots_taken(&self) -> u64 {
        self.shots_taken
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }
}
