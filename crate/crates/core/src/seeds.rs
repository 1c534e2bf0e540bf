//! GHZ-class witness and sampling of seed-block noise parameters.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier recorded in dataset metadata for [`sample_seed_params`].
pub const SAMPLER_ID: &str = "uniform-rejection-unit-square/v1";
/// Uniform draws consumed per rejection attempt (alpha, then beta).
pub const DRAWS_PER_ATTEMPT: usize = 2;
pub const MAX_ATTEMPTS: usize = 1_000_000;

/// Mixing weights of a seed block: `α` on the dephased part, `β` on white noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedParams {
    alpha: f64,
    beta: f64,
}

impl SeedParams {
    /// Checks `α, β ∈ [0, 1]` and `α + β <= 1`. The witness condition is a
    /// property of the block size and is checked by [`SeedParams::for_block`].
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { alpha, beta };
        p.validate_domain()?;
        Ok(p)
    }

    /// Like [`SeedParams::new`] but also requires a negative witness value.
    pub fn for_block(block: usize, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self::new(alpha, beta)?;
        let w = witness_value(block, alpha, beta);
        if w >= 0.0 {
            return Err(Error::Parameter(format!(
                "(α, β) = ({alpha}, {beta}) has witness value {w} >= 0 for a {block}-qubit block"
            )));
        }
        Ok(p)
    }

    pub(crate) fn validate_domain(&self) -> Result<()> {
        let Self { alpha, beta } = *self;
        let unit = 0.0..=1.0;
        if !unit.contains(&alpha) || !unit.contains(&beta) || alpha + beta > 1.0 {
            return Err(Error::Parameter(format!(
                "(α, β) = ({alpha}, {beta}) is not a convex weight pair"
            )));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Weight `1 - α - β` on the GHZ projector.
    pub fn coherent_weight(&self) -> f64 {
        1.0 - self.alpha - self.beta
    }
}

/// `Tr[W_G ρ] = (α - 1)/2 + (1 - 2^-n) β`; negative means the block is GHZ-class.
pub fn witness_value(n: usize, alpha: f64, beta: f64) -> f64 {
    0.5 * (alpha - 1.0) + (1.0 - 0.5f64.powi(n as i32)) * beta
}

/// Uniform sample from `{α, β >= 0, α + β <= 1, witness < 0}` by rejection
/// from the unit square.
pub fn sample_seed_params<R: Rng + ?Sized>(block: usize, rng: &mut R) -> Result<SeedParams> {
    sample_with_attempts(block, rng).map(|(p, _)| p)
}

/// [`sample_seed_params`] that also reports how many attempts were used.
pub fn sample_with_attempts<R: Rng + ?Sized>(block: usize, rng: &mut R) -> Result<(SeedParams, usize)> {
    for attempt in 1..=MAX_ATTEMPTS {
        let alpha: f64 = rng.random();
        let beta: f64 = rng.random();
        if alpha + beta <= 1.0 && witness_value(block, alpha, beta) < 0.0 {
            return Ok((SeedParams { alpha, beta }, attempt));
        }
    }
    Err(Error::Sampling {
        attempts: MAX_ATTEMPTS,
    })
}
