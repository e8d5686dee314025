//! MCMC fitting of `y(s) = x(s)'beta + w(s) + eps(s)` with an NNGP or
//! cNNGP prior on `w`.
//!
//! Each iteration runs Gibbs updates for `beta` and `tau2`, a joint
//! random-walk Metropolis update for `(sigma2, phi)` and one sequential
//! Gibbs sweep over `w`.

mod chain;
mod priors;
mod sampler;

pub use chain::{ParamDraw, PhaseTimings, PosteriorChain, WDraw};
pub use priors::{phi_prior_from_distances, InverseGamma, PriorSpec, UniformPrior};
pub use sampler::{ols, run_chain, ChainState, Sampler};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Run-length, proposal and storage settings of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th post-burn-in draw.
    pub thin: usize,
    pub seed: u64,
    /// Random-walk scales for `log sigma2` and the logit-rescaled `phi`.
    pub mh_step: [f64; 2],
    /// Robbins-Monro adaptation of `mh_step` during burn-in.
    pub adapt: bool,
    pub target_accept: f64,
    /// Store `w` on every `w_thin`-th kept draw; 0 disables `w` storage.
    pub w_thin: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            burn_in: 5_000,
            thin: 1,
            seed: 1,
            mh_step: [0.1, 0.1],
            adapt: true,
            target_accept: 0.35,
            w_thin: 10,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be positive"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::invalid("burn_in must be smaller than iterations"));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin must be positive"));
        }
        if self.mh_step.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::invalid("mh_step entries must be finite and non-negative"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::invalid("target_accept must lie in (0, 1)"));
        }
        Ok(())
    }
}
