use serde::{Deserialize, Serialize};

use crate::factors::FactorMode;
use crate::{Error, Real, Result};

/// One stored draw of the non-spatial parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDraw<T> {
    pub iteration: usize,
    pub beta: Vec<T>,
    pub sigma2: T,
    pub phi: T,
    pub tau2: T,
}

/// Spatial effects at the original location indices, tied to `draws[draw]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WDraw<T> {
    pub draw: usize,
    pub w: Vec<T>,
}

/// Wall-clock seconds spent in each update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub beta: f64,
    pub tau2: f64,
    pub theta: f64,
    pub w: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorChain<T> {
    pub n_beta: usize,
    pub draws: Vec<ParamDraw<T>>,
    pub w_draws: Vec<WDraw<T>>,
    /// Metropolis acceptance after burn-in.
    pub acceptance_rate: f64,
    pub burn_in_acceptance: f64,
    /// Proposal scales after adaptation.
    pub mh_step: [f64; 2],
    pub timings: PhaseTimings,
    pub proposals: usize,
    pub cholesky_count: usize,
    pub mode: FactorMode,
    pub n_units: usize,
}

impl<T: Real> PosteriorChain<T> {
    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Small Cholesky factorizations per evaluated proposal.
    pub fn cholesky_per_proposal(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.cholesky_count as f64 / self.proposals as f64
        }
    }

    /// Samples of one scalar parameter by name: `beta<k>`, `sigma2`, `phi`
    /// or `tau2`.
    #[allow(clippy::type_complexity)]
    pub fn parameter(&self, name: &str) -> Result<Vec<T>> {
        let pick: Box<dyn Fn(&ParamDraw<T>) -> T> = match name {
            "sigma2" => Box::new(|d| d.sigma2),
            "phi" => Box::new(|d| d.phi),
            "tau2" => Box::new(|d| d.tau2),
            _ => {
                let k: usize = name
                    .strip_prefix("beta")
                    .and_then(|s| s.parse().ok())
                    .filter(|&k| k < self.n_beta)
                    .ok_or_else(|| Error::invalid(format!("unknown parameter {name}")))?;
                Box::new(move |d| d.beta[k])
            }
        };
        Ok(self.draws.iter().map(pick).collect())
    }

    pub fn parameter_names(&self) -> Vec<String> {
        (0..self.n_beta)
            .map(|k| format!("beta{k}"))
            .chain(["sigma2", "phi", "tau2"].map(String::from))
            .collect()
    }

    /// True when draws and stored `w` are identical (timings ignored).
    pub fn same_draws(&self, other: &Self) -> bool {
        self.draws == other.draws && self.w_draws == other.w_draws
    }
}
