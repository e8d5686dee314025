//! Posterior-predictive draws of `w*` and `y*` at new locations.
//!
//! Every retained draw conditions on the `m` nearest observed locations (all
//! of them are eligible, not only predecessors) with factors computed
//! exactly for that location; no clustering is used here.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceParams, DistanceMatrix, Kernel};
use crate::evaluation::quantile_sorted;
use crate::factors::location_factors;
use crate::geometry::{DesignMatrix, KdTree, Point2};
use crate::inference::PosteriorChain;
use crate::linalg::dot;
use crate::{Error, Real, Result, SpatialDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictionSettings {
    /// Observed neighbors per prediction location.
    pub m: usize,
    /// Use every `thin`-th stored `w` draw.
    pub thin: usize,
    pub seed: u64,
    pub lower: f64,
    pub upper: f64,
    pub keep_draws: bool,
}

impl Default for PredictionSettings {
    fn default() -> Self {
        Self {
            m: 10,
            thin: 1,
            seed: 1,
            lower: 0.025,
            upper: 0.975,
            keep_draws: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult<T> {
    pub mean: Vec<T>,
    pub sd: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    /// Posterior-predictive mean of the spatial effect.
    pub w_mean: Vec<T>,
    /// `y*` draws per location, when requested.
    pub draws: Option<Vec<Vec<T>>>,
}

impl<T> PredictionResult<T> {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// `(B_t, F_t)` for target `t` conditioned on the given observed locations.
pub fn prediction_factors<T: Real>(
    coords: &[Point2<T>],
    target: Point2<T>,
    neighbors: &[usize],
    params: &CovarianceParams<T>,
) -> Result<(Vec<T>, T)> {
    let pts: Vec<Point2<T>> = std::iter::once(target)
        .chain(neighbors.iter().map(|&j| coords[j]))
        .collect();
    location_factors(&DistanceMatrix::from_points(&pts), params, Kernel::Exponential)
}

struct Site<T> {
    neighbors: Vec<usize>,
    distances: DistanceMatrix<T>,
}

pub fn predict<T: Real>(
    dataset: &SpatialDataset<T>,
    coords_new: &[Point2<T>],
    x_new: &DesignMatrix<T>,
    chain: &PosteriorChain<T>,
    settings: &PredictionSettings,
) -> Result<PredictionResult<T>> {
    let n = dataset.len();
    if chain.w_draws.is_empty() {
        return Err(Error::invalid("chain has no stored w draws"));
    }
    if settings.m == 0 || settings.m > n {
        return Err(Error::invalid(format!("prediction m must lie in 1..={n}")));
    }
    if settings.thin == 0 {
        return Err(Error::invalid("thin must be positive"));
    }
    if !(0.0 <= settings.lower && settings.lower < settings.upper && settings.upper <= 1.0) {
        return Err(Error::invalid("quantile levels must satisfy 0 <= lower < upper <= 1"));
    }
    if x_new.rows() != coords_new.len() || x_new.cols() != dataset.n_covariates() {
        return Err(Error::invalid("new design matrix does not match locations/covariates"));
    }
    if let Some(i) = coords_new.iter().position(|p| !p.is_finite()) {
        return Err(Error::invalid(format!("prediction location {i} is not finite")));
    }
    if chain.w_draws.iter().any(|d| d.w.len() != n || d.draw >= chain.draws.len()) {
        return Err(Error::invalid("chain does not belong to this data set"));
    }

    let coords = dataset.coords();
    let tree = KdTree::new(coords);
    let sites: Vec<Site<T>> = coords_new
        .iter()
        .enumerate()
        .map(|(t, &p)| {
            let nn = tree.nearest(p, settings.m);
            if nn[0].dist2 == T::zero() {
                return Err(Error::invalid(format!(
                    "prediction location {t} coincides with observed location {}",
                    nn[0].index
                )));
            }
            let neighbors: Vec<usize> = nn.iter().map(|h| h.index).collect();
            let pts: Vec<Point2<T>> = std::iter::once(p)
                .chain(neighbors.iter().map(|&j| coords[j]))
                .collect();
            Ok(Site {
                neighbors,
                distances: DistanceMatrix::from_points(&pts),
            })
        })
        .collect::<Result<_>>()?;

    let retained: Vec<_> = chain.w_draws.iter().step_by(settings.thin).collect();
    let per_site = sites
        .par_iter()
        .enumerate()
        .map(|(t, site)| {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            rng.set_stream(t as u64);
            let xt = x_new.row(t);
            let mut ys = Vec::with_capacity(retained.len());
            let mut w_sum = T::zero();
            for wd in &retained {
                let p = &chain.draws[wd.draw];
                let theta = CovarianceParams::new(p.sigma2, p.phi)?;
                let (b, f) = location_factors(&site.distances, &theta, Kernel::Exponential)?;
                let mu = site.neighbors.iter().zip(&b).fold(T::zero(), |a, (&j, &bj)| a + bj * wd.w[j]);
                let w = mu + f.sqrt() * T::sample_standard_normal(&mut rng);
                w_sum += w;
                ys.push(dot(xt, &p.beta) + w + p.tau2.sqrt() * T::sample_standard_normal(&mut rng));
            }
            Ok((ys, w_sum))
        })
        .collect::<Result<Vec<_>>>()?;

    let s = T::from_usize(retained.len()).unwrap();
    let mut out = PredictionResult {
        mean: Vec::with_capacity(sites.len()),
        sd: Vec::with_capacity(sites.len()),
        lower: Vec::with_capacity(sites.len()),
        upper: Vec::with_capacity(sites.len()),
        w_mean: Vec::with_capacity(sites.len()),
        draws: settings.keep_draws.then(Vec::new),
    };
    for (ys, w_sum) in per_site {
        let mean = ys.iter().copied().sum::<T>() / s;
        let var = if ys.len() > 1 {
            ys.iter().map(|y| (*y - mean) * (*y - mean)).sum::<T>() / (s - T::one())
        } else {
            T::zero()
        };
        let mut sorted = ys.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.mean.push(mean);
        out.sd.push(var.sqrt());
        out.lower.push(quantile_sorted(&sorted, settings.lower));
        out.upper.push(quantile_sorted(&sorted, settings.upper));
        out.w_mean.push(w_sum / s);
        if let Some(d) = out.draws.as_mut() {
            d.push(ys);
        }
    }
    Ok(out)
}
