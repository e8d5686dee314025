use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformPrior<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Real> UniformPrior<T> {
    pub fn mean(&self) -> T {
        (self.lower + self.upper) * T::lit(0.5)
    }

    pub fn contains(&self, x: T) -> bool {
        x > self.lower && x < self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseGamma<T> {
    pub shape: T,
    pub scale: T,
}

impl<T: Real> InverseGamma<T> {
    /// Log density up to the normalizing constant.
    #[inline]
    pub fn log_kernel(&self, x: T) -> T {
        -(self.shape + T::one()) * x.ln() - self.scale / x
    }

    pub fn mean(&self) -> Option<T> {
        (self.shape > T::one()).then(|| self.scale / (self.shape - T::one()))
    }

    pub fn variance(&self) -> Option<T> {
        let two = T::lit(2.0);
        (self.shape > two).then(|| {
            let a1 = self.shape - T::one();
            self.scale * self.scale / (a1 * a1 * (self.shape - two))
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.scale / T::sample_gamma(self.shape, rng)
    }
}

/// Priors: uniform on `phi`, inverse-gamma on `sigma2` and `tau2`, flat on
/// the regression coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec<T> {
    pub phi: UniformPrior<T>,
    pub sigma2: InverseGamma<T>,
    pub tau2: InverseGamma<T>,
}

impl<T: Real> Default for PriorSpec<T> {
    fn default() -> Self {
        Self {
            phi: UniformPrior {
                lower: T::lit(1.0),
                upper: T::lit(30.0),
            },
            sigma2: InverseGamma {
                shape: T::lit(2.0),
                scale: T::lit(1.0),
            },
            tau2: InverseGamma {
                shape: T::lit(2.0),
                scale: T::lit(0.1),
            },
        }
    }
}

impl<T: Real> PriorSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !(pos(self.phi.lower) && self.phi.lower < self.phi.upper && self.phi.upper.is_finite()) {
            return Err(Error::invalid("phi prior needs 0 < lower < upper"));
        }
        for (name, ig) in [("sigma2", &self.sigma2), ("tau2", &self.tau2)] {
            if !(pos(ig.shape) && pos(ig.scale)) {
                return Err(Error::invalid(format!(
                    "{name} prior shape and scale must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Uniform prior for `phi` with bounds `3 / d_max` and `3 / d_min`, the
/// distances taken over a seeded subsample of at most `subsample` points.
/// Coincident points are skipped when looking for `d_min`.
pub fn phi_prior_from_distances<T: Real>(
    coords: &[Point2<T>],
    subsample: usize,
    seed: u64,
) -> Result<UniformPrior<T>> {
    if coords.len() < 2 || subsample < 2 {
        return Err(Error::invalid("need at least two locations"));
    }
    let pts: Vec<Point2<T>> = if coords.len() <= subsample {
        coords.to_vec()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, coords.len(), subsample).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| coords[i]).collect()
    };
    let (mut dmin, mut dmax) = (T::infinity(), T::zero());
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[..i] {
            let d = a.distance_squared(b);
            if d > T::zero() {
                dmin = dmin.min(d);
            }
            dmax = dmax.max(d);
        }
    }
    if !(dmax > T::zero()) {
        return Err(Error::invalid("all sampled locations coincide"));
    }
    let three = T::lit(3.0);
    Ok(UniformPrior {
        lower: three / dmax.sqrt(),
        upper: three / dmin.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn defaults_and_validation() {
        let p = PriorSpec::<f64>::default();
        p.validate().unwrap();
        assert_eq!(p.phi.mean(), 15.5);
        let mut bad = p;
        bad.phi.lower = 31.0;
        assert!(bad.validate().is_err());
        let mut bad = p;
        bad.tau2.scale = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn phi_bounds_from_distances() {
        let two = [Point2::new(0.0f64, 0.0), Point2::new(1.0, 0.0)];
        let p = phi_prior_from_distances(&two, 10, 1).unwrap();
        assert_eq!((p.lower, p.upper), (3.0, 3.0));
        let pts = [Point2::new(0.0f64, 0.0), Point2::new(0.5, 0.0), Point2::new(3.0, 4.0)];
        let p = phi_prior_from_distances(&pts, 10, 1).unwrap();
        assert!((p.lower - 0.6).abs() < 1e-15 && (p.upper - 6.0).abs() < 1e-15);
        assert!(phi_prior_from_distances(&two[..1], 10, 1).is_err());
        let many: Vec<Point2<f64>> = (0..50).map(|i| Point2::new(i as f64, 0.0)).collect();
        let sub = phi_prior_from_distances(&many, 10, 4).unwrap();
        assert!(sub.lower >= 3.0 / 49.0 && sub.upper <= 3.0);
        assert_eq!(sub, phi_prior_from_distances(&many, 10, 4).unwrap());
    }

    #[test]
    fn inverse_gamma_sample_mean() {
        let ig = InverseGamma { shape: 5.0, scale: 2.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let mean = (0..n).map(|_| ig.sample(&mut rng)).sum::<f64>() / n as f64;
        let se = ig.variance().unwrap().sqrt() / (n as f64).sqrt();
        assert!((mean - ig.mean().unwrap()).abs() < 4.0 * se);
    }
}
