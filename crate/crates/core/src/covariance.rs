//! Covariance kernels and covariance matrices built from distance matrices.

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::{Error, Real, Result};

/// Spatial covariance parameters: process variance and decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceParams<T> {
    pub sigma2: T,
    pub phi: T,
}

impl<T: Real> CovarianceParams<T> {
    pub fn new(sigma2: T, phi: T) -> Result<Self> {
        if !(sigma2 > T::zero() && sigma2.is_finite()) {
            return Err(Error::invalid(format!("sigma2 must be positive, got {sigma2}")));
        }
        if !(phi > T::zero() && phi.is_finite()) {
            return Err(Error::invalid(format!("phi must be positive, got {phi}")));
        }
        Ok(Self { sigma2, phi })
    }
}

/// Measurement-error variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams<T> {
    pub tau2: T,
}

impl<T: Real> NoiseParams<T> {
    pub fn new(tau2: T) -> Result<Self> {
        if !(tau2 > T::zero() && tau2.is_finite()) {
            return Err(Error::invalid(format!("tau2 must be positive, got {tau2}")));
        }
        Ok(Self { tau2 })
    }
}

/// Isotropic stationary covariance kernels. Only the exponential kernel is
/// provided.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    #[default]
    Exponential,
}

impl Kernel {
    /// Covariance at distance `d`, which must be non-negative.
    #[inline]
    pub fn eval<T: Real>(self, d: T, params: &CovarianceParams<T>) -> T {
        match self {
            Kernel::Exponential => params.sigma2 * (-params.phi * d).exp(),
        }
    }

    /// Distance at which the correlation drops to 0.1.
    pub fn effective_range<T: Real>(self, phi: T) -> T {
        match self {
            Kernel::Exponential => T::lit(10.0).ln() / phi,
        }
    }
}

/// `sigma2 * exp(-phi * d)`.
pub fn exponential_cov<T: Real>(d: T, params: &CovarianceParams<T>) -> Result<T> {
    if !(d >= T::zero()) {
        return Err(Error::invalid(format!("distance must be non-negative, got {d}")));
    }
    Ok(Kernel::Exponential.eval(d, params))
}

/// Symmetric distance matrix with zero diagonal, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix<T> {
    dim: usize,
    entries: Vec<T>,
}

impl<T: Real> DistanceMatrix<T> {
    pub fn new(dim: usize, entries: Vec<T>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::invalid("distance matrix must be a non-empty square"));
        }
        for i in 0..dim {
            if entries[i * dim + i] != T::zero() {
                return Err(Error::invalid("distance matrix diagonal must be zero"));
            }
            for j in 0..i {
                let v = entries[i * dim + j];
                if !(v >= T::zero()) || !v.is_finite() || v != entries[j * dim + i] {
                    return Err(Error::invalid(
                        "distance matrix must be symmetric, finite and non-negative",
                    ));
                }
            }
        }
        Ok(Self { dim, entries })
    }

    /// Pairwise distances among `points`, in the given order.
    pub fn from_points(points: &[Point2<T>]) -> Self {
        let dim = points.len();
        let mut entries = vec![T::zero(); dim * dim];
        for i in 0..dim {
            for j in 0..i {
                let d = points[i].distance(&points[j]);
                entries[i * dim + j] = d;
                entries[j * dim + i] = d;
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.entries
    }

    /// Strict lower triangle in row-major order: (1,0), (2,0), (2,1), ...
    pub fn lower_triangle(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.dim * (self.dim - 1) / 2);
        for i in 1..self.dim {
            out.extend_from_slice(&self.entries[i * self.dim..i * self.dim + i]);
        }
        out
    }
}

/// Dense covariance matrix `C[i][j] = k(D[i][j])`, row-major.
pub fn cov_from_distances<T: Real>(
    d: &DistanceMatrix<T>,
    params: &CovarianceParams<T>,
    kernel: Kernel,
) -> Vec<T> {
    let n = d.dim();
    let mut c = vec![T::zero(); n * n];
    for i in 0..n {
        c[i * n + i] = params.sigma2;
        for j in 0..i {
            let v = kernel.eval(d.get(i, j), params);
            c[i * n + j] = v;
            c[j * n + i] = v;
        }
    }
    c
}
