//! Principal components of neighbor-distance vectors.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// Centering means plus the leading principal axes.
///
/// `components` is row-major `dims x k`; columns are orthonormal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaReducer<T> {
    means: Vec<T>,
    components: Vec<T>,
    k: usize,
    explained_fraction: f64,
    eigenvalues: Vec<f64>,
}

impl<T: Real> PcaReducer<T> {
    /// Fits on the rows of `rows` and keeps the fewest leading components
    /// explaining at least `variance_threshold` of the total variance.
    ///
    /// Rank-deficient inputs are allowed; `k` never exceeds the rank of the
    /// centered data. Each component's largest-magnitude loading is positive.
    pub fn fit(rows: &[Vec<T>], variance_threshold: f64) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::invalid("PCA needs at least two rows"));
        }
        if !(variance_threshold > 0.0 && variance_threshold <= 1.0) {
            return Err(Error::invalid(format!(
                "variance threshold must lie in (0, 1], got {variance_threshold}"
            )));
        }
        let dims = rows[0].len();
        if rows.iter().any(|r| r.len() != dims) {
            return Err(Error::invalid("PCA rows have unequal length"));
        }
        let n = rows.len();
        let mut means = vec![0.0f64; dims];
        for r in rows {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v.as_f64();
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);

        let mut cov = DMatrix::<f64>::zeros(dims, dims);
        let mut centered = vec![0.0; dims];
        for r in rows {
            for ((c, v), m) in centered.iter_mut().zip(r).zip(&means) {
                *c = v.as_f64() - m;
            }
            for i in 0..dims {
                let ci = centered[i];
                for j in 0..=i {
                    cov[(i, j)] += ci * centered[j];
                }
            }
        }
        for i in 0..dims {
            for j in 0..=i {
                let v = cov[(i, j)] / (n - 1) as f64;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }

        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..dims).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let total: f64 = values.iter().sum();
        let top = values.first().copied().unwrap_or(0.0);
        let rank = values
            .iter()
            .filter(|&&v| v > top * 1e-12 * dims.max(1) as f64 && v > 0.0)
            .count();

        let mut k = 0;
        let mut cum = 0.0;
        if total > 0.0 {
            while k < rank {
                cum += values[k];
                k += 1;
                if cum / total >= variance_threshold - 1e-12 {
                    break;
                }
            }
        }
        let explained_fraction = if total > 0.0 { (cum / total).min(1.0) } else { 1.0 };

        let mut components = vec![T::zero(); dims * k];
        for (c, &src) in order.iter().take(k).enumerate() {
            let col = eig.eigenvectors.column(src);
            let mut lead = 0;
            for i in 1..dims {
                if col[i].abs() > col[lead].abs() {
                    lead = i;
                }
            }
            let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
            for i in 0..dims {
                components[i * k + c] = T::lit(sign * col[i]);
            }
        }

        Ok(Self {
            means: means.into_iter().map(T::lit).collect(),
            components,
            k,
            explained_fraction,
            eigenvalues: values,
        })
    }

    /// Reducer that keeps no components: every vector maps to the empty vector.
    pub fn empty(dims: usize) -> Self {
        Self {
            means: vec![T::zero(); dims],
            components: Vec::new(),
            k: 0,
            explained_fraction: 1.0,
            eigenvalues: vec![0.0; dims],
        }
    }

    pub fn n_components(&self) -> usize {
        self.k
    }

    pub fn dims(&self) -> usize {
        self.means.len()
    }

    pub fn explained_fraction(&self) -> f64 {
        self.explained_fraction
    }

    /// All eigenvalues of the sample covariance, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Loading of input dimension `i` on component `c`.
    pub fn loading(&self, i: usize, c: usize) -> T {
        self.components[i * self.k + c]
    }

    pub fn transform(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.k];
        for (i, (x, m)) in v.iter().zip(&self.means).enumerate() {
            let c = *x - *m;
            let row = &self.components[i * self.k..(i + 1) * self.k];
            for (o, l) in out.iter_mut().zip(row) {
                *o += c * *l;
            }
        }
        out
    }

    pub fn inverse_transform(&self, z: &[T]) -> Vec<T> {
        (0..self.dims())
            .map(|i| {
                let row = &self.components[i * self.k..(i + 1) * self.k];
                self.means[i] + crate::linalg::dot(row, z)
            })
            .collect()
    }
}
