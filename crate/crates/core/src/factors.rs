//! Kriging weights `B` and conditional variances `F`, per location (NNGP)
//! or per cluster (cNNGP), and the approximate joint density of `w`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterModel;
use crate::covariance::{CovarianceParams, DistanceMatrix, Kernel};
use crate::geometry::{NeighborGraph, Point2};
use crate::linalg::{cholesky_in_place, cholesky_solve_in_place, dot};
use crate::{Error, Real, Result};

/// Relative diagonal jitter applied once when a neighbor block fails to factor.
pub const JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorMode {
    PerLocation,
    PerCluster,
}

/// Distance matrix `D` over `[s, n1, ..., nk]` for ordered location `i`.
pub fn neighborhood_distances<T: Real>(
    graph: &NeighborGraph,
    coords: &[Point2<T>],
    i: usize,
) -> DistanceMatrix<T> {
    let pts: Vec<Point2<T>> = std::iter::once(i)
        .chain(graph.neighbors(i).iter().copied())
        .map(|j| graph.point(coords, j))
        .collect();
    DistanceMatrix::from_points(&pts)
}

/// Scratch buffers reused across units.
struct Workspace<T> {
    block: Vec<T>,
    cross: Vec<T>,
}

impl<T: Real> Workspace<T> {
    fn new(m: usize) -> Self {
        Self {
            block: Vec::with_capacity(m * m),
            cross: Vec::with_capacity(m),
        }
    }

    /// Writes `B` into `weights` and returns `F`, or `None` if the neighbor
    /// block is numerically singular even after one jitter retry.
    fn solve(
        &mut self,
        d: &DistanceMatrix<T>,
        params: &CovarianceParams<T>,
        kernel: Kernel,
        weights: &mut [T],
    ) -> Option<T> {
        let k = d.dim() - 1;
        if k == 0 {
            return Some(params.sigma2);
        }
        for attempt in 0..2 {
            self.block.clear();
            self.cross.clear();
            for a in 1..=k {
                self.cross.push(kernel.eval(d.get(0, a), params));
                for b in 1..=k {
                    self.block.push(if a == b {
                        params.sigma2
                    } else {
                        kernel.eval(d.get(a, b), params)
                    });
                }
            }
            if attempt == 1 {
                let eps = T::lit(JITTER) * params.sigma2;
                for a in 0..k {
                    self.block[a * k + a] += eps;
                }
            }
            if cholesky_in_place(&mut self.block, k).is_err() {
                continue;
            }
            weights[..k].copy_from_slice(&self.cross);
            cholesky_solve_in_place(&self.block, k, &mut weights[..k]);
            let f = params.sigma2 - dot(&weights[..k], &self.cross);
            if f > T::zero() && f.is_finite() {
                return Some(f);
            }
        }
        None
    }
}

/// Kriging weights and conditional variance for one neighborhood.
///
/// Row/column 0 of `d` is the target location; the remaining rows are its
/// neighbors. Solves with a Cholesky factorization of the neighbor block.
pub fn location_factors<T: Real>(
    d: &DistanceMatrix<T>,
    params: &CovarianceParams<T>,
    kernel: Kernel,
) -> Result<(Vec<T>, T)> {
    let k = d.dim() - 1;
    let mut ws = Workspace::new(k);
    let mut b = vec![T::zero(); k];
    let f = ws
        .solve(d, params, kernel, &mut b)
        .ok_or(Error::NotPositiveDefinite { unit: 0 })?;
    Ok((b, f))
}

/// Parameter-independent description of the factor units: one distance
/// matrix per unit and the unit used by every ordered location.
#[derive(Debug, Clone)]
pub struct FactorLayout<T> {
    mode: FactorMode,
    m: usize,
    kernel: Kernel,
    unit_distances: Vec<DistanceMatrix<T>>,
    unit_of: Arc<[usize]>,
}

impl<T: Real> FactorLayout<T> {
    pub fn per_location(graph: &NeighborGraph, coords: &[Point2<T>]) -> Self {
        let unit_distances = (0..graph.len())
            .map(|i| neighborhood_distances(graph, coords, i))
            .collect();
        Self {
            mode: FactorMode::PerLocation,
            m: graph.m(),
            kernel: Kernel::Exponential,
            unit_distances,
            unit_of: (0..graph.len()).collect(),
        }
    }

    /// Singleton units for the first `m` ordered locations, then one unit per
    /// cluster using the cluster's representative distance matrix.
    pub fn per_cluster(
        graph: &NeighborGraph,
        coords: &[Point2<T>],
        clusters: &ClusterModel<T>,
    ) -> Result<Self> {
        let m = graph.m();
        if clusters.m() != m || clusters.labels().len() != graph.len() {
            return Err(Error::invalid(
                "cluster model was built for a different neighbor graph",
            ));
        }
        let singletons = m.min(graph.len());
        let mut unit_distances: Vec<DistanceMatrix<T>> = (0..singletons)
            .map(|i| neighborhood_distances(graph, coords, i))
            .collect();
        unit_distances.extend(clusters.representatives().iter().cloned());
        let unit_of: Arc<[usize]> = clusters.labels().iter().map(|&l| l - 1).collect();
        Ok(Self {
            mode: FactorMode::PerCluster,
            m,
            kernel: Kernel::Exponential,
            unit_distances,
            unit_of,
        })
    }

    pub fn new(
        graph: &NeighborGraph,
        coords: &[Point2<T>],
        clusters: Option<&ClusterModel<T>>,
    ) -> Result<Self> {
        match clusters {
            None => Ok(Self::per_location(graph, coords)),
            Some(c) => Self::per_cluster(graph, coords, c),
        }
    }

    pub fn mode(&self) -> FactorMode {
        self.mode
    }

    pub fn n_units(&self) -> usize {
        self.unit_distances.len()
    }

    pub fn unit_of(&self) -> &[usize] {
        &self.unit_of
    }

    /// Computes every unit's `(B, F)`: one small Cholesky per unit.
    pub fn build(&self, params: &CovarianceParams<T>) -> Result<FactorSet<T>> {
        let units = self.n_units();
        let m = self.m;
        let mut ws = Workspace::new(m);
        let mut weights = vec![T::zero(); units * m];
        let mut counts = Vec::with_capacity(units);
        let mut variances = Vec::with_capacity(units);
        for (u, d) in self.unit_distances.iter().enumerate() {
            let slot = &mut weights[u * m..(u + 1) * m];
            let f = ws
                .solve(d, params, self.kernel, slot)
                .ok_or(Error::NotPositiveDefinite { unit: u })?;
            counts.push(d.dim() - 1);
            variances.push(f);
        }
        Ok(FactorSet {
            mode: self.mode,
            m,
            params: *params,
            weights,
            counts,
            variances,
            unit_of: Arc::clone(&self.unit_of),
            cholesky_count: units,
        })
    }
}

/// Factors for one value of the covariance parameters. Flat storage:
/// `m` weight slots and one variance per unit.
#[derive(Debug, Clone)]
pub struct FactorSet<T> {
    mode: FactorMode,
    m: usize,
    params: CovarianceParams<T>,
    weights: Vec<T>,
    counts: Vec<usize>,
    variances: Vec<T>,
    unit_of: Arc<[usize]>,
    cholesky_count: usize,
}

impl<T: Real> FactorSet<T> {
    pub fn mode(&self) -> FactorMode {
        self.mode
    }

    pub fn params(&self) -> &CovarianceParams<T> {
        &self.params
    }

    pub fn n_units(&self) -> usize {
        self.variances.len()
    }

    /// Number of small Cholesky factorizations performed to build this set.
    pub fn cholesky_count(&self) -> usize {
        self.cholesky_count
    }

    #[inline]
    pub fn unit_of(&self, i: usize) -> usize {
        self.unit_of[i]
    }

    #[inline]
    pub fn weights(&self, unit: usize) -> &[T] {
        &self.weights[unit * self.m..unit * self.m + self.counts[unit]]
    }

    #[inline]
    pub fn variance(&self, unit: usize) -> T {
        self.variances[unit]
    }

    /// Returns a copy with every conditional variance multiplied by `c`.
    pub fn scale_variances(&self, c: T) -> Self {
        let mut out = self.clone();
        out.variances.iter_mut().for_each(|f| *f *= c);
        out
    }

    /// Conditional mean `B w_N(i)` of ordered location `i`.
    #[inline]
    pub fn conditional_mean(&self, graph: &NeighborGraph, w: &[T], i: usize) -> T {
        let b = self.weights(self.unit_of(i));
        graph
            .neighbors(i)
            .iter()
            .zip(b)
            .fold(T::zero(), |acc, (&j, &bj)| acc + bj * w[j])
    }
}

/// Builds the factor set directly; see [`FactorLayout`] for repeated builds.
pub fn build_factorset<T: Real>(
    graph: &NeighborGraph,
    coords: &[Point2<T>],
    params: &CovarianceParams<T>,
    clusters: Option<&ClusterModel<T>>,
) -> Result<FactorSet<T>> {
    FactorLayout::new(graph, coords, clusters)?.build(params)
}

/// `sum_i log N(w_i | B_u w_N(i), F_u)` with `w` in ordered positions.
pub fn log_joint_w<T: Real>(factors: &FactorSet<T>, graph: &NeighborGraph, w: &[T]) -> T {
    let half = T::lit(0.5);
    let ln_2pi = T::lit(std::f64::consts::TAU.ln());
    let mut total = T::zero();
    for i in 0..w.len() {
        let f = factors.variance(factors.unit_of(i));
        let r = w[i] - factors.conditional_mean(graph, w, i);
        total -= half * (ln_2pi + f.ln() + r * r / f);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{ClusterModel, ClusterSettings};
    use crate::geometry::{build_neighbor_graph, maxmin_order};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(s: f64, phi: f64) -> CovarianceParams<f64> {
        CovarianceParams::new(s, phi).unwrap()
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point2<f64>> {
        (0..n)
            .map(|_| Point2::new(rng.random::<f64>(), rng.random::<f64>()))
            .collect()
    }

    /// Dense MVN log density via nalgebra, independent of the factor path.
    fn dense_log_density(coords: &[Point2<f64>], order: &[usize], p: &CovarianceParams<f64>, w: &[f64]) -> f64 {
        let n = w.len();
        let c = DMatrix::from_fn(n, n, |i, j| {
            let d = coords[order[i]].distance(&coords[order[j]]);
            p.sigma2 * (-p.phi * d).exp()
        });
        let chol = c.cholesky().unwrap();
        let wv = DVector::from_column_slice(w);
        let z = chol.l().solve_lower_triangular(&wv).unwrap();
        let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        -0.5 * (n as f64 * std::f64::consts::TAU.ln() + logdet + z.norm_squared())
    }

    #[test]
    fn no_neighbors_gives_marginal_variance() {
        let d = DistanceMatrix::new(1, vec![0.0]).unwrap();
        let (b, f) = location_factors(&d, &params(1.7, 3.0), Kernel::Exponential).unwrap();
        assert!(b.is_empty());
        assert_eq!(f, 1.7);
    }

    #[test]
    fn one_neighbor_conditional_gaussian() {
        let phi = 2.0;
        let dist = 2f64.ln() / phi; // correlation 0.5
        let d = DistanceMatrix::new(2, vec![0.0, dist, dist, 0.0]).unwrap();
        let (b, f) = location_factors(&d, &params(1.0, phi), Kernel::Exponential).unwrap();
        assert!((b[0] - 0.5).abs() < 1e-12);
        assert!((f - 0.75).abs() < 1e-12);
    }

    #[test]
    fn equilateral_neighbors_share_weight() {
        // target and two neighbors on an equilateral triangle of side 1:
        // rho = e^-phi, B = rho / (1 + rho) each, F = 1 - 2 rho^2 / (1 + rho)
        let h = 3f64.sqrt() / 2.0;
        let d = DistanceMatrix::from_points(&[
            Point2::new(0.5, h),
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
        ]);
        let phi = 1.3f64;
        let rho = (-phi).exp();
        let (b, f) = location_factors(&d, &params(1.0, phi), Kernel::Exponential).unwrap();
        assert!((b[0] - b[1]).abs() < 1e-14);
        assert!((b[0] - rho / (1.0 + rho)).abs() < 1e-12);
        assert!((f - (1.0 - 2.0 * rho * rho / (1.0 + rho))).abs() < 1e-12);
    }

    #[test]
    fn coincident_neighbors_fail_with_unit() {
        // in f32 the relative jitter vanishes below machine precision
        let d = DistanceMatrix::from_points(&[
            Point2::new(0.5f32, 0.5),
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 0.0),
        ]);
        assert!(matches!(
            location_factors(&d, &CovarianceParams::new(1.0f32, 1.0).unwrap(), Kernel::Exponential),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn single_location_graph() {
        let coords = vec![Point2::new(0.3, 0.3)];
        let g = NeighborGraph::from_parts(1, vec![0], vec![vec![]]).unwrap();
        let fs = build_factorset(&g, &coords, &params(2.0, 1.0), None).unwrap();
        assert_eq!(fs.n_units(), 1);
        assert!(fs.weights(0).is_empty());
        assert_eq!(fs.variance(0), 2.0);
        let lj = log_joint_w(&fs, &g, &[0.0]);
        let want = -0.5 * std::f64::consts::TAU.ln() - 0.5 * 2f64.ln();
        assert!((lj - want).abs() < 1e-14);
        let unit = build_factorset(&g, &coords, &params(1.0, 1.0), None).unwrap();
        assert!((log_joint_w(&unit, &g, &[0.0]) + 0.5 * std::f64::consts::TAU.ln()).abs() < 1e-15);
    }

    #[test]
    fn doubling_variances_shifts_density_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let coords = random_points(&mut rng, 40);
        let ord = maxmin_order(&coords).unwrap();
        let g = build_neighbor_graph(&coords, &ord, 5).unwrap();
        let fs = build_factorset(&g, &coords, &params(1.0, 5.0), None).unwrap();
        let w = vec![0.0; 40];
        let diff = log_joint_w(&fs, &g, &w) - log_joint_w(&fs.scale_variances(2.0), &g, &w);
        assert!((diff - 0.5 * 40.0 * 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn full_conditioning_matches_dense_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2usize, 3, 5, 8] {
            let coords = random_points(&mut rng, n);
            let ord = maxmin_order(&coords).unwrap();
            let g = build_neighbor_graph(&coords, &ord, n - 1).unwrap();
            let p = params(rng.random_range(0.2..3.0), rng.random_range(1.0..20.0));
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let fs = build_factorset(&g, &coords, &p, None).unwrap();
            let got = log_joint_w(&fs, &g, &w);
            let want = dense_log_density(&coords, &ord, &p, &w);
            assert!((got - want).abs() < 1e-8, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn conditional_variance_bounded_and_monotone_in_neighbors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let pts = random_points(&mut rng, 9);
            let p = params(1.3, rng.random_range(1.0..30.0));
            let mut prev = f64::INFINITY;
            for k in 0..9 {
                let d = DistanceMatrix::from_points(&pts[..=k]);
                let (_, f) = location_factors(&d, &p, Kernel::Exponential).unwrap();
                assert!(f > 0.0 && f <= p.sigma2 + 1e-15);
                assert!(f <= prev + 1e-12);
                prev = f;
            }
        }
    }

    #[test]
    fn radius_zero_clusters_reproduce_location_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let coords = random_points(&mut rng, 150);
        let ord = maxmin_order(&coords).unwrap();
        let g = build_neighbor_graph(&coords, &ord, 6).unwrap();
        let settings = ClusterSettings {
            radius: 0.0,
            ..ClusterSettings::default()
        };
        let cm = ClusterModel::fit(&g, &coords, &settings).unwrap();
        assert_eq!(cm.kappa(), 150 - 6);
        let p = params(0.9, 7.0);
        let per_loc = build_factorset(&g, &coords, &p, None).unwrap();
        let per_cl = build_factorset(&g, &coords, &p, Some(&cm)).unwrap();
        assert_eq!(per_cl.cholesky_count(), 6 + cm.kappa());
        assert_eq!(per_loc.cholesky_count(), 150);
        for i in 0..150 {
            let (a, b) = (per_loc.unit_of(i), per_cl.unit_of(i));
            assert_eq!(per_loc.weights(a), per_cl.weights(b));
            assert_eq!(per_loc.variance(a), per_cl.variance(b));
        }
    }

    #[test]
    fn generic_over_f32() {
        let d = DistanceMatrix::<f32>::from_points(&[
            Point2::new(0.0, 0.0),
            Point2::new(0.1, 0.0),
            Point2::new(0.0, 0.2),
        ]);
        let p = CovarianceParams::new(1.0f32, 3.0).unwrap();
        let (b32, f32v) = location_factors(&d, &p, Kernel::Exponential).unwrap();
        let d64 = DistanceMatrix::<f64>::from_points(&[
            Point2::new(0.0, 0.0),
            Point2::new(0.1, 0.0),
            Point2::new(0.0, 0.2),
        ]);
        let (b64, f64v) = location_factors(&d64, &params(1.0, 3.0), Kernel::Exponential).unwrap();
        assert!((f64::from(f32v) - f64v).abs() < 1e-5);
        for (a, b) in b32.iter().zip(&b64) {
            assert!((f64::from(*a) - b).abs() < 1e-5);
        }
    }
}
