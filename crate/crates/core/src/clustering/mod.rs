//! Clustering of neighborhood distance patterns.
//!
//! Every ordered location with a full neighbor set contributes its vector of
//! pairwise distances among `{s} ∪ N(s)`. The vectors are reduced with PCA,
//! leaders are found on a subsample with the leader algorithm, and every
//! location is then assigned to its nearest leader within the radius.

mod leader;
mod pca;

pub use leader::{leader_cluster, LeaderClustering};
pub use pca::PcaReducer;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::covariance::DistanceMatrix;
use crate::factors::neighborhood_distances;
use crate::geometry::{NeighborGraph, Point2};
use crate::{Error, Real, Result};

use leader::{check_radius, squared_distance};

/// Default number of rows used to fit the PCA and find leaders.
pub const DEFAULT_SUBSAMPLE: usize = 10_000;
/// Default fraction of variance the retained components must explain.
pub const DEFAULT_VARIANCE_THRESHOLD: f64 = 0.90;

/// Norm quantile bounding the default radius grid.
pub const GRID_NORM_QUANTILE: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterSettings {
    pub radius: f64,
    pub variance_threshold: f64,
    pub subsample: usize,
    pub seed: u64,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        Self {
            radius: 0.0,
            variance_threshold: DEFAULT_VARIANCE_THRESHOLD,
            subsample: DEFAULT_SUBSAMPLE,
            seed: 0,
        }
    }
}

/// Pairwise distances among `[s_i, n1, ..., nm]`, strict lower triangle in
/// row-major order. Requires a full neighbor set (`i >= m`).
pub fn distance_vector<T: Real>(
    graph: &NeighborGraph,
    coords: &[Point2<T>],
    i: usize,
) -> Result<Vec<T>> {
    if i < graph.m() || i >= graph.len() {
        return Err(Error::invalid(format!(
            "location {i} does not have a full set of {} neighbors",
            graph.m()
        )));
    }
    Ok(neighborhood_distances(graph, coords, i).lower_triangle())
}

/// A cluster leader: its ordered location and its reduced vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leader<T> {
    pub location: usize,
    pub reduced: Vec<T>,
}

/// PCA-reduced distance vectors for a (sub)sample of clustered locations.
#[derive(Debug, Clone)]
pub struct ReducedNeighborhoods<T> {
    pub reducer: PcaReducer<T>,
    /// Ordered location of each reduced vector, ascending.
    pub locations: Vec<usize>,
    pub reduced: Vec<Vec<T>>,
}

/// Fits the PCA on a seeded subsample of the clustered locations and
/// returns the subsample's reduced vectors in ordering order.
pub fn reduce_neighborhoods<T: Real>(
    graph: &NeighborGraph,
    coords: &[Point2<T>],
    settings: &ClusterSettings,
) -> Result<ReducedNeighborhoods<T>> {
    let m = graph.m();
    let n = graph.len();
    let clustered = n.saturating_sub(m);
    let locations: Vec<usize> = if clustered > settings.subsample {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        let mut picked: Vec<usize> = index::sample(&mut rng, clustered, settings.subsample)
            .into_iter()
            .map(|j| j + m)
            .collect();
        picked.sort_unstable();
        picked
    } else {
        (m..n).collect()
    };
    let vectors: Vec<Vec<T>> = locations
        .iter()
        .map(|&i| distance_vector(graph, coords, i))
        .collect::<Result<_>>()?;
    let dims = m * (m + 1) / 2;
    let reducer = if vectors.len() >= 2 {
        PcaReducer::fit(&vectors, settings.variance_threshold)?
    } else {
        PcaReducer::empty(dims)
    };
    let reduced = vectors.iter().map(|v| reducer.transform(v)).collect();
    Ok(ReducedNeighborhoods {
        reducer,
        locations,
        reduced,
    })
}

/// Assignment of ordered locations to factor-sharing clusters.
///
/// Labels are 1-based: the first `m` locations are singletons `1..=m`, the
/// clustered locations use `m+1..=m+kappa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel<T> {
    m: usize,
    radius: T,
    labels: Vec<usize>,
    leaders: Vec<Leader<T>>,
    representatives: Vec<DistanceMatrix<T>>,
    reducer: PcaReducer<T>,
}

impl<T: Real> ClusterModel<T> {
    /// Full pipeline: subsample, PCA, leader pass, then assignment of all
    /// locations.
    pub fn fit(
        graph: &NeighborGraph,
        coords: &[Point2<T>],
        settings: &ClusterSettings,
    ) -> Result<Self> {
        let radius = T::lit(settings.radius);
        check_radius(radius)?;
        let sample = reduce_neighborhoods(graph, coords, settings)?;
        let pass = leader_cluster(&sample.reduced, radius)?;
        let leaders = pass
            .leaders
            .iter()
            .map(|&j| Leader {
                location: sample.locations[j],
                reduced: sample.reduced[j].clone(),
            })
            .collect();
        assign_all(&sample.reducer, leaders, graph, coords, radius)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kappa(&self) -> usize {
        self.leaders.len()
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    /// Label of every ordered location.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn leaders(&self) -> &[Leader<T>] {
        &self.leaders
    }

    /// One distance matrix per cluster: the leader's own neighborhood.
    pub fn representatives(&self) -> &[DistanceMatrix<T>] {
        &self.representatives
    }

    pub fn reducer(&self) -> &PcaReducer<T> {
        &self.reducer
    }

    /// Checks the model against a graph: label ranges and membership radius.
    pub fn validate(&self, graph: &NeighborGraph, coords: &[Point2<T>]) -> Result<()> {
        if self.m != graph.m() || self.labels.len() != graph.len() {
            return Err(Error::invalid("cluster model does not match the neighbor graph"));
        }
        let singletons = self.m.min(graph.len());
        for (i, &l) in self.labels.iter().enumerate() {
            let ok = if i < singletons {
                l == i + 1
            } else {
                l > self.m && l <= self.m + self.kappa()
            };
            if !ok {
                return Err(Error::invalid(format!("location {i} has invalid label {l}")));
            }
        }
        if self.representatives.len() != self.kappa()
            || self.representatives.iter().any(|d| d.dim() != self.m + 1)
        {
            return Err(Error::invalid("representative matrices must be (m+1)x(m+1)"));
        }
        let _ = coords;
        Ok(())
    }
}

/// Assigns every clustered location to its nearest leader within `radius`;
/// locations farther than `radius` from every leader become new leaders.
pub fn assign_all<T: Real>(
    reducer: &PcaReducer<T>,
    leaders: Vec<Leader<T>>,
    graph: &NeighborGraph,
    coords: &[Point2<T>],
    radius: T,
) -> Result<ClusterModel<T>> {
    check_radius(radius)?;
    let m = graph.m();
    let n = graph.len();
    let r2 = radius * radius;
    let mut leaders = leaders;
    let mut labels: Vec<usize> = (1..=m.min(n)).collect();
    for i in m..n {
        let z = reducer.transform(&distance_vector(graph, coords, i)?);
        let mut best: Option<(usize, T)> = None;
        for (c, l) in leaders.iter().enumerate() {
            let d2 = squared_distance(&z, &l.reduced);
            if d2 <= r2 && best.is_none_or(|(_, b)| d2 < b) {
                best = Some((c, d2));
            }
        }
        let c = match best {
            Some((c, _)) => c,
            None => {
                leaders.push(Leader {
                    location: i,
                    reduced: z,
                });
                leaders.len() - 1
            }
        };
        labels.push(m + 1 + c);
    }
    let representatives = leaders
        .iter()
        .map(|l| neighborhood_distances(graph, coords, l.location))
        .collect();
    Ok(ClusterModel {
        m,
        radius,
        labels,
        leaders,
        representatives,
        reducer: reducer.clone(),
    })
}

/// Number of clusters per radius and the suggested elbow radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSweep<T> {
    pub points: Vec<(T, usize)>,
    pub elbow: Option<T>,
}

/// Runs the leader pass for every radius. The elbow is the interior radius
/// with the largest discrete second difference of the curve after both axes
/// are rescaled to `[0, 1]`.
pub fn radius_sweep<T: Real>(reduced: &[Vec<T>], radii: &[T]) -> Result<RadiusSweep<T>> {
    if radii.is_empty() {
        return Err(Error::invalid("radius sweep needs at least one radius"));
    }
    if radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("radii must be strictly increasing"));
    }
    let points = radii
        .iter()
        .map(|&r| Ok((r, leader_cluster(reduced, r)?.kappa())))
        .collect::<Result<Vec<_>>>()?;
    let curve: Vec<(f64, f64)> = points.iter().map(|&(r, k)| (r.as_f64(), k as f64)).collect();
    let elbow = elbow_index(&curve).map(|i| points[i].0);
    Ok(RadiusSweep { points, elbow })
}

/// Index of maximal normalized second difference, for curves of 3+ points.
pub fn elbow_index(curve: &[(f64, f64)]) -> Option<usize> {
    if curve.len() < 3 {
        return None;
    }
    let (x0, x1) = (curve[0].0, curve[curve.len() - 1].0);
    let (ylo, yhi) = curve
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if yhi == ylo || x1 == x0 {
        return None;
    }
    let norm: Vec<(f64, f64)> = curve
        .iter()
        .map(|&(x, y)| ((x - x0) / (x1 - x0), (y - ylo) / (yhi - ylo)))
        .collect();
    let mut best = None;
    let mut best_v = f64::NEG_INFINITY;
    for i in 1..norm.len() - 1 {
        let (xa, ya) = norm[i - 1];
        let (xb, yb) = norm[i];
        let (xc, yc) = norm[i + 1];
        let v = 2.0 * ((yc - yb) / (xc - xb) - (yb - ya) / (xb - xa)) / (xc - xa);
        if v > best_v {
            best_v = v;
            best = Some(i);
        }
    }
    best
}

/// Evenly spaced radii `r_max * i / count` for `i = 1..=count`, with
/// `r_max` twice the 99th percentile of the reduced-vector norms: enough to
/// merge the bulk of the neighborhoods, while a few outlying (boundary)
/// neighborhoods do not stretch the grid.
pub fn default_radius_grid<T: Real>(reduced: &[Vec<T>], count: usize) -> Vec<T> {
    let norms: Vec<T> = reduced
        .iter()
        .map(|v| v.iter().fold(T::zero(), |a, x| a + *x * *x).sqrt())
        .collect();
    if norms.is_empty() || count == 0 {
        return vec![T::one()];
    }
    let r_max = T::lit(2.0) * crate::evaluation::quantile(&norms, GRID_NORM_QUANTILE);
    if r_max <= T::zero() {
        return vec![T::one()];
    }
    (1..=count)
        .map(|i| r_max * T::from_usize(i).unwrap() / T::from_usize(count).unwrap())
        .collect()
}

/// Sweeps the default grid on the subsample and returns the sweep together
/// with the elbow radius (falling back to the median grid radius).
pub fn select_radius<T: Real>(
    graph: &NeighborGraph,
    coords: &[Point2<T>],
    settings: &ClusterSettings,
    grid: usize,
) -> Result<(RadiusSweep<T>, T)> {
    let sample = reduce_neighborhoods(graph, coords, settings)?;
    let radii = default_radius_grid(&sample.reduced, grid.max(3));
    let sweep = radius_sweep(&sample.reduced, &radii)?;
    let r = sweep.elbow.unwrap_or(radii[radii.len() / 2]);
    Ok((sweep, r))
}
