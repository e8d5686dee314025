//! Spatial point handling: distances, exact k-nearest-neighbor search,
//! maxmin ordering and the directed neighbor graph.

mod dataset;
mod graph;
mod kdtree;
mod ordering;

pub use dataset::{DesignMatrix, SpatialDataset};
pub use graph::{build_neighbor_graph, NeighborGraph};
pub use kdtree::{knn_query, KdTree, Neighbor};
pub use ordering::maxmin_order;

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn distance_squared(&self, other: &Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn distance(&self, other: &Self) -> T {
        self.distance_squared(other).sqrt()
    }
}

/// Euclidean distance in the stored coordinate units.
#[inline]
pub fn euclidean_distance<T: Real>(a: Point2<T>, b: Point2<T>) -> T {
    a.distance(&b)
}

/// Rejects non-finite coordinates and exact duplicates.
pub fn validate_points<T: Real>(coords: &[Point2<T>]) -> Result<()> {
    if let Some(i) = coords.iter().position(|p| !p.is_finite()) {
        return Err(Error::invalid(format!("coordinate {i} is not finite")));
    }
    // -0.0 and 0.0 are the same location
    let norm = |v: T| if v == T::zero() { T::zero() } else { v };
    let mut idx: Vec<usize> = (0..coords.len()).collect();
    idx.sort_by(|&a, &b| {
        let (pa, pb) = (coords[a], coords[b]);
        norm(pa.x)
            .partial_cmp(&norm(pb.x))
            .unwrap()
            .then(norm(pa.y).partial_cmp(&norm(pb.y)).unwrap())
            .then(a.cmp(&b))
    });
    for w in idx.windows(2) {
        let (a, b) = (coords[w[0]], coords[w[1]]);
        if norm(a.x) == norm(b.x) && norm(a.y) == norm(b.y) {
            return Err(Error::DuplicateCoordinates {
                first: w[0].min(w[1]),
                second: w[0].max(w[1]),
            });
        }
    }
    Ok(())
}
