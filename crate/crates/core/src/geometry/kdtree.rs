//! Static 2-D kd-tree with exact k-nearest-neighbor queries.
//!
//! Queries accept an eligibility callback that also supplies the tie-break
//! key, which lets the neighbor graph restrict a search to predecessors in
//! the maxmin ordering while breaking distance ties by ordered position.

use std::cmp::Ordering;

use super::Point2;
use crate::{Error, Real, Result};

const LEAF_SIZE: usize = 16;
const BRUTE_FORCE_BELOW: usize = 64;

#[derive(Debug, Clone)]
enum Node<T> {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: T,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree<T> {
    points: Vec<Point2<T>>,
    index: Vec<usize>,
    nodes: Vec<Node<T>>,
}

/// One query result: point index, its tie-break key and squared distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<T> {
    pub index: usize,
    pub key: usize,
    pub dist2: T,
}

#[inline]
fn coord<T: Real>(p: &Point2<T>, axis: usize) -> T {
    if axis == 0 {
        p.x
    } else {
        p.y
    }
}

#[inline]
fn cmp_candidate<T: Real>(a: (T, usize), b: (T, usize)) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
}

/// Bounded sorted list of the best candidates seen so far.
struct Best<T> {
    k: usize,
    items: Vec<Neighbor<T>>,
}

impl<T: Real> Best<T> {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn worst(&self) -> Option<T> {
        if self.items.len() < self.k {
            None
        } else {
            self.items.last().map(|n| n.dist2)
        }
    }

    #[inline]
    fn offer(&mut self, cand: Neighbor<T>) {
        if self.k == 0 {
            return;
        }
        if self.items.len() == self.k {
            let last = self.items[self.k - 1];
            if cmp_candidate((cand.dist2, cand.key), (last.dist2, last.key)) != Ordering::Less {
                return;
            }
            self.items.pop();
        }
        let pos = self
            .items
            .partition_point(|n| cmp_candidate((n.dist2, n.key), (cand.dist2, cand.key)) == Ordering::Less);
        self.items.insert(pos, cand);
    }
}

impl<T: Real> KdTree<T> {
    pub fn new(points: &[Point2<T>]) -> Self {
        let mut tree = Self {
            points: points.to_vec(),
            index: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if points.len() >= BRUTE_FORCE_BELOW {
            tree.build(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point2<T>] {
        &self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let (mut lo, mut hi) = (
            Point2::new(T::infinity(), T::infinity()),
            Point2::new(T::neg_infinity(), T::neg_infinity()),
        );
        for &i in &self.index[start..end] {
            let p = self.points[i];
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let axis = usize::from(hi.y - lo.y > hi.x - lo.x);
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.index[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            coord(&points[a], axis)
                .partial_cmp(&coord(&points[b], axis))
                .unwrap_or(Ordering::Equal)
        });
        let value = coord(&self.points[self.index[mid]], axis);
        self.nodes.push(Node::Split {
            axis,
            value,
            left: 0,
            right: 0,
        });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        if let Node::Split {
            left: l, right: r, ..
        } = &mut self.nodes[id]
        {
            *l = left;
            *r = right;
        }
        id
    }

    /// The `k` nearest points for which `key_of` returns `Some(key)`,
    /// ordered by ascending squared distance then ascending key.
    ///
    /// Returns fewer than `k` results when fewer points are eligible.
    pub fn nearest_by<F>(&self, query: Point2<T>, k: usize, mut key_of: F) -> Vec<Neighbor<T>>
    where
        F: FnMut(usize) -> Option<usize>,
    {
        let mut best = Best::new(k);
        if self.nodes.is_empty() {
            for (i, p) in self.points.iter().enumerate() {
                if let Some(key) = key_of(i) {
                    best.offer(Neighbor {
                        index: i,
                        key,
                        dist2: p.distance_squared(&query),
                    });
                }
            }
        } else {
            self.search(0, &query, &mut best, &mut key_of);
        }
        best.items
    }

    fn search<F>(&self, node: usize, q: &Point2<T>, best: &mut Best<T>, key_of: &mut F)
    where
        F: FnMut(usize) -> Option<usize>,
    {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.index[start..end] {
                    if let Some(key) = key_of(i) {
                        best.offer(Neighbor {
                            index: i,
                            key,
                            dist2: self.points[i].distance_squared(q),
                        });
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = coord(q, axis) - value;
                let (near, far) = if diff < T::zero() {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, q, best, key_of);
                // `<=` keeps equidistant points with smaller keys reachable
                if best.worst().is_none_or(|w| diff * diff <= w) {
                    self.search(far, q, best, key_of);
                }
            }
        }
    }

    /// Convenience wrapper: nearest `k` points, ties by lowest index.
    pub fn nearest(&self, query: Point2<T>, k: usize) -> Vec<Neighbor<T>> {
        self.nearest_by(query, k, Some)
    }
}

/// Exact k-nearest-neighbor query returning `(index, distance)` pairs in
/// ascending distance, ties broken by lowest index.
pub fn knn_query<T: Real>(
    coords: &[Point2<T>],
    query: Point2<T>,
    k: usize,
    exclude: Option<&[usize]>,
) -> Result<Vec<(usize, T)>> {
    let mut excluded = vec![false; coords.len()];
    for &e in exclude.unwrap_or(&[]) {
        if e >= coords.len() {
            return Err(Error::invalid(format!("excluded index {e} out of range")));
        }
        excluded[e] = true;
    }
    let eligible = excluded.iter().filter(|x| !**x).count();
    if k == 0 || k > eligible {
        return Err(Error::invalid(format!(
            "k = {k} must be between 1 and the {eligible} eligible points"
        )));
    }
    let tree = KdTree::new(coords);
    Ok(tree
        .nearest_by(query, k, |i| (!excluded[i]).then_some(i))
        .into_iter()
        .map(|n| (n.index, n.dist2.sqrt()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(coords: &[Point2<f64>], q: Point2<f64>, k: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(usize, f64)> = coords
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.distance_squared(&q)))
            .collect();
        all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    #[test]
    fn excluded_self_returns_true_nearest() {
        let pts = vec![
            Point2::new(0.0f64, 0.0),
            Point2::new(0.3, 0.0),
            Point2::new(1.0, 1.0),
        ];
        let r = knn_query(&pts, pts[0], 1, Some(&[0])).unwrap();
        assert_eq!(r[0].0, 1);
        assert!((r[0].1 - 0.3).abs() < 1e-15);
    }

    #[test]
    fn four_way_tie_picks_lowest_indices() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
        ];
        let r = knn_query(&pts, Point2::new(0.5, 0.5), 2, None).unwrap();
        assert_eq!(r.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn k_equal_to_eligible_returns_everything_sorted() {
        let pts: Vec<_> = (0..5).map(|i| Point2::new(f64::from(i), 0.0)).collect();
        let r = knn_query(&pts, Point2::new(4.2, 0.0), 5, None).unwrap();
        assert_eq!(r.iter().map(|x| x.0).collect::<Vec<_>>(), vec![4, 3, 2, 1, 0]);
        assert!(knn_query(&pts, Point2::new(0.0, 0.0), 6, None).is_err());
        assert!(knn_query(&pts, Point2::new(0.0, 0.0), 5, Some(&[1])).is_err());
    }

    #[test]
    fn tree_handles_grid_ties() {
        // integer grid has many exact distance ties; tree must match scan
        let pts: Vec<_> = (0..400)
            .map(|i| Point2::new(f64::from(i % 20), f64::from(i / 20)))
            .collect();
        let tree = KdTree::new(&pts);
        for q in [Point2::new(5.5, 5.5), Point2::new(10.0, 10.0), Point2::new(0.0, 19.0)] {
            for k in [1, 4, 9, 30] {
                let got: Vec<_> = tree.nearest(q, k).iter().map(|n| (n.index, n.dist2)).collect();
                assert_eq!(got, brute(&pts, q, k));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn agrees_with_linear_scan(
            raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..1000),
            qx in -0.2f64..1.2, qy in -0.2f64..1.2, kfrac in 0.0f64..1.0,
        ) {
            let pts: Vec<_> = raw.iter().map(|&(x, y)| Point2::new(x, y)).collect();
            let q = Point2::new(qx, qy);
            let k = 1 + ((pts.len() - 1) as f64 * kfrac * kfrac) as usize;
            let got: Vec<_> = knn_query(&pts, q, k, None).unwrap();
            let want = brute(&pts, q, k);
            prop_assert_eq!(got.len(), k);
            for (g, w) in got.iter().zip(&want) {
                prop_assert_eq!(g.0, w.0);
                prop_assert_eq!(g.1, w.1.sqrt());
            }
        }
    }
}
