use serde::{Deserialize, Serialize};

use super::{KdTree, Point2};
use crate::{Error, Real, Result};

/// Predecessor counts up to this size are scanned linearly.
const SCAN_PREDECESSORS_BELOW: usize = 512;

/// Directed nearest-neighbor graph over a maxmin ordering.
///
/// Indices inside `neighbors` are positions in the ordering, not original
/// point indices. `neighbors(i)` holds the `min(i, m)` nearest predecessors
/// of ordered location `i`, nearest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct NeighborGraph {
    m: usize,
    ordering: Vec<usize>,
    rank: Vec<usize>,
    offsets: Vec<usize>,
    flat: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRepr {
    m: usize,
    ordering: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
}

impl From<NeighborGraph> for GraphRepr {
    fn from(g: NeighborGraph) -> Self {
        let neighbors = (0..g.len()).map(|i| g.neighbors(i).to_vec()).collect();
        GraphRepr {
            m: g.m,
            ordering: g.ordering,
            neighbors,
        }
    }
}

impl TryFrom<GraphRepr> for NeighborGraph {
    type Error = Error;

    fn try_from(r: GraphRepr) -> Result<Self> {
        NeighborGraph::from_parts(r.m, r.ordering, r.neighbors)
    }
}

fn inverse_permutation(ordering: &[usize]) -> Result<Vec<usize>> {
    let n = ordering.len();
    let mut rank = vec![usize::MAX; n];
    for (pos, &orig) in ordering.iter().enumerate() {
        if orig >= n || rank[orig] != usize::MAX {
            return Err(Error::invalid("ordering is not a permutation of 0..n"));
        }
        rank[orig] = pos;
    }
    Ok(rank)
}

impl NeighborGraph {
    /// Assembles a graph from explicit neighbor lists, checking the
    /// structural invariants (sizes and predecessor-only references).
    pub fn from_parts(m: usize, ordering: Vec<usize>, neighbors: Vec<Vec<usize>>) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("neighbor count m must be at least 1"));
        }
        let rank = inverse_permutation(&ordering)?;
        if neighbors.len() != ordering.len() {
            return Err(Error::invalid("one neighbor list per location is required"));
        }
        let mut offsets = Vec::with_capacity(neighbors.len() + 1);
        let mut flat = Vec::new();
        offsets.push(0);
        for (i, list) in neighbors.iter().enumerate() {
            if list.len() != i.min(m) || list.iter().any(|&j| j >= i) {
                return Err(Error::invalid(format!(
                    "neighbor list {i} must hold {} predecessors",
                    i.min(m)
                )));
            }
            flat.extend_from_slice(list);
            offsets.push(flat.len());
        }
        Ok(Self {
            m,
            ordering,
            rank,
            offsets,
            flat,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.ordering.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordering.is_empty()
    }

    /// Original point index at each ordered position.
    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    /// Ordered position of each original point.
    pub fn rank(&self) -> &[usize] {
        &self.rank
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.flat[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Coordinates of the ordered location `i`.
    #[inline]
    pub fn point<T: Real>(&self, coords: &[Point2<T>], i: usize) -> Point2<T> {
        coords[self.ordering[i]]
    }

    /// Locations `j` with `i` in `neighbors(j)`, together with the position
    /// of `i` inside that list. Stored as CSR: `(offsets, entries)`.
    pub fn reverse_neighbors(&self) -> (Vec<usize>, Vec<(usize, usize)>) {
        let n = self.len();
        let mut counts = vec![0usize; n + 1];
        for &j in &self.flat {
            counts[j + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut entries = vec![(0, 0); self.flat.len()];
        for j in 0..n {
            for (pos, &i) in self.neighbors(j).iter().enumerate() {
                entries[fill[i]] = (j, pos);
                fill[i] += 1;
            }
        }
        (counts, entries)
    }
}

/// Builds the exact `m`-nearest-predecessor graph for the given ordering.
///
/// Distance ties are broken by lower ordered position.
pub fn build_neighbor_graph<T: Real>(
    coords: &[Point2<T>],
    ordering: &[usize],
    m: usize,
) -> Result<NeighborGraph> {
    let n = coords.len();
    if ordering.len() != n {
        return Err(Error::invalid("ordering length differs from number of points"));
    }
    if m == 0 {
        return Err(Error::invalid("neighbor count m must be at least 1"));
    }
    if m >= n {
        return Err(Error::invalid(format!(
            "neighbor count m = {m} must be smaller than the number of locations n = {n}"
        )));
    }
    let rank = inverse_permutation(ordering)?;
    let tree = KdTree::new(coords);

    let mut offsets = Vec::with_capacity(n + 1);
    let mut flat = Vec::with_capacity(n * m);
    offsets.push(0);
    let mut scratch: Vec<(T, usize)> = Vec::new();
    for i in 0..n {
        let p = coords[ordering[i]];
        let k = i.min(m);
        if i < SCAN_PREDECESSORS_BELOW {
            scratch.clear();
            scratch.extend((0..i).map(|j| (coords[ordering[j]].distance_squared(&p), j)));
            let cmp = |a: &(T, usize), b: &(T, usize)| {
                a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))
            };
            if k < scratch.len() {
                scratch.select_nth_unstable_by(k, cmp);
                scratch.truncate(k);
            }
            scratch.sort_by(cmp);
            flat.extend(scratch.iter().map(|x| x.1));
        } else {
            let found = tree.nearest_by(p, k, |orig| {
                let r = rank[orig];
                (r < i).then_some(r)
            });
            flat.extend(found.iter().map(|nb| nb.key));
        }
        offsets.push(flat.len());
    }
    Ok(NeighborGraph {
        m,
        ordering: ordering.to_vec(),
        rank,
        offsets,
        flat,
    })
}
