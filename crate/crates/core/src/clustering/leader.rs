//! Hartigan's leader algorithm.

use crate::{Error, Real, Result};

/// Output of a leader pass: 1-based labels per input vector and the input
/// index of each cluster's leader.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeaderClustering {
    pub labels: Vec<usize>,
    pub leaders: Vec<usize>,
}

impl LeaderClustering {
    pub fn kappa(&self) -> usize {
        self.leaders.len()
    }
}

/// True when `‖a - b‖ <= radius`; stops summing once the bound is exceeded.
#[inline]
pub(crate) fn within<T: Real>(a: &[T], b: &[T], radius2: T) -> bool {
    let mut s = T::zero();
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        s += d * d;
        if s > radius2 {
            return false;
        }
    }
    true
}

#[inline]
pub(crate) fn squared_distance<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| {
        let d = *x - *y;
        acc + d * d
    })
}

pub(crate) fn check_radius<T: Real>(radius: T) -> Result<()> {
    if !(radius >= T::zero()) || !radius.is_finite() {
        return Err(Error::invalid(format!(
            "clustering radius must be finite and non-negative, got {radius}"
        )));
    }
    Ok(())
}

/// Single sequential pass in input order. Each vector joins the first
/// existing cluster whose leader lies within `radius`, otherwise it starts a
/// new cluster and becomes its leader.
pub fn leader_cluster<T: Real>(vectors: &[Vec<T>], radius: T) -> Result<LeaderClustering> {
    check_radius(radius)?;
    let r2 = radius * radius;
    let mut labels = Vec::with_capacity(vectors.len());
    let mut leaders: Vec<usize> = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        match leaders.iter().position(|&l| within(v, &vectors[l], r2)) {
            Some(c) => labels.push(c + 1),
            None => {
                leaders.push(i);
                labels.push(leaders.len());
            }
        }
    }
    Ok(LeaderClustering { labels, leaders })
}
