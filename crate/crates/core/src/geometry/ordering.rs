use super::{validate_points, Point2};
use crate::{Error, Real, Result};

/// Exact maxmin ordering.
///
/// Starts from the point nearest the centroid; every later point maximizes
/// its minimum distance to the points already selected. All ties go to the
/// lowest original index. O(n^2) time, O(n) memory.
pub fn maxmin_order<T: Real>(coords: &[Point2<T>]) -> Result<Vec<usize>> {
    let n = coords.len();
    if n == 0 {
        return Err(Error::invalid("cannot order an empty point set"));
    }
    validate_points(coords)?;

    let nf = T::from_usize(n).unwrap();
    let centroid = Point2::new(
        coords.iter().map(|p| p.x).sum::<T>() / nf,
        coords.iter().map(|p| p.y).sum::<T>() / nf,
    );
    let mut first = 0;
    let mut best = coords[0].distance_squared(&centroid);
    for (i, p) in coords.iter().enumerate().skip(1) {
        let d = p.distance_squared(&centroid);
        if d < best {
            best = d;
            first = i;
        }
    }

    let mut order = Vec::with_capacity(n);
    let mut selected = vec![false; n];
    let mut min_d2: Vec<T> = coords.iter().map(|p| p.distance_squared(&coords[first])).collect();
    order.push(first);
    selected[first] = true;

    while order.len() < n {
        let mut pick = usize::MAX;
        let mut pick_d = T::neg_infinity();
        for (i, &d) in min_d2.iter().enumerate() {
            if !selected[i] && d > pick_d {
                pick = i;
                pick_d = d;
            }
        }
        selected[pick] = true;
        order.push(pick);
        let p = coords[pick];
        for (i, d) in min_d2.iter_mut().enumerate() {
            if !selected[i] {
                let nd = coords[i].distance_squared(&p);
                if nd < *d {
                    *d = nd;
                }
            }
        }
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts(v: &[(f64, f64)]) -> Vec<Point2<f64>> {
        v.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    #[test]
    fn hand_traced_examples() {
        assert_eq!(maxmin_order(&pts(&[(1.0, 0.0)])).unwrap(), vec![0]);
        assert_eq!(
            maxmin_order(&pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])).unwrap(),
            vec![1, 0, 2]
        );
        assert_eq!(
            maxmin_order(&pts(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)])).unwrap(),
            vec![0, 3, 1, 2]
        );
    }

    #[test]
    fn duplicate_points_are_rejected() {
        assert!(maxmin_order(&pts(&[(0.0, 0.0), (0.5, 0.5), (0.0, 0.0)])).is_err());
    }

    #[test]
    fn maxmin_property_against_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 5, 37, 200] {
            let coords: Vec<_> = (0..n)
                .map(|_| Point2::new(rng.random::<f64>(), rng.random::<f64>()))
                .collect();
            let order = maxmin_order(&coords).unwrap();
            let mut sorted = order.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..n).collect::<Vec<_>>());
            for step in 1..n {
                let min_to_prev = |j: usize| {
                    order[..step]
                        .iter()
                        .map(|&s| coords[j].distance(&coords[s]))
                        .fold(f64::INFINITY, f64::min)
                };
                let chosen = min_to_prev(order[step]);
                for &other in &order[step..] {
                    assert!(chosen >= min_to_prev(other));
                }
            }
            assert_eq!(order, maxmin_order(&coords).unwrap());
        }
    }
}
