//! Dense row-major kernels: Cholesky factorization and triangular solves.
//!
//! Matrices are stored as flat `n * n` slices in row-major order. Only the
//! lower triangle is read by [`cholesky_in_place`] and only the lower
//! triangle of the result is meaningful.

use crate::Real;

/// Overwrites the lower triangle of `a` with `L` such that `A = L L'`.
///
/// Returns `Err(j)` with the first column whose pivot is not strictly
/// positive (or not finite).
pub fn cholesky_in_place<T: Real>(a: &mut [T], n: usize) -> Result<(), usize> {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut diag = a[j * n + j];
        for &l in &a[j * n..j * n + j] {
            diag -= l * l;
        }
        if !(diag > T::zero() && diag.is_finite()) {
            return Err(j);
        }
        let pivot = diag.sqrt();
        a[j * n + j] = pivot;
        let (top, below) = a.split_at_mut((j + 1) * n);
        let row_j = &top[j * n..j * n + j];
        for row_i in below.chunks_exact_mut(n) {
            let mut s = row_i[j];
            for (x, y) in row_i[..j].iter().zip(row_j) {
                s -= *x * *y;
            }
            row_i[j] = s / pivot;
        }
    }
    Ok(())
}

/// Solves `L x = b` in place, `L` lower triangular from [`cholesky_in_place`].
pub fn solve_lower_in_place<T: Real>(l: &[T], n: usize, b: &mut [T]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let mut s = b[i];
        for (x, y) in row.iter().zip(b[..i].iter()) {
            s -= *x * *y;
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `L' x = b` in place.
pub fn solve_upper_transposed_in_place<T: Real>(l: &[T], n: usize, b: &mut [T]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `A x = b` given the Cholesky factor of `A`.
pub fn cholesky_solve_in_place<T: Real>(l: &[T], n: usize, b: &mut [T]) {
    solve_lower_in_place(l, n, b);
    solve_upper_transposed_in_place(l, n, b);
}

/// `log det A` from its Cholesky factor.
pub fn cholesky_log_det<T: Real>(l: &[T], n: usize) -> T {
    let two = T::lit(2.0);
    (0..n).map(|i| two * l[i * n + i].ln()).sum()
}

/// `X' X` for a row-major `rows x cols` matrix.
pub fn gram<T: Real>(x: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = vec![T::zero(); cols * cols];
    for r in 0..rows {
        let row = &x[r * cols..(r + 1) * cols];
        for i in 0..cols {
            let xi = row[i];
            for j in 0..=i {
                out[i * cols + j] += xi * row[j];
            }
        }
    }
    for i in 0..cols {
        for j in 0..i {
            out[j * cols + i] = out[i * cols + j];
        }
    }
    out
}

/// `X' v` for a row-major `rows x cols` matrix.
pub fn gram_vec<T: Real>(x: &[T], rows: usize, cols: usize, v: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); cols];
    for r in 0..rows {
        let row = &x[r * cols..(r + 1) * cols];
        for (o, xv) in out.iter_mut().zip(row) {
            *o += *xv * v[r];
        }
    }
    out
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}
