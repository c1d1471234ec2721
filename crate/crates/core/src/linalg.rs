//! Small dense solves on stack matrices (LU with partial pivoting).

use crate::{Matrix, Point};

/// In-place LU factors of `m`, the row permutation sign, or `None` when a
/// pivot vanishes.
fn factor<const D: usize>(m: &Matrix<D>) -> Option<(Matrix<D>, [usize; D], f64)> {
    let mut a = *m;
    let mut perm = [0usize; D];
    for (i, p) in perm.iter_mut().enumerate() {
        *p = i;
    }
    let mut sign = 1.0;
    for k in 0..D {
        let pivot = (k..D)
            .max_by(|&i, &j| a[(i, k)].abs().total_cmp(&a[(j, k)].abs()))
            .unwrap_or(k);
        if a[(pivot, k)] == 0.0 || !a[(pivot, k)].is_finite() {
            return None;
        }
        if pivot != k {
            a.swap_rows(pivot, k);
            perm.swap(pivot, k);
            sign = -sign;
        }
        for i in k + 1..D {
            let factor = a[(i, k)] / a[(k, k)];
            a[(i, k)] = factor;
            for j in k + 1..D {
                a[(i, j)] -= factor * a[(k, j)];
            }
        }
    }
    Some((a, perm, sign))
}

/// Solves `m x = b`.
pub fn solve<const D: usize>(m: &Matrix<D>, b: &Point<D>) -> Option<Point<D>> {
    let (lu, perm, _) = factor(m)?;
    let mut x = Point::<D>::from_fn(|i, _| b[perm[i]]);
    for i in 0..D {
        for j in 0..i {
            x[i] -= lu[(i, j)] * x[j];
        }
    }
    for i in (0..D).rev() {
        for j in i + 1..D {
            x[i] -= lu[(i, j)] * x[j];
        }
        x[i] /= lu[(i, i)];
    }
    Some(x)
}

pub fn determinant<const D: usize>(m: &Matrix<D>) -> f64 {
    match factor(m) {
        Some((lu, _, sign)) => (0..D).fold(sign, |acc, i| acc * lu[(i, i)]),
        None => 0.0,
    }
}
