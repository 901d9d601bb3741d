//! Euclidean projections onto scaled simplices.

use crate::scalar::Scalar;

/// Projects `v` onto `{x ≥ 0, Σ x = total}` in place (sort-based).
pub fn project_simplex<T: Scalar>(v: &mut [T], total: T) {
    if v.is_empty() {
        return;
    }
    let mut sorted: Vec<T> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = T::zero();
    let mut theta = T::zero();
    for (i, &s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - total) / T::from_usize_exact(i + 1);
        if s - t > T::zero() {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(T::zero());
    }
}

/// Projects `v` onto `{x ≥ 0, Σ x ≤ cap}` in place.
pub fn project_capped<T: Scalar>(v: &mut [T], cap: T) {
    let clipped: T = v.iter().map(|&x| x.max(T::zero())).sum();
    if clipped <= cap {
        for x in v.iter_mut() {
            *x = x.max(T::zero());
        }
    } else {
        project_simplex(v, cap);
    }
}
