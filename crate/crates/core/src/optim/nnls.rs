//! Lawson-Hanson active-set non-negative least squares.

use crate::linalg::{least_squares_columns, max_abs, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution<T> {
    pub x: Vec<T>,
    pub converged: bool,
    pub iterations: usize,
}

/// Minimizes `‖A x − b‖₂` over `x ≥ 0`. Ties in the pivot rule go to the lowest index.
pub fn nnls<T: Scalar>(a: &Matrix<T>, b: &[T]) -> NnlsSolution<T> {
    let n = a.cols();
    let mut x = vec![T::zero(); n];
    let mut passive = vec![false; n];
    let mut blocked = vec![false; n];
    let scale = a.max_abs() * max_abs(b).max(T::one());
    let tol = T::from_usize_exact(10 * n.max(a.rows())) * T::epsilon() * scale;
    let cap = 3 * n + 30;
    let residual_grad = |x: &[T]| {
        let ax = a.mul_vec(x);
        let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
        a.transpose_mul_vec(&r)
    };
    let mut iterations = 0;
    let mut w = residual_grad(&x);
    loop {
        let pick = (0..n)
            .filter(|&j| !passive[j] && !blocked[j] && w[j] > tol)
            .fold(None, |best: Option<usize>, j| match best {
                Some(bj) if w[bj] >= w[j] => Some(bj),
                _ => Some(j),
            });
        let Some(j) = pick else {
            return NnlsSolution {
                x,
                converged: true,
                iterations,
            };
        };
        if iterations >= cap {
            return NnlsSolution {
                x,
                converged: false,
                iterations,
            };
        }
        passive[j] = true;
        let mut first_inner = true;
        let mut spurious = false;
        loop {
            iterations += 1;
            let cols: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let zc = least_squares_columns(a, &cols, b);
            let mut z = vec![T::zero(); n];
            for (&c, &v) in cols.iter().zip(&zc) {
                z[c] = v;
            }
            if first_inner && z[j] <= T::zero() {
                // the gradient sign was rounding noise; do not pick this column again
                passive[j] = false;
                blocked[j] = true;
                spurious = true;
                break;
            }
            first_inner = false;
            if cols.iter().all(|&i| z[i] > T::zero()) {
                x = z;
                break;
            }
            let mut alpha = T::one();
            let mut hit = None;
            for &i in &cols {
                if z[i] <= T::zero() {
                    let denom = x[i] - z[i];
                    if denom > T::zero() && x[i] / denom < alpha {
                        alpha = x[i] / denom;
                        hit = Some(i);
                    }
                }
            }
            for i in 0..n {
                x[i] = x[i] + alpha * (z[i] - x[i]);
            }
            if let Some(i) = hit {
                x[i] = T::zero();
            }
            for &i in &cols {
                if x[i] <= T::zero() {
                    x[i] = T::zero();
                    passive[i] = false;
                }
            }
            if iterations >= cap {
                return NnlsSolution {
                    x,
                    converged: false,
                    iterations,
                };
            }
        }
        for i in 0..n {
            if !passive[i] {
                x[i] = T::zero();
            }
        }
        if !spurious {
            // the passive set changed, so earlier spurious picks may be genuine now
            blocked.iter_mut().for_each(|b| *b = false);
        }
        w = residual_grad(&x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_nonnegative_solution() {
        let g = Matrix::from_row_major(2, 2, vec![0.75, 0.5, 0.5, 0.5]);
        let s = nnls(&g, &[1.5, 1.0]);
        assert!(s.converged);
        assert_abs_diff_eq!(s.x[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.x[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn boundary_solution_when_unconstrained_is_negative() {
        let g = Matrix::from_row_major(2, 2, vec![0.75, 0.5, 0.5, 0.5]);
        let s = nnls(&g, &[0.0, 1.0]);
        assert_eq!(s.x[0], 0.0);
        assert_abs_diff_eq!(s.x[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_rhs() {
        let g = Matrix::from_row_major(2, 2, vec![0.75, 0.5, 0.5, 0.5]);
        assert_eq!(nnls(&g, &[0.0, 0.0]).x, vec![0.0, 0.0]);
    }

    #[test]
    fn rank_deficient_system() {
        // columns 0 and 2 coincide
        let a = Matrix::from_row_major(3, 3, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0]);
        let b = a.mul_vec(&[1.0, 2.0, 0.5]);
        let s = nnls(&a, &b);
        assert!(s.converged);
        let r = a.mul_vec(&s.x);
        for (p, q) in r.iter().zip(&b) {
            assert_abs_diff_eq!(p, q, epsilon = 1e-12);
        }
        assert!(s.x.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn kkt_conditions_hold_on_random_problems() {
        let mut state = 12345u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        for _ in 0..200 {
            let a = Matrix::from_fn(6, 4, |_, _| next());
            let b: Vec<f64> = (0..6).map(|_| next()).collect();
            let s = nnls(&a, &b);
            assert!(s.converged);
            let ax = a.mul_vec(&s.x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            let w = a.transpose_mul_vec(&r);
            for (&xj, &wj) in s.x.iter().zip(&w) {
                assert!(xj >= 0.0);
                assert!(wj <= 1e-10);
                if xj > 0.0 {
                    assert!(wj.abs() <= 1e-10);
                }
            }
        }
    }
}
