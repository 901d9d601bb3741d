//! Small dense linear algebra for the dimensions this crate works in (d ≤ 64).

use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn mul_vec_into(&self, x: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn transpose_mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    /// `x·A x` for square `A`.
    pub fn quad_form(&self, x: &[T]) -> T {
        dot(x, &self.mul_vec(x))
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Inverse by Gauss-Jordan with partial pivoting; `None` if numerically singular.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.max_abs();
        if scale == T::zero() {
            return None;
        }
        let tiny = scale * T::epsilon() * T::from_usize_exact(n) * T::c(16.0);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[(i, col)].abs().partial_cmp(&a[(j, col)].abs()).unwrap())
                .unwrap();
            if a[(piv, col)].abs() <= tiny {
                return None;
            }
            if piv != col {
                a.swap_rows(piv, col);
                inv.swap_rows(piv, col);
            }
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)];
                if f == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let ac = a[(col, j)];
                    let ic = inv[(col, j)];
                    a[(i, j)] -= f * ac;
                    inv[(i, j)] -= f * ic;
                }
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

pub fn max_abs<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
}

/// In-place Cholesky factorization of a symmetric positive definite `n×n` row-major
/// matrix (lower triangle). Returns `false` if a pivot is not positive.
pub fn cholesky_in_place<T: Scalar>(a: &mut [T], n: usize) -> bool {
    for j in 0..n {
        let mut s = a[j * n + j];
        for k in 0..j {
            s -= a[j * n + k] * a[j * n + k];
        }
        if !(s > T::zero()) {
            return false;
        }
        let l = s.sqrt();
        a[j * n + j] = l;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l;
        }
    }
    true
}

/// Solves `L Lᵀ x = b` given the factor from [`cholesky_in_place`].
pub fn cholesky_solve<T: Scalar>(l: &[T], n: usize, b: &mut [T]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Least-squares solution of `A[:, cols] z ≈ b` by Householder QR.
///
/// Columns whose triangular pivot falls below a relative threshold are treated as
/// dependent and get a zero coefficient.
pub fn least_squares_columns<T: Scalar>(a: &Matrix<T>, cols: &[usize], b: &[T]) -> Vec<T> {
    let m = a.rows();
    let n = cols.len();
    // column-major working copy
    let mut q: Vec<Vec<T>> = cols.iter().map(|&j| a.column(j)).collect();
    let mut rhs = b.to_vec();
    let scale = cols
        .iter()
        .map(|&j| max_abs(&a.column(j)))
        .fold(T::zero(), T::max);
    let tiny = scale * T::epsilon() * T::c(1e3);
    let mut rdiag = vec![T::zero(); n];
    let steps = n.min(m);
    for k in 0..steps {
        let norm = q[k][k..].iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
        if norm <= tiny {
            rdiag[k] = T::zero();
            continue;
        }
        let alpha = if q[k][k] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = q[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2 = v.iter().fold(T::zero(), |s, &x| s + x * x);
        rdiag[k] = alpha;
        if vnorm2 == T::zero() {
            continue;
        }
        let two = T::c(2.0);
        for col in q.iter_mut().skip(k + 1) {
            let f = two * dot(&v, &col[k..]) / vnorm2;
            for (c, &vi) in col[k..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
        let f = two * dot(&v, &rhs[k..]) / vnorm2;
        for (c, &vi) in rhs[k..].iter_mut().zip(&v) {
            *c -= f * vi;
        }
    }
    let mut z = vec![T::zero(); n];
    for k in (0..steps).rev() {
        if rdiag[k] == T::zero() {
            continue;
        }
        let mut s = rhs[k];
        for j in k + 1..steps {
            s -= q[j][k] * z[j];
        }
        z[k] = s / rdiag[k];
    }
    z
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut m = a.clone();
    let scale = a.max_abs();
    if scale == T::zero() {
        return vec![T::zero(); n];
    }
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in 0..i {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= T::epsilon() * scale * T::c(1e-2) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::c(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn inverse_of_small_matrix() {
        let g = Matrix::from_row_major(2, 2, vec![0.75, 0.5, 0.5, 0.5]);
        let inv = g.inverse().unwrap();
        assert_abs_diff_eq!(inv[(0, 0)], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inv[(0, 1)], -4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inv[(1, 1)], 6.0, epsilon = 1e-12);
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let g = Matrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 4.0]);
        assert!(g.inverse().is_none());
    }

    #[test]
    fn jacobi_matches_closed_form_2x2() {
        let g = Matrix::from_row_major(2, 2, vec![0.25, 0.5, 0.5, 0.5]);
        let ev = symmetric_eigenvalues(&g);
        // trace 0.75, det -0.125
        let disc = (0.75f64 * 0.75 + 0.5).sqrt();
        assert_abs_diff_eq!(ev[0], (0.75 - disc) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1], (0.75 + disc) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn cholesky_round_trip() {
        let a = vec![4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0];
        let m = Matrix::from_row_major(3, 3, a.clone());
        let x = vec![1.0, -2.0, 0.5];
        let mut b = m.mul_vec(&x);
        let mut l = a;
        assert!(cholesky_in_place(&mut l, 3));
        cholesky_solve(&l, 3, &mut b);
        for (u, v) in b.iter().zip(&x) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn least_squares_recovers_overdetermined_fit() {
        let a = Matrix::from_row_major(3, 2, vec![1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let b = vec![1.0, 2.0, 3.0];
        let z = least_squares_columns(&a, &[0, 1], &b);
        assert_abs_diff_eq!(z[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn least_squares_tolerates_dependent_columns() {
        let a = Matrix::from_row_major(2, 2, vec![1.0, 2.0, 1.0, 2.0]);
        let z = least_squares_columns(&a, &[0, 1], &[3.0, 3.0]);
        assert_abs_diff_eq!(z[0] + 2.0 * z[1], 3.0, epsilon = 1e-12);
    }
}
