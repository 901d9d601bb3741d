//! Dense primal-dual interior point method for small convex QPs
//! `min ½ xᵀQx + cᵀx  s.t.  A x ≥ b` (Mehrotra predictor-corrector).

use crate::linalg::{cholesky_in_place, cholesky_solve, dot, max_abs, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct QpProblem<T> {
    /// Positive semidefinite Hessian; `None` for a linear program.
    pub q: Option<Matrix<T>>,
    pub c: Vec<T>,
    pub a: Matrix<T>,
    pub b: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution<T> {
    pub x: Vec<T>,
    pub objective: T,
    /// Largest violation of `A x ≥ b` after row scaling.
    pub infeasibility: T,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QpOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for QpOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::c(1e-13),
            max_iter: 120,
        }
    }
}

impl<T: Scalar> QpProblem<T> {
    pub fn objective(&self, x: &[T]) -> T {
        let lin = dot(&self.c, x);
        match &self.q {
            Some(q) => lin + T::c(0.5) * q.quad_form(x),
            None => lin,
        }
    }
}

fn kkt_work<'a, T: Scalar>(fact: &'a mut Vec<T>, kkt: &[T]) -> &'a mut [T] {
    fact.copy_from_slice(kkt);
    fact
}

fn max_step<T: Scalar>(v: &[T], dv: &[T]) -> T {
    let mut a = T::one();
    for (&x, &dx) in v.iter().zip(dv) {
        if dx < T::zero() {
            a = a.min(-x / dx);
        }
    }
    a
}

/// Solves the QP from the (possibly infeasible) start `x0`.
pub fn solve_qp<T: Scalar>(prob: &QpProblem<T>, x0: &[T], opts: QpOptions<T>) -> QpSolution<T> {
    let n = prob.c.len();
    let m = prob.b.len();
    debug_assert_eq!(prob.a.rows(), m);
    debug_assert_eq!(prob.a.cols(), n);

    // unit row scaling of the constraints
    let mut a = prob.a.clone();
    let mut b = prob.b.clone();
    for i in 0..m {
        let s = max_abs(a.row(i));
        if s > T::zero() {
            for j in 0..n {
                a[(i, j)] /= s;
            }
            b[i] /= s;
        }
    }
    let qscale = prob.q.as_ref().map_or(T::zero(), |q| q.max_abs());
    let cscale = max_abs(&prob.c);
    let bscale = max_abs(&b);

    let mut x = x0.to_vec();
    let ax = a.mul_vec(&x);
    let mut s: Vec<T> = ax
        .iter()
        .zip(&b)
        .map(|(&p, &q)| (p - q).max(T::one()))
        .collect();
    let mut z = vec![T::one(); m];

    let mut kkt = vec![T::zero(); n * n];
    let mut fact = vec![T::zero(); n * n];
    let mut converged = false;
    let mut iterations = 0;
    let mf = T::from_usize_exact(m.max(1));

    for it in 0..opts.max_iter {
        iterations = it + 1;
        let ax = a.mul_vec(&x);
        let rp: Vec<T> = (0..m).map(|i| ax[i] - s[i] - b[i]).collect();
        let aty = a.transpose_mul_vec(&z);
        let qx = prob.q.as_ref().map(|q| q.mul_vec(&x));
        let rd: Vec<T> = (0..n)
            .map(|j| qx.as_ref().map_or(T::zero(), |v| v[j]) + prob.c[j] - aty[j])
            .collect();
        let mu = dot(&s, &z) / mf;
        let obj = prob.objective(&x);
        let xscale = max_abs(&x).max(T::one());
        let primal_ok = max_abs(&rp) <= opts.tol * (T::one() + bscale + xscale);
        let gap_ok = mu * mf <= opts.tol * (T::one() + obj.abs());
        let dual_scale = T::one() + cscale + qscale * xscale + max_abs(&aty);
        // the normal equations lose dual accuracy as slacks vanish; a tiny gap with a
        // feasible primal is accepted with a looser dual residual
        if primal_ok && gap_ok && max_abs(&rd) <= opts.tol.sqrt() * dual_scale {
            converged = true;
            break;
        }

        // KKT normal matrix Q + Aᵀ diag(z/s) A
        for v in kkt.iter_mut() {
            *v = T::zero();
        }
        if let Some(q) = &prob.q {
            kkt.copy_from_slice(q.as_slice());
        }
        for i in 0..m {
            let di = z[i] / s[i];
            let row = a.row(i);
            for j in 0..n {
                let rj = row[j];
                if rj == T::zero() {
                    continue;
                }
                let f = di * rj;
                for k in 0..=j {
                    kkt[j * n + k] += f * row[k];
                }
            }
        }
        for j in 0..n {
            for k in 0..j {
                kkt[k * n + j] = kkt[j * n + k];
            }
        }
        if !cholesky_in_place(kkt_work(&mut fact, &kkt), n) {
            // retry with a tiny diagonal shift relative to the largest pivot
            let diag_max = (0..n).fold(T::zero(), |mx, j| mx.max(kkt[j * n + j]));
            fact.copy_from_slice(&kkt);
            for j in 0..n {
                fact[j * n + j] += diag_max * T::epsilon() * T::c(16.0);
            }
            if !cholesky_in_place(&mut fact, n) {
                break;
            }
        }
        let kkt = &fact;

        let direction = |rc: &[T]| {
            // rhs = −rd − Aᵀ S⁻¹ (rc + Z rp)
            let tmp: Vec<T> = (0..m).map(|i| (rc[i] + z[i] * rp[i]) / s[i]).collect();
            let at = a.transpose_mul_vec(&tmp);
            let mut dx: Vec<T> = (0..n).map(|j| -rd[j] - at[j]).collect();
            cholesky_solve(kkt, n, &mut dx);
            let adx = a.mul_vec(&dx);
            let ds: Vec<T> = (0..m).map(|i| adx[i] + rp[i]).collect();
            let dz: Vec<T> = (0..m).map(|i| -(rc[i] + z[i] * ds[i]) / s[i]).collect();
            (dx, ds, dz)
        };

        // predictor
        let rc_aff: Vec<T> = (0..m).map(|i| s[i] * z[i]).collect();
        let (_, ds_a, dz_a) = direction(&rc_aff);
        let alpha_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a));
        let mu_aff = (0..m)
            .map(|i| (s[i] + alpha_aff * ds_a[i]) * (z[i] + alpha_aff * dz_a[i]))
            .fold(T::zero(), |acc, v| acc + v)
            / mf;
        let ratio = if mu > T::zero() {
            mu_aff / mu
        } else {
            T::zero()
        };
        let sigma = (ratio * ratio * ratio).min(T::one());

        // corrector
        let rc: Vec<T> = (0..m)
            .map(|i| s[i] * z[i] + ds_a[i] * dz_a[i] - sigma * mu)
            .collect();
        let (dx, ds, dz) = direction(&rc);
        let step = T::c(0.995)
            * max_step(&s, &ds)
                .min(max_step(&z, &dz))
                .min(T::one() / T::c(0.995));
        for j in 0..n {
            x[j] += step * dx[j];
        }
        for i in 0..m {
            s[i] = (s[i] + step * ds[i]).max(T::min_positive_value());
            z[i] = (z[i] + step * dz[i]).max(T::min_positive_value());
        }
    }

    let ax = a.mul_vec(&x);
    let infeasibility = ax
        .iter()
        .zip(&b)
        .fold(T::zero(), |mx, (&p, &q)| mx.max(q - p));
    QpSolution {
        objective: prob.objective(&x),
        x,
        infeasibility,
        converged,
        iterations,
    }
}
