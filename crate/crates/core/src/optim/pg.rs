//! Accelerated projected-gradient ascent with backtracking and adaptive restart.

use rayon::prelude::*;

use crate::linalg::max_abs;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct PgOptions<T> {
    pub max_iter: usize,
    /// Stop when `‖y − Π(y + ∇f(y))‖∞` falls below this.
    pub tol: T,
}

impl<T: Scalar> Default for PgOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: T::c(1e-11),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgResult<T> {
    pub y: Vec<T>,
    pub value: T,
    pub kkt_residual: T,
    pub iterations: usize,
    pub converged: bool,
    pub start_index: usize,
}

/// `‖y − Π(y + g)‖∞`, zero exactly at stationary points of the constrained problem.
pub fn kkt_residual<T: Scalar>(y: &[T], g: &[T], project: &impl Fn(&mut [T])) -> T {
    let mut p: Vec<T> = y.iter().zip(g).map(|(&a, &b)| a + b).collect();
    project(&mut p);
    y.iter()
        .zip(&p)
        .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
}

/// Maximizes `f` (returning value and gradient) over the set with Euclidean projection
/// `project`, starting from `start`.
pub fn maximize<T, F, P>(f: &F, project: &P, start: &[T], opts: PgOptions<T>) -> PgResult<T>
where
    T: Scalar,
    F: Fn(&[T]) -> (T, Vec<T>),
    P: Fn(&mut [T]),
{
    let mut y = start.to_vec();
    project(&mut y);
    let (mut fy, mut gy) = f(&y);
    let mut z = y.clone();
    let mut gz = gy.clone();
    let mut t = T::one();
    let gmax = max_abs(&gy).max(T::c(1e-300));
    let mut eta = (max_abs(&y).max(T::one()) / gmax).min(T::c(1e6));
    let half = T::c(0.5);
    let mut residual = kkt_residual(&y, &gy, project);
    let mut iterations = 0;
    while iterations < opts.max_iter && residual > opts.tol {
        iterations += 1;
        let mut accepted = None;
        for _ in 0..60 {
            let mut cand: Vec<T> = z.iter().zip(&gz).map(|(&a, &b)| a + eta * b).collect();
            project(&mut cand);
            let (fc, gc) = f(&cand);
            // local Lipschitz test on the gradient: value differences drown in rounding
            // long before the iterate converges
            let mut sq = T::zero();
            let mut dg = T::zero();
            for i in 0..cand.len() {
                let dlt = cand[i] - z[i];
                let e = gc[i] - gz[i];
                sq += dlt * dlt;
                dg += e * e;
            }
            if dg * eta * eta <= sq {
                accepted = Some((cand, fc, gc));
                break;
            }
            eta *= half;
        }
        let Some((cand, fc, gc)) = accepted else {
            break;
        };
        // restart when the momentum points against the gradient step; values are too flat
        // near the optimum to drive this decision
        let against = z
            .iter()
            .zip(&cand)
            .zip(&y)
            .fold(T::zero(), |s, ((&zi, &ci), &yi)| s + (zi - ci) * (ci - yi));
        let t_next = if against > T::zero() {
            T::one()
        } else {
            (T::one() + (T::one() + T::c(4.0) * t * t).sqrt()) * half
        };
        let beta = if against > T::zero() {
            T::zero()
        } else {
            (t - T::one()) / t_next
        };
        let mut zp: Vec<T> = cand
            .iter()
            .zip(&y)
            .map(|(&c, &p)| c + beta * (c - p))
            .collect();
        project(&mut zp);
        y = cand;
        fy = fc;
        gy = gc;
        residual = kkt_residual(&y, &gy, project);
        if beta == T::zero() {
            z = y.clone();
            gz = gy.clone();
        } else {
            gz = f(&zp).1;
            z = zp;
        }
        t = t_next;
        eta *= T::c(1.25);
    }
    PgResult {
        y,
        value: fy,
        kkt_residual: residual,
        iterations,
        converged: residual <= opts.tol,
        start_index: 0,
    }
}

/// Runs [`maximize`] from every start in parallel and keeps the best value (ties go to the
/// lowest start index, so the result does not depend on the thread count).
pub fn maximize_multistart<T, F, P>(
    f: &F,
    project: &P,
    starts: &[Vec<T>],
    opts: PgOptions<T>,
) -> PgResult<T>
where
    T: Scalar,
    F: Fn(&[T]) -> (T, Vec<T>) + Sync,
    P: Fn(&mut [T]) + Sync,
{
    let runs: Vec<PgResult<T>> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut r = maximize(f, project, s, opts);
            r.start_index = i;
            r
        })
        .collect();
    runs.into_iter()
        .reduce(|b, r| if b.value >= r.value { b } else { r })
        .expect("at least one start")
}
