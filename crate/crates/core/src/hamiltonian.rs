//! Monotone, globally Lipschitz extension of the quadratic cone energy.
//!
//! With `C(Gu) = ½ u·Gu` on the cone `{Gu : u ≥ 0}`, the regularization is
//! `C̃_R(y) = max(C(y), 2L(‖y‖₁,* − R))` inside the ball of radius `2R` and
//! `2L(‖y‖₁,* − R)` outside, with `L = 4R/m`. The extension is
//! `H_R(y) = inf { C̃_R(w) : w in the cone, w ≥ y }`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dyadic::{norm_l1, norm_l1_star};
use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelMatrix};
use crate::linalg::{dot, symmetric_eigenvalues, Matrix};
use crate::optim::{nnls, solve_qp, QpOptions, QpProblem};
use crate::scalar::{pos, Scalar};

/// Absolute cone-membership tolerance in the dual norm.
pub const CONE_TOL: f64 = 1e-9;

const STACK_DIM: usize = 8;

/// A Hamiltonian on `R^d` with a known Lipschitz constant in the dual norm.
pub trait Hamiltonian<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, y: &[T]) -> Result<T>;
    /// Lipschitz constant with respect to `‖·‖₁,*`.
    fn lip_bound(&self) -> T;
    /// Typical gradient radius, used to scale audit samples.
    fn radius(&self) -> T;
    /// Matrix whose non-negative column combinations form the cone, if any.
    fn cone_matrix(&self) -> Option<&Matrix<T>> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct ConeDecomposition<T: Scalar> {
    /// Best non-negative weights found.
    pub u: Vec<T>,
    /// `‖Gu − y‖₁,*`
    pub residual: T,
    pub in_cone: bool,
    /// `norm_l1(u)`
    pub mass: T,
    /// A priori bound `‖Gu‖₁,* / m` on the mass when `m > 0` is known.
    pub mass_bound: Option<T>,
    pub converged: bool,
}

fn decompose<T: Scalar>(g: &Matrix<T>, y: &[T], tol: T, m: Option<T>) -> ConeDecomposition<T> {
    let sol = nnls(g, y);
    let gu = g.mul_vec(&sol.x);
    let diff: Vec<T> = gu.iter().zip(y).map(|(&a, &b)| a - b).collect();
    let residual = norm_l1_star(&diff);
    ConeDecomposition {
        mass: norm_l1(&sol.x),
        mass_bound: m.map(|m| norm_l1_star(&gu) / m),
        in_cone: residual <= tol,
        u: sol.x,
        residual,
        converged: sol.converged,
    }
}

/// Non-negative least squares decomposition `y ≈ Gu`, `u ≥ 0`.
pub fn cone_decompose<T: Scalar>(
    g: &KernelMatrix<T>,
    y: &[T],
    tol: T,
) -> Result<ConeDecomposition<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument(
            "cone tolerance must be positive".into(),
        ));
    }
    if y.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: y.len(),
        });
    }
    Ok(decompose(g.matrix(), y, tol, None))
}

/// `H_{K,R}` for a kernel matrix with positive entries.
#[derive(Debug, Clone)]
pub struct ExtendedHamiltonian<T: Scalar> {
    g: Matrix<T>,
    d: usize,
    r: T,
    m: T,
    upper: T,
    slope: T,
    lip: T,
    reference: Vec<T>,
    inverse: Option<Matrix<T>>,
    convex: bool,
    seed: u64,
    starts: usize,
}

impl<T: Scalar> ExtendedHamiltonian<T> {
    /// Builds the extension for `G^(K)` of `kernel` with cutoff radius `r`.
    pub fn new(g: &KernelMatrix<T>, kernel: &Kernel<T>, r: T) -> Result<Self> {
        Self::from_matrix(g.matrix().clone(), kernel.m(), kernel.upper(), r)
    }

    /// Builds the extension for any symmetric `d×d` matrix with entries in `[m/d², M/d²]`.
    pub fn from_matrix(g: Matrix<T>, m: T, upper: T, r: T) -> Result<Self> {
        if !g.is_symmetric() {
            return Err(Error::InvalidArgument(
                "matrix must be square and symmetric".into(),
            ));
        }
        if !(m > T::zero()) {
            return Err(Error::Hypothesis(format!(
                "kernel lower bound m = {m} must be positive"
            )));
        }
        if !(upper >= m) {
            return Err(Error::InvalidArgument(
                "upper bound below lower bound".into(),
            ));
        }
        if !(r > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "cutoff radius R = {r} must be positive"
            )));
        }
        let d = g.rows();
        let d2 = T::from_usize_exact(d * d);
        let tiny = T::c(1e-12) * upper / d2;
        if g.as_slice()
            .iter()
            .any(|&v| v < m / d2 - tiny || v > upper / d2 + tiny)
        {
            return Err(Error::Hypothesis(
                "matrix entries outside [m/d², M/d²]".into(),
            ));
        }
        let ones = vec![T::one(); d];
        let reference = g.mul_vec(&ones).into_iter().map(|v| v / m).collect();
        let ev = symmetric_eigenvalues(&g);
        let spread = ev.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        let convex = ev[0] >= -T::c(1e-12) * spread;
        let inverse = if ev[0] > T::c(1e-10) * spread {
            g.inverse()
        } else {
            None
        };
        let four = T::c(4.0);
        Ok(Self {
            d,
            r,
            m,
            upper,
            slope: four * r / m,
            lip: T::c(8.0) * r * upper / (m * m),
            reference,
            inverse,
            convex,
            seed: 0,
            starts: 32,
            g,
        })
    }

    /// Seed for the randomized optimizer starts.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_radius(&self, r: T) -> Result<Self> {
        Ok(Self::from_matrix(self.g.clone(), self.m, self.upper, r)?.with_seed(self.seed))
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.g
    }

    /// Cutoff radius `R`.
    pub fn cutoff(&self) -> T {
        self.r
    }

    /// Slope `L = 4R/m`.
    pub fn slope(&self) -> T {
        self.slope
    }

    pub fn m(&self) -> T {
        self.m
    }

    pub fn upper(&self) -> T {
        self.upper
    }

    /// `v = Gι/m`.
    pub fn reference_vector(&self) -> &[T] {
        &self.reference
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: len,
            });
        }
        Ok(())
    }

    fn ell(&self, s: T) -> T {
        T::c(2.0) * self.slope * (s - self.r)
    }

    fn energy(&self, u: &[T]) -> T {
        T::c(0.5) * self.g.quad_form(u)
    }

    fn c_tilde(&self, u: &[T]) -> T {
        let s = norm_l1_star(&self.g.mul_vec(u));
        if s <= T::c(2.0) * self.r {
            self.energy(u).max(self.ell(s))
        } else {
            self.ell(s)
        }
    }

    /// `C̃_R(Gu)`.
    pub fn regularized_c(&self, u: &[T]) -> Result<T> {
        self.check_dim(u.len())?;
        if let Some((index, &v)) = u.iter().enumerate().find(|(_, v)| !(**v >= T::zero())) {
            return Err(Error::NegativeEntry {
                index,
                value: v.to_f64_lossy(),
            });
        }
        Ok(self.c_tilde(u))
    }

    pub fn cone_decompose(&self, y: &[T], tol: T) -> Result<ConeDecomposition<T>> {
        self.check_dim(y.len())?;
        Ok(decompose(&self.g, y, tol, Some(self.m)))
    }

    /// `C̃_R(Gũ)` for `ũ = u₊ + c ι/m`, where `u` solves `Gu = y` up to `1e-11` and the
    /// dominating correction `c = ‖(y − Gu₊)₊‖₁,*` makes `Gũ ≥ y`. Points within rounding
    /// distance of the cone boundary thus stay on the fast path with an upper bound that
    /// is exact on the cone.
    fn cone_energy(&self, y: &[T], norm: T) -> Option<T> {
        let d = self.d;
        if d <= STACK_DIM {
            if let Some(inv) = &self.inverse {
                // stack buffers and plain loops keep the grid solver's inner loop cheap
                let (inv, g, y) = (inv.as_slice(), self.g.as_slice(), &y[..d]);
                let mut u = [T::zero(); STACK_DIM];
                let mut gu = [T::zero(); STACK_DIM];
                for i in 0..d {
                    let row = &inv[i * d..(i + 1) * d];
                    let mut s = T::zero();
                    for j in 0..d {
                        s += row[j] * y[j];
                    }
                    if s > T::zero() {
                        u[i] = s;
                    }
                }
                for i in 0..d {
                    let row = &g[i * d..(i + 1) * d];
                    let mut s = T::zero();
                    for j in 0..d {
                        s += row[j] * u[j];
                    }
                    gu[i] = s;
                }
                return self.dominated_energy(y, norm, &mut u[..d], &mut gu[..d]);
            }
        }
        let mut u: Vec<T> = match &self.inverse {
            Some(inv) => inv
                .mul_vec(y)
                .into_iter()
                .map(|v| v.max(T::zero()))
                .collect(),
            None => nnls(&self.g, y).x,
        };
        let mut gu = self.g.mul_vec(&u);
        self.dominated_energy(y, norm, &mut u, &mut gu)
    }

    #[inline]
    fn dominated_energy(&self, y: &[T], norm: T, u: &mut [T], gu: &mut [T]) -> Option<T> {
        let d = u.len();
        let df = T::from_usize_exact(d);
        let mut res = T::zero();
        let mut gap = T::zero();
        for i in 0..d {
            let diff = y[i] - gu[i];
            if diff > gap {
                gap = diff;
            }
            if diff.abs() > res {
                res = diff.abs();
            }
        }
        let scale = if norm > T::one() { norm } else { T::one() };
        if !(res * df <= T::c(1e-11) * scale) {
            return None;
        }
        if gap > T::zero() {
            let c = gap * df;
            for i in 0..d {
                u[i] += c / self.m;
                gu[i] += c * self.reference[i];
            }
        }
        let mut e = T::zero();
        let mut top = T::zero();
        for i in 0..d {
            e += u[i] * gu[i];
            if gu[i].abs() > top {
                top = gu[i].abs();
            }
        }
        let half = T::c(0.5) * e;
        let lin = self.ell(top * df);
        Some(if lin > half { lin } else { half })
    }

    /// Feasible weights built from the dominating-vector construction.
    fn dominating_start(&self, y: &[T]) -> Vec<T> {
        let yp: Vec<T> = y.iter().map(|&v| pos(v)).collect();
        let mut u = nnls(&self.g, &yp).x;
        let gu = self.g.mul_vec(&u);
        let gap: Vec<T> = y.iter().zip(&gu).map(|(&a, &b)| pos(a - b)).collect();
        let c = norm_l1_star(&gap) * (T::one() + T::c(1e-12));
        for x in u.iter_mut() {
            *x += c / self.m;
        }
        u
    }

    /// Evaluates `H_R(y)`.
    pub fn evaluate(&self, y: &[T]) -> Result<T> {
        self.check_dim(y.len())?;
        let mut positive = false;
        let mut big = T::zero();
        for &v in y {
            if !v.is_finite() {
                return Err(Error::InvalidArgument("non-finite argument".into()));
            }
            positive |= v > T::zero();
            if v.abs() > big {
                big = v.abs();
            }
        }
        if !positive {
            return Ok(T::zero());
        }
        let norm = big * T::from_usize_exact(self.d);
        if norm <= self.r {
            if let Some(e) = self.cone_energy(y, norm) {
                return Ok(e);
            }
        }
        if self.convex {
            self.evaluate_convex(y)
        } else {
            self.evaluate_multistart(y)
        }
    }

    fn qp_rows(&self, y: &[T], sigma: Option<T>) -> (Matrix<T>, Vec<T>) {
        let d = self.d;
        let extra = if sigma.is_some() { d } else { 0 };
        let mut a = Matrix::zeros(2 * d + extra, d);
        let mut b = vec![T::zero(); 2 * d + extra];
        let df = T::from_usize_exact(d);
        for k in 0..d {
            for j in 0..d {
                a[(k, j)] = self.g[(k, j)];
            }
            b[k] = y[k];
            a[(d + k, k)] = T::one();
            if let Some(s) = sigma {
                for j in 0..d {
                    a[(2 * d + k, j)] = -df * self.g[(k, j)];
                }
                b[2 * d + k] = -s;
            }
        }
        (a, b)
    }

    fn perturbed_start(&self, y: &[T]) -> Vec<T> {
        let mut u = self.dominating_start(y);
        if self.seed != 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            for x in u.iter_mut() {
                *x = *x * T::c(1.0 + rng.gen::<f64>()) + T::c(0.1 * rng.gen::<f64>());
            }
        }
        u
    }

    fn min_energy(&self, y: &[T], sigma: Option<T>, start: &[T]) -> Result<(T, Vec<T>)> {
        let (a, b) = self.qp_rows(y, sigma);
        let prob = QpProblem {
            q: Some(self.g.clone()),
            c: vec![T::zero(); self.d],
            a,
            b,
        };
        let sol = solve_qp(&prob, start, QpOptions::default());
        if !sol.converged && sol.infeasibility > T::c(1e-9) {
            return Err(Error::OptimizerFailed(format!(
                "energy QP stopped after {} iterations with infeasibility {}",
                sol.iterations, sol.infeasibility
            )));
        }
        let u: Vec<T> = sol.x.into_iter().map(|v| v.max(T::zero())).collect();
        Ok((self.energy(&u), u))
    }

    /// Smallest `‖Gu‖₁,*` over `u ≥ 0`, `Gu ≥ y`.
    fn min_radius(&self, y: &[T], start: &[T]) -> Result<T> {
        let d = self.d;
        let df = T::from_usize_exact(d);
        let mut a = Matrix::zeros(3 * d + 1, d + 1);
        let mut b = vec![T::zero(); 3 * d + 1];
        for k in 0..d {
            for j in 0..d {
                a[(k, j)] = -df * self.g[(k, j)];
                a[(d + k, j)] = self.g[(k, j)];
            }
            a[(k, d)] = T::one();
            b[d + k] = y[k];
            a[(2 * d + k, k)] = T::one();
        }
        a[(3 * d, d)] = T::one();
        let mut c = vec![T::zero(); d + 1];
        c[d] = T::one();
        let mut x0 = start.to_vec();
        x0.push(norm_l1_star(&self.g.mul_vec(start)) * T::c(1.1) + T::one());
        let prob = QpProblem { q: None, c, a, b };
        let sol = solve_qp(&prob, &x0, QpOptions::default());
        if !sol.converged && sol.infeasibility > T::c(1e-9) {
            return Err(Error::OptimizerFailed("radius LP did not converge".into()));
        }
        Ok(sol.x[d])
    }

    fn evaluate_convex(&self, y: &[T]) -> Result<T> {
        let two_r = T::c(2.0) * self.r;
        let start = self.perturbed_start(y);
        let (q0, u0) = self.min_energy(y, None, &start)?;
        let s0 = norm_l1_star(&self.g.mul_vec(&u0));
        if s0 <= two_r && self.ell(s0) <= q0 {
            return Ok(q0);
        }
        let s_star = self.min_radius(y, &start)?;
        if s_star >= two_r {
            return Ok(self.ell(s_star));
        }
        // the optimum balances the energy against the linear branch on the boundary
        // of a dual-norm ball: find σ with φ(σ) = ℓ(σ), φ(σ) the minimal energy in B_σ
        let phi = |sigma: T| self.min_energy(y, Some(sigma), &u0).map(|(v, _)| v);
        let mut hi = s0.min(two_r);
        let mut phi_hi = if hi == s0 { q0 } else { phi(hi)? };
        let mut lo = s_star + T::c(1e-12) * s_star.max(T::one());
        if lo >= hi {
            return Ok(self.ell(hi).max(phi_hi));
        }
        let mut phi_lo = phi(lo)?;
        if phi_lo <= self.ell(lo) {
            return Ok(self.ell(lo));
        }
        // φ decreases and ℓ increases, so every bracket [lo, hi] around the crossing
        // gives max(ℓ(lo), φ(hi)) ≤ H ≤ min(φ(lo), ℓ(hi))
        let mut h_lo = phi_lo - self.ell(lo);
        let mut h_hi = phi_hi - self.ell(hi);
        let mut side = 0i8;
        for _ in 0..100 {
            let upper = phi_lo.min(self.ell(hi));
            let lower = self.ell(lo).max(phi_hi);
            if upper - lower <= T::c(1e-13) * upper.max(T::one()) || hi - lo <= T::epsilon() * hi {
                break;
            }
            let mut sigma = lo + (hi - lo) * h_lo / (h_lo - h_hi);
            if !(sigma > lo && sigma < hi) {
                sigma = (lo + hi) * T::c(0.5);
            }
            let p = phi(sigma)?;
            let h = p - self.ell(sigma);
            if h > T::zero() {
                lo = sigma;
                phi_lo = p;
                h_lo = h;
                if side == 1 {
                    h_hi *= T::c(0.5);
                }
                side = 1;
            } else {
                hi = sigma;
                phi_hi = p;
                h_hi = h;
                if side == -1 {
                    h_lo *= T::c(0.5);
                }
                side = -1;
            }
        }
        Ok(phi_lo.min(self.ell(hi)))
    }

    /// Heuristic route for kernels whose matrix is not positive semidefinite.
    fn evaluate_multistart(&self, y: &[T]) -> Result<T> {
        let base = self.dominating_start(y);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let df = T::from_usize_exact(self.d);
        let repair = |u: &mut Vec<T>| {
            let gu = self.g.mul_vec(u);
            let gap: Vec<T> = y.iter().zip(&gu).map(|(&a, &b)| pos(a - b)).collect();
            let c = norm_l1_star(&gap) * (T::one() + T::c(1e-12));
            if c > T::zero() {
                for x in u.iter_mut() {
                    *x += c / self.m;
                }
            }
        };
        let mut best = T::infinity();
        for s in 0..self.starts {
            let mut u: Vec<T> = base
                .iter()
                .map(|&v| {
                    if s == 0 {
                        v
                    } else {
                        v * T::c(rng.gen::<f64>() * 2.0)
                    }
                })
                .collect();
            repair(&mut u);
            let mut f = self.c_tilde(&u);
            let mut eta = T::one();
            for _ in 0..400 {
                let gu = self.g.mul_vec(&u);
                let s_val = norm_l1_star(&gu);
                let grad: Vec<T> =
                    if s_val <= T::c(2.0) * self.r && self.energy(&u) >= self.ell(s_val) {
                        gu
                    } else {
                        let k = (0..self.d)
                            .max_by(|&i, &j| gu[i].abs().partial_cmp(&gu[j].abs()).unwrap())
                            .unwrap();
                        let sign = gu[k].signum();
                        (0..self.d)
                            .map(|j| T::c(2.0) * self.slope * df * sign * self.g[(k, j)])
                            .collect()
                    };
                let gn = dot(&grad, &grad).sqrt();
                if gn == T::zero() {
                    break;
                }
                let mut cand: Vec<T> = u
                    .iter()
                    .zip(&grad)
                    .map(|(&a, &g)| (a - eta * g / gn).max(T::zero()))
                    .collect();
                repair(&mut cand);
                let fc = self.c_tilde(&cand);
                if fc < f {
                    u = cand;
                    f = fc;
                    eta *= T::c(1.2);
                } else {
                    eta *= T::c(0.5);
                    if eta < T::c(1e-14) {
                        break;
                    }
                }
            }
            let gu = self.g.mul_vec(&u);
            if gu.iter().zip(y).all(|(&a, &b)| a >= b - T::c(1e-9)) && f < best {
                best = f;
            }
        }
        if best.is_finite() {
            Ok(best)
        } else {
            Err(Error::OptimizerFailed(
                "no feasible multistart iterate".into(),
            ))
        }
    }
}

impl<T: Scalar> Hamiltonian<T> for ExtendedHamiltonian<T> {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, y: &[T]) -> Result<T> {
        self.evaluate(y)
    }

    fn lip_bound(&self) -> T {
        self.lip
    }

    fn radius(&self) -> T {
        self.r
    }

    fn cone_matrix(&self) -> Option<&Matrix<T>> {
        Some(&self.g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct LipschitzAudit<T: Scalar> {
    pub max_ratio: T,
    pub bound: T,
    pub n_samples: usize,
    pub seed: u64,
    pub monotone_violations: usize,
    /// Largest `H(y) − H(y + δ)` seen over `δ ≥ 0`.
    pub worst_monotone_gap: T,
    pub min_value: T,
    pub ok: bool,
}

fn random_vec<T: Scalar>(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Vec<T> {
    (0..d)
        .map(|_| T::c(lo + (hi - lo) * rng.gen::<f64>()))
        .collect()
}

fn sample_point<T: Scalar, H: Hamiltonian<T> + ?Sized>(
    h: &H,
    rng: &mut ChaCha8Rng,
    kind: usize,
) -> Vec<T> {
    let d = h.dim();
    let df = T::from_usize_exact(d);
    let r = h.radius();
    let box_point = |rng: &mut ChaCha8Rng| -> Vec<T> {
        random_vec::<T>(rng, d, -1.0, 1.0)
            .into_iter()
            .map(|v| v * T::c(2.5) * r / df)
            .collect()
    };
    match (kind, h.cone_matrix()) {
        (1, Some(g)) | (2, Some(g)) => {
            let u: Vec<T> = (0..d)
                .map(|_| T::c(-(1.0 - rng.gen::<f64>()).ln()))
                .collect();
            let y = g.mul_vec(&u);
            let target = T::c(2.5 * rng.gen::<f64>()) * r;
            let s = norm_l1_star(&y).max(T::min_positive_value());
            let mut y: Vec<T> = y.into_iter().map(|v| v * target / s).collect();
            if kind == 2 {
                let noise = box_point(rng);
                for (a, b) in y.iter_mut().zip(noise) {
                    *a += b * T::c(0.2);
                }
            }
            y
        }
        _ => box_point(rng),
    }
}

/// Samples pairs and reports the largest `|H(y) − H(y')| / ‖y − y'‖₁,*` together with
/// monotonicity violations `H(y) > H(y + δ) + 1e-9` for `δ ≥ 0`.
pub fn lipschitz_audit<T: Scalar, H: Hamiltonian<T> + ?Sized>(
    h: &H,
    n_samples: usize,
    seed: u64,
) -> Result<LipschitzAudit<T>> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument(
            "at least one sample is required".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = h.dim();
    let df = T::from_usize_exact(d);
    let r = h.radius();
    let mut max_ratio = T::zero();
    let mut worst_gap = T::neg_infinity();
    let mut violations = 0;
    let mut min_value = T::infinity();
    for i in 0..n_samples {
        let y = sample_point(h, &mut rng, i % 3);
        let eps = T::c(10f64.powf(-4.0 * rng.gen::<f64>()));
        let w = random_vec::<T>(&mut rng, d, -1.0, 1.0);
        let y_near: Vec<T> = y
            .iter()
            .zip(&w)
            .map(|(&a, &b)| a + eps * b * r / df)
            .collect();
        let scale = T::c(10f64.powf(-3.0 * rng.gen::<f64>()));
        let delta: Vec<T> = (0..d)
            .map(|_| {
                if rng.gen::<f64>() < 0.3 {
                    T::zero()
                } else {
                    T::c(rng.gen::<f64>()) * scale * r / df
                }
            })
            .collect();
        let y_up: Vec<T> = y.iter().zip(&delta).map(|(&a, &b)| a + b).collect();
        let (hy, hn, hu) = (h.eval(&y)?, h.eval(&y_near)?, h.eval(&y_up)?);
        min_value = min_value.min(hy).min(hn).min(hu);
        for (other, val) in [(&y_near, hn), (&y_up, hu)] {
            let diff: Vec<T> = y.iter().zip(other.iter()).map(|(&a, &b)| a - b).collect();
            let nd = norm_l1_star(&diff);
            if nd > T::zero() {
                max_ratio = max_ratio.max((hy - val).abs() / nd);
            }
        }
        let gap = hy - hu;
        worst_gap = worst_gap.max(gap);
        if gap > T::c(1e-9) {
            violations += 1;
        }
    }
    let bound = h.lip_bound();
    Ok(LipschitzAudit {
        ok: max_ratio <= bound + T::c(1e-8) && violations == 0 && min_value >= -T::c(1e-12),
        max_ratio,
        bound,
        n_samples,
        seed,
        monotone_violations: violations,
        worst_monotone_gap: worst_gap,
        min_value,
    })
}
