//! Explicit monotone Lax-Friedrichs scheme for `∂_t f = H(∇f)` on the non-negative orthant.
//!
//! No data is imposed on the faces `x_k = 0`: the scheme switches to the interior-pointing
//! difference there and drops the viscosity along that axis. Outer truncation faces use a
//! ghost value `f_N + (ψ(x_N + dx e_k) − ψ(x_N))`, the initial slope carried along.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::initial::ProjectedInitial;
use crate::scalar::Scalar;

/// Largest dimension handled by the full-grid solver.
pub const MAX_DIM: usize = 6;
/// Default cap on the number of lattice points.
pub const DEFAULT_POINT_CAP: usize = 1 << 24;

/// Initial data sampled by the solver.
pub trait InitialValue<T: Scalar>: Sync {
    fn value(&self, x: &[T]) -> T;
}

impl<T: Scalar> InitialValue<T> for ProjectedInitial<T> {
    fn value(&self, x: &[T]) -> T {
        ProjectedInitial::value(self, x)
    }
}

impl<T: Scalar, F: Fn(&[T]) -> T + Sync> InitialValue<T> for F {
    fn value(&self, x: &[T]) -> T {
        self(x)
    }
}

/// The box `[0, X]^d` sampled with spacing `dx`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct LatticeDomain<T: Scalar> {
    scale: Option<u32>,
    dim: usize,
    dx: T,
    extent: T,
    query_margin: T,
    n: usize,
}

impl<T: Scalar> LatticeDomain<T> {
    /// `extent` is rounded up to a whole number of cells.
    pub fn new(dim: usize, dx: T, extent: T, query_margin: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !(dx > T::zero()) || !dx.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "spacing dx = {dx} must be positive"
            )));
        }
        if !(query_margin >= T::zero()) || !(extent >= query_margin) || !extent.is_finite() {
            return Err(Error::InvalidArgument(
                "need 0 ≤ query margin ≤ extent".into(),
            ));
        }
        let cells = (extent / dx - T::c(1e-9)).ceil().max(T::one());
        let n = cells
            .to_usize()
            .ok_or_else(|| Error::InvalidArgument("extent too large".into()))?
            + 1;
        Ok(Self {
            scale: None,
            dim,
            dx,
            extent: T::from_usize_exact(n - 1) * dx,
            query_margin,
            n,
        })
    }

    /// Domain for the scale-`K` equation in `d = 2^(K+1)` variables.
    pub fn for_scale(k: u32, dx: T, extent: T, query_margin: T) -> Result<Self> {
        if k > 10 {
            return Err(Error::ScaleTooLarge { k, cap: 10 });
        }
        let mut dom = Self::new(1usize << (k + 1), dx, extent, query_margin)?;
        dom.scale = Some(k);
        Ok(dom)
    }

    /// Smallest domain whose truncation cannot reach `[0, query_margin]^d` by time `t_end`
    /// when information travels at speed at most `speed`.
    pub fn covering(k: u32, dx: T, query_margin: T, speed: T, t_end: T) -> Result<Self> {
        Self::for_scale(
            k,
            dx,
            query_margin + T::c(2.0) * speed * t_end,
            query_margin,
        )
    }

    pub fn scale(&self) -> Option<u32> {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn extent(&self) -> T {
        self.extent
    }

    pub fn query_margin(&self) -> T {
        self.query_margin
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn n_points(&self) -> Option<usize> {
        self.n.checked_pow(self.dim as u32)
    }

    /// Multi-index of a flat index, first axis fastest.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        (0..self.dim)
            .map(|_| {
                let c = flat % self.n;
                flat /= self.n;
                c
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().rev().fold(0, |acc, &c| acc * self.n + c)
    }

    pub fn point(&self, idx: &[usize]) -> Vec<T> {
        idx.iter()
            .map(|&c| T::from_usize_exact(c) * self.dx)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions<T> {
    /// Number of stored time intervals; `snapshots + 1` times including 0 and `t_end`.
    pub snapshots: usize,
    pub point_cap: usize,
    /// Fixed time step; the largest stable one is used when absent.
    pub dt: Option<T>,
}

impl<T> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            snapshots: 4,
            point_cap: DEFAULT_POINT_CAP,
            dt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct SchemeDiagnostics<T: Scalar> {
    pub dt: T,
    pub steps: usize,
    /// Artificial viscosity per axis, `V·d`.
    pub alpha: T,
    /// `dt·d·α/dx`, at most 1/2.
    pub cfl_number: T,
    /// Largest `|f^(n+1) − f^n| / dt` over all steps and points.
    pub max_step_residual: T,
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound = "")]
pub struct GridSolution<T: Scalar> {
    domain: LatticeDomain<T>,
    times: Vec<T>,
    values: Vec<Vec<T>>,
    diagnostics: SchemeDiagnostics<T>,
}

/// Upper neighbour along one axis: a lattice value or the frozen outer slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Upper<T> {
    Cell(T),
    Frozen(T),
}

#[derive(Debug, Clone, Copy)]
struct Coeffs<T> {
    dt: T,
    dx: T,
    alpha: T,
}

/// One explicit step at a single point. `lower[k] = None` marks the face `x_k = 0`.
fn local_update<T: Scalar, H: Hamiltonian<T> + ?Sized>(
    h: &H,
    center: T,
    lower: &[Option<T>],
    upper: &[Upper<T>],
    c: Coeffs<T>,
    grad: &mut [T],
) -> Result<T> {
    let two = T::c(2.0);
    let mut visc = T::zero();
    for k in 0..grad.len() {
        let up = match upper[k] {
            Upper::Cell(v) => v,
            Upper::Frozen(s) => center + s,
        };
        grad[k] = match lower[k] {
            Some(lo) => {
                visc += up - two * center + lo;
                (up - lo) / (two * c.dx)
            }
            None => (up - center) / c.dx,
        };
    }
    Ok(center + c.dt * (h.eval(grad)? + c.alpha / (two * c.dx) * visc))
}

fn stable_dt<T: Scalar>(dim: usize, dx: T, alpha: T) -> T {
    dx / (T::c(2.0) * T::from_usize_exact(dim) * alpha)
}

/// Evolves `ψ` sampled on `dom` up to `t_end`.
pub fn solve<T, H, P>(
    psi: &P,
    h: &H,
    t_end: T,
    dom: &LatticeDomain<T>,
    opts: &SolveOptions<T>,
) -> Result<GridSolution<T>>
where
    T: Scalar,
    H: Hamiltonian<T> + ?Sized,
    P: InitialValue<T> + ?Sized,
{
    let d = dom.dim;
    if h.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: h.dim(),
        });
    }
    if d > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "full-grid solver is limited to d ≤ {MAX_DIM}, got d = {d}"
        )));
    }
    if !(t_end >= T::zero()) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "t_end = {t_end} must be finite and non-negative"
        )));
    }
    let total = dom
        .n_points()
        .filter(|&p| p <= opts.point_cap)
        .ok_or(Error::MemoryCap {
            points: dom.n_points().unwrap_or(usize::MAX),
            cap: opts.point_cap,
        })?;
    let speed = h.lip_bound();
    let required = dom.query_margin + T::c(2.0) * speed * t_end;
    if dom.extent < required * (T::one() - T::c(1e-12)) {
        return Err(Error::DomainTooSmall {
            extent: dom.extent.to_f64_lossy(),
            required: required.to_f64_lossy(),
        });
    }
    let alpha = speed * T::from_usize_exact(d);
    let limit = stable_dt(d, dom.dx, alpha);
    let (dt, steps) = match opts.dt {
        Some(dt) => {
            if !(dt > T::zero()) || dt > limit * (T::one() + T::c(1e-12)) {
                return Err(Error::Cfl {
                    dt: dt.to_f64_lossy(),
                    limit: limit.to_f64_lossy(),
                });
            }
            let steps = (t_end / dt - T::c(1e-9))
                .ceil()
                .max(T::zero())
                .to_usize()
                .unwrap_or(0);
            (
                if steps == 0 {
                    dt
                } else {
                    t_end / T::from_usize_exact(steps)
                },
                steps,
            )
        }
        None => {
            let steps = (t_end / limit).ceil().to_usize().unwrap_or(0);
            (
                if steps == 0 {
                    limit
                } else {
                    t_end / T::from_usize_exact(steps)
                },
                steps,
            )
        }
    };

    let n = dom.n;
    let strides: Vec<usize> = (0..d).map(|k| n.pow(k as u32)).collect();
    let face_len = n.pow(d as u32 - 1);

    // initial samples and frozen outer slopes
    let mut cur = vec![T::zero(); total];
    let mut slopes = vec![vec![T::zero(); face_len]; d];
    let mut idx = vec![0usize; d];
    let mut x = vec![T::zero(); d];
    for (i, v) in cur.iter_mut().enumerate() {
        for k in 0..d {
            x[k] = T::from_usize_exact(idx[k]) * dom.dx;
        }
        *v = psi.value(&x);
        for k in 0..d {
            if idx[k] == n - 1 {
                let xk = x[k];
                x[k] = xk + dom.dx;
                let beyond = psi.value(&x);
                x[k] = xk;
                slopes[k][face_index(i, strides[k], n)] = beyond - *v;
            }
        }
        advance(&mut idx, n);
    }
    if let Some(bad) = cur.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "initial condition is not finite at flat index {bad}"
        )));
    }

    let snaps = opts.snapshots.max(1).min(steps.max(1));
    let snap_steps: Vec<usize> = (0..=snaps)
        .map(|j| (j * steps + snaps / 2) / snaps)
        .collect();
    let mut times = vec![T::zero()];
    let mut values = vec![cur.clone()];

    let coeffs = Coeffs {
        dt,
        dx: dom.dx,
        alpha,
    };
    let mut next = vec![T::zero(); total];
    let mut lower = vec![None; d];
    let mut upper = vec![Upper::Cell(T::zero()); d];
    let mut grad = vec![T::zero(); d];
    let mut max_res = T::zero();
    let inv2dx = T::one() / (T::c(2.0) * dom.dx);
    let visc_coef = alpha * inv2dx;
    let two_d = T::c(2.0) * T::from_usize_exact(d);
    for step in 1..=steps {
        idx.iter_mut().for_each(|c| *c = 0);
        for row in 0..total / n {
            let b = row * n;
            // rows touching a face of a higher axis take the general path throughout
            let row_inner = (1..d).all(|k| idx[k] > 0 && idx[k] + 1 < n);
            for c0 in 0..n {
                let i = b + c0;
                let center = cur[i];
                let v = if row_inner && c0 > 0 && c0 + 1 < n {
                    let mut visc = T::zero();
                    for k in 0..d {
                        let s = strides[k];
                        let (up, lo) = (cur[i + s], cur[i - s]);
                        grad[k] = (up - lo) * inv2dx;
                        visc += up + lo;
                    }
                    center + dt * (h.eval(&grad)? + visc_coef * (visc - two_d * center))
                } else {
                    idx[0] = c0;
                    for k in 0..d {
                        let s = strides[k];
                        lower[k] = (idx[k] > 0).then(|| cur[i - s]);
                        upper[k] = if idx[k] + 1 < n {
                            Upper::Cell(cur[i + s])
                        } else {
                            Upper::Frozen(slopes[k][face_index(i, s, n)])
                        };
                    }
                    local_update(h, center, &lower, &upper, coeffs, &mut grad)?
                };
                if !v.is_finite() {
                    return Err(Error::NonFinite { step });
                }
                max_res = max_res.max((v - center).abs());
                next[i] = v;
            }
            idx[0] = n - 1;
            advance(&mut idx, n);
        }
        std::mem::swap(&mut cur, &mut next);
        if snap_steps.contains(&step) {
            times.push(if step == steps {
                t_end
            } else {
                T::from_usize_exact(step) * dt
            });
            values.push(cur.clone());
        }
    }
    Ok(GridSolution {
        domain: dom.clone(),
        times,
        values,
        diagnostics: SchemeDiagnostics {
            dt,
            steps,
            alpha,
            cfl_number: dt * T::from_usize_exact(d) * alpha / dom.dx,
            max_step_residual: max_res / dt,
        },
    })
}

fn face_index(i: usize, stride: usize, n: usize) -> usize {
    i % stride + (i / (stride * n)) * stride
}

fn advance(idx: &mut [usize], n: usize) {
    for c in idx.iter_mut() {
        *c += 1;
        if *c < n {
            return;
        }
        *c = 0;
    }
}

impl<T: Scalar> GridSolution<T> {
    pub fn domain(&self) -> &LatticeDomain<T> {
        &self.domain
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self, snapshot: usize) -> &[T] {
        &self.values[snapshot]
    }

    pub fn diagnostics(&self) -> &SchemeDiagnostics<T> {
        &self.diagnostics
    }

    pub fn value_at(&self, snapshot: usize, idx: &[usize]) -> T {
        self.values[snapshot][self.domain.flat_index(idx)]
    }

    fn interpolate(&self, snapshot: usize, x: &[T]) -> T {
        let dom = &self.domain;
        let d = dom.dim;
        let mut base = vec![0usize; d];
        let mut frac = vec![T::zero(); d];
        for k in 0..d {
            let s = x[k] / dom.dx;
            let b = s.floor().to_usize().unwrap_or(0).min(dom.n - 2);
            base[k] = b;
            frac[k] = (s - T::from_usize_exact(b)).max(T::zero()).min(T::one());
        }
        let vals = &self.values[snapshot];
        let mut acc = T::zero();
        let mut corner = vec![0usize; d];
        for mask in 0..(1usize << d) {
            let mut w = T::one();
            for k in 0..d {
                let bit = (mask >> k) & 1;
                corner[k] = base[k] + bit;
                w *= if bit == 1 {
                    frac[k]
                } else {
                    T::one() - frac[k]
                };
            }
            if w != T::zero() {
                acc += w * vals[dom.flat_index(&corner)];
            }
        }
        acc
    }

    /// Multilinear in space, linear in time. Refuses points outside `[0, query_margin]^d`.
    pub fn query(&self, t: T, x: &[T]) -> Result<T> {
        let dom = &self.domain;
        if x.len() != dom.dim {
            return Err(Error::DimensionMismatch {
                expected: dom.dim,
                got: x.len(),
            });
        }
        let slack = T::c(1e-12) * dom.query_margin.max(T::one());
        if x.iter()
            .any(|&v| !(v >= -slack && v <= dom.query_margin + slack))
        {
            return Err(Error::OutOfRegion(format!(
                "{x:?} outside [0, {}]^{}",
                dom.query_margin, dom.dim
            )));
        }
        let t_end = *self.times.last().unwrap();
        let t_slack = T::c(1e-12) * t_end.max(T::one());
        if !(t >= -t_slack && t <= t_end + t_slack) {
            return Err(Error::OutOfRegion(format!("time {t} outside [0, {t_end}]")));
        }
        let x: Vec<T> = x
            .iter()
            .map(|&v| v.max(T::zero()).min(dom.query_margin))
            .collect();
        let j = self.times.partition_point(|&s| s < t);
        if j < self.times.len() && (self.times[j] == t || j == 0) {
            return Ok(self.interpolate(j, &x));
        }
        if j == self.times.len() {
            return Ok(self.interpolate(j - 1, &x));
        }
        let (t0, t1) = (self.times[j - 1], self.times[j]);
        let w = (t - t0) / (t1 - t0);
        Ok((T::one() - w) * self.interpolate(j - 1, &x) + w * self.interpolate(j, &x))
    }

    /// Per stored time, `max |Δf|·d/dx` over lattice edges.
    pub fn lipschitz_profile(&self) -> Vec<(T, T)> {
        let dom = &self.domain;
        let d = dom.dim;
        let n = dom.n;
        let scale = T::from_usize_exact(d) / dom.dx;
        self.times
            .iter()
            .zip(&self.values)
            .map(|(&t, vals)| {
                let mut mx = T::zero();
                let mut idx = vec![0usize; d];
                for i in 0..vals.len() {
                    for k in 0..d {
                        if idx[k] + 1 < n {
                            mx = mx.max((vals[i + n.pow(k as u32)] - vals[i]).abs());
                        }
                    }
                    advance(&mut idx, n);
                }
                (t, mx * scale)
            })
            .collect()
    }

    /// `t,i1,...,id,value` rows for every stored time.
    pub fn to_csv(&self) -> String {
        let d = self.domain.dim;
        let mut out = String::from("t");
        for k in 1..=d {
            out.push_str(&format!(",i{k}"));
        }
        out.push_str(",value\n");
        for (t, vals) in self.times.iter().zip(&self.values) {
            let mut idx = vec![0usize; d];
            for v in vals {
                out.push_str(&format!("{:.16e}", t.to_f64_lossy()));
                for c in &idx {
                    out.push_str(&format!(",{c}"));
                }
                out.push_str(&format!(",{:.16e}\n", v.to_f64_lossy()));
                advance(&mut idx, self.domain.n);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct MonotoneCertificate<T: Scalar> {
    pub states: usize,
    pub probes: usize,
    /// Largest decrease of the update caused by raising one input.
    pub max_violation: T,
    pub ok: bool,
}

/// Probes the one-step update map at random states by raising each stencil input by `1e-3`.
/// States cycle through interior points, points on a face `x_k = 0` and points on an
/// outer face.
pub fn monotone_certificate<T: Scalar, H: Hamiltonian<T> + ?Sized>(
    h: &H,
    dx: T,
    n_states: usize,
    seed: u64,
) -> Result<MonotoneCertificate<T>> {
    let d = h.dim();
    let alpha = h.lip_bound() * T::from_usize_exact(d);
    let c = Coeffs {
        dt: stable_dt(d, dx, alpha),
        dx,
        alpha,
    };
    let eps = T::c(1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = h.radius() / T::from_usize_exact(d);
    let mut grad = vec![T::zero(); d];
    let mut probes = 0;
    let mut worst = T::neg_infinity();
    let mut ok = true;
    for s in 0..n_states {
        let center = T::c(rng.gen::<f64>() * 2.0 - 1.0);
        let face = rng.gen_range(0..d);
        let mut lower = Vec::with_capacity(d);
        let mut upper = Vec::with_capacity(d);
        for k in 0..d {
            let slope = |rng: &mut ChaCha8Rng| T::c(rng.gen::<f64>() * 3.0 - 1.0) * r * dx;
            let up = slope(&mut rng);
            let down = slope(&mut rng);
            lower.push(if s % 3 == 1 && k == face {
                None
            } else {
                Some(center - down)
            });
            upper.push(if s % 3 == 2 && k == face {
                Upper::Frozen(up)
            } else {
                Upper::Cell(center + up)
            });
        }
        let base = local_update(h, center, &lower, &upper, c, &mut grad)?;
        let tol = T::c(1e-14) * base.abs().max(T::one());
        let mut check = |v: T| {
            probes += 1;
            worst = worst.max(base - v);
            if v < base - tol {
                ok = false;
            }
        };
        check(local_update(h, center + eps, &lower, &upper, c, &mut grad)?);
        for k in 0..d {
            if let Some(lo) = lower[k] {
                let mut l = lower.clone();
                l[k] = Some(lo + eps);
                check(local_update(h, center, &l, &upper, c, &mut grad)?);
            }
            if let Upper::Cell(v) = upper[k] {
                let mut u = upper.clone();
                u[k] = Upper::Cell(v + eps);
                check(local_update(h, center, &lower, &u, c, &mut grad)?);
            }
        }
    }
    Ok(MonotoneCertificate {
        states: n_states,
        probes,
        max_violation: worst.max(T::zero()),
        ok,
    })
}
