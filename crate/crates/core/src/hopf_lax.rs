//! Hopf-Lax representations `sup_{y ≥ 0} ψ^(K)(x + y) − y·Gy/(2t)` for a non-negative
//! definite kernel matrix, on weight vectors and on measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dyadic::{project_measure, DiscreteMeasure, DyadicGrid, MeasureSpec};
use crate::error::{Error, Result};
use crate::initial::{InitialCondition, ProjectedInitial};
use crate::kernel::{g_mu_discrete, Kernel, KernelMatrix};
use crate::linalg::{dot, symmetric_eigenvalues, Matrix};
use crate::optim::{
    kkt_residual, maximize, maximize_multistart, project_capped, project_simplex, solve_qp,
    PgOptions, QpOptions, QpProblem,
};
use crate::scalar::{pos, Scalar};

pub const DEFAULT_STARTS: usize = 32;

#[derive(Debug, Clone, Copy)]
pub struct HopfLaxOptions<T> {
    /// Starts of the projected-gradient search for non-affine `ψ`.
    pub starts: usize,
    pub seed: u64,
    /// KKT tolerance `‖y − Π(y + ∇F(y))‖∞`.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for HopfLaxOptions<T> {
    fn default() -> Self {
        Self {
            starts: DEFAULT_STARTS,
            seed: 0,
            tol: T::c(1e-11),
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct HopfLaxResult<T: Scalar> {
    pub value: T,
    /// `y*` in the finite form, the weights of `ν*` in the measure form.
    pub maximizer: Vec<T>,
    pub scale: u32,
    pub kkt_residual: T,
    /// Bound on `‖y‖₁` the search was confined to.
    pub search_radius_used: T,
    pub n_starts: usize,
    /// False when the optimizer stagnated; the fields then describe the best iterate.
    pub converged: bool,
}

impl<T: Scalar> HopfLaxResult<T> {
    pub fn maximizer_measure(&self) -> Result<DiscreteMeasure<T>> {
        DiscreteMeasure::new(DyadicGrid::new(self.scale)?, self.maximizer.clone())
    }

    fn trivial(value: T, maximizer: Vec<T>, scale: u32) -> Self {
        Self {
            value,
            maximizer,
            scale,
            kkt_residual: T::zero(),
            search_radius_used: T::zero(),
            n_starts: 0,
            converged: true,
        }
    }
}

/// Finite-dimensional Hopf-Lax solver for one `(ψ^(K), G)` pair.
#[derive(Debug, Clone)]
pub struct HopfLax<T: Scalar> {
    psi: ProjectedInitial<T>,
    g: KernelMatrix<T>,
    m: T,
    opts: HopfLaxOptions<T>,
}

impl<T: Scalar> HopfLax<T> {
    /// Requires `G` non-negative definite with positive entries.
    pub fn new(psi: ProjectedInitial<T>, g: KernelMatrix<T>) -> Result<Self> {
        if psi.grid().scale() != g.grid().scale() {
            return Err(Error::GridMismatch(psi.grid().scale(), g.grid().scale()));
        }
        let d = T::from_usize_exact(g.dim());
        let min_entry = g
            .matrix()
            .as_slice()
            .iter()
            .fold(T::infinity(), |m, &v| m.min(v));
        if !(min_entry > T::zero()) {
            return Err(Error::Hypothesis(
                "kernel matrix entries must be positive for the unconstrained formula".into(),
            ));
        }
        check_psd(g.matrix())?;
        Ok(Self {
            psi,
            g,
            m: min_entry * d * d,
            opts: HopfLaxOptions::default(),
        })
    }

    pub fn with_options(mut self, opts: HopfLaxOptions<T>) -> Self {
        self.opts = opts;
        self
    }

    /// `min g(k k')` over the grid, so that `y·Gy ≥ m ‖y‖₁²` on the orthant.
    pub fn m(&self) -> T {
        self.m
    }

    pub fn initial(&self) -> &ProjectedInitial<T> {
        &self.psi
    }

    /// Radius in `‖·‖₁` outside which no `y` can beat `y = 0`.
    pub fn search_radius(&self, t: T) -> T {
        T::c(2.0) * t / self.m * self.psi.lip_l1()
    }

    pub fn value(&self, t: T, x: &[T]) -> Result<HopfLaxResult<T>> {
        check_time(t)?;
        check_point(x, self.g.dim())?;
        let scale = self.g.grid().scale();
        if t == T::zero() {
            return Ok(HopfLaxResult::trivial(
                self.psi.value(x),
                vec![T::zero(); x.len()],
                scale,
            ));
        }
        let radius = self.search_radius(t);
        let prog = Program {
            psi: &self.psi,
            g: self.g.matrix(),
            x,
            blocks: vec![Block {
                inv_t: T::one() / t,
                cap: radius * T::from_usize_exact(x.len()),
                exact: false,
            }],
        };
        let sol = prog.solve(&self.opts);
        Ok(HopfLaxResult {
            value: sol.value,
            maximizer: sol.y,
            scale,
            kkt_residual: sol.residual,
            search_radius_used: radius,
            n_starts: sol.n_starts,
            converged: sol.converged,
        })
    }

    /// `|f(t,x) − sup_{y≥0}[f(s,x+y) − y·Gy/(2(t−s))]|`, with the right side solved jointly
    /// over the outer and inner increments.
    pub fn semigroup_residual(&self, t: T, s: T, x: &[T]) -> Result<T> {
        if !(t > s && s > T::zero()) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "semigroup residual needs t > s > 0, got t={t}, s={s}"
            )));
        }
        let lhs = self.value(t, x)?;
        let d = T::from_usize_exact(x.len());
        let prog = Program {
            psi: &self.psi,
            g: self.g.matrix(),
            x,
            blocks: vec![
                Block {
                    inv_t: T::one() / (t - s),
                    cap: self.search_radius(t - s) * d,
                    exact: false,
                },
                Block {
                    inv_t: T::one() / s,
                    cap: self.search_radius(s) * d,
                    exact: false,
                },
            ],
        };
        let rhs = prog.solve(&self.opts);
        if !lhs.converged || !rhs.converged {
            return Err(Error::OptimizerFailed(format!(
                "semigroup sides did not converge (KKT residuals {} and {})",
                lhs.kkt_residual, rhs.residual
            )));
        }
        Ok((lhs.value - rhs.value).abs())
    }
}

/// One-shot form of [`HopfLax::value`].
pub fn hopf_lax_finite<T: Scalar>(
    psi: &ProjectedInitial<T>,
    g: &KernelMatrix<T>,
    t: T,
    x: &[T],
) -> Result<HopfLaxResult<T>> {
    HopfLax::new(psi.clone(), g.clone())?.value(t, x)
}

/// Shift making the kernel at least 1 on [-1, 1] for the mass-constrained form.
pub fn constraint_shift<T: Scalar>(g: &Kernel<T>) -> T {
    pos(T::one() - g.m())
}

/// `sup_ν ψ(μ + tν) − (t/2)∫G_ν dν` over discrete `ν ≥ 0` at scale `k`, optionally with
/// `ν` of total mass `mass`. The maximizer is returned as the weights of `ν*`.
pub fn hopf_lax_measure<T: Scalar>(
    psi: &InitialCondition<T>,
    g: &Kernel<T>,
    k: u32,
    t: T,
    mu: &MeasureSpec<T>,
    mass: Option<T>,
    opts: &HopfLaxOptions<T>,
) -> Result<HopfLaxResult<T>> {
    check_time(t)?;
    let grid = DyadicGrid::new(k)?;
    let x = project_measure(mu, grid)?.into_weights();
    let proj = psi.at_scale(g, grid)?;
    let gm = KernelMatrix::new(g, grid);
    let d = grid.len();
    let Some(a) = mass else {
        if !(g.m() > T::zero()) {
            return Err(Error::Hypothesis(format!(
                "the unconstrained form needs g bounded below by a positive constant (certified m = {})",
                g.m()
            )));
        }
        let mut r = HopfLax::new(proj, gm)?.with_options(*opts).value(t, &x)?;
        if t > T::zero() {
            r.maximizer.iter_mut().for_each(|v| *v /= t);
        }
        return Ok(r);
    };
    if !(a > T::zero()) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "mass constraint must be positive, got {a}"
        )));
    }
    // on {Σν = a} the shifted and original energies differ by a constant
    check_psd(KernelMatrix::new(&g.translate(constraint_shift(g)), grid).matrix())?;
    if t == T::zero() {
        return Ok(HopfLaxResult::trivial(proj.value(&x), vec![a; d], k));
    }
    let prog = Program {
        psi: &proj,
        g: gm.matrix(),
        x: &x,
        blocks: vec![Block {
            inv_t: T::one() / t,
            cap: t * a * T::from_usize_exact(d),
            exact: true,
        }],
    };
    let sol = prog.solve(opts);
    Ok(HopfLaxResult {
        value: sol.value,
        maximizer: sol.y.into_iter().map(|v| v / t).collect(),
        scale: k,
        kkt_residual: sol.residual,
        search_radius_used: t * a,
        n_starts: sol.n_starts,
        converged: sol.converged,
    })
}

/// `sup_k |G_{ν*}(k) − D_μψ(μ + tν*, k)|` over the grid of `result`.
pub fn first_order_residual<T: Scalar>(
    psi: &InitialCondition<T>,
    g: &Kernel<T>,
    result: &HopfLaxResult<T>,
    mu: &MeasureSpec<T>,
    t: T,
) -> Result<T> {
    check_time(t)?;
    let nu = result.maximizer_measure()?;
    let grid = nu.grid();
    let x = project_measure(mu, grid)?;
    let proj = psi.at_scale(g, grid)?;
    let w: Vec<T> = x
        .weights()
        .iter()
        .zip(nu.weights())
        .map(|(&a, &v)| a + t * v)
        .collect();
    let mut worst = T::zero();
    for k in 0..grid.len() {
        let z = grid.point(k);
        let gap = (g_mu_discrete(g, &nu, z) - proj.gateaux_density(&w, z)?).abs();
        worst = worst.max(gap);
    }
    Ok(worst)
}

fn check_psd<T: Scalar>(g: &Matrix<T>) -> Result<()> {
    let ev = symmetric_eigenvalues(g);
    let norm = ev.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if ev[0] < -T::c(1e-10) * norm {
        return Err(Error::Hypothesis(format!(
            "kernel matrix is not non-negative definite (smallest eigenvalue {})",
            ev[0]
        )));
    }
    Ok(())
}

fn check_time<T: Scalar>(t: T) -> Result<()> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    Ok(())
}

fn check_point<T: Scalar>(x: &[T], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    if let Some((index, &v)) = x
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= T::zero()) || !v.is_finite())
    {
        return Err(Error::NegativeEntry {
            index,
            value: v.to_f64_lossy(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Block<T> {
    /// `1/t` in front of `½ y·Gy`.
    inv_t: T,
    cap: T,
    /// `Σ y = cap` instead of `Σ y ≤ cap`.
    exact: bool,
}

/// `max ψ(x + Σ_b y_b) − Σ_b inv_t_b · ½ y_b·G y_b` over non-negative blocks with capped sums.
struct Program<'a, T: Scalar> {
    psi: &'a ProjectedInitial<T>,
    g: &'a Matrix<T>,
    x: &'a [T],
    blocks: Vec<Block<T>>,
}

struct Solution<T> {
    y: Vec<T>,
    value: T,
    residual: T,
    n_starts: usize,
    converged: bool,
}

impl<T: Scalar> Program<'_, T> {
    fn eval(&self, y: &[T]) -> (T, Vec<T>) {
        let d = self.x.len();
        let mut w = self.x.to_vec();
        for chunk in y.chunks(d) {
            w.iter_mut().zip(chunk).for_each(|(a, &b)| *a += b);
        }
        let (mut value, gpsi) = self.psi.value_and_gradient(&w);
        let mut grad = Vec::with_capacity(y.len());
        for (chunk, blk) in y.chunks(d).zip(&self.blocks) {
            let gy = self.g.mul_vec(chunk);
            value -= T::c(0.5) * blk.inv_t * dot(chunk, &gy);
            grad.extend(gpsi.iter().zip(&gy).map(|(&p, &q)| p - blk.inv_t * q));
        }
        (value, grad)
    }

    fn project(&self, y: &mut [T]) {
        for (chunk, blk) in y.chunks_mut(self.x.len()).zip(&self.blocks) {
            if blk.exact {
                project_simplex(chunk, blk.cap);
            } else {
                project_capped(chunk, blk.cap);
            }
        }
    }

    /// Zero, block vertices, then uniform points of the capped simplices.
    fn starts(&self, n: usize, seed: u64) -> Vec<Vec<T>> {
        let d = self.x.len();
        let len = d * self.blocks.len();
        let mut out = vec![vec![T::zero(); len]];
        'vertices: for (b, blk) in self.blocks.iter().enumerate() {
            for k in 0..d {
                if out.len() >= n {
                    break 'vertices;
                }
                let mut v = vec![T::zero(); len];
                v[b * d + k] = blk.cap;
                out.push(v);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while out.len() < n {
            let mut v = Vec::with_capacity(len);
            for blk in &self.blocks {
                let e: Vec<T> = (0..=d)
                    .map(|_| T::c(-(1.0 - rng.gen::<f64>()).ln()))
                    .collect();
                let total: T = if blk.exact {
                    e[..d].iter().copied().sum()
                } else {
                    e.iter().copied().sum()
                };
                v.extend(e[..d].iter().map(|&ei| blk.cap * ei / total));
            }
            out.push(v);
        }
        out
    }

    /// Interior-point solution of the affine case, where the program is a concave QP.
    fn qp_start(&self, p: &[T]) -> Vec<T> {
        let d = self.x.len();
        let nb = self.blocks.len();
        let n = d * nb;
        let mut q = Matrix::zeros(n, n);
        let mut a = Matrix::zeros(n + nb, n);
        let mut b = vec![T::zero(); n + nb];
        let mut x0 = vec![T::zero(); n];
        for (bi, blk) in self.blocks.iter().enumerate() {
            let o = bi * d;
            for i in 0..d {
                for j in 0..d {
                    q[(o + i, o + j)] = blk.inv_t * self.g[(i, j)];
                }
                a[(o + i, o + i)] = T::one();
                a[(n + bi, o + i)] = -T::one();
                x0[o + i] = blk.cap / T::from_usize_exact(2 * d);
            }
            b[n + bi] = -blk.cap;
        }
        let c: Vec<T> = (0..n).map(|i| -p[i % d]).collect();
        let prob = QpProblem {
            q: Some(q),
            c,
            a,
            b,
        };
        solve_qp(&prob, &x0, QpOptions::default()).x
    }

    fn solve(&self, opts: &HopfLaxOptions<T>) -> Solution<T> {
        let pg = PgOptions {
            max_iter: opts.max_iter,
            tol: opts.tol,
        };
        let f = |y: &[T]| self.eval(y);
        let proj = |y: &mut [T]| self.project(y);
        let affine = self
            .psi
            .affine()
            .filter(|_| self.blocks.iter().all(|b| !b.exact));
        let (r, n_starts) = match affine {
            Some((p, _)) => {
                let start = if p.iter().all(|&v| v <= T::zero()) {
                    // y = 0 is optimal: the linear part cannot gain and the energy is non-negative
                    vec![T::zero(); self.x.len() * self.blocks.len()]
                } else {
                    self.qp_start(p)
                };
                (maximize(&f, &proj, &start, pg), 1)
            }
            None => {
                let starts = self.starts(opts.starts.max(1), opts.seed);
                (maximize_multistart(&f, &proj, &starts, pg), starts.len())
            }
        };
        let residual = kkt_residual(&r.y, &self.eval(&r.y).1, &proj);
        Solution {
            y: r.y.into_iter().map(pos).collect(),
            value: r.value,
            residual,
            n_starts,
            converged: r.converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::SoftMinPiece;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn quad() -> Kernel<f64> {
        Kernel::quadratic(2.0)
    }

    fn linear_psi() -> InitialCondition<f64> {
        InitialCondition::linear(MeasureSpec::atom(-1.0, 1.0))
    }

    fn solver(psi: &InitialCondition<f64>, g: &Kernel<f64>, k: u32) -> HopfLax<f64> {
        let grid = DyadicGrid::new(k).unwrap();
        HopfLax::new(psi.at_scale(g, grid).unwrap(), KernelMatrix::new(g, grid)).unwrap()
    }

    fn soft_min() -> InitialCondition<f64> {
        InitialCondition::SoftMin {
            pieces: vec![
                SoftMinPiece {
                    rho: MeasureSpec::atom(-1.0, 1.0),
                    offset: 0.0,
                },
                SoftMinPiece {
                    rho: MeasureSpec::atom(0.5, 1.5),
                    offset: 0.3,
                },
                SoftMinPiece {
                    rho: MeasureSpec::uniform(-1.0, 1.0, 0.5),
                    offset: -0.2,
                },
            ],
            temperature: 0.2,
        }
    }

    /// Exhaustive search over `{y ≥ 0, Σy ≤ cap}` on a lattice of the given step.
    fn brute_force(h: &HopfLax<f64>, t: f64, x: &[f64], step: f64) -> f64 {
        let d = x.len();
        let cap = h.search_radius(t) * d as f64;
        let n = (cap / step).floor() as usize;
        let mut idx = vec![0usize; d];
        let mut best = f64::NEG_INFINITY;
        let g = h.g.matrix();
        loop {
            let y: Vec<f64> = idx.iter().map(|&i| i as f64 * step).collect();
            if y.iter().sum::<f64>() <= cap + 1e-12 {
                let w: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
                best = best.max(h.psi.value(&w) - g.quad_form(&y) / (2.0 * t));
            }
            let mut k = 0;
            while k < d {
                idx[k] += 1;
                if idx[k] <= n {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == d {
                return best;
            }
        }
    }

    #[test]
    fn worked_finite_examples() {
        let h = solver(&linear_psi(), &quad(), 0);
        assert_eq!(h.initial().affine().unwrap().0, &[1.5, 1.0]);
        let x = [0.0, 2.0];
        let r = h.value(1.0, &x).unwrap();
        assert!(r.converged);
        assert_abs_diff_eq!(r.value, 3.5, epsilon = 1e-10);
        assert_abs_diff_eq!(r.maximizer[0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(r.maximizer[1], 0.0, epsilon = 1e-8);
        let r = h.value(2.0, &x).unwrap();
        assert_abs_diff_eq!(r.value, 5.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.maximizer[0], 4.0, epsilon = 1e-8);
        assert_eq!(h.value(0.0, &x).unwrap().value, 2.0);
        assert_abs_diff_eq!(h.value(1e-9, &x).unwrap().value, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn measure_form_oracle() {
        let opts = HopfLaxOptions::default();
        for k in 0..=3 {
            for t in [0.5, 1.0, 2.0] {
                let r = hopf_lax_measure(
                    &linear_psi(),
                    &quad(),
                    k,
                    t,
                    &MeasureSpec::atom(0.0, 1.0),
                    None,
                    &opts,
                )
                .unwrap();
                assert_abs_diff_eq!(r.value, 2.0 + 1.5 * t, epsilon = 1e-8);
                let nu = r.maximizer_measure().unwrap();
                // ν* = δ_{-1}: all mass on the first grid point
                assert_abs_diff_eq!(nu.total_mass(), 1.0, epsilon = 1e-6);
                assert_abs_diff_eq!(nu.weights()[0], nu.weights().len() as f64, epsilon = 1e-5);
                let res = first_order_residual(
                    &linear_psi(),
                    &quad(),
                    &r,
                    &MeasureSpec::atom(0.0, 1.0),
                    t,
                )
                .unwrap();
                assert!(res <= 1e-6, "K={k} t={t}: {res}");
            }
        }
    }

    #[test]
    fn mass_constrained_affine_kernel() {
        let g = Kernel::affine(0.0);
        assert_eq!(constraint_shift(&g), 2.0);
        let mu = MeasureSpec::atom(0.0, 1.0);
        for k in 0..=3 {
            let r = hopf_lax_measure(
                &linear_psi(),
                &g,
                k,
                1.0,
                &mu,
                Some(1.0),
                &HopfLaxOptions::default(),
            )
            .unwrap();
            assert!(r.converged);
            assert_abs_diff_eq!(r.value, 0.5, epsilon = 1e-9);
            let d = r.maximizer.len() as f64;
            assert_abs_diff_eq!(r.maximizer[0], d, epsilon = 1e-7);
            let res = first_order_residual(&linear_psi(), &g, &r, &mu, 1.0).unwrap();
            assert!(res <= 1e-6, "K={k}: {res}");
        }
        let r = hopf_lax_measure(
            &linear_psi(),
            &g,
            1,
            0.0,
            &mu,
            Some(1.0),
            &HopfLaxOptions::default(),
        )
        .unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn rejections() {
        let opts = HopfLaxOptions::default();
        let mu = MeasureSpec::atom(0.0, 1.0);
        let g = Kernel::affine(0.0);
        assert!(matches!(
            hopf_lax_measure(&linear_psi(), &g, 1, 1.0, &mu, None, &opts),
            Err(Error::Hypothesis(_))
        ));
        assert!(matches!(
            hopf_lax_measure(&linear_psi(), &g, 1, 1.0, &mu, Some(0.0), &opts),
            Err(Error::InvalidArgument(_))
        ));
        // 2 − z² has positive entries but G^(0) is indefinite
        let bad = Kernel::polynomial(vec![2.0, 0.0, -1.0]).unwrap();
        let grid = DyadicGrid::new(0).unwrap();
        let psi = linear_psi().at_scale(&bad, grid).unwrap();
        assert!(matches!(
            HopfLax::new(psi, KernelMatrix::new(&bad, grid)),
            Err(Error::Hypothesis(_))
        ));
        let h = solver(&linear_psi(), &quad(), 0);
        assert!(matches!(
            h.value(1.0, &[-1.0, 0.0]),
            Err(Error::NegativeEntry { index: 0, .. })
        ));
        assert!(matches!(
            h.value(-1.0, &[0.0, 0.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            h.value(1.0, &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(h.semigroup_residual(1.0, 1.0, &[0.0, 2.0]).is_err());
    }

    #[test]
    fn semigroup_examples() {
        let h = solver(&linear_psi(), &quad(), 0);
        assert!(h.semigroup_residual(1.0, 0.5, &[0.0, 2.0]).unwrap() <= 1e-8);
        let constant = InitialCondition::Linear {
            rho: MeasureSpec::zero(),
            offset: 1.25,
        };
        let h = solver(&constant, &quad(), 1);
        assert_eq!(
            h.semigroup_residual(1.0, 0.25, &[0.1, 0.0, 2.0, 0.3])
                .unwrap(),
            0.0
        );
        let h = solver(&soft_min(), &quad(), 0);
        assert!(h.semigroup_residual(0.8, 0.3, &[0.4, 1.0]).unwrap() <= 1e-8);
    }

    #[test]
    fn convex_dual_identity() {
        let g = quad();
        let grid = DyadicGrid::new(1).unwrap();
        let gm = KernelMatrix::new(&g, grid);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let u: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..2.0)).collect();
            // ρ on the grid with weights u: ∇ψ^(K) = Gu
            let atoms = u
                .iter()
                .enumerate()
                .map(|(k, &w)| (grid.point(k), w / 4.0))
                .collect();
            let psi = InitialCondition::linear(MeasureSpec {
                atoms,
                density: vec![],
            });
            let h = HopfLax::new(psi.at_scale(&g, grid).unwrap(), gm.clone()).unwrap();
            let r = h.value(1.0, &[0.0; 4]).unwrap();
            assert_abs_diff_eq!(r.value, 0.5 * gm.matrix().quad_form(&u), epsilon = 1e-7);
            // G is singular at this scale, so compare images
            let (gy, gu) = (gm.apply(&r.maximizer), gm.apply(&u));
            for (a, b) in gy.iter().zip(&gu) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn brute_force_agreement() {
        for (k, t, x) in [
            (0, 0.3, vec![0.2, 0.7]),
            (1, 0.04, vec![0.5, 0.0, 1.0, 0.3]),
        ] {
            for psi in [linear_psi(), soft_min()] {
                let h = solver(&psi, &quad(), k);
                let r = h.value(t, &x).unwrap();
                let brute = brute_force(&h, t, &x, 0.05);
                assert!(r.value >= brute - 1e-9, "{} < {brute}", r.value);
                assert!(r.value - brute <= 2e-2, "{} vs {brute}", r.value);
            }
        }
    }

    #[test]
    fn multistart_is_reported() {
        let h = solver(&soft_min(), &quad(), 1);
        let r = h.value(0.5, &[0.0, 1.0, 0.0, 0.5]).unwrap();
        assert!(r.converged);
        assert_eq!(r.n_starts, DEFAULT_STARTS);
        assert!(r.kkt_residual <= 1e-11);
        let again = h.value(0.5, &[0.0, 1.0, 0.0, 0.5]).unwrap();
        assert_eq!(r, again);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn time_space_bounds(
            x in proptest::collection::vec(0.0..2.0f64, 4),
            dx in proptest::collection::vec(0.0..0.5f64, 4),
            t in 0.01..1.0f64,
            dt in 0.0..0.5f64,
        ) {
            let h = solver(&soft_min(), &quad(), 1);
            let lip = h.initial().lip_l1();
            let r = h.value(t, &x).unwrap();
            let y_norm: f64 = r.maximizer.iter().sum::<f64>() / 4.0;
            prop_assert!(y_norm <= h.search_radius(t) + 1e-9);
            let later = h.value(t + dt, &x).unwrap();
            prop_assert!(later.value >= r.value - 1e-9);
            prop_assert!(later.value - r.value <= lip * lip / (2.0 * h.m()) * dt + 1e-8);
            let x2: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let moved = h.value(t, &x2).unwrap();
            let dist: f64 = dx.iter().sum::<f64>() / 4.0;
            prop_assert!((moved.value - r.value).abs() <= lip * dist + 1e-8);
        }
    }
}
