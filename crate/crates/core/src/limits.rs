//! Behavior across scales and parameters: convergence in `K`, independence of the cutoff
//! radius `R`, invariance under kernel translation, and convex-geometry probes.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{norm_l1, project_measure, DyadicGrid, MeasureSpec};
use crate::error::{Error, Result};
use crate::grid_solver::{solve, LatticeDomain, SolveOptions};
use crate::hamiltonian::{ExtendedHamiltonian, Hamiltonian};
use crate::hopf_lax::{hopf_lax_measure, HopfLax, HopfLaxOptions};
use crate::initial::InitialCondition;
use crate::kernel::{Kernel, KernelMatrix};
use crate::linalg::dot;
use crate::optim::nnls;
use crate::scalar::Scalar;

/// Finest scale the grid route accepts; the lattice has `n^(2^(K+1))` points.
pub const PDE_MAX_SCALE: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pde,
    Hopflax,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Pde => "pde",
            Method::Hopflax => "hopflax",
        })
    }
}

#[derive(Debug, Clone)]
pub struct LimitOptions<T> {
    /// Lattice spacing of the grid route.
    pub dx: T,
    pub solve: SolveOptions<T>,
    pub hopf_lax: HopfLaxOptions<T>,
}

impl<T: Scalar> Default for LimitOptions<T> {
    fn default() -> Self {
        Self {
            dx: T::c(0.05),
            solve: SolveOptions::default(),
            hopf_lax: HopfLaxOptions::default(),
        }
    }
}

/// `E_K = 56 R M / (2^(K/2) m²)`.
pub fn error_term<T: Scalar>(g: &Kernel<T>, r: T, k: u32) -> T {
    T::c(56.0) * r * g.upper() / (T::c(2.0).powf(T::c(f64::from(k) / 2.0)) * g.m() * g.m())
}

fn check_radius<T: Scalar>(psi: &InitialCondition<T>, g: &Kernel<T>, r: T) -> Result<()> {
    let lip = psi.lip_tv(g);
    if !(r > lip) || !r.is_finite() {
        return Err(Error::Hypothesis(format!(
            "R = {r} must exceed the TV Lipschitz constant {lip} of the initial condition; \
             below it the extension is not guaranteed to coincide with the energy along solutions"
        )));
    }
    Ok(())
}

/// `f^(K)(t, x^(K)(μ))` through the chosen route.
#[allow(clippy::too_many_arguments)]
pub fn value_at_scale<T: Scalar>(
    psi: &InitialCondition<T>,
    g: &Kernel<T>,
    mu: &MeasureSpec<T>,
    t: T,
    k: u32,
    r: T,
    method: Method,
    opts: &LimitOptions<T>,
) -> Result<T> {
    let grid = DyadicGrid::new(k)?;
    let x = project_measure(mu, grid)?.into_weights();
    let gm = KernelMatrix::new(g, grid);
    let proj = psi.at_scale(g, grid)?;
    match method {
        Method::Hopflax => {
            let res = HopfLax::new(proj, gm)?
                .with_options(opts.hopf_lax)
                .value(t, &x)?;
            if !res.converged {
                return Err(Error::OptimizerFailed(format!(
                    "Hopf-Lax search at K={k} stalled with KKT residual {}",
                    res.kkt_residual
                )));
            }
            Ok(res.value)
        }
        Method::Pde => {
            let h = ExtendedHamiltonian::new(&gm, g, r)?;
            let qm = x.iter().fold(T::zero(), |m, &v| m.max(v));
            let dom = LatticeDomain::covering(k, opts.dx, qm, h.lip_bound(), t)?;
            solve(&proj, &h, t, &dom, &opts.solve)?.query(t, &x)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct ConvergenceReport<T: Scalar> {
    pub t: T,
    pub r: T,
    pub ks: Vec<u32>,
    /// Route used at each `K`.
    pub methods: Vec<Method>,
    pub values: Vec<T>,
    /// `|f^(K_{i+1}) − f^(K_i)|`.
    pub diffs: Vec<T>,
    pub error_terms: Vec<T>,
    /// Least-squares slope of `log2 diff` against `K`.
    pub fit_exponent: Option<T>,
    /// `c₁` in `diff ≈ c₁ 2^(slope K)`.
    pub fit_constant: Option<T>,
    /// Geometric-tail extrapolation of the values.
    pub richardson: Option<T>,
}

impl<T: Scalar> ConvergenceReport<T> {
    /// Rows `K,value,diff,E_K`; `diff` is empty on the first row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("K,value,diff,E_K\n");
        for (i, k) in self.ks.iter().enumerate() {
            let diff = if i == 0 {
                String::new()
            } else {
                format!("{:.16e}", self.diffs[i - 1].to_f64_lossy())
            };
            s.push_str(&format!(
                "{k},{:.16e},{diff},{:.16e}\n",
                self.values[i].to_f64_lossy(),
                self.error_terms[i].to_f64_lossy()
            ));
        }
        s
    }
}

/// Least-squares line through `(x_i, y_i)`; `None` with fewer than two distinct abscissae.
fn fit_line(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    Some((slope, my - slope * mx))
}

#[allow(clippy::too_many_arguments)]
pub fn k_convergence<T: Scalar>(
    psi: &InitialCondition<T>,
    g: &Kernel<T>,
    mu: &MeasureSpec<T>,
    t: T,
    ks: &[u32],
    r: T,
    method: Method,
    opts: &LimitOptions<T>,
) -> Result<ConvergenceReport<T>> {
    check_radius(psi, g, r)?;
    if ks.is_empty() || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "K values must be non-empty and strictly increasing".into(),
        ));
    }
    if method == Method::Pde && ks[ks.len() - 1] > PDE_MAX_SCALE {
        return Err(Error::InvalidArgument(
            "the grid route is limited to K ≤ 1; use the Hopf-Lax route for finer scales".into(),
        ));
    }
    let values = ks
        .par_iter()
        .map(|&k| value_at_scale(psi, g, mu, t, k, r, method, opts))
        .collect::<Result<Vec<T>>>()?;
    let diffs: Vec<T> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > T::zero())
        .map(|(&k, d)| (f64::from(k), d.to_f64_lossy().log2()))
        .collect();
    let fit = fit_line(&pts);
    let richardson = match fit {
        Some((slope, _)) if slope < 0.0 => {
            let n = values.len();
            let step = f64::from(ks[n - 1] - ks[n - 2]);
            let q = T::c(2f64.powf(slope * step));
            let last = values[n - 1] - values[n - 2];
            Some(values[n - 1] + last * q / (T::one() - q))
        }
        _ => None,
    };
    Ok(ConvergenceReport {
        t,
        r,
        ks: ks.to_vec(),
        methods: vec![method; ks.len()],
        error_terms: ks.iter().map(|&k| error_term(g, r, k)).collect(),
        values,
        diffs,
        fit_exponent: fit.map(|f| T::c(f.0)),
        fit_constant: fit.map(|f| T::c(2f64.powf(f.1))),
        richardson,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct RIndependenceReport<T: Scalar> {
    pub method: Method,
    pub k: u32,
    pub r1: T,
    pub r2: T,
    pub times: Vec<T>,
    pub values_r1: Vec<T>,
    pub values_r2: Vec<T>,
    pub max_discrepancy: T,
    /// `E_K · max t` with the larger radius.
    pub bound: T,
    /// The Hopf-Lax formula has no `R`; the discrepancy is zero by construction.
    pub r_ignored: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn r_independence<T: Scalar>(
    psi: &InitialCondition<T>,
    g: &Kernel<T>,
    mu: &MeasureSpec<T>,
    times: &[T],
    k: u32,
    r1: T,
    r2: T,
    method: Method,
    opts: &LimitOptions<T>,
) -> Result<RIndependenceReport<T>> {
    check_radius(psi, g, r1)?;
    check_radius(psi, g, r2)?;
    if times.is_empty() || times.iter().any(|t| !(*t >= T::zero()) || !t.is_finite()) {
        return Err(Error::InvalidArgument(
            "times must be non-empty, finite and non-negative".into(),
        ));
    }
    let t_max = times.iter().fold(T::zero(), |m, &t| m.max(t));
    let bound = error_term(g, r1.max(r2), k) * t_max;
    let run = |r: T| -> Result<Vec<T>> {
        times
            .par_iter()
            .map(|&t| value_at_scale(psi, g, mu, t, k, r, method, opts))
            .collect()
    };
    let (values_r1, values_r2) = match method {
        Method::Hopflax => {
            let v = run(r1)?;
            (v.clone(), v)
        }
        Method::Pde => (run(r1)?, run(r2)?),
    };
    let max_discrepancy = values_r1
        .iter()
        .zip(&values_r2)
        .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
    Ok(RIndependenceReport {
        method,
        k,
        r1,
        r2,
        times: times.to_vec(),
        values_r1,
        values_r2,
        max_discrepancy,
        bound,
        r_ignored: method == Method::Hopflax,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct BInvarianceReport<T: Scalar> {
    pub mass: T,
    pub b1: T,
    pub b2: T,
    pub f_b1: T,
    pub f_b2: T,
    pub discrepancy: T,
    /// `16 R M t / (2^(K/2) m)` with the least favorable constants of the two shifts.
    pub error_term: T,
}

/// Common mass `a` of the measures defining a linear or soft-min initial condition.
fn common_mass<T: Scalar>(psi: &InitialCondition<T>) -> Result<T> {
    let masses: Vec<T> = match psi {
        InitialCondition::Linear { rho, .. } => vec![rho.total_mass()],
        InitialCondition::SoftMin { pieces, .. } => {
            pieces.iter().map(|p| p.rho.total_mass()).collect()
        }
        InitialCondition::Raw { .. } => {
            return Err(Error::InvalidArgument(
                "kernel translation needs a linear or soft-min initial condition".into(),
            ))
        }
    };
    let a = masses[0];
    let tol = T::c(1e-12) * a.abs().max(T::one());
    if !(a > T::zero()) || masses.iter().any(|&b| (b - a).abs() > tol) {
        return Err(Error::Hypothesis(
            "every defining measure of the initial condition must carry the same positive mass"
                .into(),
        ));
    }
    Ok(a)
}

/// Solves with `g + b` for both shifts and undoes the shift:
/// `f_b = f̃_b − a b ∫dμ − a² b t / 2`, where `ψ̃_b` is `ψ` read with the shifted kernel.
#[allow(clippy::too_many_arguments)]
pub fn b_invariance<T: Scalar>(
    g: &Kernel<T>,
    psi: &InitialCondition<T>,
    b1: T,
    b2: T,
    t: T,
    mu: &MeasureSpec<T>,
    k: u32,
    opts: &HopfLaxOptions<T>,
) -> Result<BInvarianceReport<T>> {
    let a = common_mass(psi)?;
    let grid = DyadicGrid::new(k)?;
    let mass_mu = norm_l1(project_measure(mu, grid)?.weights());
    let half = T::c(0.5);
    let mut out = Vec::with_capacity(2);
    let (mut r, mut upper, mut lower) = (T::zero(), T::zero(), T::infinity());
    for b in [b1, b2] {
        let gb = g.translate(b);
        if !(gb.m() > T::zero()) {
            return Err(Error::Hypothesis(format!(
                "shift b = {b} leaves g + b non-positive on [-1, 1] (certified minimum {})",
                gb.m()
            )));
        }
        let res = hopf_lax_measure(psi, &gb, k, t, mu, None, opts)?;
        if !res.converged {
            return Err(Error::OptimizerFailed(format!(
                "Hopf-Lax search for b = {b} stalled"
            )));
        }
        out.push(res.value - a * b * mass_mu - a * a * b * t * half);
        r = r.max(psi.lip_tv(&gb));
        upper = upper.max(gb.upper());
        lower = lower.min(gb.m());
    }
    let scale = T::c(2.0).powf(T::c(f64::from(k) / 2.0));
    Ok(BInvarianceReport {
        mass: a,
        b1,
        b2,
        f_b1: out[0],
        f_b2: out[1],
        discrepancy: (out[0] - out[1]).abs(),
        error_term: T::c(16.0) * r * upper * t / (scale * lower),
    })
}

/// `inf{y·x : y ≥ 0, ‖y‖₁,* = 1} = min_k x_k / d` on the orthant.
pub fn distance_like<T: Scalar>(x: &[T]) -> Result<T> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty vector".into()));
    }
    if let Some((index, &v)) = x.iter().enumerate().find(|(_, v)| !(**v >= T::zero())) {
        return Err(Error::NegativeEntry {
            index,
            value: v.to_f64_lossy(),
        });
    }
    Ok(x.iter().fold(T::infinity(), |m, &v| m.min(v)) / T::from_usize_exact(x.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct GradientSetReport<T: Scalar> {
    pub pairs: usize,
    pub violations: usize,
    /// Smallest `f(x + v) − f(x) − c(v)`; negative values are violations.
    pub worst_margin: T,
    pub ok: bool,
}

/// Support-function test that the gradients of `f` lie in
/// `{Gu : u ≥ 0, ‖u‖₁ ≤ a} + {r : ‖r‖₁,* ≤ slack}`: every increment must satisfy
/// `f(x + v) − f(x) ≥ min(0, a d min_k (Gv)_k) − slack ‖v‖₁`.
#[allow(clippy::too_many_arguments)]
pub fn gradient_in_set_check<T: Scalar, F: Fn(&[T]) -> T>(
    f: F,
    g: &KernelMatrix<T>,
    a: T,
    slack: T,
    extent: T,
    n_pairs: usize,
    seed: u64,
    tol: T,
) -> GradientSetReport<T> {
    let d = g.dim();
    let df = T::from_usize_exact(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst = T::infinity();
    for _ in 0..n_pairs {
        let x: Vec<T> = (0..d).map(|_| T::c(rng.gen::<f64>()) * extent).collect();
        let other: Vec<T> = (0..d).map(|_| T::c(rng.gen::<f64>()) * extent).collect();
        // mix long and short increments
        let shrink = T::c(10f64.powf(-3.0 * rng.gen::<f64>()));
        let v: Vec<T> = x
            .iter()
            .zip(&other)
            .map(|(&a, &b)| (b - a) * shrink)
            .collect();
        let xv: Vec<T> = x.iter().zip(&v).map(|(&a, &b)| a + b).collect();
        let gv = g.apply(&v);
        let min_gv = gv.iter().fold(T::infinity(), |m, &q| m.min(q));
        let support = (a * df * min_gv).min(T::zero()) - slack * norm_l1(&v);
        let margin = f(&xv) - f(&x) - support;
        worst = worst.min(margin);
        if margin < -tol {
            violations += 1;
        }
    }
    GradientSetReport {
        pairs: n_pairs,
        violations,
        worst_margin: worst,
        ok: violations == 0,
    }
}

/// A `z` with `Gz ≥ 0` and `x·z < 0` built from the non-negative least-squares residual,
/// or `None` when `x` lies in the cone `{Gu : u ≥ 0}` up to `tol`.
pub fn separate<T: Scalar>(g: &KernelMatrix<T>, x: &[T], tol: T) -> Option<Vec<T>> {
    let sol = nnls(g.matrix(), x);
    let gu = g.apply(&sol.x);
    let z: Vec<T> = gu.iter().zip(x).map(|(&a, &b)| a - b).collect();
    let scale = x.iter().fold(T::one(), |m, v| m.max(v.abs()));
    if z.iter().all(|v| v.abs() <= tol * scale) {
        None
    } else {
        Some(z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct BidualReport<T: Scalar> {
    pub cone_pairs: usize,
    /// Smallest `x·z` over cone points `x` and dual members `z`.
    pub min_inner: T,
    pub outside_points: usize,
    pub separators_found: usize,
    pub ok: bool,
}

/// Checks `x·z ≥ 0` for cone points against sampled dual members, and that every sampled
/// point outside the cone is separated by a dual member.
pub fn bidual_sanity<T: Scalar>(
    g: &KernelMatrix<T>,
    n_samples: usize,
    seed: u64,
) -> BidualReport<T> {
    let d = g.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let expo = |rng: &mut ChaCha8Rng| T::c(-(1.0 - rng.gen::<f64>()).ln());
    let mut duals: Vec<Vec<T>> = (0..d)
        .map(|k| {
            (0..d)
                .map(|j| if j == k { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    while duals.len() < d + n_samples {
        let z: Vec<T> = (0..d).map(|_| expo(&mut rng) - T::c(0.3)).collect();
        if g.apply(&z).iter().all(|&v| v >= T::zero()) {
            duals.push(z);
        }
    }
    let tol = T::c(1e-10);
    let mut min_inner = T::infinity();
    let mut cone_pairs = 0;
    for _ in 0..n_samples {
        let u: Vec<T> = (0..d).map(|_| expo(&mut rng)).collect();
        let x = g.apply(&u);
        for z in &duals {
            min_inner = min_inner.min(dot(&x, z));
            cone_pairs += 1;
        }
    }
    let (mut outside, mut found) = (0, 0);
    for _ in 0..n_samples {
        let x: Vec<T> = (0..d).map(|_| T::c(2.0 * rng.gen::<f64>() - 1.0)).collect();
        if let Some(z) = separate(g, &x, T::c(1e-9)) {
            outside += 1;
            let scale = z.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            if g.apply(&z).iter().all(|&v| v >= -tol * scale) && dot(&x, &z) < T::zero() {
                found += 1;
            }
        }
    }
    BidualReport {
        cone_pairs,
        min_inner,
        outside_points: outside,
        separators_found: found,
        ok: min_inner >= -tol && found == outside,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn quad() -> Kernel<f64> {
        Kernel::quadratic(2.0)
    }

    fn linear() -> InitialCondition<f64> {
        InitialCondition::linear(MeasureSpec::atom(-1.0, 1.0))
    }

    #[test]
    fn error_term_formula() {
        assert_abs_diff_eq!(
            error_term(&quad(), 4.0, 0),
            56.0 * 4.0 * 3.0 / 4.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(error_term(&quad(), 4.0, 2), 84.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_exact_convergence() {
        let mu = MeasureSpec::atom(0.0, 1.0);
        let rep = k_convergence(
            &linear(),
            &quad(),
            &mu,
            1.0,
            &[0, 1, 2, 3],
            4.0,
            Method::Hopflax,
            &LimitOptions::default(),
        )
        .unwrap();
        for v in &rep.values {
            assert_abs_diff_eq!(*v, 3.5, epsilon = 1e-6);
        }
        assert_eq!(rep.methods, vec![Method::Hopflax; 4]);
        assert_eq!(rep.diffs.len(), 3);
        let csv = rep.to_csv();
        assert!(csv.starts_with("K,value,diff,E_K\n0,"));
        assert_eq!(csv.lines().nth(1).unwrap().split(',').nth(2), Some(""));
    }

    #[test]
    fn uniform_case_converges() {
        let rho = MeasureSpec::uniform(-1.0, 1.0, 0.5);
        let psi = InitialCondition::linear(rho.clone());
        let t = 1.0;
        let oracle = 19.0 / 9.0 + 19.0 / 18.0 * t;
        let ks = [0, 1, 2, 3];
        let rep = k_convergence(
            &psi,
            &quad(),
            &rho,
            t,
            &ks,
            4.0,
            Method::Hopflax,
            &LimitOptions::default(),
        )
        .unwrap();
        for (&k, v) in ks.iter().zip(&rep.values) {
            assert!(
                (v - oracle).abs() <= 3.0 * 0.5f64.powi(k as i32),
                "K={k}: {v}"
            );
        }
        assert!(rep.fit_exponent.unwrap() <= -0.4);
        assert!((rep.richardson.unwrap() - oracle).abs() < (rep.values[3] - oracle).abs());
        // t = 0 reduces to the discretized initial values
        let rep0 = k_convergence(
            &psi,
            &quad(),
            &rho,
            0.0,
            &ks,
            4.0,
            Method::Hopflax,
            &LimitOptions::default(),
        )
        .unwrap();
        for (&k, v) in ks.iter().zip(&rep0.values) {
            let grid = DyadicGrid::new(k).unwrap();
            let x = project_measure(&rho, grid).unwrap().into_weights();
            assert_eq!(*v, psi.at_scale(&quad(), grid).unwrap().value(&x));
        }
    }

    #[test]
    fn convergence_rejections() {
        let mu = MeasureSpec::atom(0.0, 1.0);
        let o = LimitOptions::default();
        // Lip_TV of ψ is 3
        assert!(matches!(
            k_convergence(&linear(), &quad(), &mu, 1.0, &[0], 3.0, Method::Hopflax, &o),
            Err(Error::Hypothesis(_))
        ));
        assert!(
            k_convergence(&linear(), &quad(), &mu, 1.0, &[0, 2], 4.0, Method::Pde, &o).is_err()
        );
        assert!(k_convergence(
            &linear(),
            &quad(),
            &mu,
            1.0,
            &[1, 0],
            4.0,
            Method::Hopflax,
            &o
        )
        .is_err());
        let single =
            k_convergence(&linear(), &quad(), &mu, 1.0, &[2], 4.0, Method::Hopflax, &o).unwrap();
        assert!(single.diffs.is_empty() && single.fit_exponent.is_none());
    }

    #[test]
    fn pde_route_and_r_independence() {
        let mu = MeasureSpec::atom(0.0, 1.0);
        let o = LimitOptions {
            dx: 0.1,
            ..LimitOptions::default()
        };
        let v = value_at_scale(&linear(), &quad(), &mu, 0.1, 0, 4.0, Method::Pde, &o).unwrap();
        assert_abs_diff_eq!(v, 2.15, epsilon = 1e-10);
        let rep = r_independence(
            &linear(),
            &quad(),
            &mu,
            &[0.05, 0.1],
            0,
            4.0,
            6.0,
            Method::Pde,
            &o,
        )
        .unwrap();
        assert!(rep.max_discrepancy <= 1e-8, "{rep:?}");
        assert!(rep.max_discrepancy <= rep.bound);
        let same = r_independence(
            &linear(),
            &quad(),
            &mu,
            &[0.05],
            0,
            4.0,
            4.0,
            Method::Pde,
            &o,
        )
        .unwrap();
        assert_eq!(same.max_discrepancy, 0.0);
        let hl = r_independence(
            &linear(),
            &quad(),
            &mu,
            &[1.0],
            2,
            4.0,
            6.0,
            Method::Hopflax,
            &o,
        )
        .unwrap();
        assert!(hl.r_ignored && hl.max_discrepancy == 0.0);
        assert!(r_independence(
            &linear(),
            &quad(),
            &mu,
            &[1.0],
            0,
            2.0,
            6.0,
            Method::Pde,
            &o
        )
        .is_err());
    }

    #[test]
    fn kernel_translation() {
        let g = Kernel::affine(0.0);
        let mu = MeasureSpec::atom(0.0, 1.0);
        let o = HopfLaxOptions::default();
        for k in 0..3 {
            let rep = b_invariance(&g, &linear(), 2.0, 3.0, 1.0, &mu, k, &o).unwrap();
            assert!(rep.discrepancy <= 1e-6);
            assert_abs_diff_eq!(rep.f_b1, 0.5, epsilon = 1e-6);
            assert!(rep.discrepancy <= rep.error_term);
        }
        let rep = b_invariance(&g, &linear(), 2.0, 2.0, 1.0, &mu, 1, &o).unwrap();
        assert_eq!(rep.discrepancy, 0.0);
        let rep = b_invariance(&g, &linear(), 2.0, 3.0, 0.0, &mu, 1, &o).unwrap();
        assert_eq!(rep.discrepancy, 0.0);
        assert_eq!(rep.f_b1, 0.0);
        assert!(matches!(
            b_invariance(&g, &linear(), 1.0, 3.0, 1.0, &mu, 1, &o),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn distance_like_examples() {
        assert_eq!(distance_like(&[0.5, 2.0]).unwrap(), 0.25);
        assert_eq!(distance_like(&[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(distance_like(&[1.0; 4]).unwrap(), 0.25);
        assert!(distance_like(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn gradient_set_examples() {
        let g = quad();
        let grid = DyadicGrid::new(1).unwrap();
        let gm = KernelMatrix::new(&g, grid);
        let slack = 0.5;
        // ∇ψ = Gu with ‖u‖₁ = 1
        let u = [1.0, 0.0, 2.0, 1.0];
        let p = gm.apply(&u);
        let rep = gradient_in_set_check(|x: &[f64]| dot(&p, x), &gm, 1.0, slack, 2.0, 500, 1, 1e-9);
        assert!(rep.ok, "{rep:?}");
        let rep = gradient_in_set_check(|x: &[f64]| norm_l1(x), &gm, 0.0, slack, 2.0, 500, 1, 1e-9);
        assert!(rep.violations > 0);
        let rep = gradient_in_set_check(|_: &[f64]| 1.5, &gm, 0.0, slack, 2.0, 500, 1, 1e-9);
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn biduality() {
        let g = quad();
        let gm = KernelMatrix::new(&g, DyadicGrid::new(0).unwrap());
        let z = separate(&gm, &[0.0, 1.0], 1e-9).unwrap();
        assert!(gm.apply(&z).iter().all(|&v| v >= -1e-12));
        assert!(z[1] < 0.0);
        assert!(separate(&gm, &[0.0, 0.0], 1e-9).is_none());
        assert!(separate(&gm, &gm.apply(&[1.0, 0.5]), 1e-9).is_none());
        for k in 0..3 {
            let gm = KernelMatrix::new(&g, DyadicGrid::new(k).unwrap());
            let rep = bidual_sanity(&gm, 50, 3);
            assert!(rep.ok, "{rep:?}");
            assert!(rep.outside_points > 0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn distance_like_properties(
            a in proptest::collection::vec(0.0..3.0f64, 4),
            b in proptest::collection::vec(0.0..3.0f64, 4),
            up in proptest::collection::vec(0.0..1.0f64, 4),
        ) {
            let f = |x: &[f64]| distance_like(x).unwrap();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
            prop_assert!(f(&mid) >= 0.5 * (f(&a) + f(&b)) - 1e-15);
            let diff: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
            prop_assert!((f(&a) - f(&b)).abs() <= norm_l1(&diff) + 1e-15);
            let raised: Vec<f64> = a.iter().zip(&up).map(|(p, q)| p + q).collect();
            prop_assert!(f(&raised) >= f(&a));
        }
    }
}
