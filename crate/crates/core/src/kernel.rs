//! Kernels `g` on [-1, 1], their discretized matrices and the bilinear energy.

use serde::{Deserialize, Serialize};

use crate::dyadic::{DiscreteMeasure, DyadicGrid, MeasureSpec};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, Matrix};
use crate::scalar::Scalar;

/// Points used by the sampled hypothesis checks.
pub const CHECK_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", bound = "")]
pub enum KernelFamily<T: Scalar> {
    /// `c + z²`
    Quadratic { c: T },
    /// `e^z`
    Exponential,
    /// `c + z`
    Affine { c: T },
    /// `Σ coeffs[i] z^i`
    Polynomial { coeffs: Vec<T> },
}

/// Serialized form of a [`Kernel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KernelConfig<T: Scalar> {
    #[serde(flatten)]
    pub family: KernelFamily<T>,
    #[serde(default)]
    pub shift_b: T,
}

/// A kernel `g(z) = base(z) + b` with certified bounds on [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelConfig<T>", into = "KernelConfig<T>", bound = "")]
pub struct Kernel<T: Scalar> {
    family: KernelFamily<T>,
    shift: T,
    base_m: T,
    base_upper: T,
    deriv_bound: T,
}

impl<T: Scalar> TryFrom<KernelConfig<T>> for Kernel<T> {
    type Error = Error;
    fn try_from(cfg: KernelConfig<T>) -> Result<Self> {
        Ok(Kernel::new(cfg.family)?.translate(cfg.shift_b))
    }
}

impl<T: Scalar> From<Kernel<T>> for KernelConfig<T> {
    fn from(k: Kernel<T>) -> Self {
        KernelConfig {
            family: k.family,
            shift_b: k.shift,
        }
    }
}

fn horner<T: Scalar>(coeffs: &[T], z: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * z + c)
}

fn sample_grid<T: Scalar>(i: usize) -> T {
    -T::one() + T::c(2.0) * T::from_usize_exact(i) / T::from_usize_exact(CHECK_POINTS - 1)
}

impl<T: Scalar> Kernel<T> {
    pub fn new(family: KernelFamily<T>) -> Result<Self> {
        let (base_m, base_upper, deriv_bound) = match &family {
            KernelFamily::Quadratic { c } => (*c, *c + T::one(), T::c(2.0)),
            KernelFamily::Exponential => (T::one() / T::E(), T::E(), T::E()),
            KernelFamily::Affine { c } => (*c - T::one(), *c + T::one(), T::one()),
            KernelFamily::Polynomial { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidKernel(
                        "polynomial needs finite coefficients".into(),
                    ));
                }
                let deriv = coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .fold(T::zero(), |s, (i, c)| s + T::from_usize_exact(i) * c.abs());
                let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
                for i in 0..CHECK_POINTS {
                    let v = horner(coeffs, sample_grid::<T>(i));
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                let slack = deriv * T::one() / T::from_usize_exact(CHECK_POINTS - 1);
                (lo - slack, hi + slack, deriv)
            }
        };
        if let KernelFamily::Quadratic { c } | KernelFamily::Affine { c } = &family {
            if !c.is_finite() {
                return Err(Error::InvalidKernel("non-finite coefficient".into()));
            }
        }
        Ok(Self {
            family,
            shift: T::zero(),
            base_m,
            base_upper,
            deriv_bound,
        })
    }

    pub fn quadratic(c: T) -> Self {
        Self::new(KernelFamily::Quadratic { c }).expect("finite coefficient")
    }

    pub fn exponential() -> Self {
        Self::new(KernelFamily::Exponential).expect("no parameters")
    }

    pub fn affine(c: T) -> Self {
        Self::new(KernelFamily::Affine { c }).expect("finite coefficient")
    }

    pub fn polynomial(coeffs: Vec<T>) -> Result<Self> {
        Self::new(KernelFamily::Polynomial { coeffs })
    }

    pub fn family(&self) -> &KernelFamily<T> {
        &self.family
    }

    pub fn shift(&self) -> T {
        self.shift
    }

    /// Certified lower bound on [-1, 1]; may be non-positive.
    pub fn m(&self) -> T {
        self.base_m + self.shift
    }

    /// Certified upper bound on [-1, 1].
    pub fn upper(&self) -> T {
        self.base_upper + self.shift
    }

    pub fn deriv_bound(&self) -> T {
        self.deriv_bound
    }

    /// `g̃_b = g + b`. Shifts accumulate additively, so translating back is exact.
    pub fn translate(&self, b: T) -> Self {
        let mut k = self.clone();
        k.shift = self.shift + b;
        k
    }

    fn base(&self, z: T) -> T {
        match &self.family {
            KernelFamily::Quadratic { c } => *c + z * z,
            KernelFamily::Exponential => z.exp(),
            KernelFamily::Affine { c } => *c + z,
            KernelFamily::Polynomial { coeffs } => horner(coeffs, z),
        }
    }

    pub fn eval(&self, z: T) -> T {
        self.base(z) + self.shift
    }

    pub fn derivative(&self, z: T) -> T {
        match &self.family {
            KernelFamily::Quadratic { .. } => T::c(2.0) * z,
            KernelFamily::Exponential => z.exp(),
            KernelFamily::Affine { .. } => T::one(),
            KernelFamily::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(T::zero(), |acc, (i, &c)| {
                    acc * z + T::from_usize_exact(i) * c
                }),
        }
    }

    /// Polynomial coefficients including the shift, if the family is polynomial.
    fn coefficients(&self) -> Option<Vec<T>> {
        let mut c = match &self.family {
            KernelFamily::Quadratic { c } => vec![*c, T::zero(), T::one()],
            KernelFamily::Affine { c } => vec![*c, T::one()],
            KernelFamily::Polynomial { coeffs } => coeffs.clone(),
            KernelFamily::Exponential => return None,
        };
        c[0] += self.shift;
        Some(c)
    }

    /// `∫_a^b g(x y) dy`.
    fn ray_integral(&self, x: T, a: T, b: T) -> T {
        match self.coefficients() {
            Some(c) => {
                let mut s = T::zero();
                let (mut xp, mut ap, mut bp) = (T::one(), a, b);
                for (i, &ci) in c.iter().enumerate() {
                    s += ci * xp * (bp - ap) / T::from_usize_exact(i + 1);
                    xp *= x;
                    ap *= a;
                    bp *= b;
                }
                s
            }
            None => {
                let len = b - a;
                let core = if x == T::zero() {
                    len
                } else {
                    (x * a).exp() * (x * len).exp_m1() / x
                };
                core + self.shift * len
            }
        }
    }

    /// `∫_a^b ∫_c^e g(x y) dy dx`.
    fn box_integral(&self, a: T, b: T, c: T, e: T) -> T {
        match self.coefficients() {
            Some(coef) => {
                let mut s = T::zero();
                let (mut ap, mut bp, mut cp, mut ep) = (a, b, c, e);
                for (i, &ci) in coef.iter().enumerate() {
                    let n = T::from_usize_exact(i + 1);
                    s += ci * (bp - ap) * (ep - cp) / (n * n);
                    ap *= a;
                    bp *= b;
                    cp *= c;
                    ep *= e;
                }
                s
            }
            None => gauss_legendre(a, b, |x| self.ray_integral(x, c, e)),
        }
    }
}

const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];
const GL_PANELS: usize = 64;

/// Composite 8-point Gauss-Legendre rule on 64 panels.
fn gauss_legendre<T: Scalar>(a: T, b: T, f: impl Fn(T) -> T) -> T {
    let h = (b - a) / T::from_usize_exact(GL_PANELS);
    let half = h * T::c(0.5);
    let mut s = T::zero();
    for p in 0..GL_PANELS {
        let mid = a + h * (T::from_usize_exact(p) + T::c(0.5));
        for (&n, &w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            let off = half * T::c(n);
            s += T::c(w) * (f(mid - off) + f(mid + off));
        }
    }
    s * half
}

/// `G_μ(x) = ∫ g(x y) dμ(y)`, exact on atoms and on constant density pieces.
pub fn g_mu<T: Scalar>(g: &Kernel<T>, mu: &MeasureSpec<T>, x: T) -> T {
    let atoms: T = mu.atoms.iter().map(|&(loc, w)| w * g.eval(x * loc)).sum();
    let dens: T = mu
        .density
        .iter()
        .map(|&(a, b, v)| v * g.ray_integral(x, a, b))
        .sum();
    atoms + dens
}

/// `G_μ(x)` for the measure represented by a weight vector.
pub fn g_mu_discrete<T: Scalar>(g: &Kernel<T>, mu: &DiscreteMeasure<T>, x: T) -> T {
    g_mu_weights(g, mu.grid(), mu.weights(), x)
}

pub(crate) fn g_mu_weights<T: Scalar>(g: &Kernel<T>, grid: DyadicGrid, w: &[T], x: T) -> T {
    let s: T = w
        .iter()
        .enumerate()
        .filter(|(_, w)| **w != T::zero())
        .map(|(k, &wk)| wk * g.eval(x * grid.point::<T>(k)))
        .sum();
    s / T::from_usize_exact(grid.len())
}

/// `∫ G_ν dμ`.
pub fn bilinear<T: Scalar>(g: &Kernel<T>, mu: &MeasureSpec<T>, nu: &MeasureSpec<T>) -> T {
    let mut s: T = mu.atoms.iter().map(|&(x, w)| w * g_mu(g, nu, x)).sum();
    for &(a, b, v) in &mu.density {
        let from_atoms: T = nu
            .atoms
            .iter()
            .map(|&(y, w)| w * g.ray_integral(y, a, b))
            .sum();
        let from_pieces: T = nu
            .density
            .iter()
            .map(|&(c, e, u)| u * g.box_integral(a, b, c, e))
            .sum();
        s += v * (from_atoms + from_pieces);
    }
    s
}

/// `G_{kk'} = g(k k') / d²` on a dyadic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix<T: Scalar> {
    grid: DyadicGrid,
    matrix: Matrix<T>,
}

impl<T: Scalar> KernelMatrix<T> {
    pub fn new(g: &Kernel<T>, grid: DyadicGrid) -> Self {
        let d = grid.len();
        let d2 = T::from_usize_exact(d * d);
        let pts: Vec<T> = grid.points();
        let mut m = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..=i {
                let v = g.eval(pts[i] * pts[j]) / d2;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { grid, matrix: m }
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.matrix.mul_vec(x)
    }

    pub fn min_eigenvalue(&self) -> T {
        symmetric_eigenvalues(&self.matrix)[0]
    }

    /// CSV with one row per matrix row.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.dim() {
            let row: Vec<String> = self
                .matrix
                .row(i)
                .iter()
                .map(|v| format!("{:.16e}", v.to_f64_lossy()))
                .collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn kernel_matrix<T: Scalar>(g: &Kernel<T>, grid: DyadicGrid) -> KernelMatrix<T> {
    KernelMatrix::new(g, grid)
}

/// `C(Gx) = x·Gx / 2`.
pub fn quadratic_energy<T: Scalar>(g: &KernelMatrix<T>, x: &[T]) -> Result<T> {
    if x.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: x.len(),
        });
    }
    Ok(g.matrix.quad_form(x) * T::c(0.5))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct LowerBoundReport<T: Scalar> {
    pub ok: bool,
    /// Certified lower bound.
    pub m: T,
    pub min_sampled: T,
    pub violated_at: Option<T>,
}

/// Certifies `g >= m > 0` on [-1, 1].
pub fn check_lower_bound<T: Scalar>(g: &Kernel<T>) -> LowerBoundReport<T> {
    let (mut min, mut arg) = (T::infinity(), -T::one());
    for i in 0..CHECK_POINTS {
        let z = sample_grid::<T>(i);
        let v = g.eval(z);
        if v < min {
            min = v;
            arg = z;
        }
    }
    let m = g.m();
    let ok = m > T::zero();
    LowerBoundReport {
        ok,
        m,
        min_sampled: min,
        violated_at: if ok { None } else { Some(arg) },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct ScaleEigenvalue<T: Scalar> {
    pub k: u32,
    pub min_eigenvalue: T,
    pub threshold: T,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct DefinitenessReport<T: Scalar> {
    pub ok: bool,
    pub scales: Vec<ScaleEigenvalue<T>>,
}

/// Smallest eigenvalue of `G^(K)` for each requested scale.
pub fn check_nonneg_definite<T: Scalar>(
    g: &Kernel<T>,
    ks: &[u32],
) -> Result<DefinitenessReport<T>> {
    let mut scales = Vec::with_capacity(ks.len());
    for &k in ks {
        let gm = KernelMatrix::new(g, DyadicGrid::new(k)?);
        let ev = symmetric_eigenvalues(&gm.matrix);
        let norm = ev.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let threshold = -T::c(1e-10) * norm;
        scales.push(ScaleEigenvalue {
            k,
            min_eigenvalue: ev[0],
            threshold,
            ok: ev[0] >= threshold,
        });
    }
    Ok(DefinitenessReport {
        ok: scales.iter().all(|s| s.ok),
        scales,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct CauchySchwarzReport<T: Scalar> {
    pub lhs: T,
    pub rhs: T,
    pub ok: bool,
}

/// `(∫G_ν dμ)² <= (∫G_μ dμ)(∫G_ν dν)`.
pub fn kernel_cauchy_schwarz_check<T: Scalar>(
    g: &Kernel<T>,
    mu: &MeasureSpec<T>,
    nu: &MeasureSpec<T>,
) -> CauchySchwarzReport<T> {
    let cross = bilinear(g, mu, nu);
    let lhs = cross * cross;
    let rhs = bilinear(g, mu, mu) * bilinear(g, nu, nu);
    let scale = rhs.abs().max(T::one());
    CauchySchwarzReport {
        lhs,
        rhs,
        ok: lhs <= rhs + T::c(1e-10) * scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{lift, project_measure};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn quad() -> Kernel<f64> {
        Kernel::quadratic(2.0)
    }

    #[test]
    fn matrix_example() {
        let gm = kernel_matrix(&quad(), DyadicGrid::new(0).unwrap());
        assert_eq!(gm.matrix().as_slice(), &[0.75, 0.5, 0.5, 0.5]);
        let c = Kernel::polynomial(vec![1.7]).unwrap();
        let gc = kernel_matrix(&c, DyadicGrid::new(2).unwrap());
        assert!(gc.matrix().as_slice().iter().all(|&v| v == 1.7 / 64.0));
        for k in 0..4 {
            assert!(
                kernel_matrix(&Kernel::<f64>::exponential(), DyadicGrid::new(k).unwrap())
                    .matrix()
                    .is_symmetric()
            );
        }
    }

    #[test]
    fn entries_within_bounds() {
        for g in [quad(), Kernel::exponential(), Kernel::affine(2.0)] {
            for k in 0..4 {
                let gm = kernel_matrix(&g, DyadicGrid::new(k).unwrap());
                let d2 = (gm.dim() * gm.dim()) as f64;
                for &v in gm.matrix().as_slice() {
                    assert!(v >= g.m() / d2 && v <= g.upper() / d2);
                }
            }
        }
    }

    #[test]
    fn g_mu_examples() {
        let g = quad();
        let rho = MeasureSpec::atom(-1.0, 1.0);
        assert_eq!(g_mu(&g, &rho, 0.5), 2.25);
        assert_eq!(g_mu(&g, &MeasureSpec::zero(), 0.3), 0.0);
        for x in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert_abs_diff_eq!(g_mu(&g, &rho, x), 2.0 + x * x, epsilon = 1e-15);
        }
    }

    #[test]
    fn g_mu_density_matches_quadrature() {
        // uniform probability on [-1, 1]: G(x) = 2 + x²/3
        let u = MeasureSpec::uniform(-1.0, 1.0, 0.5);
        assert_abs_diff_eq!(g_mu(&quad(), &u, 0.6), 2.0 + 0.36 / 3.0, epsilon = 1e-14);
        // exponential: ∫_{-1}^{1} e^{xy} dy / 2 = sinh(x)/x
        let e = Kernel::exponential();
        assert_abs_diff_eq!(g_mu(&e, &u, 0.8), (0.8f64).sinh() / 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(g_mu(&e, &u, 0.0), 1.0, epsilon = 1e-15);
        let shifted = e.translate(0.5);
        assert_abs_diff_eq!(
            g_mu(&shifted, &u, 0.8),
            (0.8f64).sinh() / 0.8 + 0.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn discrete_g_mu_matches_atoms() {
        let g = quad();
        let grid = DyadicGrid::new(2).unwrap();
        let spec = MeasureSpec {
            atoms: vec![(-1.0, 0.5), (0.25, 2.0)],
            density: vec![],
        };
        let m = project_measure(&spec, grid).unwrap();
        assert_abs_diff_eq!(
            g_mu_discrete(&g, &m, 0.5),
            g_mu(&g, &spec, 0.5),
            epsilon = 1e-14
        );
    }

    #[test]
    fn energy_examples() {
        let gm = kernel_matrix(&quad(), DyadicGrid::new(0).unwrap());
        assert_eq!(quadratic_energy(&gm, &[1.0, 1.0]).unwrap(), 1.125);
        assert_eq!(quadratic_energy(&gm, &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(quadratic_energy(&gm, &[2.0, 0.0]).unwrap(), 1.5);
        assert!(matches!(
            quadratic_energy(&gm, &[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn lower_bound_examples() {
        let r = check_lower_bound(&quad());
        assert!(r.ok);
        assert_eq!(r.m, 2.0);
        let z = check_lower_bound(&Kernel::affine(0.0));
        assert!(!z.ok);
        assert_eq!(z.min_sampled, -1.0);
        assert_eq!(z.violated_at, Some(-1.0));
        let z2 = check_lower_bound(&Kernel::affine(2.0));
        assert!(z2.ok);
        assert_eq!(z2.m, 1.0);
        let p = check_lower_bound(&Kernel::polynomial(vec![2.0, 0.0, 1.0]).unwrap());
        assert!(p.ok && p.m <= 2.0 && p.m > 1.99);
    }

    #[test]
    fn definiteness_examples() {
        assert!(check_nonneg_definite(&quad(), &[0, 1, 2]).unwrap().ok);
        let bad = check_nonneg_definite(&Kernel::polynomial(vec![2.0, 0.0, -1.0]).unwrap(), &[0])
            .unwrap();
        assert!(!bad.ok);
        assert!(bad.scales[0].min_eigenvalue < 0.0);
        assert!(
            check_nonneg_definite(&Kernel::<f64>::exponential(), &[0, 1])
                .unwrap()
                .ok
        );
    }

    #[test]
    fn translation() {
        let t = Kernel::affine(0.0).translate(2.0);
        assert_eq!((t.m(), t.upper()), (1.0, 3.0));
        assert_eq!(t.eval(-0.5), 1.5);
        assert_eq!(quad().translate(0.0), quad());
        let g = Kernel::polynomial(vec![0.1, -0.3, 0.7]).unwrap();
        assert_eq!(g.translate(1.0 / 3.0).translate(-1.0 / 3.0), g);
    }

    #[test]
    fn config_round_trip() {
        let cfg: KernelConfig<f64> = KernelConfig {
            family: KernelFamily::Quadratic { c: 2.0 },
            shift_b: 0.5,
        };
        let k = Kernel::try_from(cfg.clone()).unwrap();
        assert_eq!(k.m(), 2.5);
        assert_eq!(KernelConfig::from(k), cfg);
    }

    #[test]
    fn cauchy_schwarz_examples() {
        let g = quad();
        let r = kernel_cauchy_schwarz_check(
            &g,
            &MeasureSpec::atom(1.0, 1.0),
            &MeasureSpec::atom(-1.0, 1.0),
        );
        assert_eq!((r.lhs, r.rhs, r.ok), (9.0, 9.0, true));
        let r = kernel_cauchy_schwarz_check(
            &g,
            &MeasureSpec::atom(1.0, 1.0),
            &MeasureSpec::atom(0.0, 1.0),
        );
        assert_eq!((r.lhs, r.rhs, r.ok), (4.0, 6.0, true));
        let r = kernel_cauchy_schwarz_check(&g, &MeasureSpec::atom(1.0, 1.0), &MeasureSpec::zero());
        assert_eq!((r.lhs, r.rhs, r.ok), (0.0, 0.0, true));
    }

    #[test]
    fn double_integral_of_uniform() {
        let u = MeasureSpec::uniform(-1.0, 1.0, 0.5);
        assert_abs_diff_eq!(bilinear(&quad(), &u, &u), 19.0 / 9.0, epsilon = 1e-14);
        // ∫∫ e^{xy} over the uniform probability, by series Σ 1/((2n+1)² (2n)!)
        let series: f64 = (0..20)
            .map(|n| {
                let f: f64 = (1..=2 * n).map(|i| i as f64).product();
                1.0 / (((2 * n + 1) as f64).powi(2) * f)
            })
            .sum();
        assert_abs_diff_eq!(
            bilinear(&Kernel::exponential(), &u, &u),
            series,
            epsilon = 1e-13
        );
    }

    #[test]
    fn block_embedding_consistency() {
        let g = quad();
        let coarse = DyadicGrid::new(1).unwrap();
        let x = [1.0, 0.5, 2.0, 0.25];
        let e0 = quadratic_energy(&kernel_matrix(&g, coarse), &x).unwrap();
        for kf in 2..5 {
            let fine = lift(&x, 1, kf).unwrap();
            let e1 =
                quadratic_energy(&kernel_matrix(&g, DyadicGrid::new(kf).unwrap()), &fine).unwrap();
            let mass: f64 = x.iter().sum::<f64>() / 4.0;
            assert!((e0 - e1).abs() <= g.deriv_bound() * 0.5 * mass * mass);
        }
        let c = Kernel::polynomial(vec![3.0]).unwrap();
        let e0 = quadratic_energy(&kernel_matrix(&c, coarse), &x).unwrap();
        let fine = lift(&x, 1, 3).unwrap();
        let e1 = quadratic_energy(&kernel_matrix(&c, DyadicGrid::new(3).unwrap()), &fine).unwrap();
        assert_abs_diff_eq!(e0, e1, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn energy_monotone_and_locally_lipschitz(u in proptest::collection::vec(0.0f64..3.0, 4), extra in proptest::collection::vec(0.0f64..1.0, 4)) {
            let gm = kernel_matrix(&quad(), DyadicGrid::new(1).unwrap());
            let u2: Vec<f64> = u.iter().zip(&extra).map(|(a, b)| a + b).collect();
            // u <= u2 implies Gu <= Gu2 for a positive matrix
            let (y, y2) = (gm.apply(&u), gm.apply(&u2));
            prop_assert!(y.iter().zip(&y2).all(|(a, b)| a <= b));
            let (e, e2) = (quadratic_energy(&gm, &u).unwrap(), quadratic_energy(&gm, &u2).unwrap());
            prop_assert!(e <= e2 + 1e-12);
            let diff: Vec<f64> = y.iter().zip(&y2).map(|(a, b)| a - b).collect();
            let bound = (crate::dyadic::norm_l1_star(&y) + crate::dyadic::norm_l1_star(&y2))
                * crate::dyadic::norm_l1_star(&diff) / 2.0;
            prop_assert!((e - e2).abs() <= bound + 1e-12);
        }

        #[test]
        fn energy_depends_only_on_image(a in 0.0f64..2.0, b in 0.0f64..2.0) {
            // at K=1 the quadratic kernel has rank 2, so distinct weights share an image
            let gm = kernel_matrix(&quad(), DyadicGrid::new(1).unwrap());
            let x = vec![a, b, a, b];
            let null = [1.0, -4.0, 3.0, 0.0];
            let gn = gm.apply(&null);
            prop_assert!(crate::linalg::max_abs(&gn) < 1e-14);
            let s = a.min(b / 4.0) * 0.5;
            let x2: Vec<f64> = x.iter().zip(&null).map(|(p, q)| p + s * q * 0.25).collect();
            prop_assume!(x2.iter().all(|&v| v >= 0.0));
            let e = quadratic_energy(&gm, &x).unwrap();
            let e2 = quadratic_energy(&gm, &x2).unwrap();
            prop_assert!((e - e2).abs() <= 1e-10);
        }

        #[test]
        fn cauchy_schwarz_random(l1 in -1.0f64..1.0, w1 in 0.0f64..2.0, l2 in -1.0f64..1.0, w2 in 0.0f64..2.0, a in -1.0f64..0.0, len in 0.01f64..1.0) {
            let mu = MeasureSpec { atoms: vec![(l1, w1)], density: vec![(a, (a + len).min(1.0), 0.7)] };
            let nu = MeasureSpec::atom(l2, w2);
            for g in [quad(), Kernel::exponential()] {
                prop_assert!(kernel_cauchy_schwarz_check(&g, &mu, &nu).ok);
            }
        }
    }
}
