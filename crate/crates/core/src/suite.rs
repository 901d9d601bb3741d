//! Seeded battery of structural properties: scheme monotonicity, comparison, order
//! preservation, gradient constraints, Hamiltonian audits, the semigroup identity, cone
//! biduality and the measure-layer identities.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{
    coarsen, lift, norm_l1, norm_l1_star, tv_distance, wasserstein, DiscreteMeasure, DyadicGrid,
    MeasureSpec,
};
use crate::error::{Error, Result};
use crate::grid_solver::{
    monotone_certificate, solve, GridSolution, InitialValue, LatticeDomain, SolveOptions,
};
use crate::hamiltonian::{lipschitz_audit, ExtendedHamiltonian, Hamiltonian};
use crate::hopf_lax::HopfLax;
use crate::initial::{InitialCondition, ProjectedInitial, SoftMinPiece};
use crate::kernel::{Kernel, KernelMatrix};
use crate::limits::{bidual_sanity, distance_like, gradient_in_set_check};
use crate::linalg::dot;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    MonotoneScheme,
    Comparison,
    MonotonicityPreservation,
    GradientInSet,
    HamiltonianAudit,
    SemigroupResidual,
    ConeBiduality,
    LiftCoarsen,
    Metric,
    Holder,
    DistanceLike,
}

impl Property {
    pub const ALL: [Property; 11] = [
        Property::MonotoneScheme,
        Property::Comparison,
        Property::MonotonicityPreservation,
        Property::GradientInSet,
        Property::HamiltonianAudit,
        Property::SemigroupResidual,
        Property::ConeBiduality,
        Property::LiftCoarsen,
        Property::Metric,
        Property::Holder,
        Property::DistanceLike,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::MonotoneScheme => "monotone_scheme",
            Property::Comparison => "comparison",
            Property::MonotonicityPreservation => "monotonicity_preservation",
            Property::GradientInSet => "gradient_in_set",
            Property::HamiltonianAudit => "hamiltonian_audit",
            Property::SemigroupResidual => "semigroup_residual",
            Property::ConeBiduality => "cone_biduality",
            Property::LiftCoarsen => "lift_coarsen",
            Property::Metric => "metric",
            Property::Holder => "holder",
            Property::DistanceLike => "distance_like",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig<T: Scalar> {
    pub kernel: Kernel<T>,
    /// Cutoff radius of the Hamiltonian extension.
    pub r: T,
    pub seeds: Vec<u64>,
    pub properties: Vec<Property>,
    /// Random samples per sampled property.
    pub samples: usize,
}

impl<T: Scalar> SuiteConfig<T> {
    pub fn new(kernel: Kernel<T>, r: T, seeds: Vec<u64>) -> Self {
        Self {
            kernel,
            r,
            seeds,
            properties: Property::ALL.to_vec(),
            samples: 200,
        }
    }

    /// The scale-0 extension the solver-based properties run with.
    pub fn hamiltonian(&self) -> Result<ExtendedHamiltonian<T>> {
        let gm = KernelMatrix::new(&self.kernel, DyadicGrid::new(0)?);
        ExtendedHamiltonian::new(&gm, &self.kernel, self.r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct PropertyOutcome<T: Scalar> {
    pub property: Property,
    pub seed: u64,
    pub passed: bool,
    /// Worst observed quantity; passing means it respects `threshold`.
    pub measure: T,
    pub threshold: T,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct SuiteReport<T: Scalar> {
    pub outcomes: Vec<PropertyOutcome<T>>,
    pub passed: bool,
}

impl<T: Scalar> SuiteReport<T> {
    pub fn failures(&self) -> impl Iterator<Item = &PropertyOutcome<T>> {
        self.outcomes.iter().filter(|o| !o.passed)
    }
}

/// Runs the configured properties with the default extension at scale 0.
pub fn run_suite<T: Scalar>(cfg: &SuiteConfig<T>) -> Result<SuiteReport<T>> {
    let h = cfg.hamiltonian()?;
    run_suite_with(cfg, &h)
}

/// Runs the configured properties with `h` standing in for the scale-0 Hamiltonian.
pub fn run_suite_with<T: Scalar>(
    cfg: &SuiteConfig<T>,
    h: &dyn Hamiltonian<T>,
) -> Result<SuiteReport<T>> {
    if cfg.properties.is_empty() {
        return Err(Error::InvalidArgument("no properties selected".into()));
    }
    if cfg.seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds given".into()));
    }
    if h.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: h.dim(),
        });
    }
    let mut outcomes = Vec::new();
    for &p in &cfg.properties {
        for &seed in &cfg.seeds {
            let out = match check(p, cfg, h, seed) {
                Ok(o) => o,
                Err(e) => PropertyOutcome {
                    property: p,
                    seed,
                    passed: false,
                    measure: T::nan(),
                    threshold: T::nan(),
                    detail: format!("error: {e}"),
                },
            };
            outcomes.push(out);
        }
    }
    Ok(SuiteReport {
        passed: outcomes.iter().all(|o| o.passed),
        outcomes,
    })
}

/// `measure ≤ threshold` passes.
fn upper_bound<T: Scalar>(
    property: Property,
    seed: u64,
    measure: T,
    threshold: T,
    detail: String,
) -> PropertyOutcome<T> {
    PropertyOutcome {
        property,
        seed,
        passed: measure <= threshold,
        measure,
        threshold,
        detail,
    }
}

fn worked_initial<T: Scalar>(g: &Kernel<T>) -> Result<ProjectedInitial<T>> {
    InitialCondition::linear(MeasureSpec::atom(-T::one(), T::one()))
        .at_scale(g, DyadicGrid::new(0)?)
}

const SHORT_T: f64 = 0.02;
const SHORT_DX: f64 = 0.1;

fn short_solve<T: Scalar, P: InitialValue<T>>(
    h: &dyn Hamiltonian<T>,
    psi: &P,
    margin: T,
) -> Result<GridSolution<T>> {
    let t = T::c(SHORT_T);
    let dom = LatticeDomain::covering(0, T::c(SHORT_DX), margin, h.lip_bound(), t)?;
    solve(psi, h, t, &dom, &SolveOptions::default())
}

fn check<T: Scalar>(
    p: Property,
    cfg: &SuiteConfig<T>,
    h: &dyn Hamiltonian<T>,
    seed: u64,
) -> Result<PropertyOutcome<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.samples.max(1);
    let uni = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| T::c(lo + (hi - lo) * rng.gen::<f64>());
    Ok(match p {
        Property::MonotoneScheme => {
            let cert = monotone_certificate(h, T::c(SHORT_DX), n.min(100), seed)?;
            upper_bound(
                p,
                seed,
                cert.max_violation.max(T::zero()),
                T::c(1e-14),
                format!("{} probes at {} states", cert.probes, cert.states),
            )
        }
        Property::Comparison | Property::MonotonicityPreservation => {
            let psi = worked_initial(&cfg.kernel)?;
            let (a, b) = (uni(&mut rng, 0.5, 1.5), uni(&mut rng, 0.1, 1.0));
            let (c, e) = (uni(&mut rng, 0.5, 1.5), uni(&mut rng, 0.1, 1.0));
            // min/max of coordinatewise non-decreasing functions stay non-decreasing
            let lo = |x: &[T]| psi.value(x).min(a + b * x[0]);
            let hi = |x: &[T]| psi.value(x).max(c + e * x[1]);
            let sol_lo = short_solve(h, &lo, T::c(0.5))?;
            let mut worst = T::neg_infinity();
            if p == Property::Comparison {
                let sol_hi = short_solve(h, &hi, T::c(0.5))?;
                for s in 0..sol_lo.times().len() {
                    for (u, v) in sol_lo.values(s).iter().zip(sol_hi.values(s)) {
                        worst = worst.max(*u - *v);
                    }
                }
            } else {
                let m = sol_lo.domain().points_per_axis();
                for s in 0..sol_lo.times().len() {
                    for i in 0..m {
                        for j in 0..m - 1 {
                            worst = worst
                                .max(sol_lo.value_at(s, &[i, j]) - sol_lo.value_at(s, &[i, j + 1]));
                            worst = worst
                                .max(sol_lo.value_at(s, &[j, i]) - sol_lo.value_at(s, &[j + 1, i]));
                        }
                    }
                }
            }
            upper_bound(
                p,
                seed,
                worst,
                T::c(1e-10),
                "largest order violation over all stored times".into(),
            )
        }
        Property::GradientInSet => {
            // soft-min of two unit-mass atoms on the grid: gradients are mixtures of Gu_i
            let psi = InitialCondition::SoftMin {
                pieces: vec![
                    SoftMinPiece {
                        rho: MeasureSpec::atom(-T::one(), T::one()),
                        offset: T::zero(),
                    },
                    SoftMinPiece {
                        rho: MeasureSpec::atom(T::zero(), T::one()),
                        offset: uni(&mut rng, -0.5, 0.5),
                    },
                ],
                temperature: uni(&mut rng, 0.05, 0.5),
            }
            .at_scale(&cfg.kernel, DyadicGrid::new(0)?)?;
            let margin = T::c(0.5);
            let sol = short_solve(h, &psi, margin)?;
            let t = *sol.times().last().unwrap();
            let gm = KernelMatrix::new(&cfg.kernel, DyadicGrid::new(0)?);
            let slack = T::one() / T::c(2f64.sqrt()) + T::c(2.0 * SHORT_DX) * h.lip_bound();
            let f = |x: &[T]| sol.query(t, x).unwrap_or(T::nan());
            let rep = gradient_in_set_check(f, &gm, T::one(), slack, margin, n, seed, T::c(1e-9));
            PropertyOutcome {
                property: p,
                seed,
                passed: rep.ok,
                measure: rep.worst_margin,
                threshold: -T::c(1e-9),
                detail: format!("{} violations in {} pairs", rep.violations, rep.pairs),
            }
        }
        Property::HamiltonianAudit => {
            let audit = lipschitz_audit(h, n.max(500), seed)?;
            PropertyOutcome {
                property: p,
                seed,
                passed: audit.ok,
                measure: audit.max_ratio,
                threshold: audit.bound,
                detail: format!(
                    "{} monotonicity violations (worst gap {}), minimum value {}",
                    audit.monotone_violations, audit.worst_monotone_gap, audit.min_value
                ),
            }
        }
        Property::SemigroupResidual => {
            let grid = DyadicGrid::new(0)?;
            let psi = worked_initial(&cfg.kernel)?;
            let hl = HopfLax::new(psi, KernelMatrix::new(&cfg.kernel, grid))?;
            let mut worst = T::zero();
            for _ in 0..5 {
                let t = uni(&mut rng, 0.2, 2.0);
                let s = t * uni(&mut rng, 0.1, 0.9);
                let x = [uni(&mut rng, 0.0, 2.0), uni(&mut rng, 0.0, 2.0)];
                worst = worst.max(hl.semigroup_residual(t, s, &x)?);
            }
            upper_bound(
                p,
                seed,
                worst,
                T::c(1e-8),
                "five random (t, s, x) triples".into(),
            )
        }
        Property::ConeBiduality => {
            let mut ok = true;
            let mut worst = T::infinity();
            for k in 0..3 {
                let rep = bidual_sanity(
                    &KernelMatrix::new(&cfg.kernel, DyadicGrid::new(k)?),
                    n.min(100),
                    seed,
                );
                ok &= rep.ok;
                worst = worst.min(rep.min_inner);
            }
            PropertyOutcome {
                property: p,
                seed,
                passed: ok,
                measure: worst,
                threshold: -T::c(1e-10),
                detail: "scales 0..=2; every outside point separated".into(),
            }
        }
        Property::LiftCoarsen => {
            let mut exact = true;
            let mut worst = T::zero();
            for _ in 0..n.min(100) {
                let k = rng.gen_range(0..4u32);
                let k_to = k + rng.gen_range(1..4u32);
                let x: Vec<T> = (0..1usize << (k + 1))
                    .map(|_| uni(&mut rng, 0.0, 3.0))
                    .collect();
                let up = lift(&x, k, k_to)?;
                exact &= coarsen(&up, k_to, k)? == x;
                worst = worst.max((norm_l1(&up) - norm_l1(&x)).abs());
            }
            PropertyOutcome {
                property: p,
                seed,
                passed: exact && worst <= T::c(1e-14),
                measure: worst,
                threshold: T::c(1e-14),
                detail: format!(
                    "round trip exact: {exact}; largest mass change reported as measure"
                ),
            }
        }
        Property::Metric => {
            let grid = DyadicGrid::new(2)?;
            let d = grid.len();
            let mut worst = T::zero();
            let draw = |rng: &mut ChaCha8Rng| -> Result<DiscreteMeasure<T>> {
                let w: Vec<T> = (0..d).map(|_| uni(rng, 0.0, 1.0)).collect();
                let s = norm_l1(&w);
                DiscreteMeasure::new(grid, w.into_iter().map(|v| v / s).collect())
            };
            for _ in 0..n.min(100) {
                let (a, b, c) = (draw(&mut rng)?, draw(&mut rng)?, draw(&mut rng)?);
                for dist in [tv_distance::<T>, wasserstein::<T>] {
                    let (ab, ba, bc, ac) =
                        (dist(&a, &b)?, dist(&b, &a)?, dist(&b, &c)?, dist(&a, &c)?);
                    worst = worst
                        .max((ab - ba).abs())
                        .max(dist(&a, &a)?.abs())
                        .max(ac - ab - bc);
                }
            }
            upper_bound(
                p,
                seed,
                worst,
                T::c(1e-12),
                "symmetry, identity and triangle defects".into(),
            )
        }
        Property::Holder => {
            let mut worst = T::neg_infinity();
            for d in [2usize, 4, 8] {
                for _ in 0..1000 {
                    let x: Vec<T> = (0..d).map(|_| uni(&mut rng, -2.0, 2.0)).collect();
                    let y: Vec<T> = (0..d).map(|_| uni(&mut rng, -2.0, 2.0)).collect();
                    worst = worst.max(dot(&x, &y) - norm_l1(&x) * norm_l1_star(&y));
                }
            }
            upper_bound(
                p,
                seed,
                worst,
                T::c(1e-12),
                "x·y − ‖x‖₁‖y‖₁,* over d ∈ {2, 4, 8}".into(),
            )
        }
        Property::DistanceLike => {
            let mut worst = T::neg_infinity();
            for _ in 0..n {
                let a: Vec<T> = (0..4).map(|_| uni(&mut rng, 0.0, 3.0)).collect();
                let b: Vec<T> = (0..4).map(|_| uni(&mut rng, 0.0, 3.0)).collect();
                let up: Vec<T> = a.iter().map(|&v| v + uni(&mut rng, 0.0, 1.0)).collect();
                let mid: Vec<T> = a
                    .iter()
                    .zip(&b)
                    .map(|(&p, &q)| T::c(0.5) * (p + q))
                    .collect();
                let diff: Vec<T> = a.iter().zip(&b).map(|(&p, &q)| p - q).collect();
                let (fa, fb) = (distance_like(&a)?, distance_like(&b)?);
                worst = worst
                    .max(T::c(0.5) * (fa + fb) - distance_like(&mid)?)
                    .max((fa - fb).abs() - norm_l1(&diff))
                    .max(fa - distance_like(&up)?);
            }
            upper_bound(
                p,
                seed,
                worst,
                T::c(1e-14),
                "concavity, 1-Lipschitz and monotonicity defects".into(),
            )
        }
    })
}
