//! Initial conditions on measures and their finite-dimensional sections
//! `ψ^(K)(x) = ψ(μ_x)` with `μ_x = d⁻¹ Σ_k x_k δ_k`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dyadic::{norm_l1_star, DyadicGrid, MeasureSpec};
use crate::error::{Error, Result};
use crate::kernel::{g_mu, Kernel};
use crate::linalg::dot;
use crate::scalar::Scalar;

/// Samples used to estimate `sup |G_ρ|` on [-1, 1]. Every dyadic point up to scale 12 is hit.
const SUP_SAMPLES: usize = 1 << 13;

pub type ValueFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type GradientFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SoftMinPiece<T: Scalar> {
    pub rho: MeasureSpec<T>,
    #[serde(default)]
    pub offset: T,
}

/// Serialized form of the data-driven initial conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "")]
pub enum InitialConfig<T: Scalar> {
    Linear {
        rho: MeasureSpec<T>,
        #[serde(default)]
        offset: T,
    },
    SoftMin {
        pieces: Vec<SoftMinPiece<T>>,
        temperature: T,
    },
}

#[derive(Clone)]
pub enum InitialCondition<T: Scalar> {
    /// `ψ(μ) = ∫ G_ρ dμ + offset`
    Linear { rho: MeasureSpec<T>, offset: T },
    /// `ψ(μ) = −τ log Σ_i exp(−(∫ G_{ρ_i} dμ + c_i)/τ)`
    SoftMin {
        pieces: Vec<SoftMinPiece<T>>,
        temperature: T,
    },
    /// A function of the weight vector at a fixed scale with a supergradient.
    Raw {
        scale: u32,
        value: ValueFn<T>,
        gradient: GradientFn<T>,
        lip_tv: T,
        mass: T,
    },
}

impl<T: Scalar> fmt::Debug for InitialCondition<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Linear { rho, offset } => f
                .debug_struct("Linear")
                .field("rho", rho)
                .field("offset", offset)
                .finish(),
            Self::SoftMin {
                pieces,
                temperature,
            } => f
                .debug_struct("SoftMin")
                .field("pieces", pieces)
                .field("temperature", temperature)
                .finish(),
            Self::Raw {
                scale,
                lip_tv,
                mass,
                ..
            } => f
                .debug_struct("Raw")
                .field("scale", scale)
                .field("lip_tv", lip_tv)
                .field("mass", mass)
                .finish_non_exhaustive(),
        }
    }
}

impl<T: Scalar> TryFrom<InitialConfig<T>> for InitialCondition<T> {
    type Error = Error;
    fn try_from(cfg: InitialConfig<T>) -> Result<Self> {
        let ic = match cfg {
            InitialConfig::Linear { rho, offset } => Self::Linear { rho, offset },
            InitialConfig::SoftMin {
                pieces,
                temperature,
            } => Self::SoftMin {
                pieces,
                temperature,
            },
        };
        ic.validate()?;
        Ok(ic)
    }
}

fn sup_abs_g_mu<T: Scalar>(kernel: &Kernel<T>, rho: &MeasureSpec<T>) -> T {
    let n = SUP_SAMPLES;
    (0..=n).fold(T::zero(), |mx, i| {
        let x = T::c(2.0 * i as f64 / n as f64 - 1.0);
        mx.max(g_mu(kernel, rho, x).abs())
    })
}

impl<T: Scalar> InitialCondition<T> {
    pub fn linear(rho: MeasureSpec<T>) -> Self {
        Self::Linear {
            rho,
            offset: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Linear { rho, offset } => {
                rho.validate()?;
                if !offset.is_finite() {
                    return Err(Error::InvalidArgument("offset must be finite".into()));
                }
            }
            Self::SoftMin {
                pieces,
                temperature,
            } => {
                if pieces.is_empty() {
                    return Err(Error::InvalidArgument(
                        "soft-min needs at least one piece".into(),
                    ));
                }
                if !(*temperature > T::zero()) {
                    return Err(Error::InvalidArgument(
                        "soft-min temperature must be positive".into(),
                    ));
                }
                for p in pieces {
                    p.rho.validate()?;
                }
            }
            Self::Raw { lip_tv, mass, .. } => {
                if !(*lip_tv >= T::zero()) || !(*mass >= T::zero()) {
                    return Err(Error::InvalidArgument(
                        "raw Lipschitz constant and mass must be non-negative".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Cone mass `a`: the gradient lies in the image of weights of mass at most `a`.
    pub fn mass(&self) -> T {
        match self {
            Self::Linear { rho, .. } => rho.total_mass(),
            Self::SoftMin { pieces, .. } => pieces
                .iter()
                .fold(T::zero(), |m, p| m.max(p.rho.total_mass())),
            Self::Raw { mass, .. } => *mass,
        }
    }

    /// Lipschitz constant with respect to total variation, `sup |G_ρ|` for the linear family.
    pub fn lip_tv(&self, kernel: &Kernel<T>) -> T {
        match self {
            Self::Linear { rho, .. } => sup_abs_g_mu(kernel, rho),
            Self::SoftMin { pieces, .. } => pieces
                .iter()
                .fold(T::zero(), |m, p| m.max(sup_abs_g_mu(kernel, &p.rho))),
            Self::Raw { lip_tv, .. } => *lip_tv,
        }
    }

    /// `ψ(μ)` for a measure given by its spec.
    pub fn value_on_measure(&self, kernel: &Kernel<T>, mu: &MeasureSpec<T>) -> Result<T> {
        mu.validate()?;
        let lin = |rho: &MeasureSpec<T>| crate::kernel::bilinear(kernel, rho, mu);
        match self {
            Self::Linear { rho, offset } => Ok(lin(rho) + *offset),
            Self::SoftMin {
                pieces,
                temperature,
            } => {
                let vals: Vec<T> = pieces.iter().map(|p| lin(&p.rho) + p.offset).collect();
                Ok(soft_min(&vals, *temperature).0)
            }
            Self::Raw { .. } => Err(Error::InvalidArgument(
                "raw initial conditions act on weight vectors only".into(),
            )),
        }
    }

    /// `ψ^(K)` on the grid of `grid`.
    pub fn at_scale(&self, kernel: &Kernel<T>, grid: DyadicGrid) -> Result<ProjectedInitial<T>> {
        self.validate()?;
        let d = grid.len();
        let df = T::from_usize_exact(d);
        let points: Vec<T> = grid.points();
        let slope = |rho: &MeasureSpec<T>| -> Vec<T> {
            points.iter().map(|&x| g_mu(kernel, rho, x) / df).collect()
        };
        let kind = match self {
            Self::Linear { rho, offset } => ProjectedKind::Affine {
                p: slope(rho),
                c: *offset,
            },
            Self::SoftMin {
                pieces,
                temperature,
            } => ProjectedKind::SoftMin {
                ps: pieces.iter().map(|p| slope(&p.rho)).collect(),
                cs: pieces.iter().map(|p| p.offset).collect(),
                tau: *temperature,
            },
            Self::Raw {
                scale,
                value,
                gradient,
                ..
            } => {
                if *scale != grid.scale() {
                    return Err(Error::GridMismatch(*scale, grid.scale()));
                }
                ProjectedKind::Raw {
                    value: value.clone(),
                    gradient: gradient.clone(),
                }
            }
        };
        let lip_l1 = match (&kind, self) {
            (ProjectedKind::Affine { p, .. }, _) => norm_l1_star(p),
            (ProjectedKind::SoftMin { ps, .. }, _) => {
                ps.iter().fold(T::zero(), |m, p| m.max(norm_l1_star(p)))
            }
            (ProjectedKind::Raw { .. }, Self::Raw { lip_tv, .. }) => *lip_tv,
            _ => unreachable!(),
        };
        Ok(ProjectedInitial {
            grid,
            kind,
            lip_l1,
            mass: self.mass(),
            kernel: kernel.clone(),
            source: self.clone(),
        })
    }
}

/// Stable soft-min and its weights.
fn soft_min<T: Scalar>(vals: &[T], tau: T) -> (T, Vec<T>) {
    let lo = vals.iter().fold(T::infinity(), |m, &v| m.min(v));
    let e: Vec<T> = vals.iter().map(|&v| (-(v - lo) / tau).exp()).collect();
    let s: T = e.iter().copied().sum();
    (lo - tau * s.ln(), e.into_iter().map(|v| v / s).collect())
}

#[derive(Clone)]
pub enum ProjectedKind<T: Scalar> {
    Affine {
        p: Vec<T>,
        c: T,
    },
    SoftMin {
        ps: Vec<Vec<T>>,
        cs: Vec<T>,
        tau: T,
    },
    Raw {
        value: ValueFn<T>,
        gradient: GradientFn<T>,
    },
}

/// `ψ^(K)` together with its gradient and `‖ψ^(K)‖_Lip,1`.
#[derive(Clone)]
pub struct ProjectedInitial<T: Scalar> {
    grid: DyadicGrid,
    kind: ProjectedKind<T>,
    lip_l1: T,
    mass: T,
    kernel: Kernel<T>,
    source: InitialCondition<T>,
}

impl<T: Scalar> fmt::Debug for ProjectedInitial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProjectedInitial")
            .field("grid", &self.grid)
            .field("lip_l1", &self.lip_l1)
            .field("mass", &self.mass)
            .field("source", &self.source)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> ProjectedInitial<T> {
    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn kind(&self) -> &ProjectedKind<T> {
        &self.kind
    }

    pub fn source(&self) -> &InitialCondition<T> {
        &self.source
    }

    /// `sup ‖∇ψ^(K)‖₁,*`.
    pub fn lip_l1(&self) -> T {
        self.lip_l1
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    /// `(p, c)` when `ψ^(K)(x) = p·x + c`.
    pub fn affine(&self) -> Option<(&[T], T)> {
        match &self.kind {
            ProjectedKind::Affine { p, c } => Some((p, *c)),
            _ => None,
        }
    }

    pub fn value(&self, x: &[T]) -> T {
        match &self.kind {
            ProjectedKind::Affine { p, c } => dot(p, x) + *c,
            ProjectedKind::SoftMin { ps, cs, tau } => {
                let vals: Vec<T> = ps.iter().zip(cs).map(|(p, &c)| dot(p, x) + c).collect();
                soft_min(&vals, *tau).0
            }
            ProjectedKind::Raw { value, .. } => value(x),
        }
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        self.value_and_gradient(x).1
    }

    pub fn value_and_gradient(&self, x: &[T]) -> (T, Vec<T>) {
        match &self.kind {
            ProjectedKind::Affine { p, c } => (dot(p, x) + *c, p.clone()),
            ProjectedKind::SoftMin { ps, cs, tau } => {
                let vals: Vec<T> = ps.iter().zip(cs).map(|(p, &c)| dot(p, x) + c).collect();
                let (v, w) = soft_min(&vals, *tau);
                let mut g = vec![T::zero(); x.len()];
                for (p, &wi) in ps.iter().zip(&w) {
                    for (gk, &pk) in g.iter_mut().zip(p) {
                        *gk += wi * pk;
                    }
                }
                (v, g)
            }
            ProjectedKind::Raw { value, gradient } => (value(x), gradient(x)),
        }
    }

    /// Gateaux derivative density `x ↦ D_μψ(μ_w, x)` at the measure with weights `w`.
    pub fn gateaux_density(&self, w: &[T], x: T) -> Result<T> {
        match &self.source {
            InitialCondition::Linear { rho, .. } => Ok(g_mu(&self.kernel, rho, x)),
            InitialCondition::SoftMin { pieces, .. } => {
                let ProjectedKind::SoftMin { ps, cs, tau } = &self.kind else {
                    unreachable!()
                };
                let vals: Vec<T> = ps.iter().zip(cs).map(|(p, &c)| dot(p, w) + c).collect();
                let (_, weights) = soft_min(&vals, *tau);
                Ok(pieces
                    .iter()
                    .zip(&weights)
                    .map(|(p, &wi)| wi * g_mu(&self.kernel, &p.rho, x))
                    .sum())
            }
            InitialCondition::Raw { .. } => Err(Error::DensityUnavailable),
        }
    }
}
