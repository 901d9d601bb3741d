//! Hamilton-Jacobi equations on the cone of non-negative measures on [-1, 1].
//!
//! The crate discretizes measures on dyadic grids, builds the monotone Lipschitz
//! extension of the quadratic cone energy, and solves the projected equations either
//! with a monotone Lax-Friedrichs grid scheme or through the Hopf-Lax variational
//! formula. Everything is generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases
//! at the crate root fix the common double-precision case.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dyadic;
pub mod error;
pub mod grid_solver;
pub mod hamiltonian;
pub mod hopf_lax;
pub mod initial;
pub mod kernel;
pub mod limits;
pub mod linalg;
pub mod optim;
pub mod scalar;
pub mod suite;

pub use dyadic::{
    coarsen, lift, norm_l1, norm_l1_star, project_measure, tv_distance, wasserstein,
    DiscreteMeasure, DyadicGrid, MeasureSpec,
};
pub use error::{Error, Result};
pub use grid_solver::{
    monotone_certificate, solve, GridSolution, InitialValue, LatticeDomain, SolveOptions,
};
pub use hamiltonian::{
    cone_decompose, lipschitz_audit, ConeDecomposition, ExtendedHamiltonian, Hamiltonian,
    LipschitzAudit,
};
pub use hopf_lax::{
    constraint_shift, first_order_residual, hopf_lax_finite, hopf_lax_measure, HopfLax,
    HopfLaxOptions, HopfLaxResult,
};
pub use initial::{InitialCondition, InitialConfig, ProjectedInitial, ProjectedKind, SoftMinPiece};
pub use kernel::{
    bilinear, check_lower_bound, check_nonneg_definite, g_mu, g_mu_discrete,
    kernel_cauchy_schwarz_check, kernel_matrix, quadratic_energy, Kernel, KernelConfig,
    KernelFamily, KernelMatrix,
};
pub use limits::{
    b_invariance, bidual_sanity, distance_like, error_term, gradient_in_set_check, k_convergence,
    r_independence, separate, value_at_scale, BInvarianceReport, BidualReport, ConvergenceReport,
    GradientSetReport, LimitOptions, Method, RIndependenceReport, PDE_MAX_SCALE,
};
pub use scalar::Scalar;
pub use suite::{run_suite, run_suite_with, Property, PropertyOutcome, SuiteConfig, SuiteReport};

pub type MeasureSpec64 = MeasureSpec<f64>;
pub type DiscreteMeasure64 = DiscreteMeasure<f64>;
pub type Kernel64 = Kernel<f64>;
pub type KernelMatrix64 = KernelMatrix<f64>;
pub type ExtendedHamiltonian64 = ExtendedHamiltonian<f64>;
pub type InitialCondition64 = InitialCondition<f64>;
pub type LatticeDomain64 = LatticeDomain<f64>;
pub type GridSolution64 = GridSolution<f64>;
pub type HopfLax64 = HopfLax<f64>;
pub type HopfLaxResult64 = HopfLaxResult<f64>;
pub type SuiteConfig64 = SuiteConfig<f64>;
pub type SuiteReport64 = SuiteReport<f64>;
