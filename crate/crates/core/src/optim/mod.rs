//! Optimizers shared by the Hamiltonian extension and the Hopf-Lax solvers.

pub mod nnls;
pub mod pg;
pub mod qp;
pub mod simplex;

pub use nnls::{nnls, NnlsSolution};
pub use pg::{kkt_residual, maximize, maximize_multistart, PgOptions, PgResult};
pub use qp::{solve_qp, QpOptions, QpProblem, QpSolution};
pub use simplex::{project_capped, project_simplex};
