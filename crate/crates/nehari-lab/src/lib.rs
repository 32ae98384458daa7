//! Ground states of the stationary nonlinear Schrödinger equation
//! `Δu + |u|^{p-2} u = λ u` with homogeneous Dirichlet boundary, on
//! discretized 1D/2D domains.
//!
//! The crate computes both families of constrained minimizers:
//!
//! * **action ground states** — minimizers of
//!   `J_λ(u) = 1/2 |∇u|² + λ/2 |u|² - 1/p |u|_p^p` on the Nehari constraint
//!   set `|∇u|² + λ|u|² = |u|_p^p`, solved through the equivalent quotient
//!   problem on the unit Lp sphere;
//! * **energy ground states** — minimizers of
//!   `E(u) = 1/2 |∇u|² - 1/p |u|_p^p` at fixed half-mass `1/2 |u|² = μ`,
//!   solved by projected gradient descent.
//!
//! On top of the solvers, [`levels`] builds the level curves `λ ↦ J(λ)` and
//! `μ ↦ E(μ)`, their Legendre–Fenchel transform and derivative/mass
//! diagnostics, and [`hessian`] evaluates the constrained second-variation
//! forms, their exact decomposition identity and extremal eigenvalues.
//! The [`cli`] module exposes everything as a reproducible command line tool.

pub mod cli;
pub mod error;
pub mod functional;
pub mod grid;
pub mod hessian;
pub mod levels;
pub mod solve;

pub use error::SolverError;
pub use functional::{CriticalData, ProblemParams};
pub use grid::{DiscreteDomain, DomainKind, Field};
pub use solve::{GroundState, SolverConfig, SolverKind, StepRule};
