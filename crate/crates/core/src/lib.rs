//! Z2-valued spectral flow of time-reversal-symmetric operator families.
//!
//! The crate computes three things and cross-checks them against each other:
//!
//! * the Z-valued spectral flow of a Hermitian family (signed eigenvalue
//!   crossings) and its Z2-valued refinement for families invariant under an
//!   anti-unitary anti-involution with `T^2 = -1`;
//! * kernel indices of discretized suspension operators `d/dt + A(t)` with
//!   periodic or Atiyah-Patodi-Singer boundary conditions, which the mod-2
//!   Robbin-Salamon theorem ties to the flow;
//! * the bulk and edge Z2 invariants of 2D class-AII tight-binding models
//!   (Wannier-center partner switching vs. the half-spectral flow of the
//!   half-lattice edge family), which agree by the bulk-edge correspondence.
//!
//! See the `z2flow` binary for the command-line surface.

pub mod antiunitary;
pub mod bulk;
pub mod cli;
pub mod eig;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod lattice;
pub mod mat;
pub mod path;
pub mod report;
pub mod suspension;

pub use antiunitary::{kramers_check, AntiUnitary, KramersReport};
pub use eig::{hermitian_eig, kernel_rank, EigDecomposition, HermitianOp};
pub use error::{CoreError, Result};
pub use path::{OperatorPath, PathDomain, Z2};
