//! Conservative-irreversible 4-tensors on coordinate charts of ℝⁿ.
//!
//! The crate covers four layers:
//!
//! * [`tensor`]: dense order-4 tensors, the symmetry class V₃ and its
//!   projector, sampled PSD certification of the cone S.
//! * [`basis`]: the explicit basis of V₃, its positive-semidefinite variant
//!   and coordinates with respect to either.
//! * [`simple`]: simple tensors `λ (J_ik J_jl + J_il J_jk)`, decompositions
//!   into weighted simple components and the simplicity test.
//! * [`brackets`] and [`dynamics`]: pointwise bracket evaluation over scalar
//!   fields and the irreversible Hamiltonian simulator.
//!
//! [`system`] reads the JSON system description used by the CLI.

pub mod basis;
pub mod brackets;
pub mod dynamics;
pub mod error;
pub mod poly;
pub mod sampling;
pub mod simple;
pub mod system;
pub mod tensor;
pub mod tol;

pub use error::{Error, Result};
pub use tensor::{Perm4, SymmetryReport, Tensor4};
