//! Numerical toolkit for finite-dimensional noncommutative `L_p` spaces.
//!
//! The central routine recovers `*`-moments `τ(x₁^{ε₁}···x_n^{ε_n})` of a
//! matrix family using nothing but Schatten p-norms of
//! `1 + Σ z_j a_j^{ε_j} ⊗ x_j`, where the `a_j` form a cyclic-trace gadget.

pub mod algebra;
pub mod binomial;
pub mod corner;
pub mod distribution;
pub mod evenp;
pub mod error;
pub mod gadget;
pub mod io;
pub mod reconstruct;
pub mod rng;
pub mod suite;

pub use algebra::{ComplexMatrix, Letter, StarWord};
pub use error::{Error, Result};
