//! Numerical laboratory for the semiclassical limit of the Wigner equation
//! with a short-range (or contact) pair interaction.
//!
//! The crate evolves the Wigner equation and its singular Vlasov
//! (Vlasov-Benney) limit with matching Strang splittings, evaluates quantum
//! and classical Penrose functions, computes the weighted norms used to
//! monitor uniform bounds, and integrates the bicharacteristics of the
//! associated eikonal equation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boperator;
pub mod eikonal;
pub mod error;
pub mod harness;
pub mod evolution;
pub mod norms;
pub mod penrose;
pub mod potential;
pub mod profiles;
pub mod quadrature;
pub mod spectral;
pub mod wigner;

pub use error::{Error, Result};
pub use potential::{Epsilon, PairPotential};
