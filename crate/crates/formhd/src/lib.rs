//! Structure-preserving simulation toolkit for dissipative fluid models
//! written in discrete differential forms on uniform Cartesian grids.
//!
//! The crate is organized in layers:
//!
//! * [`mesh`], [`form`], [`alt`]: grids, k-form storage, multi-index signs.
//! * [`ops`]: exterior derivative, wedge, Hodge star, interior product,
//!   Lie derivative, the diamond pairing, integration and inner products.
//! * [`trace`]: boundary restriction of tangential components.
//! * [`eos`], [`state`], [`thermo`]: equation of state, the two-species
//!   magnetofluid state bundle, and dissipative closure validation.
//! * [`curie`]: numerical representation theory over O(n) used to check
//!   which couplings are isotropy-admissible.
//! * [`solver`], [`general`], [`boundary`]: semi-discrete right-hand sides
//!   and explicit time steppers.
//! * [`diagnostics`], [`scenario`], [`selfcheck`], [`io`]: conserved-
//!   quantity reports, TOML-driven runs, built-in verification, snapshots.
//!
//! The design goal throughout is that structural identities (d after d,
//! integration by parts, adjointness of advection and the diamond pairing,
//! antisymmetric closure couplings) hold to rounding error on the discrete
//! level, not just in the limit, so conservation failures in applications
//! point at modeling choices rather than at the discretization.

pub mod alt;
pub mod boundary;
pub mod curie;
pub mod diagnostics;
pub mod scenario;
pub mod selfcheck;
pub mod eos;
pub mod error;
pub mod form;
pub mod general;
pub mod io;
pub mod mesh;
pub mod ops;
pub mod solver;
pub mod state;
pub mod thermo;
pub mod trace;

pub use error::{Error, Result};
pub use form::{CovectorDensity, DiscreteForm, TensorField, VectorField};
pub use mesh::GridMesh;

pub use ndarray;
