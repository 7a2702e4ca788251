//! Single-phase Darcy flow in porous media cut by a through-going fault.
//!
//! The fault is modelled as a co-dimension-one object with two independent
//! layers, one per side of the fault, so the two matrix meshes may be
//! non-matching or slide past each other. Everything is discretized with the
//! hybrid finite volume scheme (one pressure unknown per cell and per face);
//! the fault can be coupled either through the reduced interface forms
//! (matching grids) or by virtually extruding the fault cells into thin
//! matrix-like cells, which also handles non-matching grids.
//!
//! The crate is generic over the floating point type through
//! [`scalar::Scalar`]; `f64` aliases for the main entry types are exported
//! at the root.

#![allow(clippy::needless_range_loop)]
// Negated comparisons are kept where they also reject NaN data.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod fault;
pub mod geom;
pub mod hfv;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod scalar;
pub mod system;

pub use error::{Error, Result};

/// Double-precision aliases for the types most entry points deal in.
pub type Mesh64 = mesh::Mesh<f64>;
pub type FaultModel64 = fault::FaultModel<f64>;
pub type Scenario64 = system::Scenario<f64>;
pub type HybridState64 = system::HybridState<f64>;
pub type ErrorReport64 = analysis::ErrorReport<f64>;
