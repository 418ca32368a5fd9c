//! Hybridizable discontinuous Galerkin solver for the 2D nonlinear
//! Klein-Gordon equation `u_tt - laplace(u) + u^3 - u = g` on rectangles,
//! with energy-conserving and linearized second-order time integrators,
//! element-local superconvergent postprocessing, and a manufactured-solution
//! harness producing convergence and energy-drift tables.

pub mod band;
pub mod basis;
pub mod error;
pub mod harness;
pub mod hdg;
pub mod mesh;
pub mod nonlinear;
pub mod par;
pub mod postprocess;
pub mod quadrature;
pub mod timestepping;

pub use error::{Error, Result};
