//! Numerical laboratory for pilot-wave (Bohmian) dynamics and classical
//! Hamilton-Jacobi mechanics on a shared periodic-grid substrate.
//!
//! * [`grid`], [`field`], [`spectral`], [`polar`], [`quantum`]: grids, wave
//!   fields, differential operators, Madelung decomposition and the quantum
//!   potential.
//! * [`schrodinger`]: Strang split-step propagation and initial states.
//! * [`bohm`]: guiding-law velocity fields, trajectories, Born-sampled
//!   ensembles and equilibrium statistics.
//! * [`classical`]: analytic action functions, classical trajectories and
//!   density transport along characteristics.
//! * [`reconstruction`]: recovering (S, R) along a realized trajectory.
//! * [`scenarios`]: config-driven experiment runner behind the CLI.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bohm;
pub mod classical;
pub mod field;
pub mod grid;
pub mod interp;
pub mod io;
pub mod ode;
pub mod polar;
pub mod quantum;
pub mod reconstruction;
pub mod scenarios;
pub mod schrodinger;
pub mod spectral;

pub use field::{FieldError, Physics, Quantity, RealField, WaveField, C64};
pub use grid::{Axis, GridError, SpatialGrid};
pub use polar::{from_polar, to_polar, PolarError, PolarField, DEFAULT_NODE_EPS};
pub use quantum::{density, quantum_potential, QuantumPotential};
pub use spectral::{gradient, laplacian, DiffMethod, SpectralOps};
