//! Numerical laboratory for nonlinear panel flutter.
//!
//! A clamped von Karman plate is driven by one of three aerodynamic
//! closures (classical piston, low-frequency piston, or the delayed
//! aeroelastic potential). The crate provides the spatial discretization,
//! semi-implicit time integration with prehistory management, energy
//! diagnostics, a Newton/continuation solver for stationary states, and a
//! frequency-domain toolbox for the mixed flow boundary condition
//! (Fourier-Laplace symbols and the finite Hilbert transform).

pub mod aero;
pub mod context;
pub mod energy;
pub mod error;
pub mod field;
pub mod grid;
pub mod history;
pub mod integrator;
pub mod kjc;
pub mod ops;
pub mod scenarios;
pub mod solver;
pub mod stationary;

pub use aero::{Closure, DelayQuadrature, ModelParams};
pub use context::{PlateContext, PlateState};
pub use error::{Error, Result};
pub use field::{Bc, PlateField};
pub use grid::Grid;
pub use history::HistoryBuffer;
