//! Coupled SIR–SI epidemic / Lotka–Volterra predator–prey model.
//!
//! The crate covers four layers:
//!
//! * [`model`]: parameter and state types, right-hand sides of the full,
//!   reduced, rescaled and controlled systems, and the rescaling maps;
//! * [`integrator`]: adaptive Dormand–Prince 5(4) integration with dense
//!   output, forward or backward in time;
//! * [`analysis`]: equilibria, Jacobians and spectra, reproduction numbers,
//!   first-integral level-set bounds and the Metzler comparison system;
//! * [`control`]: Pontryagin conditions for predator release and the
//!   forward-backward sweep solver.

pub mod analysis;
pub mod control;
pub mod error;
pub mod integrator;
pub mod model;

pub use error::{Error, Result};
pub use integrator::{integrate, integrate_through, SolverOptions, Trajectory};
pub use model::{
    nondimensionalize, DimensionalParams, DimensionlessParams, FullState, LVState, Scales, SystemState,
};
