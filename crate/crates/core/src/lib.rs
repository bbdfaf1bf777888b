//! Reactive multicomponent electrolyte transport in one dimension.
//!
//! The crate is organised around the closed electrolyte model:
//!
//! * [`chemistry`]: species, stoichiometry, mass-action kinetics and the
//!   mixing constants `β` that make the kinetics entropy-consistent.
//! * [`thermo`]: chemical/electrochemical potentials, mixing and pure
//!   substance energies and entropies, extended Dalton/Raoult pressures.
//! * [`constitutive`]: pointwise closures (mobilities, drift fluxes, free
//!   charge and current, Newtonian stress, extended Fourier heat flux).
//! * [`state`]: the finite-volume grid, boundary conditions and field state.
//! * [`solvers`]: Poisson, Nernst–Planck transport, reactions, velocity
//!   closures and the time-advance orchestration.
//! * [`audit`]: entropy production budgets, entropy fluxes, conservation,
//!   momentum/first-law residuals and the time-reversal test.
//! * [`oracles`]: closed-form references used for verification.
//! * [`scaling`]: Maxwell nondimensionalisation and regime classification.

pub mod audit;
pub mod chemistry;
pub mod constitutive;
pub mod oracles;
pub mod scaling;
pub mod solvers;
pub mod state;
pub mod thermo;

mod linalg;

pub use chemistry::{ReactionNetwork, Species};
pub use state::{BoundaryCondition, FieldBoundary, Grid1D, MixtureState};
pub use thermo::{MaterialParams, PhysicalConstants};

/// Lower clamp applied to mass fractions before logarithms and powers.
pub const Y_MIN: f64 = 1e-30;
