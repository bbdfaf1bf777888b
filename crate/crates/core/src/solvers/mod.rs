//! Poisson, Nernst–Planck transport, reactions, velocity closures and time advance.

mod advance;
mod closure;
mod poisson;
mod reaction;
mod transport;

pub use advance::{advance, steady_residual, steady_state, StepStats, SteadyReport};
pub use closure::{darcy_velocity, hydrostatic_pressure, update_closure};
pub use poisson::{poisson_residual, poisson_solve, PoissonSystem};
pub use reaction::reaction_substep;
pub use transport::{bernoulli, transport_step, TransportOutcome};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chemistry::{ChemistryError, Mixture};
use crate::state::{FieldBoundary, MixtureState, StateError};
use crate::thermo::{MaterialParams, PhysicalConstants};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("poisson: net charge {0:e} is incompatible with no-flux potential boundaries")]
    Incompatible(f64),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("positivity lost: {0}")]
    Positivity(String),
    #[error("gummel iteration did not converge in {0} iterations")]
    Gummel(usize),
    #[error("time step fell below the floor {0:e}: {1}")]
    StepFloor(f64, String),
    #[error(transparent)]
    Chemistry(#[from] ChemistryError),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FluxScheme {
    #[default]
    ExponentialFitted,
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TransportModel {
    #[default]
    General,
    Pnp,
    Dpnp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum VelocityClosure {
    Rest,
    /// Cell-centered velocity held fixed in time.
    Prescribed { velocity: Vec<f64> },
    /// v = K_H/μ (−∇p + ρ_E E) with the prescribed pressure carried in the state.
    Darcy {
        permeability: f64,
        viscosity: f64,
        porosity: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub dt: f64,
    pub end_time: f64,
    pub gummel_tol: f64,
    pub gummel_max_iter: usize,
    pub reaction_substeps: usize,
    pub steady_tol: f64,
    pub max_steps: usize,
    pub flux: FluxScheme,
    pub dt_floor: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            dt: 1e-3,
            end_time: 1.0,
            gummel_tol: 1e-10,
            gummel_max_iter: 100,
            reaction_substeps: 4,
            steady_tol: 1e-10,
            max_steps: 100_000,
            flux: FluxScheme::ExponentialFitted,
            dt_floor: 1e-14,
        }
    }
}

impl NumericsConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.dt) || !pos(self.gummel_tol) || !pos(self.steady_tol) || !pos(self.dt_floor) {
            return Err(SolverError::Config("dt, tolerances and dt_floor must be positive".into()));
        }
        if !(self.end_time >= 0.0) {
            return Err(SolverError::Config("end_time must be nonnegative".into()));
        }
        if self.gummel_max_iter == 0 || self.reaction_substeps == 0 || self.max_steps == 0 {
            return Err(SolverError::Config("iteration counts must be positive".into()));
        }
        Ok(())
    }
}

/// Boundary data: one entry per solute (the solvent is diagnostic), plus potential and density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundaries {
    pub species: Vec<FieldBoundary>,
    pub potential: FieldBoundary,
    pub density: FieldBoundary,
}

impl Boundaries {
    pub fn uniform(solutes: usize, species: FieldBoundary, potential: FieldBoundary) -> Self {
        let density = if species.is_periodic() {
            FieldBoundary::periodic()
        } else {
            FieldBoundary::no_flux()
        };
        Boundaries {
            species: vec![species; solutes],
            potential,
            density,
        }
    }

    pub fn validate(&self, solutes: usize) -> Result<(), SolverError> {
        if self.species.len() != solutes {
            return Err(SolverError::Config(format!(
                "{} species boundaries for {} solutes",
                self.species.len(),
                solutes
            )));
        }
        let periodic = self.potential.is_periodic();
        for b in self.species.iter().chain([&self.potential, &self.density]) {
            b.validate()?;
            if b.is_periodic() != periodic {
                return Err(SolverError::Config("periodicity must agree across all fields".into()));
            }
        }
        Ok(())
    }

    pub fn is_periodic(&self) -> bool {
        self.potential.is_periodic()
    }

    /// No species mass crosses the boundary.
    pub fn is_closed(&self) -> bool {
        self.species.iter().all(|b| b.is_closed())
    }
}

/// Everything that stays fixed during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub mixture: Mixture,
    pub constants: PhysicalConstants,
    pub material: MaterialParams,
    /// ε_r per cell.
    pub permittivity: Vec<f64>,
    pub boundaries: Boundaries,
    pub model: TransportModel,
    pub closure: VelocityClosure,
    pub numerics: NumericsConfig,
}

impl Problem {
    pub fn validate(&self, state: &MixtureState) -> Result<(), SolverError> {
        let n = state.cells();
        let solutes = self.mixture.len() - 1;
        self.numerics.validate()?;
        self.boundaries.validate(solutes)?;
        self.constants
            .validate()
            .map_err(|e| SolverError::Config(e.to_string()))?;
        if self.permittivity.len() != n || self.permittivity.iter().any(|e| !(*e > 0.0)) {
            return Err(SolverError::Config("relative permittivity must be positive on every cell".into()));
        }
        if state.species_count() != self.mixture.len() {
            return Err(SolverError::Config("state and mixture species counts differ".into()));
        }
        match &self.closure {
            VelocityClosure::Rest => {}
            VelocityClosure::Prescribed { velocity } => {
                if velocity.len() != n || velocity.iter().any(|v| !v.is_finite()) {
                    return Err(SolverError::Config("prescribed velocity must be finite on every cell".into()));
                }
            }
            VelocityClosure::Darcy {
                permeability,
                viscosity,
                porosity,
            } => {
                if !(*viscosity > 0.0) {
                    return Err(SolverError::Config("darcy viscosity must be positive".into()));
                }
                if !(*permeability > 0.0) {
                    return Err(SolverError::Config("darcy permeability must be positive".into()));
                }
                if !(*porosity > 0.0 && *porosity <= 1.0) {
                    return Err(SolverError::Config("porosity must lie in (0, 1]".into()));
                }
            }
        }
        if self.model == TransportModel::Dpnp && !matches!(self.closure, VelocityClosure::Darcy { .. }) {
            return Err(SolverError::Config("the dpnp model requires the darcy closure".into()));
        }
        state.validate()?;
        Ok(())
    }

    /// θ for the dpnp model, 1 otherwise.
    pub fn porosity(&self) -> f64 {
        match (&self.model, &self.closure) {
            (TransportModel::Dpnp, VelocityClosure::Darcy { porosity, .. }) => *porosity,
            _ => 1.0,
        }
    }
}
