//! Finite-volume grid, boundary conditions and the mixture field state.

use log::debug;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chemistry::Species;
use crate::constitutive::free_charge;
use crate::thermo::PhysicalConstants;
use crate::Y_MIN;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("grid: {0}")]
    Grid(String),
    #[error("boundary: {0}")]
    Boundary(String),
    #[error("cell {cell}: {what}")]
    Invariant { cell: usize, what: String },
    #[error("shape: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub cells: usize,
    pub length: f64,
}

impl Grid1D {
    pub fn new(cells: usize, length: f64) -> Result<Self, StateError> {
        if cells < 4 {
            return Err(StateError::Grid(format!("need at least 4 cells, got {}", cells)));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(StateError::Grid(format!("length must be positive, got {}", length)));
        }
        Ok(Grid1D { cells, length })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|k| self.x(k)).collect()
    }

    /// ∑_k f_k Δx.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.dx()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum BoundaryCondition {
    Dirichlet(f64),
    NoFlux,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldBoundary {
    pub left: BoundaryCondition,
    pub right: BoundaryCondition,
}

impl FieldBoundary {
    pub fn new(left: BoundaryCondition, right: BoundaryCondition) -> Result<Self, StateError> {
        let b = FieldBoundary { left, right };
        b.validate()?;
        Ok(b)
    }

    pub fn no_flux() -> Self {
        FieldBoundary {
            left: BoundaryCondition::NoFlux,
            right: BoundaryCondition::NoFlux,
        }
    }

    pub fn periodic() -> Self {
        FieldBoundary {
            left: BoundaryCondition::Periodic,
            right: BoundaryCondition::Periodic,
        }
    }

    pub fn dirichlet(left: f64, right: f64) -> Self {
        FieldBoundary {
            left: BoundaryCondition::Dirichlet(left),
            right: BoundaryCondition::Dirichlet(right),
        }
    }

    pub fn validate(&self) -> Result<(), StateError> {
        let lp = matches!(self.left, BoundaryCondition::Periodic);
        let rp = matches!(self.right, BoundaryCondition::Periodic);
        if lp != rp {
            return Err(StateError::Boundary("periodic must be set on both ends or neither".into()));
        }
        for bc in [self.left, self.right] {
            if let BoundaryCondition::Dirichlet(v) = bc {
                if !v.is_finite() {
                    return Err(StateError::Boundary("dirichlet value must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.left, BoundaryCondition::Periodic)
    }

    /// No mass crosses either end.
    pub fn is_closed(&self) -> bool {
        self.is_periodic()
            || (matches!(self.left, BoundaryCondition::NoFlux) && matches!(self.right, BoundaryCondition::NoFlux))
    }
}

/// Cell-centered fields; mass fractions are species-major, `y[l][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureState {
    pub grid: Grid1D,
    pub rho: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
    pub v: Vec<f64>,
    pub temp: Vec<f64>,
    pub pressure: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedFields {
    pub partial_density: Vec<Vec<f64>>,
    pub number_density: Vec<Vec<f64>>,
    pub charge_density: Vec<f64>,
    pub specific_volume: Vec<f64>,
}

impl MixtureState {
    /// Uniform state with the given composition.
    pub fn uniform(grid: Grid1D, rho: f64, y: &[f64], temp: f64) -> Self {
        let n = grid.cells;
        MixtureState {
            grid,
            rho: vec![rho; n],
            y: y.iter().map(|&v| vec![v; n]).collect(),
            phi: vec![0.0; n],
            v: vec![0.0; n],
            temp: vec![temp; n],
            pressure: vec![0.0; n],
        }
    }

    pub fn cells(&self) -> usize {
        self.grid.cells
    }

    pub fn species_count(&self) -> usize {
        self.y.len()
    }

    /// Composition vector of cell k.
    pub fn y_at(&self, k: usize) -> Vec<f64> {
        self.y.iter().map(|yl| yl[k]).collect()
    }

    /// y_L = 1 − ∑_{l<L} y_l.
    pub fn solvent_from_solutes(&self, k: usize) -> f64 {
        let big_l = self.species_count() - 1;
        1.0 - self.y[..big_l].iter().map(|yl| yl[k]).sum::<f64>()
    }

    pub fn check_shape(&self) -> Result<(), StateError> {
        let n = self.cells();
        let ok = self.rho.len() == n
            && self.phi.len() == n
            && self.v.len() == n
            && self.temp.len() == n
            && self.pressure.len() == n
            && self.y.iter().all(|yl| yl.len() == n);
        if ok && !self.y.is_empty() {
            Ok(())
        } else {
            Err(StateError::Shape("field lengths must equal the cell count".into()))
        }
    }

    /// y ≥ 0, |∑y − 1| ≤ 1e-10, ρ > 0, T > 0.
    pub fn validate(&self) -> Result<(), StateError> {
        self.check_shape()?;
        for k in 0..self.cells() {
            let mut sum = 0.0;
            for (l, yl) in self.y.iter().enumerate() {
                if !(yl[k] >= 0.0) {
                    return Err(StateError::Invariant {
                        cell: k,
                        what: format!("y_{} = {} is negative", l, yl[k]),
                    });
                }
                sum += yl[k];
            }
            if (sum - 1.0).abs() > 1e-10 {
                return Err(StateError::Invariant {
                    cell: k,
                    what: format!("mass fractions sum to {}", sum),
                });
            }
            if !(self.rho[k] > 0.0) {
                return Err(StateError::Invariant {
                    cell: k,
                    what: format!("density {} must be positive", self.rho[k]),
                });
            }
            if !(self.temp[k] > 0.0) {
                return Err(StateError::Invariant {
                    cell: k,
                    what: format!("temperature {} must be positive", self.temp[k]),
                });
            }
        }
        Ok(())
    }

    pub fn derived_fields(&self, species: &[Species], c: &PhysicalConstants) -> Result<DerivedFields, StateError> {
        self.validate()?;
        if species.len() != self.species_count() {
            return Err(StateError::Shape(format!(
                "{} species for {} mass-fraction fields",
                species.len(),
                self.species_count()
            )));
        }
        let partial_density: Vec<Vec<f64>> = self
            .y
            .iter()
            .map(|yl| yl.iter().zip(&self.rho).map(|(y, r)| y * r).collect())
            .collect();
        let number_density = partial_density
            .iter()
            .zip(species)
            .map(|(rl, s)| rl.iter().map(|r| r / s.molecular_mass).collect())
            .collect();
        let charge_density = (0..self.cells())
            .map(|k| free_charge(&self.y_at(k), self.rho[k], species, c))
            .collect();
        let specific_volume = self.rho.iter().map(|r| 1.0 / r).collect();
        Ok(DerivedFields {
            partial_density,
            number_density,
            charge_density,
            specific_volume,
        })
    }

    pub fn charge_density(&self, species: &[Species], c: &PhysicalConstants) -> Vec<f64> {
        (0..self.cells())
            .map(|k| free_charge(&self.y_at(k), self.rho[k], species, c))
            .collect()
    }

    /// ∫ρ_l dx for every species.
    pub fn species_masses(&self) -> Vec<f64> {
        self.y
            .iter()
            .map(|yl| self.grid.integrate(&yl.iter().zip(&self.rho).map(|(y, r)| y * r).collect::<Vec<_>>()))
            .collect()
    }

    /// Clamps at y_min and rescales each cell to ∑y = 1; returns the largest deviation seen.
    pub fn renormalize(&mut self) -> Result<f64, StateError> {
        self.check_shape()?;
        let mut worst: f64 = 0.0;
        for k in 0..self.cells() {
            let mut sum = 0.0;
            for (l, yl) in self.y.iter().enumerate() {
                if yl[k] < -1e-6 || !yl[k].is_finite() {
                    return Err(StateError::Invariant {
                        cell: k,
                        what: format!("y_{} = {} below -1e-6", l, yl[k]),
                    });
                }
                sum += yl[k];
            }
            let dev = (sum - 1.0).abs();
            if dev > 1e-6 {
                return Err(StateError::Invariant {
                    cell: k,
                    what: format!("mass fractions sum to {}, deviation above 1e-6", sum),
                });
            }
            worst = worst.max(dev);
            let clamped = self.y.iter().any(|yl| yl[k] < Y_MIN);
            if sum == 1.0 && !clamped {
                continue;
            }
            let mut s = 0.0;
            for yl in self.y.iter_mut() {
                yl[k] = yl[k].max(Y_MIN);
                s += yl[k];
            }
            for yl in self.y.iter_mut() {
                yl[k] /= s;
            }
        }
        if worst > 0.0 {
            debug!("renormalize: max |sum y - 1| = {:e}", worst);
        }
        Ok(worst)
    }
}
