use rayon::prelude::*;

use crate::chemistry::mass_production_rates;
use crate::state::MixtureState;

use super::{Problem, SolverError};

const MAX_REFINEMENTS: u32 = 20;

fn rhs(problem: &Problem, rho: f64, y: &[f64]) -> Option<Vec<f64>> {
    if y.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let r = mass_production_rates(&problem.mixture.species, &problem.mixture.network, y).ok()?;
    Some(r.into_iter().map(|v| v / rho).collect())
}

fn axpy(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(u, v)| u + a * v).collect()
}

/// One RK4 pass of `m` substeps; `None` if a stage leaves the positive cone or a
/// substep moves any fraction by more than 0.1.
fn rk4(problem: &Problem, rho: f64, y0: &[f64], dt: f64, m: usize) -> Option<Vec<f64>> {
    let h = dt / m as f64;
    let mut y = y0.to_vec();
    for _ in 0..m {
        let k1 = rhs(problem, rho, &y)?;
        let k2 = rhs(problem, rho, &axpy(&y, 0.5 * h, &k1))?;
        let k3 = rhs(problem, rho, &axpy(&y, 0.5 * h, &k2))?;
        let k4 = rhs(problem, rho, &axpy(&y, h, &k3))?;
        let next: Vec<f64> = (0..y.len())
            .map(|l| y[l] + h / 6.0 * (k1[l] + 2.0 * k2[l] + 2.0 * k3[l] + k4[l]))
            .collect();
        if next.iter().zip(&y).any(|(a, b)| !(*a > 0.0) || (a - b).abs() > 0.1) {
            return None;
        }
        y = next;
    }
    Some(y)
}

/// Integrates dy/dt = r/ρ over `dt` in every cell; transport is frozen.
pub fn reaction_substep(state: &mut MixtureState, dt: f64, problem: &Problem) -> Result<(), SolverError> {
    if problem.mixture.network.is_empty() || dt == 0.0 {
        return Ok(());
    }
    let base = problem.numerics.reaction_substeps;
    let n = state.cells();
    let updated: Result<Vec<Vec<f64>>, SolverError> = (0..n)
        .into_par_iter()
        .map(|k| {
            let y0 = state.y_at(k);
            let mut m = base;
            for _ in 0..=MAX_REFINEMENTS {
                if let Some(y) = rk4(problem, state.rho[k], &y0, dt, m) {
                    return Ok(y);
                }
                m *= 2;
            }
            Err(SolverError::Positivity(format!(
                "reaction integration in cell {} failed with {} substeps",
                k, m
            )))
        })
        .collect();
    for (k, y) in updated?.into_iter().enumerate() {
        for (l, v) in y.into_iter().enumerate() {
            state.y[l][k] = v;
        }
    }
    Ok(())
}
