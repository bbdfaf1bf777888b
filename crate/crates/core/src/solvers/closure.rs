use crate::state::{BoundaryCondition, FieldBoundary, Grid1D, MixtureState};

use super::{Problem, SolverError, VelocityClosure};

/// Raw pointwise closure v = K_H/μ (−∇p + ρ_E E).
pub fn darcy_velocity(
    grad_p: f64,
    rho_e: f64,
    e_field: f64,
    permeability: f64,
    viscosity: f64,
    porosity: f64,
) -> Result<f64, SolverError> {
    if !(viscosity > 0.0) {
        return Err(SolverError::Config(format!("viscosity {} must be positive", viscosity)));
    }
    if !(permeability > 0.0) {
        return Err(SolverError::Config(format!("permeability {} must be positive", permeability)));
    }
    if !(porosity > 0.0 && porosity <= 1.0) {
        return Err(SolverError::Config(format!("porosity {} must lie in (0, 1]", porosity)));
    }
    Ok(permeability / viscosity * (-grad_p + rho_e * e_field))
}

/// Cell-centered derivative with boundary values taken from `bc`.
pub(crate) fn cell_gradient(f: &[f64], grid: &Grid1D, bc: &FieldBoundary) -> Vec<f64> {
    let n = f.len();
    let h = grid.dx();
    let wall = |side: BoundaryCondition, k: usize, sign: f64| -> f64 {
        match side {
            BoundaryCondition::Dirichlet(v) => sign * (f[k] - v) / (0.5 * h),
            _ => 0.0,
        }
    };
    (0..n)
        .map(|k| {
            let (lf, rf) = if bc.is_periodic() {
                (
                    (f[k] - f[(k + n - 1) % n]) / h,
                    (f[(k + 1) % n] - f[k]) / h,
                )
            } else {
                let lf = if k == 0 { wall(bc.left, 0, 1.0) } else { (f[k] - f[k - 1]) / h };
                let rf = if k == n - 1 { wall(bc.right, n - 1, -1.0) } else { (f[k + 1] - f[k]) / h };
                (lf, rf)
            };
            0.5 * (lf + rf)
        })
        .collect()
}

/// Integrates ∂x p = ρ_E E from p(x_0) = p_ref with the trapezoid rule.
pub fn hydrostatic_pressure(grid: &Grid1D, rho_e: &[f64], e_field: &[f64], p_ref: f64) -> Vec<f64> {
    let h = grid.dx();
    let mut p = Vec::with_capacity(rho_e.len());
    p.push(p_ref);
    for k in 1..rho_e.len() {
        let prev = p[k - 1];
        p.push(prev + 0.5 * h * (rho_e[k - 1] * e_field[k - 1] + rho_e[k] * e_field[k]));
    }
    p
}

/// Sets v and p from the active closure; Darcy keeps the carried pressure.
pub fn update_closure(state: &mut MixtureState, problem: &Problem) -> Result<(), SolverError> {
    let grid = state.grid;
    let e_field: Vec<f64> = cell_gradient(&state.phi, &grid, &problem.boundaries.potential)
        .into_iter()
        .map(|g| -g)
        .collect();
    let rho_e = state.charge_density(&problem.mixture.species, &problem.constants);
    match &problem.closure {
        VelocityClosure::Rest => {
            state.v.iter_mut().for_each(|v| *v = 0.0);
        }
        VelocityClosure::Prescribed { velocity } => {
            state.v.copy_from_slice(velocity);
        }
        VelocityClosure::Darcy {
            permeability,
            viscosity,
            porosity,
        } => {
            let open = FieldBoundary::no_flux();
            let grad_p = cell_gradient(&state.pressure, &grid, &open);
            let mut total = 0.0;
            for k in 0..state.cells() {
                let gp = if k == 0 || k == state.cells() - 1 {
                    one_sided(&state.pressure, k, grid.dx())
                } else {
                    grad_p[k]
                };
                total += darcy_velocity(gp, rho_e[k], e_field[k], *permeability, *viscosity, *porosity)?;
            }
            let mean = total / state.cells() as f64;
            state.v.iter_mut().for_each(|v| *v = mean);
            return Ok(());
        }
    }
    let p_ref = state.pressure[0];
    state.pressure = hydrostatic_pressure(&grid, &rho_e, &e_field, p_ref);
    Ok(())
}

fn one_sided(p: &[f64], k: usize, h: f64) -> f64 {
    if k == 0 {
        (p[1] - p[0]) / h
    } else {
        (p[k] - p[k - 1]) / h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn darcy_arithmetic() {
        assert_eq!(darcy_velocity(0.0, 0.0, 5.0, 1.0, 1.0, 0.5).unwrap(), 0.0);
        assert_eq!(darcy_velocity(-2.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap(), 3.0);
        assert_eq!(darcy_velocity(2.0, 1.0, 2.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(darcy_velocity(0.0, 0.0, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(darcy_velocity(0.0, 0.0, 0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn hydrostatic_linear() {
        let g = Grid1D::new(5, 1.0).unwrap();
        let p = hydrostatic_pressure(&g, &[1.0; 5], &[2.0; 5], 3.0);
        for (k, pk) in p.iter().enumerate() {
            assert!((pk - (3.0 + 2.0 * 0.2 * k as f64)).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_of_linear_with_dirichlet() {
        let g = Grid1D::new(10, 1.0).unwrap();
        let f: Vec<f64> = g.centers().iter().map(|x| 2.0 * x + 1.0).collect();
        let d = cell_gradient(&f, &g, &FieldBoundary::dirichlet(1.0, 3.0));
        assert!(d.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }
}
