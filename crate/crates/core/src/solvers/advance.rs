use log::{debug, warn};

use crate::state::MixtureState;

use super::closure::update_closure;
use super::poisson::solve_relaxed;
use super::reaction::reaction_substep;
use super::transport::{advect_density, transport_step};
use super::{Problem, SolverError, TransportModel};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    /// Accepted sub-steps after halving.
    pub substeps: usize,
    pub rejections: usize,
    pub max_gummel_iterations: usize,
    pub smallest_dt: f64,
    /// Largest |∑y − 1| corrected by renormalization.
    pub renormalization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyReport {
    pub state: MixtureState,
    pub converged: bool,
    pub steps: usize,
    pub time: f64,
    pub residual_history: Vec<f64>,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Gummel loop over linearized Poisson and transport; returns the iteration count.
fn gummel(base: &MixtureState, lag: &mut MixtureState, rho_new: &[f64], dt: f64, problem: &Problem) -> Result<usize, SolverError> {
    let c = &problem.constants;
    let species = &problem.mixture.species;
    let theta = problem.porosity();
    let grid = base.grid;
    let n = base.cells();
    let charged = species.iter().any(|s| s.valency != 0);
    let single_pass = !charged && problem.model != TransportModel::General;
    let tol = problem.numerics.gummel_tol;
    let t_max = lag.temp.iter().cloned().fold(0.0, f64::max);
    let v_t = c.thermal_voltage(t_max);
    lag.rho = rho_new.to_vec();
    for it in 1..=problem.numerics.gummel_max_iter {
        let rho_e = lag.charge_density(species, c);
        let eps_aug: Vec<f64> = (0..n)
            .map(|k| {
                let sigma: f64 = species
                    .iter()
                    .enumerate()
                    .map(|(l, sp)| {
                        let q = c.elementary_charge * sp.valency as f64;
                        q * q * lag.rho[k] * lag.y[l][k] / sp.molecular_mass * sp.diffusion_coefficient
                    })
                    .sum::<f64>()
                    / (c.boltzmann * lag.temp[k]);
                problem.permittivity[k] + dt * sigma / c.vacuum_permittivity
            })
            .collect();
        let source: Vec<f64> = rho_e.iter().map(|q| theta * q / c.vacuum_permittivity).collect();
        let phi = solve_relaxed(
            &grid,
            &problem.permittivity,
            &eps_aug,
            &problem.boundaries.potential,
            &source,
            &lag.phi,
        )?;
        let dphi = max_abs_diff(&phi, &lag.phi);
        lag.phi = phi;
        let out = transport_step(base, lag, rho_new, dt, problem)?;
        let dy = out
            .y
            .iter()
            .zip(&lag.y)
            .fold(0.0f64, |m, (a, b)| m.max(max_abs_diff(a, b)));
        lag.y = out.y;
        if single_pass || (dphi <= tol * (v_t + max_abs(&lag.phi)) && dy <= tol) {
            return Ok(it);
        }
    }
    Err(SolverError::Gummel(problem.numerics.gummel_max_iter))
}

fn single_step(state: &MixtureState, dt: f64, problem: &Problem) -> Result<(MixtureState, usize, f64), SolverError> {
    let mut s = state.clone();
    update_closure(&mut s, problem)?;
    reaction_substep(&mut s, 0.5 * dt, problem)?;
    let rho_new = advect_density(&s.rho, &s.v, dt, s.grid.dx(), &problem.boundaries.density)?;
    let mut lag = s.clone();
    let iters = gummel(&s, &mut lag, &rho_new, dt, problem)?;
    reaction_substep(&mut lag, 0.5 * dt, problem)?;
    let renorm = lag.renormalize()?;
    update_closure(&mut lag, problem)?;
    Ok((lag, iters, renorm))
}

fn recoverable(e: &SolverError) -> bool {
    matches!(
        e,
        SolverError::Gummel(_) | SolverError::Positivity(_) | SolverError::LinearSolve(_) | SolverError::State(_)
    )
}

fn advance_rec(
    state: &MixtureState,
    dt: f64,
    problem: &Problem,
    stats: &mut StepStats,
) -> Result<MixtureState, SolverError> {
    match single_step(state, dt, problem) {
        Ok((next, iters, renorm)) => {
            stats.substeps += 1;
            stats.max_gummel_iterations = stats.max_gummel_iterations.max(iters);
            stats.smallest_dt = if stats.smallest_dt == 0.0 { dt } else { stats.smallest_dt.min(dt) };
            stats.renormalization = stats.renormalization.max(renorm);
            Ok(next)
        }
        Err(e) if recoverable(&e) => {
            stats.rejections += 1;
            let half = 0.5 * dt;
            if half < problem.numerics.dt_floor {
                return Err(SolverError::StepFloor(problem.numerics.dt_floor, e.to_string()));
            }
            debug!("step of {:e} rejected ({}), halving", dt, e);
            let mid = advance_rec(state, half, problem, stats)?;
            advance_rec(&mid, half, problem, stats)
        }
        Err(e) => Err(e),
    }
}

/// Advances by `dt`, halving recursively on rejected steps down to the configured floor.
pub fn advance(state: &MixtureState, dt: f64, problem: &Problem) -> Result<(MixtureState, StepStats), SolverError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SolverError::Config(format!("time step {} must be positive", dt)));
    }
    problem.validate(state)?;
    let mut stats = StepStats::default();
    let next = advance_rec(state, dt, problem, &mut stats)?;
    if stats.rejections > 0 {
        warn!("step of {:e} needed {} rejections, smallest sub-step {:e}", dt, stats.rejections, stats.smallest_dt);
    }
    Ok((next, stats))
}

/// ‖Δ‖∞/Δt over mass fractions, density relative to its maximum and potential relative to k_B T/e.
pub fn steady_residual(a: &MixtureState, b: &MixtureState, dt: f64, problem: &Problem) -> f64 {
    let mut r = 0.0f64;
    for (ya, yb) in a.y.iter().zip(&b.y) {
        r = r.max(max_abs_diff(ya, yb));
    }
    r = r.max(max_abs_diff(&a.rho, &b.rho) / max_abs(&a.rho));
    let t_max = a.temp.iter().cloned().fold(0.0, f64::max);
    r = r.max(max_abs_diff(&a.phi, &b.phi) / problem.constants.thermal_voltage(t_max));
    r / dt
}

/// Steps with the configured Δt until the steady residual drops below tolerance.
pub fn steady_state(state: &MixtureState, problem: &Problem) -> Result<SteadyReport, SolverError> {
    let dt = problem.numerics.dt;
    let mut cur = state.clone();
    let mut history = Vec::new();
    let mut time = 0.0;
    for step in 1..=problem.numerics.max_steps {
        let (next, _) = advance(&cur, dt, problem)?;
        let r = steady_residual(&cur, &next, dt, problem);
        history.push(r);
        time += dt;
        cur = next;
        if r <= problem.numerics.steady_tol {
            return Ok(SteadyReport {
                state: cur,
                converged: true,
                steps: step,
                time,
                residual_history: history,
            });
        }
    }
    warn!("steady state not reached after {} steps", problem.numerics.max_steps);
    Ok(SteadyReport {
        state: cur,
        converged: false,
        steps: problem.numerics.max_steps,
        time,
        residual_history: history,
    })
}
