use crate::linalg::{solve_cyclic, solve_tridiagonal, tridiagonal_residual};
use crate::state::{BoundaryCondition, FieldBoundary, Grid1D};
use crate::thermo::PhysicalConstants;

use super::SolverError;

/// Assembled three-point system for −(ε_r φ')' + s φ = f.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSystem {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
    pub cyclic: bool,
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

impl PoissonSystem {
    pub fn assemble(grid: &Grid1D, eps_r: &[f64], bc: &FieldBoundary, source: &[f64], shift: &[f64]) -> Self {
        let n = grid.cells;
        let h2 = grid.dx() * grid.dx();
        let mut lower = vec![0.0; n];
        let mut diag = shift.to_vec();
        let mut upper = vec![0.0; n];
        let mut rhs = source.to_vec();
        for k in 0..n - 1 {
            let w = harmonic(eps_r[k], eps_r[k + 1]) / h2;
            diag[k] += w;
            diag[k + 1] += w;
            upper[k] = -w;
            lower[k + 1] = -w;
        }
        let cyclic = bc.is_periodic();
        if cyclic {
            let w = harmonic(eps_r[n - 1], eps_r[0]) / h2;
            diag[0] += w;
            diag[n - 1] += w;
            lower[0] = -w;
            upper[n - 1] = -w;
        } else {
            if let BoundaryCondition::Dirichlet(v) = bc.left {
                let w = 2.0 * eps_r[0] / h2;
                diag[0] += w;
                rhs[0] += w * v;
            }
            if let BoundaryCondition::Dirichlet(v) = bc.right {
                let w = 2.0 * eps_r[n - 1] / h2;
                diag[n - 1] += w;
                rhs[n - 1] += w * v;
            }
        }
        PoissonSystem {
            lower,
            diag,
            upper,
            rhs,
            cyclic,
        }
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        tridiagonal_residual(&self.lower, &self.diag, &self.upper, x, &self.rhs, self.cyclic)
    }

    fn norm_scale(&self, x: &[f64]) -> f64 {
        let n = self.diag.len();
        let a_inf = (0..n)
            .map(|i| self.lower[i].abs() + self.diag[i].abs() + self.upper[i].abs())
            .fold(0.0, f64::max);
        let x_inf = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let d_inf = self.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a_inf * x_inf + d_inf
    }

    fn raw_solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        if self.cyclic {
            solve_cyclic(&self.lower, &self.diag, &self.upper, rhs)
        } else {
            solve_tridiagonal(&self.lower, &self.diag, &self.upper, rhs)
        }
    }

    /// Solves and checks the residual against 1e-12 relative, refining once if needed.
    pub fn solve(&self) -> Result<Vec<f64>, SolverError> {
        let mut x = self
            .raw_solve(&self.rhs)
            .ok_or_else(|| SolverError::LinearSolve("zero pivot in poisson system".into()))?;
        let mut r = self.residual(&x);
        let rel = |r: &[f64], x: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs())) / self.norm_scale(x).max(f64::MIN_POSITIVE);
        if rel(&r, &x) > 1e-12 {
            let neg: Vec<f64> = r.iter().map(|v| -v).collect();
            if let Some(dx) = self.raw_solve(&neg) {
                for (xi, di) in x.iter_mut().zip(dx) {
                    *xi += di;
                }
                r = self.residual(&x);
            }
        }
        let e = rel(&r, &x);
        if !(e <= 1e-12) {
            return Err(SolverError::LinearSolve(format!("poisson residual {:e} exceeds 1e-12", e)));
        }
        Ok(x)
    }
}

fn is_singular(bc: &FieldBoundary) -> bool {
    bc.is_periodic()
        || (matches!(bc.left, BoundaryCondition::NoFlux) && matches!(bc.right, BoundaryCondition::NoFlux))
}

/// Solves −(ε_r φ')' + shift·φ = source. With zero shift and no Dirichlet end the
/// source must integrate to zero; the returned potential then has zero mean.
pub(crate) fn solve_shifted(
    grid: &Grid1D,
    eps_r: &[f64],
    bc: &FieldBoundary,
    source: &[f64],
    shift: &[f64],
) -> Result<Vec<f64>, SolverError> {
    let singular = is_singular(bc) && shift.iter().all(|&s| s == 0.0);
    solve_assembled(PoissonSystem::assemble(grid, eps_r, bc, source, shift), singular, grid.dx())
}

/// One relaxed Poisson update: solves with the augmented coefficient `eps_aug` and a
/// right-hand side corrected so that a fixed point satisfies the plain system.
pub(crate) fn solve_relaxed(
    grid: &Grid1D,
    eps_r: &[f64],
    eps_aug: &[f64],
    bc: &FieldBoundary,
    source: &[f64],
    phi_prev: &[f64],
) -> Result<Vec<f64>, SolverError> {
    let n = grid.cells;
    let zero = vec![0.0; n];
    let plain = PoissonSystem::assemble(grid, eps_r, bc, source, &zero);
    let mut aug = PoissonSystem::assemble(grid, eps_aug, bc, source, &zero);
    let ra = aug.residual(phi_prev);
    let rp = plain.residual(phi_prev);
    for k in 0..n {
        aug.rhs[k] = (ra[k] + aug.rhs[k]) - (rp[k] + plain.rhs[k]) + plain.rhs[k];
    }
    solve_assembled(aug, is_singular(bc), grid.dx())
}

fn solve_assembled(full: PoissonSystem, singular: bool, dx: f64) -> Result<Vec<f64>, SolverError> {
    if !singular {
        return full.solve();
    }
    let n = full.diag.len();
    let total: f64 = full.rhs.iter().sum();
    let scale: f64 = full.rhs.iter().map(|v| v.abs()).sum();
    if total.abs() > 1e-10 * scale {
        return Err(SolverError::Incompatible(total * dx));
    }
    let mean = total / n as f64;
    let mut full = full;
    full.rhs.iter_mut().for_each(|v| *v -= mean);

    // pin φ_0 = 0 and drop its couplings
    let mut pinned = full.clone();
    pinned.cyclic = false;
    pinned.diag[0] = 1.0;
    pinned.upper[0] = 0.0;
    pinned.lower[0] = 0.0;
    pinned.rhs[0] = 0.0;
    pinned.lower[1] = 0.0;
    pinned.upper[n - 1] = 0.0;
    let mut phi = solve_tridiagonal(&pinned.lower, &pinned.diag, &pinned.upper, &pinned.rhs)
        .ok_or_else(|| SolverError::LinearSolve("zero pivot in pinned poisson system".into()))?;
    let m = phi.iter().sum::<f64>() / n as f64;
    for p in phi.iter_mut() {
        *p -= m;
    }
    let r = full.residual(&phi);
    let e = r.iter().fold(0.0f64, |a, v| a.max(v.abs())) / full.norm_scale(&phi).max(f64::MIN_POSITIVE);
    if !(e <= 1e-12) {
        return Err(SolverError::LinearSolve(format!("poisson residual {:e} exceeds 1e-12", e)));
    }
    Ok(phi)
}

/// −∇·(ε_r∇φ) = ρ_E/ε₀ on cell centers.
pub fn poisson_solve(
    grid: &Grid1D,
    rho_e: &[f64],
    eps_r: &[f64],
    bc: &FieldBoundary,
    constants: &PhysicalConstants,
) -> Result<Vec<f64>, SolverError> {
    let source: Vec<f64> = rho_e.iter().map(|q| q / constants.vacuum_permittivity).collect();
    solve_shifted(grid, eps_r, bc, &source, &vec![0.0; grid.cells])
}

/// Max-norm residual of the assembled plain Poisson system at `phi`.
pub fn poisson_residual(
    grid: &Grid1D,
    rho_e: &[f64],
    eps_r: &[f64],
    bc: &FieldBoundary,
    constants: &PhysicalConstants,
    phi: &[f64],
) -> f64 {
    let source: Vec<f64> = rho_e.iter().map(|q| q / constants.vacuum_permittivity).collect();
    let sys = PoissonSystem::assemble(grid, eps_r, bc, &source, &vec![0.0; grid.cells]);
    sys.residual(phi).iter().fold(0.0f64, |a, v| a.max(v.abs()))
}
