use rayon::prelude::*;

use crate::linalg::{solve_cyclic, solve_tridiagonal};
use crate::state::{BoundaryCondition, FieldBoundary, MixtureState};
use crate::Y_MIN;

use super::{FluxScheme, Problem, SolverError, TransportModel};

/// B(x) = x/(eˣ − 1).
pub fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - 0.5 * x + x * x / 12.0
    } else {
        x / x.exp_m1()
    }
}

/// Face flux F = α c_left − β c_right.
#[derive(Debug, Clone, Copy, PartialEq)]
struct FaceCoef {
    alpha: f64,
    beta: f64,
}

fn face_coef(d: f64, u: f64, h: f64, scheme: FluxScheme) -> FaceCoef {
    if d == 0.0 {
        return FaceCoef {
            alpha: u.max(0.0),
            beta: (-u).max(0.0),
        };
    }
    match scheme {
        FluxScheme::ExponentialFitted => {
            let p = u * h / d;
            FaceCoef {
                alpha: d / h * bernoulli(-p),
                beta: d / h * bernoulli(p),
            }
        }
        FluxScheme::Central => FaceCoef {
            alpha: d / h + 0.5 * u,
            beta: d / h - 0.5 * u,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportOutcome {
    /// Mass fractions of every species, the solvent closing the sum.
    pub y: Vec<Vec<f64>>,
}

/// Primitive values on one face used to build the drift velocity.
struct FaceData {
    e_field: f64,
    temp: f64,
    grad_ln_t: f64,
    grad_ln_rho: f64,
    v: f64,
    y: Vec<f64>,
    grad_y: Vec<f64>,
}

enum Side {
    Left,
    Right,
}

fn dirichlet(bc: &FieldBoundary, side: &Side) -> Option<f64> {
    let b = match side {
        Side::Left => bc.left,
        Side::Right => bc.right,
    };
    match b {
        BoundaryCondition::Dirichlet(v) => Some(v),
        _ => None,
    }
}

struct FaceBuilder<'a> {
    lag: &'a MixtureState,
    rho: &'a [f64],
    problem: &'a Problem,
    h: f64,
}

impl FaceBuilder<'_> {
    fn solvent_fill(&self, y: &mut [f64], g: &mut [f64]) {
        let big_l = y.len() - 1;
        y[big_l] = 1.0 - y[..big_l].iter().sum::<f64>();
        g[big_l] = -g[..big_l].iter().sum::<f64>();
    }

    /// Face between cells `a` and `b` (b = a + 1, or the periodic wrap).
    fn interior(&self, a: usize, b: usize) -> FaceData {
        let s = self.lag;
        let h = self.h;
        let big_l = s.species_count() - 1;
        let mut y = vec![0.0; big_l + 1];
        let mut g = vec![0.0; big_l + 1];
        for l in 0..big_l {
            y[l] = 0.5 * (s.y[l][a] + s.y[l][b]);
            g[l] = (s.y[l][b] - s.y[l][a]) / h;
        }
        self.solvent_fill(&mut y, &mut g);
        FaceData {
            e_field: -(s.phi[b] - s.phi[a]) / h,
            temp: 0.5 * (s.temp[a] + s.temp[b]),
            grad_ln_t: (s.temp[b].ln() - s.temp[a].ln()) / h,
            grad_ln_rho: (self.rho[b].ln() - self.rho[a].ln()) / h,
            v: 0.5 * (s.v[a] + s.v[b]),
            y,
            grad_y: g,
        }
    }

    fn wall(&self, side: Side) -> FaceData {
        let s = self.lag;
        let n = s.cells();
        let half = 0.5 * self.h;
        let k = match side {
            Side::Left => 0,
            Side::Right => n - 1,
        };
        // outward-to-inward orientation: gradients are d/dx
        let sign = match side {
            Side::Left => 1.0,
            Side::Right => -1.0,
        };
        let big_l = s.species_count() - 1;
        let mut y = vec![0.0; big_l + 1];
        let mut g = vec![0.0; big_l + 1];
        for l in 0..big_l {
            match dirichlet(&self.problem.boundaries.species[l], &side) {
                Some(yb) => {
                    y[l] = yb;
                    g[l] = sign * (s.y[l][k] - yb) / half;
                }
                None => y[l] = s.y[l][k],
            }
        }
        self.solvent_fill(&mut y, &mut g);
        let e_field = match dirichlet(&self.problem.boundaries.potential, &side) {
            Some(pb) => -sign * (s.phi[k] - pb) / half,
            None => 0.0,
        };
        FaceData {
            e_field,
            temp: s.temp[k],
            grad_ln_t: 0.0,
            grad_ln_rho: 0.0,
            v: s.v[k],
            y,
            grad_y: g,
        }
    }

    /// Drift velocity of solute l on a face, including the barycentric part.
    fn drift(&self, l: usize, f: &FaceData) -> f64 {
        let mix = &self.problem.mixture;
        let c = &self.problem.constants;
        let sp = &mix.species[l];
        let d = sp.diffusion_coefficient;
        let kt = c.boltzmann * f.temp;
        match self.problem.model {
            TransportModel::Pnp | TransportModel::Dpnp => {
                f.v + c.elementary_charge * sp.valency as f64 * d / kt * f.e_field
            }
            TransportModel::General => {
                let big_l = mix.solvent();
                let solv = &mix.species[big_l];
                let ratio = sp.molecular_mass / solv.molecular_mass;
                let y_solv = f.y[big_l].max(Y_MIN);
                let y_l = f.y[l].max(Y_MIN);
                let w = ratio / y_solv * f.grad_y[big_l]
                    + c.elementary_charge / kt * (sp.valency as f64 - ratio * solv.valency as f64) * f.e_field
                    - (mix.beta[l] + y_l.ln()) * f.grad_ln_t
                    + ratio * (mix.beta[big_l] + y_solv.ln()) * f.grad_ln_t;
                f.v + d * (w + f.grad_ln_rho)
            }
        }
    }
}

/// Backward-Euler transport of every solute over `dt` with the potential and lagged
/// coefficients taken from `lag`; `old` supplies the level-n partial densities.
pub fn transport_step(
    old: &MixtureState,
    lag: &MixtureState,
    rho_new: &[f64],
    dt: f64,
    problem: &Problem,
) -> Result<TransportOutcome, SolverError> {
    let n = old.cells();
    let h = old.grid.dx();
    let big_l = problem.mixture.solvent();
    let theta = problem.porosity();
    let scheme = problem.numerics.flux;
    let periodic = problem.boundaries.is_periodic();
    let fb = FaceBuilder {
        lag,
        rho: rho_new,
        problem,
        h,
    };
    let interior: Vec<FaceData> = (0..n - 1).map(|k| fb.interior(k, k + 1)).collect();
    let (left, right, wrap) = if periodic {
        (None, None, Some(fb.interior(n - 1, 0)))
    } else {
        (Some(fb.wall(Side::Left)), Some(fb.wall(Side::Right)), None)
    };
    let rho_wall = |side: Side| -> f64 {
        let k = match side {
            Side::Left => 0,
            Side::Right => n - 1,
        };
        dirichlet(&problem.boundaries.density, &side).unwrap_or(rho_new[k])
    };
    let rho_left = rho_wall(Side::Left);
    let rho_right = rho_wall(Side::Right);

    let solved: Result<Vec<Vec<f64>>, SolverError> = (0..big_l)
        .into_par_iter()
        .map(|l| {
            let d = problem.mixture.species[l].diffusion_coefficient;
            let bc = &problem.boundaries.species[l];
            let coefs: Vec<FaceCoef> = interior
                .iter()
                .map(|f| face_coef(d, fb.drift(l, f), h, scheme))
                .collect();
            let mut lower = vec![0.0; n];
            let mut diag = vec![theta / dt; n];
            let mut upper = vec![0.0; n];
            let mut rhs: Vec<f64> = (0..n).map(|k| theta / dt * old.rho[k] * old.y[l][k]).collect();
            for (k, fc) in coefs.iter().enumerate() {
                diag[k] += fc.alpha / h;
                upper[k] -= fc.beta / h;
                diag[k + 1] += fc.beta / h;
                lower[k + 1] -= fc.alpha / h;
            }
            if let Some(f) = &wrap {
                let fc = face_coef(d, fb.drift(l, f), h, scheme);
                diag[n - 1] += fc.alpha / h;
                upper[n - 1] -= fc.beta / h;
                diag[0] += fc.beta / h;
                lower[0] -= fc.alpha / h;
            }
            if let (Some(BoundaryCondition::Dirichlet(yb)), Some(f)) = (Some(bc.left), &left) {
                let fc = face_coef(d, fb.drift(l, f), 0.5 * h, scheme);
                diag[0] += fc.beta / h;
                rhs[0] += fc.alpha * rho_left * yb / h;
            }
            if let (Some(BoundaryCondition::Dirichlet(yb)), Some(f)) = (Some(bc.right), &right) {
                let fc = face_coef(d, fb.drift(l, f), 0.5 * h, scheme);
                diag[n - 1] += fc.alpha / h;
                rhs[n - 1] += fc.beta * rho_right * yb / h;
            }
            let c = if periodic {
                solve_cyclic(&lower, &diag, &upper, &rhs)
            } else {
                solve_tridiagonal(&lower, &diag, &upper, &rhs)
            }
            .ok_or_else(|| SolverError::LinearSolve(format!("transport system for species {}", l)))?;
            let cmax = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut y = Vec::with_capacity(n);
            for (k, &ck) in c.iter().enumerate() {
                if !ck.is_finite() || ck < -1e-13 * cmax.max(f64::MIN_POSITIVE) {
                    return Err(SolverError::Positivity(format!(
                        "species {} cell {}: partial density {:e}",
                        l, k, ck
                    )));
                }
                y.push(ck.max(0.0) / rho_new[k]);
            }
            Ok(y)
        })
        .collect();
    let mut y = solved?;
    let mut solvent = vec![0.0; n];
    for (k, ys) in solvent.iter_mut().enumerate() {
        *ys = 1.0 - y.iter().map(|yl| yl[k]).sum::<f64>();
        if !(*ys > 0.0) {
            return Err(SolverError::Positivity(format!("solvent depleted in cell {}: y_L = {:e}", k, ys)));
        }
    }
    y.push(solvent);
    Ok(TransportOutcome { y })
}

/// Conservative upwind transport of ρ by the cell velocities.
pub(crate) fn advect_density(
    rho: &[f64],
    v: &[f64],
    dt: f64,
    h: f64,
    bc: &FieldBoundary,
) -> Result<Vec<f64>, SolverError> {
    let n = rho.len();
    if v.iter().all(|&u| u == 0.0) {
        return Ok(rho.to_vec());
    }
    let mut lower = vec![0.0; n];
    let mut diag = vec![1.0 / dt; n];
    let mut upper = vec![0.0; n];
    let mut rhs: Vec<f64> = rho.iter().map(|r| r / dt).collect();
    let add = |a: usize, b: usize, u: f64, diag: &mut [f64], lower: &mut [f64], upper: &mut [f64]| {
        let fc = face_coef(0.0, u, h, FluxScheme::ExponentialFitted);
        diag[a] += fc.alpha / h;
        diag[b] += fc.beta / h;
        upper[a] -= fc.beta / h;
        lower[b] -= fc.alpha / h;
    };
    for k in 0..n - 1 {
        add(k, k + 1, 0.5 * (v[k] + v[k + 1]), &mut diag, &mut lower, &mut upper);
    }
    let periodic = bc.is_periodic();
    if periodic {
        add(n - 1, 0, 0.5 * (v[n - 1] + v[0]), &mut diag, &mut lower, &mut upper);
    } else {
        if let BoundaryCondition::Dirichlet(rb) = bc.left {
            let fc = face_coef(0.0, v[0], h, FluxScheme::ExponentialFitted);
            diag[0] += fc.beta / h;
            rhs[0] += fc.alpha * rb / h;
        }
        if let BoundaryCondition::Dirichlet(rb) = bc.right {
            let fc = face_coef(0.0, v[n - 1], h, FluxScheme::ExponentialFitted);
            diag[n - 1] += fc.alpha / h;
            rhs[n - 1] += fc.beta * rb / h;
        }
    }
    let r = if periodic {
        solve_cyclic(&lower, &diag, &upper, &rhs)
    } else {
        solve_tridiagonal(&lower, &diag, &upper, &rhs)
    }
    .ok_or_else(|| SolverError::LinearSolve("density advection".into()))?;
    if r.iter().any(|v| !(*v > 0.0)) {
        return Err(SolverError::Positivity("density became nonpositive".into()));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(0.0), 1.0);
        assert!((bernoulli(1e-7) - (1e-7 / (1e-7f64).exp_m1())).abs() < 1e-15);
        assert!((bernoulli(2.0) - 2.0 / (2.0f64.exp() - 1.0)).abs() < 1e-15);
        // B(−x) − B(x) = x
        for x in [1e-8, 1e-3, 0.5, 3.0, 40.0] {
            assert!((bernoulli(-x) - bernoulli(x) - x).abs() < 1e-12 * (1.0 + x));
        }
    }

    #[test]
    fn sg_reduces_to_upwind() {
        let fc = face_coef(1e-12, 2.0, 0.1, FluxScheme::ExponentialFitted);
        assert!((fc.alpha - 2.0).abs() < 1e-9 && fc.beta.abs() < 1e-9);
        let fc = face_coef(0.0, -3.0, 0.1, FluxScheme::ExponentialFitted);
        assert_eq!((fc.alpha, fc.beta), (0.0, 3.0));
    }
}
