//! Pointwise constitutive closures.

use nalgebra::SMatrix;
use thiserror::Error;

use crate::chemistry::Species;
use crate::thermo::{HeatConductivity, PhysicalConstants};
use crate::Y_MIN;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstitutiveError {
    #[error("solvent mass fraction {0} must be positive")]
    DegenerateSolvent(f64),
    #[error("mass fraction {value} of species {species} must be positive")]
    NonPositiveFraction { species: usize, value: f64 },
    #[error("temperature {0} must be positive")]
    NonPositiveTemperature(f64),
}

/// Values and first derivatives of the primitive fields at one point (1-D).
#[derive(Debug, Clone, PartialEq)]
pub struct PointState {
    pub rho: f64,
    pub y: Vec<f64>,
    pub grad_y: Vec<f64>,
    pub phi: f64,
    pub grad_phi: f64,
    pub temp: f64,
    pub grad_temp: f64,
}

impl PointState {
    pub fn uniform(rho: f64, y: Vec<f64>, phi: f64, temp: f64) -> Self {
        let n = y.len();
        PointState {
            rho,
            y,
            grad_y: vec![0.0; n],
            phi,
            grad_phi: 0.0,
            temp,
            grad_temp: 0.0,
        }
    }

    pub fn field(&self) -> f64 {
        -self.grad_phi
    }
}

/// Drift mass fluxes (1-D components) with their labelled parts and the free current.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxSet {
    pub j: Vec<f64>,
    pub current: f64,
    pub mixing: Vec<f64>,
    pub electric: Vec<f64>,
    pub thermal: Vec<f64>,
}

/// Einstein–Smoluchowski mobility M = D/(k_B T).
pub fn mobility(d: f64, t: f64, c: &PhysicalConstants) -> f64 {
    d / (c.boltzmann * t)
}

fn check_point(p: &PointState) -> Result<usize, ConstitutiveError> {
    let big_l = p.y.len() - 1;
    if !(p.y[big_l] > 0.0) {
        return Err(ConstitutiveError::DegenerateSolvent(p.y[big_l]));
    }
    for (l, &v) in p.y.iter().enumerate() {
        if !(v > 0.0) {
            return Err(ConstitutiveError::NonPositiveFraction { species: l, value: v });
        }
    }
    if !(p.temp > 0.0) {
        return Err(ConstitutiveError::NonPositiveTemperature(p.temp));
    }
    Ok(big_l)
}

/// Expanded drift fluxes; the solvent flux closes ∑ j_l = 0.
pub fn drift_fluxes(
    p: &PointState,
    species: &[Species],
    beta: &[f64],
    c: &PhysicalConstants,
) -> Result<FluxSet, ConstitutiveError> {
    let big_l = check_point(p)?;
    let ml_solv = species[big_l].molecular_mass;
    let zl_solv = species[big_l].valency as f64;
    let y_solv = p.y[big_l];
    let grad_ln_t = p.grad_temp / p.temp;
    let e_field = p.field();
    let log_solv = beta[big_l] + y_solv.max(Y_MIN).ln();

    let n = species.len();
    let mut mixing = vec![0.0; n];
    let mut electric = vec![0.0; n];
    let mut thermal = vec![0.0; n];
    let mut j = vec![0.0; n];
    for l in 0..big_l {
        let sp = &species[l];
        let d = sp.diffusion_coefficient;
        let m = sp.molecular_mass;
        let rho_l = p.rho * p.y[l];
        mixing[l] = -p.rho * d * p.grad_y[l] + m * rho_l * d / (ml_solv * y_solv) * p.grad_y[big_l];
        electric[l] = c.elementary_charge * rho_l * d / (c.boltzmann * p.temp)
            * (sp.valency as f64 - m * zl_solv / ml_solv)
            * e_field;
        thermal[l] = -rho_l * d * (beta[l] + p.y[l].max(Y_MIN).ln()) * grad_ln_t
            + m * rho_l * d / ml_solv * log_solv * grad_ln_t;
        j[l] = mixing[l] + electric[l] + thermal[l];
    }
    close_solvent(&mut j);
    close_solvent(&mut mixing);
    close_solvent(&mut electric);
    close_solvent(&mut thermal);
    let current = free_current(&j, species, c);
    Ok(FluxSet {
        j,
        current,
        mixing,
        electric,
        thermal,
    })
}

fn close_solvent(j: &mut [f64]) {
    let big_l = j.len() - 1;
    j[big_l] = -j[..big_l].iter().sum::<f64>();
}

/// ∇χ̄_mix_l by the chain rule from primitive gradients.
pub fn elchem_pot_mix_gradient(
    p: &PointState,
    l: usize,
    species: &Species,
    beta: f64,
    c: &PhysicalConstants,
) -> f64 {
    let y = p.y[l].max(Y_MIN);
    let k_m = c.boltzmann / species.molecular_mass;
    k_m * ((beta + y.ln()) * p.grad_temp + p.temp * p.grad_y[l] / y)
        + c.elementary_charge * species.valency as f64 / species.molecular_mass * p.grad_phi
}

/// j_l = −m_l ρ_l M_l ∇(χ̄_mix_l − χ̄_mix_L), evaluated from potential gradients.
pub fn drift_fluxes_raw(
    p: &PointState,
    species: &[Species],
    beta: &[f64],
    c: &PhysicalConstants,
) -> Result<Vec<f64>, ConstitutiveError> {
    let big_l = check_point(p)?;
    let g_solv = elchem_pot_mix_gradient(p, big_l, &species[big_l], beta[big_l], c);
    let mut j = vec![0.0; species.len()];
    for l in 0..big_l {
        let sp = &species[l];
        let g = elchem_pot_mix_gradient(p, l, sp, beta[l], c);
        let m = mobility(sp.diffusion_coefficient, p.temp, c);
        j[l] = -sp.molecular_mass * p.rho * p.y[l] * m * (g - g_solv);
    }
    close_solvent(&mut j);
    Ok(j)
}

/// Reduced PNP flux −D∇ρ_l + (e z D/(k_B T)) ρ_l E.
pub fn pnp_flux(species: &Species, rho_l: f64, grad_rho_l: f64, e_field: f64, t: f64, c: &PhysicalConstants) -> f64 {
    let d = species.diffusion_coefficient;
    -d * grad_rho_l + c.elementary_charge * species.valency as f64 * d / (c.boltzmann * t) * rho_l * e_field
}

/// ρ_E = ∑ (e z_l/m_l) ρ y_l.
pub fn free_charge(y: &[f64], rho: f64, species: &[Species], c: &PhysicalConstants) -> f64 {
    species
        .iter()
        .zip(y)
        .map(|(s, &yl)| c.elementary_charge * s.valency as f64 / s.molecular_mass * rho * yl)
        .sum()
}

/// i = ∑ (e z_l/m_l) j_l.
pub fn free_current(j: &[f64], species: &[Species], c: &PhysicalConstants) -> f64 {
    species
        .iter()
        .zip(j)
        .map(|(s, &jl)| c.elementary_charge * s.valency as f64 / s.molecular_mass * jl)
        .sum()
}

/// τ = η(∇v + ∇vᵀ) + η_v (∇·v) 𝟙.
pub fn newtonian_stress<const N: usize>(grad_v: &SMatrix<f64, N, N>, eta: f64, eta_v: f64) -> SMatrix<f64, N, N> {
    let div = grad_v.trace();
    (grad_v + grad_v.transpose()) * eta + SMatrix::<f64, N, N>::identity() * (eta_v * div)
}

/// −p𝟙 + τ.
pub fn total_stress<const N: usize>(p: f64, tau: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    tau - SMatrix::<f64, N, N>::identity() * p
}

/// τ:∇v.
pub fn viscous_dissipation<const N: usize>(tau: &SMatrix<f64, N, N>, grad_v: &SMatrix<f64, N, N>) -> f64 {
    tau.component_mul(grad_v).sum()
}

/// q = −κ∇T − φ i + ∑ χ̄_mix_l j_l.
pub fn heat_flux<const N: usize>(
    grad_t: &[f64; N],
    phi: f64,
    current: &[f64; N],
    chi_bar: &[f64],
    j: &[[f64; N]],
    kappa: &HeatConductivity,
) -> [f64; N] {
    let kg = kappa.apply(grad_t);
    let mut q = [0.0; N];
    for d in 0..N {
        let transport: f64 = chi_bar.iter().zip(j).map(|(c, jl)| c * jl[d]).sum();
        q[d] = -kg[d] - phi * current[d] + transport;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ions() -> Vec<Species> {
        vec![
            Species::new("K", 2.0, 1, 0.7),
            Species::new("Cl", 3.0, -1, 0.4),
            Species::solvent("W", 1.5, 0, 0.0),
        ]
    }

    #[test]
    fn mobility_values() {
        let c = PhysicalConstants::default();
        assert_eq!(mobility(0.0, 300.0, &c), 0.0);
        assert_relative_eq!(mobility(1e-9, 600.0, &c), 0.5 * mobility(1e-9, 300.0, &c), max_relative = 1e-15);
        assert_relative_eq!(mobility(1e-9, 300.0, &c), 1e-9 / (1.380649e-23 * 300.0), max_relative = 1e-15);
    }

    #[test]
    fn uniform_state_has_no_flux() {
        let c = PhysicalConstants::unit();
        let p = PointState::uniform(2.0, vec![0.1, 0.2, 0.7], 0.3, 1.2);
        let f = drift_fluxes(&p, &ions(), &[0.1, -0.2, 0.3], &c).unwrap();
        assert!(f.j.iter().all(|&v| v == 0.0));
        assert_eq!(f.current, 0.0);
    }

    #[test]
    fn pure_field_gives_migration() {
        let c = PhysicalConstants::unit();
        let mut p = PointState::uniform(2.0, vec![0.1, 0.2, 0.7], 0.0, 1.2);
        p.grad_phi = -0.5;
        let sp = ions();
        let f = drift_fluxes(&p, &sp, &[0.0; 3], &c).unwrap();
        assert_relative_eq!(f.j[0], 1.0 * 0.7 / 1.2 * 0.2 * 0.5, max_relative = 1e-15);
        assert_relative_eq!(f.j[1], -1.0 * 0.4 / 1.2 * 0.4 * 0.5, max_relative = 1e-15);
    }

    #[test]
    fn fickian_limit() {
        let c = PhysicalConstants::unit();
        let mut p = PointState::uniform(2.0, vec![0.1, 0.2, 0.7], 0.0, 1.2);
        p.grad_y = vec![0.3, -0.3, 0.0];
        let f = drift_fluxes(&p, &ions(), &[0.0; 3], &c).unwrap();
        assert_relative_eq!(f.j[0], -2.0 * 0.7 * 0.3, max_relative = 1e-15);
        assert_relative_eq!(f.j[1], 2.0 * 0.4 * 0.3, max_relative = 1e-15);
    }

    #[test]
    fn degenerate_solvent_rejected() {
        let c = PhysicalConstants::unit();
        let p = PointState::uniform(1.0, vec![0.5, 0.5, 0.0], 0.0, 1.0);
        assert!(matches!(
            drift_fluxes(&p, &ions(), &[0.0; 3], &c),
            Err(ConstitutiveError::DegenerateSolvent(_))
        ));
    }

    #[test]
    fn charge_sums() {
        let c = PhysicalConstants::unit();
        let n = vec![Species::new("A", 1.0, 0, 1.0), Species::solvent("B", 1.0, 0, 1.0)];
        assert_eq!(free_charge(&[0.3, 0.7], 2.0, &n, &c), 0.0);
        let sym = vec![
            Species::new("+", 2.0, 1, 1.0),
            Species::new("-", 2.0, -1, 1.0),
            Species::solvent("W", 1.0, 0, 1.0),
        ];
        assert_eq!(free_charge(&[0.1, 0.1, 0.8], 3.0, &sym, &c), 0.0);
        let v = free_charge(&[0.2, 0.1, 0.7], 3.0, &ions(), &c);
        assert_relative_eq!(v, 0.2 * 3.0 / 2.0 - 0.1 * 3.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn shear_stress() {
        let g = SMatrix::<f64, 2, 2>::new(0.0, 3.0, 0.0, 0.0);
        let tau = newtonian_stress(&g, 2.0, 5.0);
        assert_eq!(tau, SMatrix::<f64, 2, 2>::new(0.0, 6.0, 6.0, 0.0));
        assert_eq!(tau.trace(), 0.0);
        assert_eq!(viscous_dissipation(&tau, &g), 2.0 * 9.0);
        let z = SMatrix::<f64, 3, 3>::zeros();
        assert_eq!(newtonian_stress(&z, 1.0, 1.0), z);
        let sigma = total_stress(4.0, &tau);
        assert_eq!(sigma[(0, 0)], -4.0);
    }

    #[test]
    fn fourier_limit() {
        let kappa = HeatConductivity::Scalar(2.0);
        let q = heat_flux::<1>(&[3.0], 5.0, &[0.0], &[1.0, 2.0], &[[0.0], [0.0]], &kappa);
        assert_eq!(q, [-6.0]);
        let q = heat_flux::<1>(&[0.0], 0.0, &[1.0], &[1.0, 2.0], &[[0.5], [-0.5]], &kappa);
        assert_eq!(q, [-0.5]);
    }
}
