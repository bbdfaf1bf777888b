//! Chemical potentials, mixing and pure-substance energies, pressure laws.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chemistry::Species;
use crate::Y_MIN;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermoError {
    #[error("mass fraction {value} of species {species} must be positive")]
    NonPositiveFraction { species: usize, value: f64 },
    #[error("temperature {0} must be positive")]
    NonPositiveTemperature(f64),
    #[error("invalid material parameters: {0}")]
    Material(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub elementary_charge: f64,
    pub boltzmann: f64,
    pub vacuum_permittivity: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            elementary_charge: 1.602_176_634e-19,
            boltzmann: 1.380_649e-23,
            vacuum_permittivity: 8.854_187_818_8e-12,
        }
    }
}

impl PhysicalConstants {
    /// e = k_B = ε₀ = 1.
    pub fn unit() -> Self {
        PhysicalConstants {
            elementary_charge: 1.0,
            boltzmann: 1.0,
            vacuum_permittivity: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), ThermoError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if ok(self.elementary_charge) && ok(self.boltzmann) && ok(self.vacuum_permittivity) {
            Ok(())
        } else {
            Err(ThermoError::Material("physical constants must be positive".into()))
        }
    }

    /// k_B T / e.
    pub fn thermal_voltage(&self, t: f64) -> f64 {
        self.boltzmann * t / self.elementary_charge
    }
}

/// Heat conduction coefficient κ, scalar or symmetric positive-semidefinite n×n tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HeatConductivity {
    Scalar(f64),
    Tensor(Vec<Vec<f64>>),
}

impl Default for HeatConductivity {
    fn default() -> Self {
        HeatConductivity::Scalar(0.0)
    }
}

impl HeatConductivity {
    pub fn validate(&self) -> Result<(), ThermoError> {
        match self {
            HeatConductivity::Scalar(k) if *k >= 0.0 && k.is_finite() => Ok(()),
            HeatConductivity::Scalar(k) => Err(ThermoError::Material(format!(
                "heat capacity {} must be nonnegative",
                k
            ))),
            HeatConductivity::Tensor(rows) => {
                let n = rows.len();
                if n == 0 || n > 3 || rows.iter().any(|r| r.len() != n) {
                    return Err(ThermoError::Material("heat capacity tensor must be n×n, n ≤ 3".into()));
                }
                let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
                let scale = m.amax().max(f64::MIN_POSITIVE);
                if (&m - m.transpose()).amax() > 1e-12 * scale {
                    return Err(ThermoError::Material("heat capacity tensor must be symmetric".into()));
                }
                let eig = SymmetricEigen::new(m);
                if eig.eigenvalues.iter().any(|&e| e < -1e-12 * scale) {
                    return Err(ThermoError::Material(
                        "heat capacity tensor must be positive semidefinite".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// κ·g for a gradient of dimension n.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        match self {
            HeatConductivity::Scalar(k) => g.iter().map(|v| k * v).collect(),
            HeatConductivity::Tensor(rows) => (0..g.len())
                .map(|i| (0..g.len()).map(|j| rows[i][j] * g[j]).sum())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub shear_viscosity: f64,
    pub bulk_viscosity: f64,
    pub heat_conductivity: HeatConductivity,
    pub reference_temperature: f64,
    /// m_a = (1/L)∑ m_l.
    pub average_mass: f64,
}

impl MaterialParams {
    pub fn new(species: &[Species], reference_temperature: f64) -> Self {
        let average_mass =
            species.iter().map(|s| s.molecular_mass).sum::<f64>() / species.len().max(1) as f64;
        MaterialParams {
            shear_viscosity: 0.0,
            bulk_viscosity: 0.0,
            heat_conductivity: HeatConductivity::Scalar(0.0),
            reference_temperature,
            average_mass,
        }
    }

    /// Checks η ≥ 0, 2η/n + η_v ≥ 0, κ ⪰ 0, T_r > 0.
    pub fn validate(&self, n: usize) -> Result<(), ThermoError> {
        let mut problems = Vec::new();
        if !(self.shear_viscosity >= 0.0) {
            problems.push("shear viscosity must be >= 0".to_string());
        }
        if !(2.0 * self.shear_viscosity / n as f64 + self.bulk_viscosity >= 0.0) {
            problems.push(format!("viscous criterion 2η/n + η_v >= 0 violated for n = {}", n));
        }
        if let Err(ThermoError::Material(m)) = self.heat_conductivity.validate() {
            problems.push(m);
        }
        if !(self.reference_temperature > 0.0) {
            problems.push("reference temperature must be > 0".to_string());
        }
        if !(self.average_mass > 0.0) {
            problems.push("average mass must be > 0".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ThermoError::Material(problems.join("; ")))
        }
    }
}

fn check(species: usize, y: f64, t: f64) -> Result<(), ThermoError> {
    if !(y > 0.0) {
        return Err(ThermoError::NonPositiveFraction { species, value: y });
    }
    if !(t > 0.0) {
        return Err(ThermoError::NonPositiveTemperature(t));
    }
    Ok(())
}

/// χ_mix = (k_B T/m)(β + ln y).
pub fn chem_pot_mix(
    species: &Species,
    beta: f64,
    y: f64,
    t: f64,
    c: &PhysicalConstants,
) -> Result<f64, ThermoError> {
    check(0, y, t)?;
    Ok(c.boltzmann * t / species.molecular_mass * (beta + y.max(Y_MIN).ln()))
}

/// χ̄_mix = χ_mix + (e z/m) φ.
pub fn elchem_pot_mix(
    species: &Species,
    beta: f64,
    y: f64,
    t: f64,
    phi: f64,
    c: &PhysicalConstants,
) -> Result<f64, ThermoError> {
    let chi = chem_pot_mix(species, beta, y, t, c)?;
    if species.valency == 0 {
        return Ok(chi);
    }
    Ok(chi + c.elementary_charge * species.valency as f64 / species.molecular_mass * phi)
}

/// y_l u_mix_l = (k_B T/m_l)[y_l(β_l − 1 + ln y_l) + exp(−β_l)].
pub fn energy_mix_contribution(
    species: &Species,
    beta: f64,
    y: f64,
    t: f64,
    c: &PhysicalConstants,
) -> f64 {
    let y = y.max(Y_MIN);
    c.boltzmann * t / species.molecular_mass * (y * (beta - 1.0 + y.ln()) + (-beta).exp())
}

/// Mixture u_mix = ∑ y_l u_mix_l together with the per-species terms.
pub fn energy_mix_specific(
    y: &[f64],
    t: f64,
    species: &[Species],
    beta: &[f64],
    c: &PhysicalConstants,
) -> Result<(f64, Vec<f64>), ThermoError> {
    for (l, &yl) in y.iter().enumerate() {
        check(l, yl, t)?;
    }
    let parts: Vec<f64> = species
        .iter()
        .zip(beta)
        .zip(y)
        .map(|((s, &b), &yl)| energy_mix_contribution(s, b, yl, t, c))
        .collect();
    Ok((parts.iter().sum(), parts))
}

/// s_mix = −u_mix/T, assembled without going through `energy_mix_specific`.
pub fn entropy_mix(
    y: &[f64],
    t: f64,
    species: &[Species],
    beta: &[f64],
    c: &PhysicalConstants,
) -> Result<f64, ThermoError> {
    let mut s = 0.0;
    for (l, ((sp, &b), &yl)) in species.iter().zip(beta).zip(y).enumerate() {
        check(l, yl, t)?;
        let yl = yl.max(Y_MIN);
        s -= (c.boltzmann / sp.molecular_mass) * (yl * (b - 1.0 + yl.ln()) + (-b).exp());
    }
    Ok(s)
}

/// s_pure = (k_B/m_a) ln(T/T_r).
pub fn pure_entropy(t: f64, params: &MaterialParams, c: &PhysicalConstants) -> f64 {
    c.boltzmann / params.average_mass * (t / params.reference_temperature).ln()
}

/// û(s, ν) = (k_B T_r/m_a) exp(m_a s/k_B) + p ν.
pub fn pure_energy(s: f64, nu: f64, p: f64, params: &MaterialParams, c: &PhysicalConstants) -> f64 {
    let ma = params.average_mass;
    c.boltzmann * params.reference_temperature / ma * (ma * s / c.boltzmann).exp() + p * nu
}

/// χ_pure = û(s_pure(T), 1/ρ), identical for every species.
pub fn chem_pot_pure(t: f64, p: f64, rho: f64, params: &MaterialParams, c: &PhysicalConstants) -> f64 {
    pure_energy(pure_entropy(t, params, c), 1.0 / rho, p, params, c)
}

/// χ_l = χ_pure + χ_mix_l.
#[allow(clippy::too_many_arguments)]
pub fn chem_pot_total(
    species: &Species,
    beta: f64,
    y: f64,
    t: f64,
    p: f64,
    rho: f64,
    params: &MaterialParams,
    c: &PhysicalConstants,
) -> Result<f64, ThermoError> {
    Ok(chem_pot_pure(t, p, rho, params, c) + chem_pot_mix(species, beta, y, t, c)?)
}

/// ½|v_l − v|², the drift kinetic energy omitted from χ.
pub fn drift_kinetic_term(drift_flux: f64, partial_density: f64) -> f64 {
    let w = drift_flux / partial_density;
    0.5 * w * w
}

fn drift_pressure<const N: usize>(rho_l: &[f64], v_l: &[[f64; N]], v: &[f64; N]) -> f64 {
    let sum: f64 = rho_l
        .iter()
        .zip(v_l)
        .map(|(r, vl)| r * (0..N).map(|i| (vl[i] - v[i]).powi(2)).sum::<f64>())
        .sum();
    sum / N as f64
}

/// p = ∑ p_l + (1/n)∑ ρ_l|v_l − v|².
pub fn extended_dalton<const N: usize>(p_l: &[f64], rho_l: &[f64], v_l: &[[f64; N]], v: &[f64; N]) -> f64 {
    p_l.iter().sum::<f64>() + drift_pressure(rho_l, v_l, v)
}

/// p = ∑ p*_l y_l + (1/n)∑ ρ_l|v_l − v|².
pub fn extended_raoult<const N: usize>(
    p_star: &[f64],
    y: &[f64],
    rho_l: &[f64],
    v_l: &[[f64; N]],
    v: &[f64; N],
) -> f64 {
    p_star.iter().zip(y).map(|(p, y)| p * y).sum::<f64>() + drift_pressure(rho_l, v_l, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sp(m: f64, z: i32) -> Species {
        Species::new("s", m, z, 1.0)
    }

    #[test]
    fn chem_pot_basics() {
        let c = PhysicalConstants::default();
        let s = sp(1.66e-27, 0);
        assert_eq!(chem_pot_mix(&s, 0.0, 1.0, 300.0, &c).unwrap(), 0.0);
        assert_relative_eq!(chem_pot_mix(&s, 0.7, (-0.7f64).exp(), 300.0, &c).unwrap(), 0.0, epsilon = 1e-6);
        let expected = 1.380649e-23 * 300.0 / 1.66e-27 * 0.5f64.ln();
        assert_relative_eq!(chem_pot_mix(&s, 0.0, 0.5, 300.0, &c).unwrap(), expected, max_relative = 1e-15);
        assert!(chem_pot_mix(&s, 0.0, 0.0, 300.0, &c).is_err());
    }

    #[test]
    fn elchem_pot_basics() {
        let c = PhysicalConstants::unit();
        let n = sp(2.0, 0);
        assert_eq!(
            elchem_pot_mix(&n, 0.3, 0.2, 1.5, 7.0, &c).unwrap(),
            chem_pot_mix(&n, 0.3, 0.2, 1.5, &c).unwrap()
        );
        let q = sp(2.0, 1);
        assert_eq!(
            elchem_pot_mix(&q, 0.3, 0.2, 1.5, 0.0, &c).unwrap(),
            chem_pot_mix(&q, 0.3, 0.2, 1.5, &c).unwrap()
        );
        assert_relative_eq!(elchem_pot_mix(&q, 0.0, 1.0, 1.5, 3.0, &c).unwrap(), 1.5);
    }

    #[test]
    fn mixing_energy_limits() {
        let c = PhysicalConstants::unit();
        let s = [sp(1.0, 0)];
        let (u, _) = energy_mix_specific(&[1.0], 2.0, &s, &[0.0], &c).unwrap();
        assert_eq!(u, 0.0);
        let lim = energy_mix_contribution(&s[0], 0.4, 1e-300, 2.0, &c);
        assert_relative_eq!(lim, 2.0 * (-0.4f64).exp(), max_relative = 1e-12);
        assert_eq!(entropy_mix(&[1.0], 2.0, &s, &[0.0], &c).unwrap(), 0.0);
    }

    #[test]
    fn equimolar_binary_entropy() {
        // s_mix = −(k_B/m)∑[½(ln½ − 1) + 1] for β = 0, equal masses
        let c = PhysicalConstants::unit();
        let s = [sp(2.0, 0), sp(2.0, 0)];
        let v = entropy_mix(&[0.5, 0.5], 3.0, &s, &[0.0, 0.0], &c).unwrap();
        let expected = -(1.0 / 2.0) * 2.0 * (0.5 * (0.5f64.ln() - 1.0) + 1.0);
        assert_relative_eq!(v, expected, max_relative = 1e-15);
    }

    #[test]
    fn pure_substance() {
        let c = PhysicalConstants::unit();
        let mut p = MaterialParams::new(&[sp(2.0, 0), sp(4.0, 0)], 5.0);
        assert_eq!(p.average_mass, 3.0);
        assert_eq!(pure_entropy(5.0, &p, &c), 0.0);
        assert_relative_eq!(pure_entropy(5.0 * std::f64::consts::E, &p, &c), 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(pure_energy(0.0, 1.0, 0.0, &p, &c), 5.0 / 3.0);
        p.reference_temperature = 1.0;
        assert_eq!(pure_energy(0.3, 2.0, 0.0, &p, &c), pure_energy(0.3, 7.0, 0.0, &p, &c));
    }

    #[test]
    fn chi_pure_is_thermal_plus_volumetric() {
        let c = PhysicalConstants::unit();
        let p = MaterialParams::new(&[sp(2.0, 0), sp(4.0, 0)], 5.0);
        let v = chem_pot_pure(7.0, 3.0, 2.0, &p, &c);
        assert_relative_eq!(v, 7.0 / 3.0 + 1.5, max_relative = 1e-14);
    }

    #[test]
    fn dalton_and_raoult() {
        let p = extended_dalton::<1>(&[1.0, 2.0], &[1.0, 1.0], &[[0.5], [-0.5]], &[0.0]);
        assert_relative_eq!(p, 3.5, max_relative = 1e-15);
        let p = extended_dalton::<3>(&[1.0, 2.0], &[1.0, 3.0], &[[1.0; 3], [1.0; 3]], &[1.0; 3]);
        assert_eq!(p, 3.0);
        let p = extended_raoult::<2>(&[4.0, 9.0], &[1.0, 0.0], &[1.0, 0.0], &[[0.0; 2]; 2], &[0.0; 2]);
        assert_eq!(p, 4.0);
    }

    #[test]
    fn material_validation() {
        let mut p = MaterialParams::new(&[sp(1.0, 0)], 300.0);
        p.shear_viscosity = 1.0;
        p.bulk_viscosity = -2.0 / 3.0;
        assert!(p.validate(3).is_ok());
        p.bulk_viscosity = -0.7;
        assert!(p.validate(3).is_err());
        p.bulk_viscosity = 0.0;
        p.heat_conductivity = HeatConductivity::Tensor(vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(p.validate(2).is_err());
        p.heat_conductivity = HeatConductivity::Tensor(vec![vec![2.0, 1.0], vec![0.0, 2.0]]);
        assert!(p.validate(2).is_err());
        p.heat_conductivity = HeatConductivity::Tensor(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!(p.validate(2).is_ok());
    }
}
