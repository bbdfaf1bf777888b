//! Closed-form reference solutions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chemistry::ReactionNetwork;
use crate::thermo::PhysicalConstants;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("oracle parameter out of range: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum OracleSpec {
    HeatKernel {
        diffusivity: f64,
        sigma0: f64,
        mass: f64,
        center: f64,
    },
    Boltzmann {
        valency: i32,
        temperature: f64,
        y_inf: f64,
    },
    DebyeLayer {
        zeta: f64,
        relative_permittivity: f64,
        temperature: f64,
        valencies: Vec<i32>,
        number_densities: Vec<f64>,
    },
    ReactionEquilibrium {
        equilibrium_constant: f64,
    },
}

impl OracleSpec {
    pub fn validate(&self) -> Result<(), OracleError> {
        let bad = |m: &str| Err(OracleError::Parameter(m.to_string()));
        match self {
            OracleSpec::HeatKernel {
                diffusivity,
                sigma0,
                mass,
                ..
            } => {
                if !(*diffusivity > 0.0) || !(*sigma0 >= 0.0) || !mass.is_finite() {
                    return bad("heat kernel needs D > 0, σ₀ ≥ 0 and finite mass");
                }
            }
            OracleSpec::Boltzmann { temperature, y_inf, .. } => {
                if !(*temperature > 0.0) || !(*y_inf >= 0.0) {
                    return bad("boltzmann profile needs T > 0 and y∞ ≥ 0");
                }
            }
            OracleSpec::DebyeLayer {
                relative_permittivity,
                temperature,
                valencies,
                number_densities,
                ..
            } => {
                if !(*relative_permittivity > 0.0) || !(*temperature > 0.0) || valencies.len() != number_densities.len() {
                    return bad("debye layer needs ε_r > 0, T > 0 and matching ion lists");
                }
            }
            OracleSpec::ReactionEquilibrium { equilibrium_constant } => {
                if !(*equilibrium_constant > 0.0) {
                    return bad("equilibrium constant must be positive");
                }
            }
        }
        Ok(())
    }
}

/// σ₀² + 2Dt.
pub fn heat_kernel_variance(t: f64, d: f64, sigma0: f64) -> f64 {
    sigma0 * sigma0 + 2.0 * d * t
}

/// Free-space Gaussian of total mass `mass` centered at `center`.
pub fn heat_kernel(x: &[f64], t: f64, d: f64, sigma0: f64, mass: f64, center: f64) -> Result<Vec<f64>, OracleError> {
    if !(t >= 0.0) || !(d > 0.0) || !(sigma0 >= 0.0) {
        return Err(OracleError::Parameter("heat kernel needs t ≥ 0, D > 0, σ₀ ≥ 0".into()));
    }
    let var = heat_kernel_variance(t, d, sigma0);
    if var == 0.0 {
        return Err(OracleError::Parameter("zero variance: the profile is a point mass".into()));
    }
    let norm = mass / (2.0 * std::f64::consts::PI * var).sqrt();
    Ok(x.iter()
        .map(|xi| norm * (-(xi - center).powi(2) / (2.0 * var)).exp())
        .collect())
}

/// y∞ exp(−e z φ/(k_B T)).
pub fn boltzmann_profile(phi: &[f64], valency: i32, t: f64, y_inf: f64, c: &PhysicalConstants) -> Vec<f64> {
    let a = c.elementary_charge * valency as f64 / (c.boltzmann * t);
    phi.iter().map(|p| y_inf * (-a * p).exp()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebyeLayer {
    pub debye_length: f64,
    pub profile: Vec<f64>,
    /// Set when |eζ/(k_B T)| > 0.2.
    pub warning: Option<String>,
}

pub fn debye_length(
    relative_permittivity: f64,
    t: f64,
    valencies: &[i32],
    number_densities: &[f64],
    c: &PhysicalConstants,
) -> f64 {
    let s: f64 = valencies
        .iter()
        .zip(number_densities)
        .map(|(&z, &n)| (c.elementary_charge * z as f64).powi(2) * n)
        .sum();
    (relative_permittivity * c.vacuum_permittivity * c.boltzmann * t / s).sqrt()
}

/// Linearized double layer ζ exp(−x/λ_D) at the distances `x` from the wall.
pub fn debye_layer(
    zeta: f64,
    x: &[f64],
    relative_permittivity: f64,
    t: f64,
    valencies: &[i32],
    number_densities: &[f64],
    c: &PhysicalConstants,
) -> DebyeLayer {
    let lambda = debye_length(relative_permittivity, t, valencies, number_densities, c);
    let scaled = (c.elementary_charge * zeta / (c.boltzmann * t)).abs();
    let warning = (scaled > 0.2).then(|| format!("|eζ/(k_B T)| = {:.3} exceeds the linear regime bound 0.2", scaled));
    DebyeLayer {
        debye_length: lambda,
        profile: x.iter().map(|xi| zeta * (-xi / lambda).exp()).collect(),
        warning,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionEquilibrium {
    pub y: [f64; 2],
    /// K is infinite or zero and the limit (0,1) or (1,0) was returned.
    pub degenerate: bool,
}

/// y_B/y_A = K with y_A + y_B = 1 for the single reaction A ⇌ B.
pub fn reaction_equilibrium_constant(k: f64) -> Result<ReactionEquilibrium, OracleError> {
    if k.is_nan() || k < 0.0 {
        return Err(OracleError::Parameter(format!("equilibrium constant {} is invalid", k)));
    }
    if k.is_infinite() {
        return Ok(ReactionEquilibrium { y: [0.0, 1.0], degenerate: true });
    }
    if k == 0.0 {
        return Ok(ReactionEquilibrium { y: [1.0, 0.0], degenerate: true });
    }
    let ya = 1.0 / (1.0 + k);
    Ok(ReactionEquilibrium {
        y: [ya, k * ya],
        degenerate: false,
    })
}

/// Equilibrium of a two-species network with one reaction of stoichiometry ±(−1, 1).
pub fn reaction_equilibrium(network: &ReactionNetwork) -> Result<ReactionEquilibrium, OracleError> {
    if network.species_count() != 2 || network.reaction_count() != 1 {
        return Err(OracleError::Parameter("need exactly two species and one reaction".into()));
    }
    let s = (network.s(0, 0), network.s(1, 0));
    let k = network.forward_rates()[0] / network.backward_rates()[0];
    match s {
        (-1, 1) => reaction_equilibrium_constant(k),
        (1, -1) => reaction_equilibrium_constant(1.0 / k),
        _ => Err(OracleError::Parameter("stoichiometry must be A ⇌ B".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn heat_kernel_moments() {
        let n = 20001;
        let h = 40.0 / (n - 1) as f64;
        let x: Vec<f64> = (0..n).map(|i| -20.0 + h * i as f64).collect();
        let u = heat_kernel(&x, 1.0, 1.0, 0.0, 3.0, 0.0).unwrap();
        let m0: f64 = u.iter().sum::<f64>() * h;
        let m2: f64 = u.iter().zip(&x).map(|(u, x)| u * x * x).sum::<f64>() * h / m0;
        assert_relative_eq!(m0, 3.0, max_relative = 1e-10);
        assert_relative_eq!(m2, 2.0, max_relative = 1e-10);
        assert!(heat_kernel(&x, 0.0, 1.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn heat_kernel_initial_profile() {
        let u = heat_kernel(&[0.3], 0.0, 2.0, 0.5, 1.0, 0.1).unwrap();
        let want = 1.0 / (2.0 * std::f64::consts::PI * 0.25f64).sqrt() * (-0.04f64 / 0.5).exp();
        assert_relative_eq!(u[0], want, max_relative = 1e-15);
    }

    #[test]
    fn boltzmann_values() {
        let c = PhysicalConstants::unit();
        assert_eq!(boltzmann_profile(&[0.0, 0.0], 2, 1.0, 0.3, &c), vec![0.3, 0.3]);
        assert_eq!(boltzmann_profile(&[1.0, -4.0], 0, 1.0, 0.3, &c), vec![0.3, 0.3]);
        assert_relative_eq!(boltzmann_profile(&[0.5], 2, 1.0, 1.0, &c)[0], (-1.0f64).exp());
    }

    #[test]
    fn debye_unit_case() {
        let c = PhysicalConstants::unit();
        let d = debye_layer(0.1, &[0.0, 1.0], 1.0, 1.0, &[1, -1], &[0.5, 0.5], &c);
        assert_relative_eq!(d.debye_length, 1.0);
        assert_relative_eq!(d.profile[1], 0.1 * (-1.0f64).exp());
        assert!(d.warning.is_none());
        let d2 = debye_layer(0.5, &[0.0], 1.0, 1.0, &[1, -1], &[1.0, 1.0], &c);
        assert_relative_eq!(d2.debye_length, 1.0 / 2f64.sqrt());
        assert!(d2.warning.is_some());
        let d0 = debye_layer(0.0, &[0.0, 2.0], 1.0, 1.0, &[1, -1], &[0.5, 0.5], &c);
        assert!(d0.profile.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn reaction_equilibria() {
        assert_eq!(reaction_equilibrium_constant(1.0).unwrap().y, [0.5, 0.5]);
        let e = reaction_equilibrium_constant(4.0).unwrap();
        assert_relative_eq!(e.y[0], 0.2);
        assert_relative_eq!(e.y[1], 0.8);
        let inf = reaction_equilibrium_constant(f64::INFINITY).unwrap();
        assert!(inf.degenerate && inf.y == [0.0, 1.0]);
        let net = ReactionNetwork::new(vec![vec![1], vec![-1]], vec![1.0], vec![4.0]).unwrap();
        let e = reaction_equilibrium(&net).unwrap();
        assert_relative_eq!(e.y[1], 0.8);
    }
}
