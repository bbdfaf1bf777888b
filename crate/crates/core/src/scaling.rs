//! Maxwell scaling parameters and electrostatic-limit classification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const VACUUM_PERMITTIVITY: f64 = 8.8541878188e-12;
pub const DEFAULT_THRESHOLD: f64 = 1e-3;

/// μ₀ = 1/(ε₀ c₀²).
pub fn vacuum_permeability() -> f64 {
    1.0 / (VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * SPEED_OF_LIGHT)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("scaling input {name} = {value} must be positive")]
    NonPositive { name: &'static str, value: f64 },
    #[error("exponent α = {0} > 1 is not supported")]
    UnsupportedExponent(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Electrostatic,
    MagneticallyCoupled,
    Relativistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRegime {
    pub delta_rho: f64,
    pub delta_i: f64,
    pub delta_v: f64,
    pub delta_w: f64,
    /// δ_W = δ_V^α.
    pub alpha: f64,
    pub regime: Regime,
    pub threshold: f64,
}

impl ScalingRegime {
    /// δ_V/δ_W, reported but not asserted.
    pub fn velocity_ratio(&self) -> f64 {
        self.delta_v / self.delta_w
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, ScalingError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ScalingError::NonPositive { name, value })
    }
}

/// Characteristic scales in SI units; ρ₀ and i₀ are optional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicScales {
    pub e0: f64,
    pub b0: f64,
    pub length: f64,
    pub time: f64,
    #[serde(default)]
    pub rho0: Option<f64>,
    #[serde(default)]
    pub i0: Option<f64>,
}

/// δ_V = l/(τ c₀), δ_W = E₀/(B₀ c₀), δ_ρ = ρ₀ l/(ε₀ E₀), δ_i = i₀ l μ₀/B₀, and α = ln δ_W / ln δ_V.
pub fn compute_deltas(s: &CharacteristicScales) -> Result<(f64, f64, f64, f64, f64), ScalingError> {
    let e0 = positive("E0", s.e0)?;
    let b0 = positive("B0", s.b0)?;
    let l = positive("length", s.length)?;
    let tau = positive("time", s.time)?;
    let delta_v = l / (tau * SPEED_OF_LIGHT);
    let delta_w = e0 / (b0 * SPEED_OF_LIGHT);
    let delta_rho = match s.rho0 {
        Some(r) => positive("rho0", r)? * l / (VACUUM_PERMITTIVITY * e0),
        None => 1.0,
    };
    let delta_i = match s.i0 {
        Some(i) => positive("i0", i)? * l * vacuum_permeability() / b0,
        None => 1.0,
    };
    let alpha = if delta_v == 1.0 { 0.0 } else { delta_w.ln() / delta_v.ln() };
    Ok((delta_rho, delta_i, delta_v, delta_w, alpha))
}

pub fn classify_limit(delta_v: f64, alpha: f64, threshold: f64) -> Result<Regime, ScalingError> {
    positive("delta_v", delta_v)?;
    positive("threshold", threshold)?;
    if !(alpha >= 0.0) {
        return Err(ScalingError::NonPositive { name: "alpha", value: alpha });
    }
    if alpha > 1.0 {
        return Err(ScalingError::UnsupportedExponent(alpha));
    }
    Ok(if delta_v > threshold {
        Regime::Relativistic
    } else if alpha == 1.0 {
        Regime::MagneticallyCoupled
    } else {
        Regime::Electrostatic
    })
}

/// Deltas plus classification. `alpha` overrides the exponent inferred from δ_W = δ_V^α.
pub fn scaling_regime(
    s: &CharacteristicScales,
    alpha: Option<f64>,
    threshold: f64,
) -> Result<ScalingRegime, ScalingError> {
    let (delta_rho, delta_i, delta_v, delta_w, inferred) = compute_deltas(s)?;
    let alpha = alpha.unwrap_or(inferred);
    let regime = classify_limit(delta_v, alpha, threshold)?;
    Ok(ScalingRegime {
        delta_rho,
        delta_i,
        delta_v,
        delta_w,
        alpha,
        regime,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scales(e0: f64, b0: f64, l: f64, t: f64) -> CharacteristicScales {
        CharacteristicScales {
            e0,
            b0,
            length: l,
            time: t,
            rho0: None,
            i0: None,
        }
    }

    #[test]
    fn deltas() {
        let (_, _, dv, dw, _) = compute_deltas(&scales(SPEED_OF_LIGHT, 1.0, SPEED_OF_LIGHT, 1.0)).unwrap();
        assert_relative_eq!(dv, 1.0);
        assert_relative_eq!(dw, 1.0);
        let (dr, di, dv, _, _) = compute_deltas(&scales(1.0, 1.0, 1.0, 1.0)).unwrap();
        assert_relative_eq!(dv, 3.3356409519815204e-9, max_relative = 1e-12);
        assert_eq!((dr, di), (1.0, 1.0));
        let mut s = scales(2.0, 1.0, 0.5, 1.0);
        s.rho0 = Some(VACUUM_PERMITTIVITY * 2.0 / 0.5);
        assert_relative_eq!(compute_deltas(&s).unwrap().0, 1.0, max_relative = 1e-14);
        assert!(compute_deltas(&scales(0.0, 1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn classification() {
        assert_eq!(classify_limit(1e-8, 0.0, DEFAULT_THRESHOLD).unwrap(), Regime::Electrostatic);
        assert_eq!(classify_limit(1e-8, 0.5, DEFAULT_THRESHOLD).unwrap(), Regime::Electrostatic);
        assert_eq!(classify_limit(1e-8, 1.0, DEFAULT_THRESHOLD).unwrap(), Regime::MagneticallyCoupled);
        assert_eq!(classify_limit(0.5, 0.0, DEFAULT_THRESHOLD).unwrap(), Regime::Relativistic);
        assert!(matches!(
            classify_limit(1e-8, 1.5, DEFAULT_THRESHOLD),
            Err(ScalingError::UnsupportedExponent(_))
        ));
    }
}
