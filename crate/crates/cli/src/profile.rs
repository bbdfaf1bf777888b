use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Closed-form or tabulated initial field on the cell centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// base + amplitude·exp(−(x − center)²/(2σ²))
    Gaussian {
        #[serde(default)]
        base: f64,
        amplitude: f64,
        center: f64,
        sigma: f64,
    },
    /// Linear from `left` at x = 0 to `right` at x = length.
    Linear {
        left: f64,
        right: f64,
    },
    /// base + amplitude·sin(2π·periods·x/length + phase)
    Sine {
        #[serde(default)]
        base: f64,
        amplitude: f64,
        periods: f64,
        #[serde(default)]
        phase: f64,
    },
    Table {
        values: Vec<f64>,
    },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    /// Problems with the parameters, if any.
    pub fn check(&self, cells: usize) -> Option<String> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Profile::Constant { value } => (!value.is_finite()).then(|| "constant value is not finite".into()),
            Profile::Gaussian {
                base,
                amplitude,
                center,
                sigma,
            } => {
                if !finite(&[*base, *amplitude, *center]) || !(*sigma > 0.0 && sigma.is_finite()) {
                    Some("gaussian needs finite parameters and sigma > 0".into())
                } else {
                    None
                }
            }
            Profile::Linear { left, right } => (!finite(&[*left, *right])).then(|| "linear ends must be finite".into()),
            Profile::Sine {
                base,
                amplitude,
                periods,
                phase,
            } => (!finite(&[*base, *amplitude, *periods, *phase])).then(|| "sine parameters must be finite".into()),
            Profile::Table { values } => {
                if values.len() != cells {
                    Some(format!("table has {} values for {} cells", values.len(), cells))
                } else if !finite(values) {
                    Some("table values must be finite".into())
                } else {
                    None
                }
            }
        }
    }

    pub fn evaluate(&self, x: &[f64], length: f64) -> Vec<f64> {
        match self {
            Profile::Constant { value } => vec![*value; x.len()],
            Profile::Gaussian {
                base,
                amplitude,
                center,
                sigma,
            } => x
                .iter()
                .map(|xi| base + amplitude * (-(xi - center).powi(2) / (2.0 * sigma * sigma)).exp())
                .collect(),
            Profile::Linear { left, right } => x.iter().map(|xi| left + (right - left) * xi / length).collect(),
            Profile::Sine {
                base,
                amplitude,
                periods,
                phase,
            } => x
                .iter()
                .map(|xi| base + amplitude * (2.0 * PI * periods * xi / length + phase).sin())
                .collect(),
            Profile::Table { values } => values.clone(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Profile::Constant { .. } => true,
            Profile::Gaussian { amplitude, .. } | Profile::Sine { amplitude, .. } => *amplitude == 0.0,
            Profile::Linear { left, right } => left == right,
            Profile::Table { values } => values.windows(2).all(|w| w[0] == w[1]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation() {
        let x = [0.25, 0.75];
        assert_eq!(Profile::constant(2.0).evaluate(&x, 1.0), vec![2.0, 2.0]);
        assert_eq!(Profile::Linear { left: 0.0, right: 4.0 }.evaluate(&x, 1.0), vec![1.0, 3.0]);
        let s = Profile::Sine {
            base: 1.0,
            amplitude: 1.0,
            periods: 1.0,
            phase: 0.0,
        }
        .evaluate(&x, 1.0);
        assert!((s[0] - 2.0).abs() < 1e-15 && s[1].abs() < 1e-15);
        assert!(Profile::Table { values: vec![1.0] }.check(2).is_some());
        assert!(Profile::Gaussian {
            base: 0.0,
            amplitude: 1.0,
            center: 0.5,
            sigma: 0.0
        }
        .check(2)
        .is_some());
    }

    #[test]
    fn parse_tagged() {
        let p: Profile = serde_json::from_str(r#"{"kind":"gaussian","amplitude":0.01,"center":0.5,"sigma":0.05}"#).unwrap();
        assert!(matches!(p, Profile::Gaussian { base, .. } if base == 0.0));
        assert!(serde_json::from_str::<Profile>(r#"{"kind":"constant","value":1,"extra":2}"#).is_err());
    }
}
