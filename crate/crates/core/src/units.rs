//! Unit system and the inverse-temperature parameter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants defining the unit system of a computation.
///
/// Natural units (`k = h = c = 1`) are the default; every constant may be
/// overridden to work in SI or any other consistent system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    /// Boltzmann constant, energy per temperature.
    pub k: f64,
    /// Planck constant, energy times time.
    pub h: f64,
    /// Speed of light.
    pub c: f64,
}

impl Default for Units {
    fn default() -> Self {
        Units { k: 1.0, h: 1.0, c: 1.0 }
    }
}

impl Units {
    /// Validates that every constant is finite and strictly positive.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k", self.k), ("h", self.h), ("c", self.c)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "unit constant {name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Inverse temperature in energy units: `θ = 1/(kT)`.
///
/// This is the exponential-family natural parameter: canonical weights are
/// `exp(-θE)`. The conventional inverse temperature `β = 1/T` relates to it
/// by `β = k·θ` and is derived on demand rather than stored.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Theta(pub f64);

impl Theta {
    /// Constructs from a raw value, rejecting NaN and infinities.
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "inverse temperature must be finite, got {value}"
            )));
        }
        Ok(Theta(value))
    }

    /// The raw value, units of inverse energy.
    pub fn value(&self) -> f64 {
        self.0
    }

    /// Conventional inverse temperature `β = kθ`, units of inverse temperature.
    pub fn beta(&self, units: &Units) -> f64 {
        units.k * self.0
    }

    /// Temperature `T = 1/(kθ)`. Errors on `θ = 0`.
    pub fn temperature(&self, units: &Units) -> Result<f64> {
        if self.0 == 0.0 {
            return Err(Error::Domain("temperature is undefined at θ = 0".into()));
        }
        Ok(1.0 / (units.k * self.0))
    }

    /// Builds `θ` from a temperature.
    pub fn from_temperature(t: f64, units: &Units) -> Result<Self> {
        if !t.is_finite() || t == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "temperature must be finite and nonzero, got {t}"
            )));
        }
        Theta::new(1.0 / (units.k * t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_is_k_times_theta() {
        let units = Units { k: 2.0, h: 1.0, c: 1.0 };
        let theta = Theta::new(0.25).unwrap();
        assert_eq!(theta.beta(&units), 0.5);
    }

    #[test]
    fn temperature_round_trip() {
        let units = Units::default();
        let theta = Theta::new(1.7).unwrap();
        let t = theta.temperature(&units).unwrap();
        let back = Theta::from_temperature(t, &units).unwrap();
        assert!((back.value() - 1.7).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Theta::new(f64::NAN).is_err());
        assert!(Units { k: 0.0, h: 1.0, c: 1.0 }.validate().is_err());
    }
}
