//! Relativistic kinematics of a single massive particle and its phase wave.
//!
//! Velocity here is the particle's translational speed, not to be confused
//! with the thermodynamic β = 1/T used elsewhere in this crate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::units::Units;

/// A massive particle in uniform motion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Kinematics {
    pub units: Units,
    /// Rest mass m₀ > 0.
    pub m0: f64,
    /// Velocity, |v| < c. One spatial dimension suffices for every scalar
    /// relation here; see [`guidance_velocity`] for the vector form.
    pub v: f64,
}

impl Kinematics {
    pub fn new(units: Units, m0: f64, v: f64) -> Result<Self> {
        units.validate()?;
        if !(m0 > 0.0) || !m0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rest mass must be positive, got {m0}"
            )));
        }
        if !v.is_finite() || v.abs() >= units.c {
            return Err(Error::InvalidParameter(format!(
                "velocity must satisfy |v| < c, got v = {v} with c = {}",
                units.c
            )));
        }
        Ok(Kinematics { units, m0, v })
    }

    /// Lorentz factor γ = 1/√(1 − (v/c)²) ≥ 1.
    pub fn gamma(&self) -> f64 {
        let b = self.v / self.units.c;
        1.0 / (1.0 - b * b).sqrt()
    }

    /// Rest-frame internal frequency ν₀ = m₀c²/h.
    pub fn rest_frequency(&self) -> f64 {
        self.m0 * self.units.c * self.units.c / self.units.h
    }

    /// Internal clock frequency seen from the lab frame: ν₀√(1 − (v/c)²).
    /// Moving clocks run slow.
    pub fn clock_frequency(&self) -> f64 {
        self.rest_frequency() / self.gamma()
    }

    /// Frequency of the associated phase wave in the lab frame: ν₀·γ.
    /// The wave speeds up exactly as much as the clock slows down.
    pub fn wave_frequency(&self) -> f64 {
        self.rest_frequency() * self.gamma()
    }

    /// Phase-wave velocity c²/v. Signed like `v`, so the wave propagates
    /// along the particle's motion at a superluminal |c²/v| > c.
    pub fn phase_velocity(&self) -> Result<f64> {
        if self.v == 0.0 {
            return Err(Error::Domain(
                "phase velocity is undefined at rest (c²/v diverges)".into(),
            ));
        }
        Ok(self.units.c * self.units.c / self.v)
    }

    /// Relativistic momentum p = γm₀v.
    pub fn momentum(&self) -> f64 {
        self.gamma() * self.m0 * self.v
    }

    /// Total energy E = γm₀c².
    pub fn energy(&self) -> f64 {
        self.gamma() * self.m0 * self.units.c * self.units.c
    }

    /// Wavelength of the phase wave, computed as phase velocity over wave
    /// frequency. Agrees with h/p to 10⁻¹² relative, the two routes being
    /// algebraically equal.
    pub fn de_broglie_wavelength(&self) -> Result<f64> {
        Ok(self.phase_velocity()?.abs() / self.wave_frequency())
    }
}

/// Particle velocity recovered from a phase field by V = −c²·∇φ/∂ₜφ.
///
/// For a plane wave φ = (Et − p·x)/ħ this returns pc²/E, the particle
/// velocity.
pub fn guidance_velocity(
    phase_gradient: &[f64],
    phase_time_derivative: f64,
    units: &Units,
) -> Result<Vec<f64>> {
    units.validate()?;
    if phase_gradient.is_empty() || phase_gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidParameter(
            "phase gradient must be a nonempty finite vector".into(),
        ));
    }
    if phase_time_derivative == 0.0 || !phase_time_derivative.is_finite() {
        return Err(Error::Domain(
            "guidance velocity is undefined where the phase is stationary in time".into(),
        ));
    }
    let c2 = units.c * units.c;
    Ok(phase_gradient
        .iter()
        .map(|g| -c2 * g / phase_time_derivative)
        .collect())
}
