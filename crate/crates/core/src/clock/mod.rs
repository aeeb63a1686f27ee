//! The internal clock of a massive particle and the time–energy chain.
//!
//! [`kinematics`] carries the relativistic single-particle relations: the
//! rest frequency ν₀ = m₀c²/h, the slowed clock frequency and the sped-up
//! wave frequency of a moving particle, phase velocity, wavelength, and the
//! guidance rule recovering the particle velocity from a phase field.
//!
//! This root module holds the temperature–clock dictionary, kT = hν_c: an
//! inverse temperature θ is the same datum as a clock period t_c = hθ.
//!
//! [`process`] simulates ensembles of noisy clocks and their accumulated
//! phases, and [`chain`] runs the chain of inequalities that starts from an
//! energy spread and the clock dictionary and ends at ΔE·Δt ≥ h.

pub mod chain;
pub mod kinematics;
pub mod process;

use crate::error::{Error, Result};
use crate::units::{Theta, Units};

pub use chain::{
    chain_verify, ChainConfig, ChainReport, ChainSweepPoint, EnergySpec, InequalityRecord,
};
pub use kinematics::{guidance_velocity, Kinematics};
pub use process::{
    simulate_phases, taylor_remainder_check, time_uncertainty, ClockProcess, FrequencyModel,
    PhaseTrajectoryBatch, TaylorRemainderReport,
};

/// Temperature assigned to a clock of frequency ν_c through kT = hν_c.
pub fn temperature_of_clock(nu_c: f64, units: &Units) -> Result<f64> {
    units.validate()?;
    if !(nu_c > 0.0) || !nu_c.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "clock frequency must be positive, got {nu_c}"
        )));
    }
    Ok(units.h * nu_c / units.k)
}

/// Clock frequency and period of the clock at inverse temperature θ:
/// t_c = hθ, ν_c = 1/t_c.
pub fn clock_from_theta(theta: Theta, units: &Units) -> Result<(f64, f64)> {
    units.validate()?;
    if !(theta.value() > 0.0) || !theta.value().is_finite() {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature must be positive, got {}",
            theta.value()
        )));
    }
    let t_c = units.h * theta.value();
    Ok((1.0 / t_c, t_c))
}

/// Lower bound h/ΔE on the uncertainty of the clock period.
pub fn clock_period_uncertainty_bound(delta_e: f64, units: &Units) -> Result<f64> {
    units.validate()?;
    if !(delta_e > 0.0) || !delta_e.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "energy spread must be positive, got {delta_e}"
        )));
    }
    Ok(units.h / delta_e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::EnsembleModel;

    #[test]
    fn natural_unit_fixed_point() {
        let units = Units::default();
        assert_eq!(temperature_of_clock(1.0, &units).unwrap(), 1.0);
        let (nu_c, t_c) = clock_from_theta(Theta(1.0), &units).unwrap();
        assert_eq!((nu_c, t_c), (1.0, 1.0));
        let (nu_c, t_c) = clock_from_theta(Theta(2.0), &units).unwrap();
        assert_eq!(t_c, 2.0);
        assert_eq!(nu_c, 0.5);
    }

    #[test]
    fn temperature_round_trips_through_theta() {
        let units = Units { k: 1.4e-23, h: 6.6e-34, c: 3.0e8 };
        // An electron-like rest frequency m₀c²/h.
        let nu_c = 9.1e-31 * units.c * units.c / units.h;
        let t = temperature_of_clock(nu_c, &units).unwrap();
        let theta = Theta::from_temperature(t, &units).unwrap();
        let (nu_back, t_c) = clock_from_theta(theta, &units).unwrap();
        assert!((nu_back - nu_c).abs() / nu_c < 1e-14);
        assert!((t_c * nu_c - 1.0).abs() < 1e-14);
        assert!((temperature_of_clock(nu_back, &units).unwrap() - t).abs() / t < 1e-14);
    }

    #[test]
    fn period_bound_is_h_over_delta_e() {
        let units = Units::default();
        assert_eq!(clock_period_uncertainty_bound(2.0, &units).unwrap(), 0.5);

        // ΔE of a 10-particle, 3-d ideal gas at θ = 1 is √15.
        let model = EnsembleModel::IdealGas { n: 10, d: 3 };
        let delta_e = model.energy_variance(Theta(1.0)).unwrap().sqrt();
        let bound = clock_period_uncertainty_bound(delta_e, &units).unwrap();
        assert!((bound - 1.0 / 15.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_inputs_are_rejected() {
        let units = Units::default();
        assert!(temperature_of_clock(0.0, &units).is_err());
        assert!(temperature_of_clock(-1.0, &units).is_err());
        assert!(clock_from_theta(Theta(0.0), &units).is_err());
        assert!(clock_period_uncertainty_bound(0.0, &units).is_err());
    }
}
