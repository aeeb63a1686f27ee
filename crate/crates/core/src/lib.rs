//! Numerical laboratory for energy/temperature uncertainty relations and
//! ensembles of stochastic clocks.
//!
//! The crate is organized around four pillars:
//!
//! * [`ensembles`] — canonical ensemble models (ideal gas, harmonic
//!   oscillators, two-level units, a periodic Ising chain) with exact
//!   partition functions, moments, and seeded samplers.
//! * [`inference`] — inverse-temperature estimation: Fisher information,
//!   maximum-likelihood fits, and replica studies of the estimator-variance
//!   lower bound.
//! * [`fluctuation`] — macrostate fluctuation statistics around equilibrium:
//!   entropy-model sampling, the energy/inverse-temperature covariance
//!   identity, and a pairwise energy-exchange simulator.
//! * [`clock`] — relativistic clock kinematics and phase-diffusion ensembles,
//!   culminating in [`clock::chain_verify`] which measures the chained
//!   inequalities linking energy spread to timing spread.
//!
//! All stochastic routines are driven by explicitly derived random streams
//! (see [`rng`]), so every result is reproducible from a scalar seed and
//! replica index, independent of thread scheduling.
//!
//! Internally, inverse temperature is carried as `θ = 1/(kT)` (units of
//! inverse energy). The conventional `β = 1/T` is obtained as `β = k·θ` and
//! appears only at reporting boundaries.

pub mod clock;
pub mod ensembles;
pub mod error;
pub mod fluctuation;
pub mod inference;
pub mod numeric;
pub mod rng;
pub mod stats;
pub mod units;

pub use clock::{
    ChainConfig, ChainReport, ClockProcess, EnergySpec, FrequencyModel, InequalityRecord,
    Kinematics, PhaseTrajectoryBatch,
};
pub use ensembles::{EnergySample, EnsembleModel};
pub use error::{Error, Result};
pub use fluctuation::{
    EntropyModel, ExchangeConfig, ExchangeReport, FluctuationSample, MacrostateEnvironment,
};
pub use inference::EstimatorReport;
pub use units::{Theta, Units};

/// Crate version, embedded in run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
