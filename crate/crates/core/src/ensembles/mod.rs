//! Canonical ensemble models with exact thermodynamics and seeded samplers.
//!
//! Four model families are provided:
//!
//! | model                 | spectrum            | energy law at fixed θ        |
//! |-----------------------|---------------------|------------------------------|
//! | `IdealGas{n, d}`      | continuous, (0, ∞)  | Gamma(d·n/2, scale 1/θ)      |
//! | `HarmonicOscillators` | continuous, (0, ∞)  | Gamma(n, scale 1/θ)          |
//! | `TwoLevel{n, gap}`    | discrete, m·gap     | gap · Binomial(n, p(θ))      |
//! | `IsingChain{n, J, h}` | discrete, bounded   | Metropolis single-spin flips |
//!
//! Conventions, fixed across the crate:
//!
//! * θ is the natural parameter: canonical weights are `exp(-θE)`.
//! * For the continuous families the density of states is `σ(E) = E^(a-1)`
//!   with `a = d·n/2` (ideal gas) or `a = n` (oscillators). The additive
//!   constant in `ln σ` is fixed to zero, which makes
//!   `ln Z = ln Γ(a) - a·ln θ` and the canonical pdf exactly normalized.
//! * Unbounded spectra require `θ > 0`; bounded (discrete) spectra accept
//!   `θ ≥ 0`, where `θ = 0` is the flat infinite-temperature limit.

pub mod ising;

use rand_distr::{Binomial, Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::derive_stream;
use crate::units::Theta;

pub use ising::SamplerOptions as IsingSamplerOptions;

/// A canonical ensemble model, identified by family and size parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum EnsembleModel {
    /// Classical ideal gas of `n` particles in `d` spatial dimensions.
    IdealGas { n: u32, d: u32 },
    /// `n` independent classical harmonic oscillators.
    HarmonicOscillators { n: u32 },
    /// `n` independent two-level units with level spacing `gap`.
    TwoLevel { n: u32, gap: f64 },
    /// Periodic Ising chain of `n` spins, nearest-neighbour `coupling` and
    /// external `field`.
    IsingChain { n: u32, coupling: f64, field: f64 },
}

/// A batch of energy draws together with everything needed to reproduce it.
#[derive(Debug, Clone, Serialize)]
pub struct EnergySample {
    pub values: Vec<f64>,
    pub model: EnsembleModel,
    pub theta: Theta,
    pub seed: u64,
    pub replica_id: u64,
}

impl EnsembleModel {
    /// Checks the size and coupling parameters.
    pub fn validate(&self) -> Result<()> {
        let n = self.size();
        if n == 0 {
            return Err(Error::InvalidParameter("system size must be at least 1".into()));
        }
        match self {
            EnsembleModel::IdealGas { d, .. } => {
                if *d == 0 {
                    return Err(Error::InvalidParameter("dimension must be at least 1".into()));
                }
            }
            EnsembleModel::HarmonicOscillators { .. } => {}
            EnsembleModel::TwoLevel { gap, .. } => {
                if !gap.is_finite() || *gap <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "level gap must be finite and positive, got {gap}"
                    )));
                }
            }
            EnsembleModel::IsingChain { coupling, field, .. } => {
                if !coupling.is_finite() || !field.is_finite() {
                    return Err(Error::InvalidParameter(
                        "coupling and field must be finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Number of constituents (particles, oscillators, units, spins).
    pub fn size(&self) -> u32 {
        match *self {
            EnsembleModel::IdealGas { n, .. }
            | EnsembleModel::HarmonicOscillators { n }
            | EnsembleModel::TwoLevel { n, .. }
            | EnsembleModel::IsingChain { n, .. } => n,
        }
    }

    /// Short kebab-case family name used in configs and reports.
    pub fn family(&self) -> &'static str {
        match self {
            EnsembleModel::IdealGas { .. } => "ideal-gas",
            EnsembleModel::HarmonicOscillators { .. } => "harmonic",
            EnsembleModel::TwoLevel { .. } => "two-level",
            EnsembleModel::IsingChain { .. } => "ising",
        }
    }

    /// Whether the energy spectrum is a discrete level set.
    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            EnsembleModel::TwoLevel { .. } | EnsembleModel::IsingChain { .. }
        )
    }

    /// Gamma shape parameter `a` of the continuous families (`None` for
    /// discrete spectra): the energy law at fixed θ is Gamma(a, scale 1/θ).
    pub fn gamma_shape(&self) -> Option<f64> {
        match *self {
            EnsembleModel::IdealGas { n, d } => Some(f64::from(d) * f64::from(n) / 2.0),
            EnsembleModel::HarmonicOscillators { n } => Some(f64::from(n)),
            _ => None,
        }
    }

    /// Validates θ against the convergence domain of the partition function:
    /// strictly positive for unbounded spectra, nonnegative for bounded ones.
    pub fn check_theta(&self, theta: Theta) -> Result<()> {
        let t = theta.value();
        if self.is_discrete() {
            if t < 0.0 {
                return Err(Error::Domain(format!(
                    "negative θ = {t} is outside the supported domain for bounded spectra"
                )));
            }
        } else if t <= 0.0 {
            return Err(Error::Divergent(format!(
                "partition function diverges for θ = {t} ≤ 0 on an unbounded spectrum"
            )));
        }
        Ok(())
    }

    /// `ln Z(θ)`.
    pub fn log_partition(&self, theta: Theta) -> Result<f64> {
        self.validate()?;
        self.check_theta(theta)?;
        let t = theta.value();
        Ok(match *self {
            EnsembleModel::IdealGas { .. } | EnsembleModel::HarmonicOscillators { .. } => {
                let a = self.gamma_shape().expect("continuous family");
                ln_gamma(a) - a * t.ln()
            }
            EnsembleModel::TwoLevel { n, gap } => {
                // ln(1 + e^{-θ·gap}) per unit, summed over n units.
                f64::from(n) * (-t * gap).exp().ln_1p()
            }
            EnsembleModel::IsingChain { n, coupling, field } => {
                ising::log_partition(n, coupling, field, t)
            }
        })
    }

    /// `ln σ(E)` for the continuous families (`σ(E) = E^(a-1)`, additive
    /// constant zero). Discrete families expose [`Self::log_degeneracy`]
    /// instead.
    pub fn log_density_of_states(&self, energy: f64) -> Result<f64> {
        self.validate()?;
        let Some(a) = self.gamma_shape() else {
            return Err(Error::Domain(
                "density of states is continuous-only; discrete models expose log_degeneracy".into(),
            ));
        };
        if !(energy > 0.0) {
            return Err(Error::Domain(format!(
                "density of states needs E > 0, got {energy}"
            )));
        }
        Ok((a - 1.0) * energy.ln())
    }

    /// Natural log of the degeneracy count of a discrete energy level.
    ///
    /// Errors when `energy` does not match a level of the spectrum (relative
    /// tolerance `1e-9`) or when called on a continuous model.
    pub fn log_degeneracy(&self, energy: f64) -> Result<f64> {
        self.validate()?;
        match *self {
            EnsembleModel::TwoLevel { n, gap } => {
                let m = level_index(energy, gap, n)?;
                Ok(ln_choose(n, m))
            }
            EnsembleModel::IsingChain { n, coupling, field } => {
                let levels = ising::energy_levels(n, coupling, field)?;
                levels
                    .iter()
                    .find(|(e, _)| (e - energy).abs() <= 1e-9 * (1.0 + energy.abs()))
                    .map(|(_, g)| (*g as f64).ln())
                    .ok_or_else(|| {
                        Error::Domain(format!("E = {energy} is not a level of the spectrum"))
                    })
            }
            _ => Err(Error::Domain(
                "degeneracy counts exist only for discrete spectra".into(),
            )),
        }
    }

    /// `⟨E⟩(θ) = -∂_θ ln Z`.
    pub fn mean_energy(&self, theta: Theta) -> Result<f64> {
        self.validate()?;
        self.check_theta(theta)?;
        let t = theta.value();
        Ok(match *self {
            EnsembleModel::IdealGas { .. } | EnsembleModel::HarmonicOscillators { .. } => {
                self.gamma_shape().expect("continuous family") / t
            }
            EnsembleModel::TwoLevel { n, gap } => f64::from(n) * gap * two_level_p(t, gap),
            EnsembleModel::IsingChain { n, coupling, field } => {
                ising::moments(n, coupling, field, t)?.0
            }
        })
    }

    /// `Var(E)(θ) = ∂²_θ ln Z`.
    pub fn energy_variance(&self, theta: Theta) -> Result<f64> {
        self.validate()?;
        self.check_theta(theta)?;
        let t = theta.value();
        Ok(match *self {
            EnsembleModel::IdealGas { .. } | EnsembleModel::HarmonicOscillators { .. } => {
                self.gamma_shape().expect("continuous family") / (t * t)
            }
            EnsembleModel::TwoLevel { n, gap } => {
                let p = two_level_p(t, gap);
                f64::from(n) * gap * gap * p * (1.0 - p)
            }
            EnsembleModel::IsingChain { n, coupling, field } => {
                ising::moments(n, coupling, field, t)?.1
            }
        })
    }

    /// Log canonical density (continuous) or log probability mass (discrete)
    /// at `energy`. Exactly normalized: it integrates/sums to one.
    pub fn canonical_log_pdf(&self, energy: f64, theta: Theta) -> Result<f64> {
        self.validate()?;
        self.check_theta(theta)?;
        let t = theta.value();
        let ln_z = self.log_partition(theta)?;
        match *self {
            EnsembleModel::IdealGas { .. } | EnsembleModel::HarmonicOscillators { .. } => {
                Ok(self.log_density_of_states(energy)? - t * energy - ln_z)
            }
            EnsembleModel::TwoLevel { .. } | EnsembleModel::IsingChain { .. } => {
                Ok(self.log_degeneracy(energy)? - t * energy - ln_z)
            }
        }
    }

    /// Whether `energy` lies in the support of the canonical distribution.
    pub fn energy_in_support(&self, energy: f64) -> bool {
        if !energy.is_finite() {
            return false;
        }
        match *self {
            EnsembleModel::IdealGas { .. } | EnsembleModel::HarmonicOscillators { .. } => {
                energy > 0.0
            }
            EnsembleModel::TwoLevel { n, gap } => level_index(energy, gap, n).is_ok(),
            EnsembleModel::IsingChain { n, coupling, field } => {
                let bound = f64::from(n) * (coupling.abs() + field.abs());
                energy.abs() <= bound + 1e-9 * (1.0 + bound)
            }
        }
    }

    /// Attainable range of `⟨E⟩` over the valid θ domain, as `(inf, sup)`.
    ///
    /// Used to detect saturated maximum-likelihood fits: a sample mean outside
    /// the open interval cannot be matched by any admissible θ.
    pub fn mean_energy_domain(&self) -> Result<(f64, f64)> {
        self.validate()?;
        match *self {
            EnsembleModel::IdealGas { .. } | EnsembleModel::HarmonicOscillators { .. } => {
                Ok((0.0, f64::INFINITY))
            }
            EnsembleModel::TwoLevel { .. } | EnsembleModel::IsingChain { .. } => {
                let ground = self.ground_energy();
                let flat = self.mean_energy(Theta(0.0))?;
                Ok((ground, flat))
            }
        }
    }

    fn ground_energy(&self) -> f64 {
        match *self {
            EnsembleModel::TwoLevel { .. } => 0.0,
            EnsembleModel::IsingChain { n, coupling, field } => {
                // Minimum over the four spin patterns that can be optimal for a
                // chain: aligned up/down and the two alternating patterns (the
                // latter only matter for antiferromagnetic coupling).
                let nf = f64::from(n);
                let aligned_up = -nf * (coupling + field);
                let aligned_down = -nf * (coupling - field);
                // Odd rings frustrate perfect alternation by one bond and
                // leave a net magnetization of one spin.
                let staggered_bonds = if n % 2 == 0 { nf } else { nf - 2.0 };
                let staggered = staggered_bonds * coupling - field.abs() * f64::from(n % 2);
                aligned_up.min(aligned_down).min(staggered)
            }
            _ => 0.0,
        }
    }

    /// Draws `count` energies using the per-replica derived random stream.
    pub fn sample_energies(
        &self,
        theta: Theta,
        count: usize,
        seed: u64,
        replica_id: u64,
    ) -> Result<EnergySample> {
        self.sample_energies_with(theta, count, seed, replica_id, &IsingSamplerOptions::default())
    }

    /// [`Self::sample_energies`] with explicit Metropolis controls for the
    /// Ising family (ignored by the directly sampled families).
    pub fn sample_energies_with(
        &self,
        theta: Theta,
        count: usize,
        seed: u64,
        replica_id: u64,
        ising_opts: &IsingSamplerOptions,
    ) -> Result<EnergySample> {
        self.validate()?;
        self.check_theta(theta)?;
        if count == 0 {
            return Err(Error::InvalidParameter("sample count must be positive".into()));
        }
        let t = theta.value();
        let values = match *self {
            EnsembleModel::IdealGas { .. } | EnsembleModel::HarmonicOscillators { .. } => {
                let a = self.gamma_shape().expect("continuous family");
                let gamma = Gamma::new(a, 1.0 / t).map_err(|e| {
                    Error::InvalidParameter(format!("gamma sampler rejected shape {a}: {e}"))
                })?;
                let mut rng = derive_stream(seed, "energy-sample", replica_id);
                (0..count).map(|_| gamma.sample(&mut rng)).collect()
            }
            EnsembleModel::TwoLevel { n, gap } => {
                let p = two_level_p(t, gap);
                let binom = Binomial::new(u64::from(n), p).map_err(|e| {
                    Error::InvalidParameter(format!("binomial sampler rejected p = {p}: {e}"))
                })?;
                let mut rng = derive_stream(seed, "energy-sample", replica_id);
                (0..count).map(|_| gap * binom.sample(&mut rng) as f64).collect()
            }
            EnsembleModel::IsingChain { n, coupling, field } => {
                ising::sample_energies(n, coupling, field, t, count, seed, replica_id, ising_opts)?
            }
        };
        Ok(EnergySample {
            values,
            model: self.clone(),
            theta,
            seed,
            replica_id,
        })
    }
}

/// Occupation probability of the upper level: `p = 1/(1 + e^{θ·gap})`.
fn two_level_p(theta: f64, gap: f64) -> f64 {
    1.0 / (1.0 + (theta * gap).exp())
}

/// `ln C(n, m)`.
fn ln_choose(n: u32, m: u32) -> f64 {
    ln_gamma(f64::from(n) + 1.0) - ln_gamma(f64::from(m) + 1.0) - ln_gamma(f64::from(n - m) + 1.0)
}

/// Maps an energy to the two-level excitation count it represents.
fn level_index(energy: f64, gap: f64, n: u32) -> Result<u32> {
    let m = (energy / gap).round();
    if (energy - m * gap).abs() > 1e-9 * gap.max(energy.abs()) || m < 0.0 || m > f64::from(n) {
        return Err(Error::Domain(format!(
            "E = {energy} is not a level m·gap with 0 ≤ m ≤ {n}"
        )));
    }
    Ok(m as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    const TOL: f64 = 1e-12;

    #[test]
    fn ideal_gas_log_partition_closed_form() {
        // a = 3 for two particles in three dimensions: lnZ = lnΓ(3) - 3 lnθ.
        let model = EnsembleModel::IdealGas { n: 2, d: 3 };
        let got = model.log_partition(Theta(2.0)).unwrap();
        let expect = ln_gamma(3.0) - 3.0 * 2.0_f64.ln();
        assert!((got - expect).abs() < TOL);
    }

    #[test]
    fn two_level_infinite_temperature_limit() {
        let model = EnsembleModel::TwoLevel { n: 1, gap: 1.0 };
        let lnz = model.log_partition(Theta(0.0)).unwrap();
        assert!((lnz - std::f64::consts::LN_2).abs() < TOL);
        let var = model.energy_variance(Theta(0.0)).unwrap();
        assert!((var - 0.25).abs() < TOL);
    }

    #[test]
    fn ideal_gas_moments() {
        let model = EnsembleModel::IdealGas { n: 10, d: 3 };
        assert!((model.mean_energy(Theta(1.0)).unwrap() - 15.0).abs() < TOL);
        assert!((model.energy_variance(Theta(1.0)).unwrap() - 15.0).abs() < TOL);
        // d⟨E⟩/dθ = -a/θ² at a = 3/2, θ = 2.
        let single = EnsembleModel::IdealGas { n: 1, d: 3 };
        let h = 1e-6;
        let slope = (single.mean_energy(Theta(2.0 + h)).unwrap()
            - single.mean_energy(Theta(2.0 - h)).unwrap())
            / (2.0 * h);
        assert!((slope + 1.5 / 4.0).abs() < 1e-6);
    }

    #[test]
    fn oscillator_mean_and_density_slope() {
        let model = EnsembleModel::HarmonicOscillators { n: 5 };
        assert!((model.mean_energy(Theta(1.0)).unwrap() - 5.0).abs() < TOL);

        let three = EnsembleModel::HarmonicOscillators { n: 3 };
        let h = 1e-6;
        let slope = (three.log_density_of_states(2.0 + h).unwrap()
            - three.log_density_of_states(2.0 - h).unwrap())
            / (2.0 * h);
        assert!((slope - 1.0).abs() < 1e-9, "slope {slope}");
    }

    #[test]
    fn density_of_states_log_ratio() {
        let model = EnsembleModel::IdealGas { n: 2, d: 3 };
        let diff = model.log_density_of_states(2.0).unwrap() - model.log_density_of_states(1.0).unwrap();
        assert!((diff - 2.0 * 2.0_f64.ln()).abs() < TOL);
    }

    #[test]
    fn two_level_degeneracy_counts() {
        let model = EnsembleModel::TwoLevel { n: 2, gap: 1.0 };
        assert!((model.log_degeneracy(1.0).unwrap() - 2.0_f64.ln()).abs() < TOL);
        assert!((model.log_degeneracy(0.0).unwrap()).abs() < TOL);
        assert!(model.log_degeneracy(0.5).is_err());
    }

    #[test]
    fn theta_domain_is_enforced() {
        let gas = EnsembleModel::IdealGas { n: 1, d: 3 };
        assert!(matches!(gas.log_partition(Theta(0.0)), Err(Error::Divergent(_))));
        assert!(matches!(gas.log_partition(Theta(-1.0)), Err(Error::Divergent(_))));
        let ising = EnsembleModel::IsingChain { n: 4, coupling: 1.0, field: 0.0 };
        assert!(ising.log_partition(Theta(0.0)).is_ok());
        assert!(matches!(ising.log_partition(Theta(-0.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn canonical_pdf_mode_sits_at_closed_form_argmax() {
        // Mode of the Gamma(3, 1/θ) energy law is (a-1)/θ = 2.
        let model = EnsembleModel::IdealGas { n: 2, d: 3 };
        let theta = Theta(1.0);
        let at_mode = model.canonical_log_pdf(2.0, theta).unwrap();
        for e in [1.6, 1.9, 2.1, 2.4] {
            assert!(model.canonical_log_pdf(e, theta).unwrap() < at_mode);
        }
    }

    #[test]
    fn two_level_pmf_sums_to_one() {
        let model = EnsembleModel::TwoLevel { n: 7, gap: 0.9 };
        let theta = Theta(1.3);
        let total: f64 = (0..=7)
            .map(|m| model.canonical_log_pdf(0.9 * f64::from(m), theta).unwrap().exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-12, "total {total}");
    }

    #[test]
    fn ising_pmf_sums_to_one_against_enumerated_levels() {
        // Exercises the transfer-matrix lnZ against the enumerated spectrum.
        let model = EnsembleModel::IsingChain { n: 6, coupling: 1.0, field: 0.3 };
        let theta = Theta(0.7);
        let levels = ising::energy_levels(6, 1.0, 0.3).unwrap();
        let total: f64 = levels
            .iter()
            .map(|(e, _)| model.canonical_log_pdf(*e, theta).unwrap().exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-10, "total {total}");
    }

    #[test]
    fn gamma_sampler_matches_moments() {
        let model = EnsembleModel::IdealGas { n: 4, d: 3 };
        let theta = Theta(0.8);
        let sample = model.sample_energies(theta, 200_000, 21, 0).unwrap();
        let mean = stats::mean(&sample.values);
        let var = stats::variance(&sample.values).unwrap();
        let m = model.mean_energy(theta).unwrap();
        let v = model.energy_variance(theta).unwrap();
        assert!((mean - m).abs() < 4.0 * (v / 2e5).sqrt(), "mean {mean} vs {m}");
        assert!((var - v).abs() / v < 0.05, "var {var} vs {v}");
    }

    #[test]
    fn binomial_sampler_matches_moments() {
        let model = EnsembleModel::TwoLevel { n: 50, gap: 1.0 };
        let theta = Theta(1.0);
        let sample = model.sample_energies(theta, 100_000, 22, 0).unwrap();
        let m = model.mean_energy(theta).unwrap();
        let v = model.energy_variance(theta).unwrap();
        let mean = stats::mean(&sample.values);
        assert!((mean - m).abs() < 4.0 * (v / 1e5).sqrt(), "mean {mean} vs {m}");
    }

    #[test]
    fn samples_live_in_support_and_reproduce() {
        for model in [
            EnsembleModel::IdealGas { n: 3, d: 2 },
            EnsembleModel::TwoLevel { n: 9, gap: 0.5 },
            EnsembleModel::IsingChain { n: 8, coupling: 0.9, field: -0.2 },
        ] {
            let theta = Theta(0.6);
            let a = model.sample_energies(theta, 500, 77, 4).unwrap();
            assert!(a.values.iter().all(|&e| model.energy_in_support(e)), "{model:?}");
            let b = model.sample_energies(theta, 500, 77, 4).unwrap();
            assert_eq!(a.values, b.values, "identical seed must reproduce bit-exactly");
            let c = model.sample_energies(theta, 500, 77, 5).unwrap();
            assert_ne!(a.values, c.values, "replica index must decorrelate");
        }
    }

    #[test]
    fn ising_ground_energy_matches_enumeration() {
        for (n, j, h) in [
            (6, 1.0, 0.4),
            (6, -1.0, 0.0),
            (7, -1.0, 0.0),
            (7, -1.0, 0.3),
            (5, -0.7, 3.0),
            (8, 0.0, 1.1),
        ] {
            let model = EnsembleModel::IsingChain { n, coupling: j, field: h };
            let enumerated = ising::energy_levels(n, j, h)
                .unwrap()
                .first()
                .map(|(e, _)| *e)
                .unwrap();
            let (lo, _) = model.mean_energy_domain().unwrap();
            assert!(
                (lo - enumerated).abs() < 1e-9,
                "n={n} J={j} h={h}: closed form {lo} vs enumerated {enumerated}"
            );
        }
    }

    #[test]
    fn mean_energy_domain_brackets_the_flat_limit() {
        let model = EnsembleModel::TwoLevel { n: 4, gap: 2.0 };
        let (lo, hi) = model.mean_energy_domain().unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 4.0).abs() < TOL); // n·gap/2
    }
}
