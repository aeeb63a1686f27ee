//! Inverse-temperature estimation and its variance bounds.
//!
//! The canonical energy law is an exponential family in θ, so the maximum
//! likelihood estimate is the unique root of `mean_energy(θ) = sample mean`
//! and the Fisher information per draw is the energy variance. This module
//! provides the estimator, two independent routes to the Fisher information,
//! replica studies that measure how tightly the estimator sits on the
//! Cramér–Rao floor, and the Gibbs/Boltzmann and kinetic-energy temperature
//! estimators for finite systems.
//!
//! Everything here works in θ units (inverse energy). The dimensionless
//! quantities `cr_ratio` and `uncertainty_product` are unchanged by the
//! β = kθ conversion, so no [`Units`](crate::units::Units) value is needed
//! except where a temperature is actually returned.

use rayon::prelude::*;
use serde::Serialize;

use crate::ensembles::{EnergySample, EnsembleModel, IsingSamplerOptions};
use crate::error::{Error, Result};
use crate::numeric;
use crate::stats;
use crate::units::{Theta, Units};

/// Outcome of a replica study of the maximum-likelihood θ estimator.
///
/// `cr_ratio = estimator_variance · sample_size · fisher_info` measures the
/// estimator variance against the Cramér–Rao floor `1/(M·I)`; an efficient
/// estimator gives 1. `uncertainty_product` is the dimensionless
/// `ΔE · Δβ̂ / k` with the estimator spread normalized to a single draw
/// (`Δβ̂ = k·√(M·Var θ̂)`), so it equals `√cr_ratio`.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorReport {
    pub theta_true: f64,
    pub theta_hat: f64,
    pub bias: f64,
    pub sample_size: usize,
    pub replica_count: usize,
    /// Replicas whose sample mean fell outside the attainable mean-energy
    /// range; excluded from the variance statistics.
    pub saturated_replicas: usize,
    pub estimator_variance: f64,
    pub fisher_info: f64,
    pub cr_ratio: f64,
    pub uncertainty_product: f64,
    /// 3σ bootstrap allowance on `cr_ratio`.
    pub cr_allowance: f64,
    /// 3σ bootstrap allowance on `uncertainty_product`.
    pub product_allowance: f64,
}

/// Fisher information per energy draw, closed form: `I(θ) = Var(E)`.
pub fn fisher_information(model: &EnsembleModel, theta: Theta) -> Result<f64> {
    model.energy_variance(theta)
}

/// Fisher information by direct quadrature/summation of the squared score,
/// `I(θ) = ∫ P(E|θ) (∂_θ ln P)² dE`, with the score taken by central finite
/// differences of the log pdf.
///
/// Deliberately avoids the moment formulas so it can serve as an independent
/// cross-check of [`fisher_information`]. Requires θ strictly inside the
/// valid domain (the finite-difference stencil straddles θ). For the Ising
/// family the level sum is exhaustive, so the chain length is capped at 24.
pub fn fisher_information_quadrature(model: &EnsembleModel, theta: Theta) -> Result<f64> {
    model.validate()?;
    model.check_theta(theta)?;
    let t = theta.value();
    if t <= 0.0 {
        return Err(Error::Domain(
            "score quadrature differentiates across θ and needs θ > 0".into(),
        ));
    }
    let h = (1e-5 * t.max(1.0)).min(t / 2.0);
    let score = |e: f64| -> Result<f64> {
        let up = model.canonical_log_pdf(e, Theta(t + h))?;
        let down = model.canonical_log_pdf(e, Theta(t - h))?;
        Ok((up - down) / (2.0 * h))
    };

    if model.is_discrete() {
        let levels = model_levels(model)?;
        let mut info = 0.0;
        for e in levels {
            let p = model.canonical_log_pdf(e, theta)?.exp();
            info += p * score(e)?.powi(2);
        }
        return Ok(info);
    }

    // Integration window from the closed-form moments (used only to place the
    // bounds; the integrand never touches the moment formulas). The lower
    // edge stays strictly positive: the pdf is defined on the open support.
    let mean = model.mean_energy(theta)?;
    let sd = model.energy_variance(theta)?.sqrt();
    let lo = (mean - 12.0 * sd).max(mean * 1e-12);
    let hi = mean + 20.0 * sd;
    let tol = 1e-7 * model.energy_variance(theta)?;
    numeric::integrate(
        |e| {
            let p = model.canonical_log_pdf(e, theta).map(f64::exp).unwrap_or(0.0);
            let s = score(e).unwrap_or(0.0);
            p * s * s
        },
        lo,
        hi,
        tol,
    )
}

fn model_levels(model: &EnsembleModel) -> Result<Vec<f64>> {
    match *model {
        EnsembleModel::TwoLevel { n, gap } => {
            Ok((0..=n).map(|m| gap * f64::from(m)).collect())
        }
        EnsembleModel::IsingChain { n, coupling, field } => Ok(
            crate::ensembles::ising::energy_levels(n, coupling, field)?
                .into_iter()
                .map(|(e, _)| e)
                .collect(),
        ),
        _ => Err(Error::Domain("level enumeration needs a discrete spectrum".into())),
    }
}

/// Sample-based Fisher information: the unbiased variance of the score
/// `∂_θ ln P(E_i|θ) = ⟨E⟩_θ − E_i` evaluated at the sample's own θ.
pub fn empirical_fisher(sample: &EnergySample) -> Result<f64> {
    if sample.values.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: sample.values.len(),
            what: "energy draws for the score variance".into(),
        });
    }
    let mean_e = sample.model.mean_energy(sample.theta)?;
    let scores: Vec<f64> = sample.values.iter().map(|&e| mean_e - e).collect();
    stats::variance(&scores)
}

/// Maximum-likelihood θ from a batch of energy draws.
pub fn mle_theta(sample: &EnergySample) -> Result<Theta> {
    if sample.values.is_empty() {
        return Err(Error::InsufficientData {
            needed: 1,
            got: 0,
            what: "energy draws for a likelihood fit".into(),
        });
    }
    mle_theta_from_mean(&sample.model, stats::mean(&sample.values))
}

/// Maximum-likelihood θ given the sample mean energy.
///
/// Solves `mean_energy(model, θ) = mean_e`; the left side is strictly
/// decreasing in θ, so the root is unique. Solved by safeguarded Newton
/// within an expanding bracket to relative tolerance `1e-10`.
///
/// Returns [`Error::Saturated`] when `mean_e` falls outside the open range of
/// attainable mean energies (for example a bounded-spectrum sample sitting
/// entirely in the ground state, whose fit would be θ = ∞).
pub fn mle_theta_from_mean(model: &EnsembleModel, mean_e: f64) -> Result<Theta> {
    model.validate()?;
    if !mean_e.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sample mean must be finite, got {mean_e}"
        )));
    }
    let (inf, sup) = model.mean_energy_domain()?;
    if mean_e <= inf {
        return Err(Error::Saturated(format!(
            "sample mean {mean_e} is at or below the coldest attainable mean energy {inf}; \
             the fit diverges to θ = +∞"
        )));
    }
    if mean_e >= sup {
        return Err(Error::Saturated(format!(
            "sample mean {mean_e} is at or above the hottest attainable mean energy {sup} \
             (θ → 0 limit); no admissible θ matches it"
        )));
    }

    // Where the model's moments stop being evaluable (very stiff Ising
    // couplings), treat the mean as having reached its cold limit; the
    // bracket then keeps shrinking toward the true root instead of aborting.
    let f = |t: f64| model.mean_energy(Theta(t)).unwrap_or(inf);
    let df = |t: f64| model.energy_variance(Theta(t)).map(|v| -v).unwrap_or(0.0);
    let scale = mean_e.abs().max(sup.abs().min(f64::MAX)).max(1e-300);
    let guess = match model.gamma_shape() {
        Some(a) => a / mean_e,
        None => 1.0 / scale,
    };
    let root = numeric::solve_decreasing(f, df, mean_e, guess, 0.0, 1e-10)?;
    Ok(Theta(root))
}

/// Runs `replica_count` independent replicas of `sample_size` draws each,
/// fits θ per replica, and reports the estimator spread against the
/// Cramér–Rao floor. Replicas are parallelized over derived random streams;
/// the report is bit-reproducible for a fixed seed.
pub fn estimator_study(
    model: &EnsembleModel,
    theta: Theta,
    sample_size: usize,
    replica_count: usize,
    seed: u64,
) -> Result<EstimatorReport> {
    estimator_study_with(
        model,
        theta,
        sample_size,
        replica_count,
        seed,
        &IsingSamplerOptions::default(),
    )
}

/// [`estimator_study`] with explicit Metropolis controls for the Ising family.
pub fn estimator_study_with(
    model: &EnsembleModel,
    theta: Theta,
    sample_size: usize,
    replica_count: usize,
    seed: u64,
    ising_opts: &IsingSamplerOptions,
) -> Result<EstimatorReport> {
    model.validate()?;
    model.check_theta(theta)?;
    if sample_size < 1 {
        return Err(Error::InvalidParameter("sample_size must be at least 1".into()));
    }
    if replica_count < 2 {
        return Err(Error::InvalidParameter(
            "replica_count must be at least 2 to estimate a variance".into(),
        ));
    }

    let fits: Vec<Option<f64>> = (0..replica_count as u64)
        .into_par_iter()
        .map(|replica| -> Result<Option<f64>> {
            let sample =
                model.sample_energies_with(theta, sample_size, seed, replica, ising_opts)?;
            match mle_theta(&sample) {
                Ok(t) => Ok(Some(t.value())),
                Err(Error::Saturated(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let theta_hats: Vec<f64> = fits.iter().flatten().copied().collect();
    let saturated = replica_count - theta_hats.len();
    if theta_hats.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: theta_hats.len(),
            what: "non-saturated replicas".into(),
        });
    }

    let m = sample_size as f64;
    let theta_hat = stats::mean(&theta_hats);
    let estimator_variance = stats::variance(&theta_hats)?;
    let fisher_info = fisher_information(model, theta)?;
    let delta_e = fisher_info.sqrt();
    let cr_ratio = estimator_variance * m * fisher_info;
    let uncertainty_product = delta_e * (m * estimator_variance).sqrt();

    let var_sigma = stats::bootstrap_sigma(&theta_hats, 400, seed, "cr-ratio-band", |xs| {
        stats::variance(xs).unwrap_or(0.0)
    })?;
    let sd_sigma = stats::bootstrap_sigma(&theta_hats, 400, seed, "product-band", |xs| {
        stats::variance(xs).map(f64::sqrt).unwrap_or(0.0)
    })?;

    Ok(EstimatorReport {
        theta_true: theta.value(),
        theta_hat,
        bias: theta_hat - theta.value(),
        sample_size,
        replica_count,
        saturated_replicas: saturated,
        estimator_variance,
        fisher_info,
        cr_ratio,
        uncertainty_product,
        cr_allowance: 3.0 * var_sigma * m * fisher_info,
        product_allowance: 3.0 * delta_e * m.sqrt() * sd_sigma,
    })
}

/// Boltzmann and Gibbs temperatures of a continuous model at energy `E`.
///
/// `1/T_B = k·∂_E ln σ(E)` (surface/density-of-states definition) and
/// `1/T_G = k·∂_E ln Ω(E)` with `Ω(E) = ∫₀^E σ` (volume definition). For the
/// power-law densities of states used here, `T_B = E/(k(a−1))` and
/// `T_G = E/(k·a)`; the two disagree by a factor `a/(a−1)` that closes as the
/// system grows.
pub fn gibbs_boltzmann_temperatures(
    model: &EnsembleModel,
    energy: f64,
    units: &Units,
) -> Result<(f64, f64)> {
    model.validate()?;
    units.validate()?;
    let Some(a) = model.gamma_shape() else {
        return Err(Error::Domain(
            "Gibbs/Boltzmann temperatures are defined here for continuous spectra only".into(),
        ));
    };
    if !(energy > 0.0) {
        return Err(Error::Domain(format!(
            "energy must be interior to the support (E > 0), got {energy}"
        )));
    }
    if a <= 1.0 {
        return Err(Error::Domain(format!(
            "Boltzmann temperature is undefined for a non-increasing density of states \
             (shape a = {a} ≤ 1)"
        )));
    }
    let t_boltzmann = energy / (units.k * (a - 1.0));
    let t_gibbs = energy / (units.k * a);
    Ok((t_boltzmann, t_gibbs))
}

/// Temperature from per-particle kinetic energies by equipartition:
/// `T̂ = 2·mean(K)/(d·k)`.
///
/// The spread of `T̂` across replicas is proportional to the kinetic-energy
/// fluctuation by construction, which is what makes it usable as a
/// temperature-fluctuation probe.
pub fn kinetic_estimator(kinetic: &[f64], d: u32, units: &Units) -> Result<f64> {
    units.validate()?;
    if kinetic.is_empty() {
        return Err(Error::InsufficientData {
            needed: 1,
            got: 0,
            what: "kinetic energies".into(),
        });
    }
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if let Some(bad) = kinetic.iter().find(|k| !k.is_finite() || **k < 0.0) {
        return Err(Error::Domain(format!(
            "kinetic energies must be finite and nonnegative, got {bad}"
        )));
    }
    Ok(2.0 * stats::mean(kinetic) / (f64::from(d) * units.k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use rand_distr::{Distribution, Gamma};

    #[test]
    fn fisher_equals_known_variances() {
        let two = EnsembleModel::TwoLevel { n: 1, gap: 1.0 };
        assert!((fisher_information(&two, Theta(0.0)).unwrap() - 0.25).abs() < 1e-12);
        let gas = EnsembleModel::IdealGas { n: 10, d: 3 };
        assert!((fisher_information(&gas, Theta(1.0)).unwrap() - 15.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_route_agrees_with_closed_form() {
        for (model, theta) in [
            (EnsembleModel::HarmonicOscillators { n: 2 }, 0.7),
            (EnsembleModel::IdealGas { n: 1, d: 3 }, 2.0),
            (EnsembleModel::TwoLevel { n: 5, gap: 1.0 }, 1.0),
            (EnsembleModel::IsingChain { n: 6, coupling: 1.0, field: 0.3 }, 0.5),
        ] {
            let exact = fisher_information(&model, Theta(theta)).unwrap();
            let quad = fisher_information_quadrature(&model, Theta(theta)).unwrap();
            assert!(
                (quad - exact).abs() <= 1e-4 * exact,
                "{model:?} θ={theta}: quadrature {quad} vs closed form {exact}"
            );
        }
    }

    #[test]
    fn empirical_fisher_converges_to_analytic() {
        let model = EnsembleModel::TwoLevel { n: 5, gap: 1.0 };
        let theta = Theta(1.0);
        let sample = model.sample_energies(theta, 10_000, 11, 0).unwrap();
        let emp = empirical_fisher(&sample).unwrap();
        let exact = fisher_information(&model, theta).unwrap();
        assert!((emp - exact).abs() / exact < 0.05, "empirical {emp} vs {exact}");
    }

    #[test]
    fn degenerate_sample_has_zero_score_variance() {
        let sample = EnergySample {
            values: vec![1.0; 50],
            model: EnsembleModel::TwoLevel { n: 2, gap: 0.5 },
            theta: Theta(0.8),
            seed: 0,
            replica_id: 0,
        };
        assert!(empirical_fisher(&sample).unwrap().abs() < 1e-20);
    }

    #[test]
    fn score_mean_vanishes_at_the_true_theta() {
        let model = EnsembleModel::IdealGas { n: 2, d: 3 };
        let theta = Theta(0.9);
        let sample = model.sample_energies(theta, 100_000, 12, 0).unwrap();
        let mean_e = model.mean_energy(theta).unwrap();
        let score_mean = mean_e - stats::mean(&sample.values);
        let se = (model.energy_variance(theta).unwrap() / 1e5).sqrt();
        assert!(score_mean.abs() < 4.0 * se, "score mean {score_mean}, se {se}");
    }

    #[test]
    fn mle_matches_closed_forms() {
        let gas = EnsembleModel::IdealGas { n: 1, d: 3 };
        let fit = mle_theta_from_mean(&gas, 1.5).unwrap().value();
        assert!((fit - 1.0).abs() < 1e-9, "fit {fit}");

        let osc = EnsembleModel::HarmonicOscillators { n: 4 };
        let fit = mle_theta_from_mean(&osc, 2.0).unwrap().value();
        assert!((fit - 2.0).abs() < 1e-9, "fit {fit}");
    }

    #[test]
    fn mle_inverts_ising_mean_energy() {
        let model = EnsembleModel::IsingChain { n: 4, coupling: 1.0, field: 0.2 };
        let target_theta = 0.7;
        let mean = model.mean_energy(Theta(target_theta)).unwrap();
        let fit = mle_theta_from_mean(&model, mean).unwrap().value();
        assert!((fit - target_theta).abs() < 1e-8, "fit {fit}");
    }

    #[test]
    fn mle_reports_saturation_at_support_edges() {
        let model = EnsembleModel::TwoLevel { n: 1, gap: 1.0 };
        let all_excited = EnergySample {
            values: vec![1.0; 10],
            model: model.clone(),
            theta: Theta(1.0),
            seed: 0,
            replica_id: 0,
        };
        assert!(matches!(mle_theta(&all_excited), Err(Error::Saturated(_))));
        let all_ground = EnergySample {
            values: vec![0.0; 10],
            model,
            theta: Theta(1.0),
            seed: 0,
            replica_id: 0,
        };
        assert!(matches!(mle_theta(&all_ground), Err(Error::Saturated(_))));
    }

    #[test]
    fn rescaling_energies_rescales_the_fit() {
        let lambda = 3.7;
        let gas = EnsembleModel::IdealGas { n: 3, d: 2 };
        let base = mle_theta_from_mean(&gas, 4.1).unwrap().value();
        let scaled = mle_theta_from_mean(&gas, 4.1 * lambda).unwrap().value();
        assert!((scaled - base / lambda).abs() < 1e-9 * base);

        let two = EnsembleModel::TwoLevel { n: 6, gap: 1.0 };
        let two_scaled = EnsembleModel::TwoLevel { n: 6, gap: lambda };
        let base = mle_theta_from_mean(&two, 2.3).unwrap().value();
        let scaled = mle_theta_from_mean(&two_scaled, 2.3 * lambda).unwrap().value();
        assert!((scaled - base / lambda).abs() < 1e-8 * base);
    }

    #[test]
    fn study_sits_on_the_cramer_rao_floor() {
        let model = EnsembleModel::IdealGas { n: 10, d: 3 };
        let report = estimator_study(&model, Theta(1.0), 500, 400, 31).unwrap();
        assert!(
            report.cr_ratio > 0.8 && report.cr_ratio < 1.25,
            "cr_ratio {}",
            report.cr_ratio
        );
        assert!(
            (report.uncertainty_product - report.cr_ratio.sqrt()).abs() < 1e-12,
            "product must equal sqrt of the ratio by construction"
        );
        assert!(report.bias.abs() < 0.05, "bias {}", report.bias);
        assert_eq!(report.saturated_replicas, 0);
        assert!(report.cr_allowance > 0.0 && report.cr_allowance < 0.5);
    }

    #[test]
    fn study_is_reproducible() {
        let model = EnsembleModel::TwoLevel { n: 8, gap: 1.0 };
        let a = estimator_study(&model, Theta(0.5), 200, 60, 7).unwrap();
        let b = estimator_study(&model, Theta(0.5), 200, 60, 7).unwrap();
        assert_eq!(a.estimator_variance.to_bits(), b.estimator_variance.to_bits());
        assert_eq!(a.theta_hat.to_bits(), b.theta_hat.to_bits());
    }

    #[test]
    fn single_measurement_product_stays_above_one() {
        // M = 1: the spread of the fit across replicas is the whole estimate.
        // Oracle: enumerate the binomial outcomes exactly, excluding the
        // saturated endpoints, and compute the same product from the pmf.
        let n = 50u32;
        let model = EnsembleModel::TwoLevel { n, gap: 1.0 };
        let theta = Theta(1.0);

        let p = 1.0 / (1.0 + 1.0_f64.exp());
        let mut mass = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for m in 1..n {
            let ln_choose = statrs::function::gamma::ln_gamma(f64::from(n) + 1.0)
                - statrs::function::gamma::ln_gamma(f64::from(m) + 1.0)
                - statrs::function::gamma::ln_gamma(f64::from(n - m) + 1.0);
            let w = (ln_choose
                + f64::from(m) * p.ln()
                + f64::from(n - m) * (1.0 - p).ln())
            .exp();
            let fit = (f64::from(n - m) / f64::from(m)).ln();
            mass += w;
            m1 += w * fit;
            m2 += w * fit * fit;
        }
        let var_fit = m2 / mass - (m1 / mass).powi(2);
        let oracle_product =
            (var_fit * fisher_information(&model, theta).unwrap()).sqrt();
        assert!(oracle_product >= 1.0, "oracle product {oracle_product}");

        let report = estimator_study(&model, theta, 1, 30_000, 41).unwrap();
        assert!(
            report.uncertainty_product >= 1.0,
            "sampled product {}",
            report.uncertainty_product
        );
        assert!(
            (report.uncertainty_product - oracle_product).abs() < 0.05 * oracle_product,
            "sampled {} vs oracle {}",
            report.uncertainty_product,
            oracle_product
        );
    }

    #[test]
    fn gibbs_boltzmann_closed_form_and_quadrature() {
        let units = Units::default();
        let model = EnsembleModel::IdealGas { n: 2, d: 3 };
        let (tb, tg) = gibbs_boltzmann_temperatures(&model, 4.0, &units).unwrap();
        assert!((tb / tg - 1.5).abs() < 1e-12);
        assert!((tb - 2.0).abs() < 1e-12);

        // Numeric route: Ω(E) = ∫₀^E σ by quadrature, 1/T_G = (ln Ω)′ by
        // central differences of the quadrature values.
        let sigma = |e: f64| model.log_density_of_states(e).unwrap().exp();
        let omega = |e: f64| numeric::integrate(sigma, 1e-12, e, 1e-12).unwrap();
        let h = 1e-5;
        let inv_tg = (omega(4.0 + h).ln() - omega(4.0 - h).ln()) / (2.0 * h);
        assert!((1.0 / tg - inv_tg).abs() < 1e-6, "numeric 1/T_G {inv_tg}");
    }

    #[test]
    fn gibbs_boltzmann_rejects_flat_densities() {
        let units = Units::default();
        let borderline = EnsembleModel::IdealGas { n: 1, d: 2 };
        assert!(gibbs_boltzmann_temperatures(&borderline, 1.0, &units).is_err());
        let discrete = EnsembleModel::TwoLevel { n: 3, gap: 1.0 };
        assert!(gibbs_boltzmann_temperatures(&discrete, 1.0, &units).is_err());
    }

    #[test]
    fn kinetic_estimator_definition_and_sampling() {
        let units = Units::default();
        assert!((kinetic_estimator(&[1.5], 3, &units).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(kinetic_estimator(&[0.0], 3, &units).unwrap(), 0.0);
        assert!(kinetic_estimator(&[], 3, &units).is_err());

        // Per-particle kinetic energy in d dimensions at temperature T is
        // Gamma(d/2, scale kT); at T = 2 the estimator must land on 2.
        let t_true = 2.0;
        let maxwell = Gamma::new(1.5, t_true).unwrap();
        let mut rng = derive_stream(5, "kinetic-test", 0);
        let ks: Vec<f64> = (0..10_000).map(|_| maxwell.sample(&mut rng)).collect();
        let t_hat = kinetic_estimator(&ks, 3, &units).unwrap();
        let sigma = 2.0 * (1.5_f64.sqrt() * t_true) / (3.0 * 100.0);
        assert!((t_hat - t_true).abs() < 4.0 * sigma, "T̂ = {t_hat}");
    }
}
