//! The four experiment pipelines behind the `run` verb.
//!
//! Each experiment is prepared in two phases: `prepare` consumes and
//! validates every config key (so `validate` can stop there), `execute`
//! does the computation and emits check records plus optional data files.
//! File contents are returned to the caller; nothing here touches the
//! filesystem.

use std::collections::BTreeMap;

use thermoclock_core::clock::{
    chain_verify, taylor_remainder_check, ChainConfig, ClockProcess, EnergySpec, FrequencyModel,
    Kinematics,
};
use thermoclock_core::ensembles::IsingSamplerOptions;
use thermoclock_core::fluctuation::{
    covariance_identity_check, run_exchange, sample_macrostates, sample_macrostates_grid,
    EntropyModel, ExchangeConfig, MacrostateEnvironment,
};
use thermoclock_core::inference::{
    estimator_study_with, fisher_information, fisher_information_quadrature,
    gibbs_boltzmann_temperatures,
};
use thermoclock_core::{EnsembleModel, Error, Result, Theta, Units};

use crate::config::Config;
use crate::report::{CheckRecord, RunReport};

pub const EXPERIMENTS: [&str; 4] =
    ["tur-inference", "tur-fluctuation", "clock-kinematics", "chain"];

pub struct RunOutput {
    pub report: RunReport,
    /// Relative file name → contents, written under the output directory.
    pub files: Vec<(String, String)>,
    /// Human-readable observations that are not check records.
    pub notes: Vec<String>,
}

pub enum Prepared {
    TurInference {
        model: EnsembleModel,
        theta: Theta,
        sample_size: usize,
        replicas: usize,
        ising: IsingSamplerOptions,
        tol_cr_low: f64,
        tol_cr_high: f64,
        tol_fisher: f64,
    },
    TurFluctuation {
        env: MacrostateEnvironment,
        sample_size: usize,
        grid_sampler: bool,
        exchange: Option<ExchangeConfig>,
    },
    ClockKinematics { units: Units, mass: f64, velocity: f64, tol_identity: f64 },
    Chain {
        config: ChainConfig,
        taylor_check: bool,
        /// Spread the Taylor check draws at: the configured
        /// `energy.rel_spread` if one was given, otherwise the spread
        /// measured from the energy spec.
        requested_spread: Option<f64>,
    },
}

pub struct Experiment {
    pub name: String,
    pub seed: u64,
    pub echo: BTreeMap<String, String>,
    prepared: Prepared,
}

/// Attaches the offending config key to a validation error.
fn field<T>(key: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::InvalidParameter(format!("{key}: {e}")))
}

fn parse_units(cfg: &Config) -> Result<Units> {
    let units = Units {
        k: cfg.f64_or("units.k", 1.0)?,
        h: cfg.f64_or("units.h", 1.0)?,
        c: cfg.f64_or("units.c", 1.0)?,
    };
    field("units", units.validate())?;
    Ok(units)
}

fn parse_model(cfg: &Config) -> Result<EnsembleModel> {
    let family = cfg.require_str("model")?;
    let n = cfg.require_u32("model.n")?;
    let model = match family.as_str() {
        "ideal-gas" => EnsembleModel::IdealGas { n, d: cfg.require_u32("model.d")? },
        "harmonic" => EnsembleModel::HarmonicOscillators { n },
        "two-level" => EnsembleModel::TwoLevel { n, gap: cfg.require_f64("model.gap")? },
        "ising" => EnsembleModel::IsingChain {
            n,
            coupling: cfg.require_f64("model.coupling")?,
            field: cfg.f64_or("model.field", 0.0)?,
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "model must be one of ideal-gas | harmonic | two-level | ising, got {other:?}"
            )))
        }
    };
    field("model", model.validate())?;
    Ok(model)
}

fn parse_entropy(cfg: &Config, theta0: f64) -> Result<EntropyModel> {
    let kind = cfg.require_str("entropy")?;
    match kind.as_str() {
        "gaussian" => Ok(EntropyModel::Gaussian {
            e0: cfg.require_f64("entropy.e0")?,
            sigma_s: cfg.require_f64("entropy.sigma_s")?,
            theta_star: cfg.f64_or("entropy.theta_star", theta0)?,
        }),
        "power-law" => Ok(EntropyModel::PowerLaw { nu: cfg.require_f64("entropy.nu")? }),
        "power-law-volume" => Ok(EntropyModel::PowerLawWithVolume {
            nu: cfg.require_f64("entropy.nu")?,
            n_x: cfg.require_f64("entropy.n_x")?,
        }),
        other => Err(Error::InvalidParameter(format!(
            "entropy must be one of gaussian | power-law | power-law-volume, got {other:?}"
        ))),
    }
}

pub fn prepare(cfg: &Config) -> Result<Experiment> {
    let name = cfg.require_str("experiment")?;
    let seed = cfg.u64_or("seed", 0)?;
    let prepared = match name.as_str() {
        "tur-inference" => prepare_inference(cfg)?,
        "tur-fluctuation" => prepare_fluctuation(cfg)?,
        "clock-kinematics" => prepare_kinematics(cfg)?,
        "chain" => prepare_chain(cfg, seed)?,
        other => {
            return Err(Error::InvalidParameter(format!(
                "experiment must be one of {}, got {other:?}",
                EXPERIMENTS.join(" | ")
            )))
        }
    };
    cfg.reject_unknown(&name)?;
    Ok(Experiment { name, seed, echo: cfg.echo(), prepared })
}

fn prepare_inference(cfg: &Config) -> Result<Prepared> {
    let model = parse_model(cfg)?;
    let theta = field("theta", Theta::new(cfg.require_f64("theta")?))?;
    field("theta", model.check_theta(theta))?;
    let ising = IsingSamplerOptions {
        burn_in_sweeps: cfg.opt_usize("ising.burn_in_sweeps")?,
        thinning_sweeps: cfg.usize_or("ising.thinning_sweeps", 1)?,
        autocorr_threshold: cfg.f64_or("ising.autocorr_threshold", 25.0)?,
    };
    // Units enter only through the temperature-definitions record, but the
    // keys are accepted uniformly across experiments.
    parse_units(cfg)?;
    Ok(Prepared::TurInference {
        model,
        theta,
        sample_size: cfg.usize_or("sample_size", 10_000)?,
        replicas: cfg.usize_or("replicas", 200)?,
        ising,
        tol_cr_low: cfg.f64_or("tol.cr_low", 0.95)?,
        tol_cr_high: cfg.f64_or("tol.cr_high", 1.2)?,
        tol_fisher: cfg.f64_or("tol.fisher", 1e-4)?,
    })
}

fn prepare_fluctuation(cfg: &Config) -> Result<Prepared> {
    let units = parse_units(cfg)?;
    let theta0 = cfg.require_f64("theta")?;
    let entropy = parse_entropy(cfg, theta0)?;
    let forces = if entropy.displacement_count() > 0 {
        vec![cfg.f64_or("force", 1.0)?; entropy.displacement_count()]
    } else {
        Vec::new()
    };
    let theta = field("theta", Theta::new(theta0))?;
    let env = MacrostateEnvironment::new(theta, forces, entropy, units)?;
    let sampler = cfg.str_or("sampler", "direct");
    let grid_sampler = match sampler.as_str() {
        "direct" => false,
        "grid" => true,
        other => {
            return Err(Error::InvalidParameter(format!(
                "sampler must be direct | grid, got {other:?}"
            )))
        }
    };
    let exchange = if cfg.contains("exchange.m") {
        let config = ExchangeConfig {
            m: cfg.require_u32("exchange.m")? as usize,
            n: cfg.require_u32("exchange.n")? as usize,
            e_total: cfg.require_f64("exchange.e_total")?,
            steps: cfg.u64_or("exchange.steps", 100_000)?,
            exchange_rate: cfg.f64_or("exchange.rate", 0.5)?,
            seed: cfg.u64_or("seed", 0)?,
            record_stride: cfg.u64_or("exchange.stride", 0)?,
        };
        field("exchange", config.validate())?;
        Some(config)
    } else {
        None
    };
    Ok(Prepared::TurFluctuation {
        env,
        sample_size: cfg.usize_or("sample_size", 100_000)?,
        grid_sampler,
        exchange,
    })
}

fn prepare_kinematics(cfg: &Config) -> Result<Prepared> {
    let units = parse_units(cfg)?;
    let mass = cfg.require_f64("mass")?;
    let velocity = cfg.require_f64("velocity")?;
    if velocity == 0.0 {
        return Err(Error::InvalidParameter(
            "velocity: the dispersion and wavelength identities need v != 0".into(),
        ));
    }
    field("velocity", Kinematics::new(units, mass, velocity).map(|_| ()))?;
    Ok(Prepared::ClockKinematics {
        units,
        mass,
        velocity,
        tol_identity: cfg.f64_or("tol.identity", 1e-12)?,
    })
}

fn prepare_chain(cfg: &Config, seed: u64) -> Result<Prepared> {
    let units = parse_units(cfg)?;
    let mut requested_spread = None;
    let energy = match cfg.require_str("energy")?.as_str() {
        "gaussian" => {
            let theta0 = cfg.f64_or("energy.theta0", 1.0)?;
            let product_k = cfg.f64_or("energy.product_k", 1.0)?;
            let delta_e = match (cfg.opt_f64("energy.delta_e")?, cfg.opt_f64("energy.rel_spread")?)
            {
                (Some(de), None) => de,
                (None, Some(rs)) => {
                    if !(rs > 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "energy.rel_spread must be positive, got {rs}"
                        )));
                    }
                    // Gaussian θ replicas have Δθ/θ0 = product_k/(ΔE·θ0),
                    // which is the frequency spread to leading order.
                    requested_spread = Some(rs);
                    product_k / (rs * theta0)
                }
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidParameter(
                        "give either energy.delta_e or energy.rel_spread, not both".into(),
                    ))
                }
                (None, None) => {
                    return Err(Error::InvalidParameter(
                        "gaussian energy spec needs energy.delta_e or energy.rel_spread".into(),
                    ))
                }
            };
            EnergySpec::Gaussian { theta0, delta_e, product_k }
        }
        "ensemble" => {
            let model = parse_model(cfg)?;
            let theta = field("theta", Theta::new(cfg.require_f64("theta")?))?;
            EnergySpec::Ensemble { model, theta }
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "energy must be gaussian | ensemble, got {other:?}"
            )))
        }
    };
    let process_model = match cfg.str_or("process", "static").as_str() {
        "static" => FrequencyModel::StaticDisorder,
        "mean-reverting" => FrequencyModel::MeanReverting {
            correlation_time: cfg.require_f64("process.correlation_time")?,
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "process must be static | mean-reverting, got {other:?}"
            )))
        }
    };
    let config = ChainConfig {
        energy,
        process_model,
        horizon_periods: cfg.f64_or("horizon_periods", 100.0)?,
        dt_fraction: cfg.f64_or("dt_fraction", 0.01)?,
        replicas: cfg.usize_or("replicas", 2_000)?,
        seed,
        units,
        r_max: cfg.f64_or("r_max", 0.2)?,
    };
    config.validate()?;
    Ok(Prepared::Chain {
        config,
        taylor_check: cfg.bool_or("taylor_check", false)?,
        requested_spread,
    })
}

impl Experiment {
    pub fn execute(&self) -> Result<RunOutput> {
        let records_files_notes = match &self.prepared {
            Prepared::TurInference {
                model,
                theta,
                sample_size,
                replicas,
                ising,
                tol_cr_low,
                tol_cr_high,
                tol_fisher,
            } => {
                let study = estimator_study_with(
                    model,
                    *theta,
                    *sample_size,
                    *replicas,
                    self.seed,
                    ising,
                )?;
                let closed = fisher_information(model, *theta)?;
                let quad = fisher_information_quadrature(model, *theta)?;
                let mut records = vec![
                    CheckRecord::at_least(
                        "cr-ratio-lower",
                        study.cr_ratio,
                        *tol_cr_low,
                        study.cr_allowance,
                    ),
                    CheckRecord::at_most(
                        "cr-ratio-upper",
                        study.cr_ratio,
                        *tol_cr_high,
                        study.cr_allowance,
                    ),
                    CheckRecord::at_least(
                        "uncertainty-product",
                        study.uncertainty_product,
                        1.0,
                        study.product_allowance,
                    ),
                    CheckRecord::equal_within(
                        "fisher-dual-route",
                        closed,
                        quad,
                        tol_fisher * closed,
                    ),
                ];
                let mut notes = Vec::new();
                if let Some(a) = model.gamma_shape() {
                    let units = Units::default();
                    let energy = model.mean_energy(*theta)?;
                    let (t_b, t_g) = gibbs_boltzmann_temperatures(model, energy, &units)?;
                    records.push(CheckRecord::equal_within(
                        "temperature-gap",
                        (t_b - t_g) / t_b,
                        1.0 / a,
                        1e-10 / a,
                    ));
                }
                if study.saturated_replicas > 0 {
                    notes.push(format!(
                        "{} of {} replicas hit the estimator's attainable-range edge",
                        study.saturated_replicas, replicas
                    ));
                }
                (records, Vec::new(), notes)
            }
            Prepared::TurFluctuation { env, sample_size, grid_sampler, exchange } => {
                let sample = if *grid_sampler {
                    sample_macrostates_grid(env, *sample_size, self.seed, 0)?
                } else {
                    sample_macrostates(env, *sample_size, self.seed, 0)?
                };
                let check = covariance_identity_check(&sample)?;
                let k = env.units.k;
                let mut records = vec![
                    CheckRecord::equal_within(
                        "cov-identity",
                        check.cov_e_beta,
                        -k,
                        check.cov_band,
                    ),
                    CheckRecord::at_least(
                        "cauchy-schwarz",
                        check.delta_e * check.delta_beta,
                        check.cov_e_beta.abs(),
                        0.0,
                    ),
                ];
                if matches!(env.entropy, EntropyModel::Gaussian { .. }) {
                    records.push(CheckRecord::equal_within(
                        "product-saturation",
                        check.product_over_k,
                        1.0,
                        check.product_band,
                    ));
                }
                let mut notes = Vec::new();
                if check.boundary_warning {
                    notes.push(
                        "entropy weight does not vanish at the energy boundary; \
                         the covariance identity is not expected to hold"
                            .to_string(),
                    );
                }
                let mut files = Vec::new();
                if let Some(config) = exchange {
                    let report = run_exchange(config)?;
                    records.push(CheckRecord::at_most(
                        "exchange-conservation",
                        report.max_drift_rel,
                        1e-12,
                        0.0,
                    ));
                    records.push(CheckRecord::at_least(
                        "timescale-separation",
                        report.tau_subsystem_total,
                        report.tau_unit,
                        0.0,
                    ));
                    files.push(("exchange.csv".to_string(), report.to_csv()));
                }
                (records, files, notes)
            }
            Prepared::ClockKinematics { units, mass, velocity, tol_identity } => {
                let kin = Kinematics::new(*units, *mass, *velocity)?;
                let nu0 = kin.rest_frequency();
                let c2 = units.c * units.c;
                let records = vec![
                    CheckRecord::equal_within(
                        "frequency-split",
                        kin.clock_frequency() * kin.wave_frequency(),
                        nu0 * nu0,
                        tol_identity * nu0 * nu0,
                    ),
                    CheckRecord::equal_within(
                        "dispersion",
                        kin.phase_velocity()? * kin.v,
                        c2,
                        tol_identity * c2,
                    ),
                    CheckRecord::equal_within(
                        "wavelength",
                        kin.de_broglie_wavelength()? * kin.momentum().abs(),
                        units.h,
                        tol_identity * units.h,
                    ),
                ];
                let files = vec![
                    ("kinematics.csv".to_string(), kinematics_csv(*units, *mass)?),
                    ("plot_kinematics.py".to_string(), PLOT_KINEMATICS.to_string()),
                ];
                (records, files, Vec::new())
            }
            Prepared::Chain { config, taylor_check, requested_spread } => {
                let report = chain_verify(config)?;
                let mut records: Vec<CheckRecord> = report
                    .records
                    .iter()
                    .map(|r| CheckRecord {
                        name: r.name.clone(),
                        lhs: r.lhs,
                        rhs: r.rhs,
                        margin: r.margin,
                        sigma_band: r.sigma_band,
                        pass: r.pass,
                    })
                    .collect();
                if *taylor_check {
                    // The inverse-frequency expansion gaps on the drawn
                    // ensemble itself; its mean gap scales quadratically
                    // with the relative spread.
                    let process = ClockProcess::new(
                        report.mean_freq,
                        requested_spread.unwrap_or(report.rel_spread),
                        config.process_model.clone(),
                        config.dt_fraction * report.t_c,
                        config.horizon_periods * report.t_c,
                        config.replicas,
                        config.seed,
                    )?
                    .with_r_max(config.r_max)?;
                    let taylor = taylor_remainder_check(&process)?;
                    let bound = 2.0 * taylor.leading_scale;
                    records.push(CheckRecord::at_most(
                        "taylor-mean-gap",
                        taylor.gap_mean_inverse,
                        bound,
                        taylor.band_mean,
                    ));
                    records.push(CheckRecord::at_most(
                        "taylor-spread-gap",
                        taylor.gap_spread_inverse,
                        bound,
                        taylor.band_spread,
                    ));
                }
                let notes = vec![format!(
                    "min ΔE·Δt/h = {:.6} at t = {:.6} (t_c = {:.6}, {} of {} draws clipped)",
                    report.min_product_over_h,
                    report.min_product_time,
                    report.t_c,
                    report.clipped,
                    config.replicas
                )];
                let files = vec![
                    ("chain_curve.csv".to_string(), report.sweep_csv()),
                    ("plot_chain.py".to_string(), PLOT_CHAIN.to_string()),
                ];
                (records, files, notes)
            }
        };
        let (records, files, notes) = records_files_notes;
        let report =
            RunReport::new(self.name.clone(), self.seed, self.echo.clone(), records);
        Ok(RunOutput { report, files, notes })
    }
}

fn kinematics_csv(units: Units, mass: f64) -> Result<String> {
    let mut out = String::from("velocity,gamma,nu_clock,nu_wave,v_phase,wavelength\n");
    for i in 0..100 {
        let v = units.c * (-0.99 + 1.98 * i as f64 / 99.0);
        let kin = Kinematics::new(units, mass, v)?;
        out.push_str(&format!(
            "{v},{},{},{},{},{}\n",
            kin.gamma(),
            kin.clock_frequency(),
            kin.wave_frequency(),
            kin.phase_velocity()?,
            kin.de_broglie_wavelength()?
        ));
    }
    Ok(out)
}

const PLOT_KINEMATICS: &str = r#"#!/usr/bin/env python3
"""Plots the clock/wave frequency split against velocity."""
import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("kinematics.csv")))
v = [float(r["velocity"]) for r in rows]
plt.plot(v, [float(r["nu_clock"]) for r in rows], label="clock frequency")
plt.plot(v, [float(r["nu_wave"]) for r in rows], label="wave frequency")
plt.xlabel("velocity")
plt.ylabel("frequency")
plt.legend()
plt.savefig("kinematics.png", dpi=150)
"#;

const PLOT_CHAIN: &str = r#"#!/usr/bin/env python3
"""Plots the uncertainty product and its bounds along the sweep."""
import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("chain_curve.csv")))
t = [float(r["t"]) for r in rows]
plt.plot(t, [float(r["product_over_h"]) for r in rows], label="ΔE·Δt / h")
plt.axhline(1.0, color="gray", linestyle=":", label="h")
plt.xlabel("t")
plt.ylabel("product / h")
plt.legend()
plt.savefig("chain_curve.png", dpi=150)
"#;
