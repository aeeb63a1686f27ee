//! The inequality chain from an energy spread to ΔE·Δt ≥ h.
//!
//! A thermodynamic model supplies per-replica inverse temperatures; the
//! clock dictionary t_c = hθ turns each into a clock frequency; the phase
//! ensemble then yields a time uncertainty. Five checks are recorded, each
//! at its worst sweep time t ≥ t_c:
//!
//! 1. clock-period bound: measured Δt_c = Δ(1/ν_c) against h/ΔE,
//! 2. Taylor remainder: |Δ(1/ν) − Δν/⟨ν⟩²| within twice Δν²/⟨ν⟩³,
//! 3. integral inequality: Δ(1/ν_c) ≤ Δφ/(2π⟨ν_c⟩),
//! 4. time-uncertainty bound: Δt ≥ Δt_c,
//! 5. the product: ΔE·Δt ≥ h.
//!
//! Margins are slacks (nonnegative where the inequality holds pointwise)
//! and each carries a 3σ bootstrap band over replicas; a check passes when
//! its margin is no deeper than its band. Failures are recorded, never
//! thrown: outside the narrow-spread validity domain (and for decorrelating
//! frequency noise) the chain is measured rather than presumed.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::Serialize;

use crate::ensembles::EnsembleModel;
use crate::error::{Error, Result};
use crate::fluctuation::{local_inverse_temperature, EntropyModel, MacrostateEnvironment};
use crate::rng::derive_stream;
use crate::stats;
use crate::units::{Theta, Units};

use super::process::{propagate, time_uncertainty, ClockProcess, FrequencyModel};

/// Where the per-replica energy and inverse-temperature fluctuations come
/// from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "spec", rename_all = "kebab-case")]
pub enum EnergySpec {
    /// Direct Gaussian spread: θ replicas drawn as N(θ₀, Δθ) with
    /// Δθ = product_k/ΔE, so that ΔE·Δβ = product_k·k by construction.
    /// `product_k = 1` is the saturated case.
    Gaussian { theta0: f64, delta_e: f64, product_k: f64 },
    /// Canonical energy fluctuations of a continuous ensemble model; each
    /// replica's β comes from the entropy slope at its drawn energy.
    Ensemble { model: EnsembleModel, theta: Theta },
}

/// Full description of a chain run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainConfig {
    pub energy: EnergySpec,
    pub process_model: FrequencyModel,
    /// Simulated horizon in units of the mean clock period.
    pub horizon_periods: f64,
    /// Grid step as a fraction of the mean clock period, at most 0.01.
    pub dt_fraction: f64,
    pub replicas: usize,
    pub seed: u64,
    pub units: Units,
    /// Spread cap forwarded to the clock process.
    pub r_max: f64,
}

impl ChainConfig {
    pub fn new(
        energy: EnergySpec,
        process_model: FrequencyModel,
        replicas: usize,
        seed: u64,
    ) -> Self {
        ChainConfig {
            energy,
            process_model,
            horizon_periods: 100.0,
            dt_fraction: 0.01,
            replicas,
            seed,
            units: Units::default(),
            r_max: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.units.validate()?;
        if !(self.horizon_periods >= 10.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon must cover at least 10 clock periods, got {}",
                self.horizon_periods
            )));
        }
        if !(self.dt_fraction > 0.0 && self.dt_fraction <= 0.01) {
            return Err(Error::InvalidParameter(format!(
                "dt fraction must lie in (0, 0.01], got {}",
                self.dt_fraction
            )));
        }
        match &self.energy {
            EnergySpec::Gaussian { theta0, delta_e, product_k } => {
                if !(*theta0 > 0.0) || !theta0.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "theta0 must be positive, got {theta0}"
                    )));
                }
                if !(*delta_e > 0.0) || !delta_e.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "delta_e must be positive, got {delta_e}"
                    )));
                }
                if !(*product_k > 0.0) || !product_k.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "product_k must be positive, got {product_k}"
                    )));
                }
            }
            EnergySpec::Ensemble { model, theta } => {
                model.validate()?;
                model.check_theta(*theta)?;
                let shape = model.gamma_shape().ok_or_else(|| {
                    Error::Domain(format!(
                        "the chain needs a continuous energy model, got {}",
                        model.family()
                    ))
                })?;
                if shape <= 2.0 {
                    return Err(Error::Domain(format!(
                        "inverse-frequency spreads need a Gamma shape above 2, got {shape}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One inequality evaluated at its worst sweep point.
///
/// `margin` is the slack of the inequality (nonnegative exactly when it
/// holds pointwise); `pass` is `margin ≥ −sigma_band` with `sigma_band` a
/// 3σ bootstrap over replicas.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub sigma_band: f64,
    pub pass: bool,
    /// Sweep time of the worst margin, when the check is time-resolved.
    pub at_time: Option<f64>,
}

/// One sweep time of the chain, with everything needed to re-derive the
/// margins at that time.
#[derive(Debug, Clone, Serialize)]
pub struct ChainSweepPoint {
    pub t: f64,
    /// Measured Δt = Δφ/|d⟨φ⟩/dt|.
    pub delta_t: f64,
    /// Measured Δt_c = Δ(1/ν_c).
    pub delta_t_c: f64,
    /// Δφ/(2π⟨ν_c⟩), the integral-inequality right side.
    pub integral_rhs: f64,
    pub taylor_gap: f64,
    pub taylor_scale: f64,
    pub product_over_h: f64,
}

/// Outcome of a chain run.
#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub config: ChainConfig,
    pub records: Vec<InequalityRecord>,
    pub sweep: Vec<ChainSweepPoint>,
    pub min_product_over_h: f64,
    pub min_product_time: f64,
    /// Exact model energy spread used on the bound side.
    pub delta_e: f64,
    pub mean_freq: f64,
    pub rel_spread: f64,
    pub t_c: f64,
    pub clipped: u64,
}

impl ChainReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    /// Sweep curve as CSV with header
    /// `t,delta_t,delta_t_c,integral_rhs,product_over_h`.
    pub fn sweep_csv(&self) -> String {
        let mut out = String::from("t,delta_t,delta_t_c,integral_rhs,product_over_h\n");
        for p in &self.sweep {
            out.push_str(&format!(
                "{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n",
                p.t, p.delta_t, p.delta_t_c, p.integral_rhs, p.product_over_h
            ));
        }
        out
    }
}

fn mean_at(xs: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| xs[i]).sum::<f64>() / idx.len() as f64
}

fn std_at(xs: &[f64], idx: &[usize]) -> f64 {
    let m = mean_at(xs, idx);
    let ss: f64 = idx.iter().map(|&i| (xs[i] - m) * (xs[i] - m)).sum();
    (ss / (idx.len() - 1) as f64).sqrt()
}

/// Draws the per-replica clock frequencies for the spec, returning
/// `(frequencies, exact ΔE, nominal mean frequency)`.
fn draw_frequencies(config: &ChainConfig) -> Result<(Vec<f64>, f64, f64)> {
    let (k, h) = (config.units.k, config.units.h);
    match &config.energy {
        EnergySpec::Gaussian { theta0, delta_e, product_k } => {
            let d_theta = product_k / delta_e;
            let freqs = (0..config.replicas)
                .map(|r| {
                    let mut rng = derive_stream(config.seed, "chain-theta", r as u64);
                    let g: f64 = rng.sample(StandardNormal);
                    1.0 / (h * (theta0 + d_theta * g))
                })
                .collect();
            Ok((freqs, *delta_e, 1.0 / (h * theta0)))
        }
        EnergySpec::Ensemble { model, theta } => {
            let shape = model.gamma_shape().expect("validated as continuous");
            let env = MacrostateEnvironment::new(
                *theta,
                vec![],
                EntropyModel::PowerLaw { nu: shape - 1.0 },
                config.units.clone(),
            )?;
            let gamma = Gamma::new(shape, 1.0 / theta.value())
                .map_err(|e| Error::InvalidParameter(format!("gamma sampler: {e}")))?;
            let freqs = (0..config.replicas)
                .map(|r| {
                    let mut rng = derive_stream(config.seed, "chain-energy", r as u64);
                    let e_r = gamma.sample(&mut rng);
                    let beta = local_inverse_temperature(&env, e_r, &[])?;
                    Ok(k / (h * beta))
                })
                .collect::<Result<Vec<f64>>>()?;
            let delta_e = model.energy_variance(*theta)?.sqrt();
            let nominal = shape / (theta.value() * h * (shape - 1.0));
            Ok((freqs, delta_e, nominal))
        }
    }
}

/// Runs the full chain: thermodynamic draw → clock frequencies → phase
/// ensemble → the five recorded inequalities.
pub fn chain_verify(config: &ChainConfig) -> Result<ChainReport> {
    config.validate()?;
    let h = config.units.h;

    let (mut freqs, delta_e, nominal_mean) = draw_frequencies(config)?;
    let floor = 1e-6 * nominal_mean;
    let mut clipped = 0u64;
    for nu in freqs.iter_mut() {
        if !nu.is_finite() || *nu < floor {
            *nu = floor;
            clipped += 1;
        }
    }

    let mean_freq = stats::mean(&freqs);
    let rel_spread = stats::std_dev(&freqs)? / mean_freq;
    let t_c = 1.0 / mean_freq;
    let process = ClockProcess {
        mean_freq,
        rel_spread,
        model: config.process_model.clone(),
        dt: config.dt_fraction * t_c,
        horizon: config.horizon_periods * t_c,
        replicas: config.replicas,
        seed: config.seed,
        r_max: config.r_max,
    };
    let batch = propagate(&process, freqs, clipped)?;

    let two_pi = std::f64::consts::TAU;
    let n_rec = batch.recorded_indices.len();
    let replicas = config.replicas;

    // Sweep statistics per recorded time.
    let mut sweep = Vec::with_capacity(n_rec);
    let mut margins = [
        (f64::INFINITY, 0usize),
        (f64::INFINITY, 0usize),
        (f64::INFINITY, 0usize),
        (f64::INFINITY, 0usize),
        (f64::INFINITY, 0usize),
    ];
    let mut freq_col = vec![0.0f64; replicas];
    let mut inv_col = vec![0.0f64; replicas];
    for kdx in 0..n_rec {
        let i = batch.recorded_indices[kdx];
        let t = batch.times[i];
        for (r, slot) in freq_col.iter_mut().enumerate() {
            *slot = batch.recorded_freqs[r][kdx];
        }
        for (slot, nu) in inv_col.iter_mut().zip(&freq_col) {
            *slot = 1.0 / nu;
        }
        let nu_bar = stats::mean(&freq_col);
        let d_nu = stats::std_dev(&freq_col)?;
        let delta_t_c = stats::std_dev(&inv_col)?;
        let delta_t = time_uncertainty(&batch, t)?;
        let integral_rhs = batch.phase_spread[i] / (two_pi * nu_bar);
        let taylor_gap = (delta_t_c - d_nu / (nu_bar * nu_bar)).abs();
        let taylor_scale = d_nu * d_nu / (nu_bar.powi(3));
        let product_over_h = delta_e * delta_t / h;

        let point_margins = [
            delta_t_c - h / delta_e,
            2.0 * taylor_scale - taylor_gap,
            integral_rhs - delta_t_c,
            delta_t - delta_t_c,
            delta_e * delta_t - h,
        ];
        for (m, best) in point_margins.iter().zip(margins.iter_mut()) {
            if *m < best.0 {
                *best = (*m, kdx);
            }
        }
        sweep.push(ChainSweepPoint {
            t,
            delta_t,
            delta_t_c,
            integral_rhs,
            taylor_gap,
            taylor_scale,
            product_over_h,
        });
    }

    // Bootstrap bands at each record's worst time.
    let names = [
        "clock-period-bound",
        "taylor-remainder",
        "integral-inequality",
        "time-uncertainty-bound",
        "energy-time-product",
    ];
    let mut records = Vec::with_capacity(5);
    for (ridx, ((min_margin, kdx), name)) in margins.iter().zip(names).enumerate() {
        let i = batch.recorded_indices[*kdx];
        let t = batch.times[i];
        let point = &sweep[*kdx];
        let slope = (batch.mean_phase[i + 1] - batch.mean_phase[i - 1]) / (2.0 * process.dt);
        let freq_at: Vec<f64> = (0..replicas).map(|r| batch.recorded_freqs[r][*kdx]).collect();
        let inv_at: Vec<f64> = freq_at.iter().map(|nu| 1.0 / nu).collect();
        let phase_at: Vec<f64> =
            (0..replicas).map(|r| batch.recorded_phases[r][*kdx]).collect();

        let stat = |idx: &[usize]| -> f64 {
            match ridx {
                0 => std_at(&inv_at, idx) - h / delta_e,
                1 => {
                    let nb = mean_at(&freq_at, idx);
                    let dn = std_at(&freq_at, idx);
                    let di = std_at(&inv_at, idx);
                    2.0 * dn * dn / nb.powi(3) - (di - dn / (nb * nb)).abs()
                }
                2 => {
                    let nb = mean_at(&freq_at, idx);
                    std_at(&phase_at, idx) / (two_pi * nb) - std_at(&inv_at, idx)
                }
                3 => std_at(&phase_at, idx) / slope.abs() - std_at(&inv_at, idx),
                _ => delta_e * std_at(&phase_at, idx) / slope.abs() - h,
            }
        };
        let sigma = stats::bootstrap_sigma_indices(
            replicas,
            300,
            config.seed,
            &format!("chain-band-{name}"),
            stat,
        )?;
        let band = 3.0 * sigma;

        let (lhs, rhs) = match ridx {
            0 => (point.delta_t_c, h / delta_e),
            1 => (point.taylor_gap, 2.0 * point.taylor_scale),
            2 => (point.delta_t_c, point.integral_rhs),
            3 => (point.delta_t, point.delta_t_c),
            _ => (delta_e * point.delta_t, h),
        };
        records.push(InequalityRecord {
            name: name.to_string(),
            lhs,
            rhs,
            margin: *min_margin,
            sigma_band: band,
            pass: *min_margin >= -band,
            at_time: Some(t),
        });
    }

    let (min_product_over_h, min_product_time) = sweep
        .iter()
        .map(|p| (p.product_over_h, p.t))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("sweep is nonempty");

    Ok(ChainReport {
        config: config.clone(),
        records,
        sweep,
        min_product_over_h,
        min_product_time,
        delta_e,
        mean_freq,
        rel_spread,
        t_c,
        clipped: batch.clipped,
    })
}
