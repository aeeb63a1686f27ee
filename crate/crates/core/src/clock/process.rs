//! Ensembles of noisy clocks and their accumulated phases.
//!
//! Each replica carries a frequency path ν(t) and the phase
//! `φ(t) = 2π ∫₀ᵗ ν dt̃`, integrated by the trapezoid rule on a fixed grid
//! with `φ(0) = 0`. Two frequency models ship: `StaticDisorder`, where each
//! replica keeps a constant frequency drawn once (the regime in which phase
//! spreads grow linearly and every later inequality is sharp), and
//! `MeanReverting`, whose paths decorrelate over a finite correlation time
//! and serve as the stress test of the same inequalities.
//!
//! Frequencies are physical rates: draws below a floor of 10⁻⁶ of the mean
//! are clipped there and counted, and a run whose clip rate exceeds 0.1% is
//! rejected rather than silently biased.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::derive_stream;
use crate::stats;

/// How a replica's clock frequency evolves in time.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FrequencyModel {
    /// Frequencies differ between replicas but are constant in time.
    StaticDisorder,
    /// Ornstein–Uhlenbeck reversion to the ensemble mean: stationary
    /// marginal spread `rel_spread·mean_freq`, autocorrelation
    /// `exp(−Δt/correlation_time)`.
    MeanReverting { correlation_time: f64 },
}

/// A stochastic clock-frequency ensemble and its simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClockProcess {
    /// Ensemble mean frequency ⟨ν_c⟩.
    pub mean_freq: f64,
    /// Relative spread Δν_c/⟨ν_c⟩ of the frequency draw.
    pub rel_spread: f64,
    pub model: FrequencyModel,
    /// Grid step; at most 0.01/mean_freq.
    pub dt: f64,
    /// Total simulated time; at least 10/mean_freq.
    pub horizon: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Largest admissible `rel_spread`. The later Taylor expansions in 1/ν
    /// are quadratically accurate only for narrow spreads; the default cap
    /// of 0.2 keeps their remainder below ~5%.
    pub r_max: f64,
}

impl ClockProcess {
    pub fn new(
        mean_freq: f64,
        rel_spread: f64,
        model: FrequencyModel,
        dt: f64,
        horizon: f64,
        replicas: usize,
        seed: u64,
    ) -> Result<Self> {
        let process = ClockProcess {
            mean_freq,
            rel_spread,
            model,
            dt,
            horizon,
            replicas,
            seed,
            r_max: 0.2,
        };
        process.validate()?;
        Ok(process)
    }

    /// Same process with a different spread cap, revalidated.
    pub fn with_r_max(mut self, r_max: f64) -> Result<Self> {
        self.r_max = r_max;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_freq > 0.0) || !self.mean_freq.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mean frequency must be positive, got {}",
                self.mean_freq
            )));
        }
        if !(self.r_max > 0.0 && self.r_max < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "spread cap must lie in (0, 1), got {}",
                self.r_max
            )));
        }
        if !(self.rel_spread > 0.0) || self.rel_spread > self.r_max {
            return Err(Error::InvalidParameter(format!(
                "relative spread must lie in (0, {}], got {}",
                self.r_max, self.rel_spread
            )));
        }
        if !(self.dt > 0.0) || self.dt > 0.01 / self.mean_freq * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "dt must lie in (0, 0.01/mean_freq]; got dt = {} with mean_freq = {}",
                self.dt, self.mean_freq
            )));
        }
        if self.horizon < 10.0 / self.mean_freq {
            return Err(Error::InvalidParameter(format!(
                "horizon must cover at least 10 mean periods, got {}",
                self.horizon
            )));
        }
        if self.replicas < 100 {
            return Err(Error::InvalidParameter(format!(
                "at least 100 replicas are needed for ensemble spreads, got {}",
                self.replicas
            )));
        }
        if let FrequencyModel::MeanReverting { correlation_time } = self.model {
            if !(correlation_time > 0.0) || !correlation_time.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "correlation time must be positive, got {correlation_time}"
                )));
            }
        }
        Ok(())
    }

    /// Mean clock period t_c = 1/⟨ν_c⟩.
    pub fn clock_period(&self) -> f64 {
        1.0 / self.mean_freq
    }

    fn grid_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    fn clip_floor(&self) -> f64 {
        1e-6 * self.mean_freq
    }
}

/// Phase trajectories of a clock ensemble.
///
/// Ensemble statistics (`mean_phase`, `phase_spread`, `mean_freq_path`,
/// `freq_spread`) cover every grid time. Per-replica values are kept only at
/// `recorded_indices`, a ~128-point subset of the grid starting at the first
/// time ≥ t_c, which bounds memory at large replica counts while leaving
/// enough support for bootstrap bands.
#[derive(Debug, Clone)]
pub struct PhaseTrajectoryBatch {
    pub process: ClockProcess,
    pub times: Vec<f64>,
    pub mean_phase: Vec<f64>,
    /// Ensemble standard deviation Δφ(t).
    pub phase_spread: Vec<f64>,
    pub mean_freq_path: Vec<f64>,
    /// Ensemble standard deviation Δν_c(t).
    pub freq_spread: Vec<f64>,
    pub recorded_indices: Vec<usize>,
    /// `recorded_phases[replica][k]`: φ at grid index `recorded_indices[k]`.
    pub recorded_phases: Vec<Vec<f64>>,
    pub recorded_freqs: Vec<Vec<f64>>,
    /// Per-replica ν(0).
    pub initial_freqs: Vec<f64>,
    /// Positivity clips applied across all frequency draws.
    pub clipped: u64,
}

impl PhaseTrajectoryBatch {
    /// Grid index of a time on the interior of the grid.
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        let dt = self.process.dt;
        let i = (t / dt).round() as isize;
        if i < 1 || i as usize >= self.times.len() - 1 {
            return Err(Error::Domain(format!(
                "t = {t} is not an interior grid time (grid spans {:.3e}..{:.3e})",
                self.times[0],
                self.times[self.times.len() - 1]
            )));
        }
        let i = i as usize;
        if (t - self.times[i]).abs() > 0.5 * dt * (1.0 + 1e-9) {
            return Err(Error::Domain(format!("t = {t} does not lie on the grid")));
        }
        Ok(i)
    }

    /// Recorded trajectories as CSV with header `time,replica,phase`.
    pub fn phases_csv(&self) -> String {
        let mut out = String::from("time,replica,phase\n");
        for (k, &i) in self.recorded_indices.iter().enumerate() {
            for (r, phases) in self.recorded_phases.iter().enumerate() {
                out.push_str(&format!("{:.9e},{r},{:.12e}\n", self.times[i], phases[k]));
            }
        }
        out
    }
}

/// Draws the per-replica initial frequencies: Gaussian disorder of width
/// `rel_spread·mean_freq`, one stream per replica.
fn draw_initial_freqs(process: &ClockProcess) -> (Vec<f64>, u64) {
    let floor = process.clip_floor();
    let mut clipped = 0u64;
    let freqs = (0..process.replicas)
        .map(|r| {
            let mut rng = derive_stream(process.seed, "clock-init", r as u64);
            let g: f64 = rng.sample(StandardNormal);
            let nu = process.mean_freq * (1.0 + process.rel_spread * g);
            if nu < floor {
                clipped += 1;
                floor
            } else {
                nu
            }
        })
        .collect();
    (freqs, clipped)
}

/// Simulates phase trajectories for the ensemble described by `process`.
pub fn simulate_phases(process: &ClockProcess) -> Result<PhaseTrajectoryBatch> {
    process.validate()?;
    let (initial, clipped) = draw_initial_freqs(process);
    propagate(process, initial, clipped)
}

/// Integrates phases from caller-supplied initial frequencies.
///
/// `simulate_phases` uses Gaussian disorder; the inequality-chain pipeline
/// instead feeds frequencies derived from a thermodynamic ensemble through
/// this entry point.
pub(crate) fn propagate(
    process: &ClockProcess,
    initial: Vec<f64>,
    mut clipped: u64,
) -> Result<PhaseTrajectoryBatch> {
    process.validate()?;
    if initial.len() != process.replicas {
        return Err(Error::InvalidParameter(format!(
            "{} initial frequencies for {} replicas",
            initial.len(),
            process.replicas
        )));
    }
    let n = process.grid_steps();
    let dt = process.dt;
    let floor = process.clip_floor();
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();

    // First grid index at or beyond t_c, then ~128 sweep points up to the
    // last interior index.
    let i_tc = ((process.clock_period() / dt).ceil() as usize).max(1);
    let last = n - 1;
    let recorded_indices: Vec<usize> = if i_tc >= last {
        vec![last]
    } else {
        let span = last - i_tc;
        let count = span.min(128);
        let mut idx: Vec<usize> = (0..=count)
            .map(|j| i_tc + (span as f64 * j as f64 / count as f64).round() as usize)
            .collect();
        idx.dedup();
        idx
    };

    let mut mean_phi = vec![0.0f64; n + 1];
    let mut m2_phi = vec![0.0f64; n + 1];
    let mut mean_nu = vec![0.0f64; n + 1];
    let mut m2_nu = vec![0.0f64; n + 1];
    let mut recorded_phases = Vec::with_capacity(process.replicas);
    let mut recorded_freqs = Vec::with_capacity(process.replicas);

    let ou = match process.model {
        FrequencyModel::StaticDisorder => None,
        FrequencyModel::MeanReverting { correlation_time } => {
            let a = (-dt / correlation_time).exp();
            let b = process.rel_spread * process.mean_freq * (1.0 - a * a).sqrt();
            Some((a, b))
        }
    };

    for (r, &nu0) in initial.iter().enumerate() {
        let mut path_rng = derive_stream(process.seed, "clock-path", r as u64);
        let inv_count = 1.0 / (r + 1) as f64;
        let mut rec_phi = Vec::with_capacity(recorded_indices.len());
        let mut rec_nu = Vec::with_capacity(recorded_indices.len());
        let mut next_rec = 0usize;

        let mut nu = nu0;
        let mut phi = 0.0f64;
        for i in 0..=n {
            if i > 0 {
                let nu_next = match ou {
                    None => nu,
                    Some((a, b)) => {
                        let g: f64 = path_rng.sample(StandardNormal);
                        let v = process.mean_freq + (nu - process.mean_freq) * a + b * g;
                        if v < floor {
                            clipped += 1;
                            floor
                        } else {
                            v
                        }
                    }
                };
                phi += std::f64::consts::PI * (nu + nu_next) * dt;
                nu = nu_next;
            }
            let d_phi = phi - mean_phi[i];
            mean_phi[i] += d_phi * inv_count;
            m2_phi[i] += d_phi * (phi - mean_phi[i]);
            let d_nu = nu - mean_nu[i];
            mean_nu[i] += d_nu * inv_count;
            m2_nu[i] += d_nu * (nu - mean_nu[i]);

            if next_rec < recorded_indices.len() && recorded_indices[next_rec] == i {
                rec_phi.push(phi);
                rec_nu.push(nu);
                next_rec += 1;
            }
        }
        recorded_phases.push(rec_phi);
        recorded_freqs.push(rec_nu);
    }

    let draws = match process.model {
        FrequencyModel::StaticDisorder => process.replicas as u64,
        FrequencyModel::MeanReverting { .. } => (process.replicas * (n + 1)) as u64,
    };
    if clipped as f64 > 1e-3 * draws as f64 {
        return Err(Error::NumericalFailure(format!(
            "{clipped} of {draws} frequency draws needed positivity clipping (> 0.1%); \
             the spread is too wide for a positive-frequency clock"
        )));
    }

    let denom = (process.replicas - 1) as f64;
    let phase_spread = m2_phi.iter().map(|m2| (m2 / denom).sqrt()).collect();
    let freq_spread = m2_nu.iter().map(|m2| (m2 / denom).sqrt()).collect();
    Ok(PhaseTrajectoryBatch {
        process: process.clone(),
        times,
        mean_phase: mean_phi,
        phase_spread,
        mean_freq_path: mean_nu,
        freq_spread,
        recorded_indices,
        recorded_phases,
        recorded_freqs,
        initial_freqs: initial,
        clipped,
    })
}

/// Ensemble time uncertainty at time `t`: the phase spread divided by the
/// drift rate of the mean phase, `Δt = Δφ / |d⟨φ⟩/dt|`, the time needed for
/// the phase distribution to shift by its own width.
///
/// Defined for `t ≥ t_c` on the grid interior; the slope uses centered
/// differences with the grid step.
pub fn time_uncertainty(batch: &PhaseTrajectoryBatch, t: f64) -> Result<f64> {
    let t_c = batch.process.clock_period();
    if t < t_c * (1.0 - 1e-9) {
        return Err(Error::Domain(format!(
            "time uncertainty is defined for t ≥ t_c = {t_c:.6e}, got {t:.6e}"
        )));
    }
    let i = batch.grid_index(t)?;
    let slope =
        (batch.mean_phase[i + 1] - batch.mean_phase[i - 1]) / (2.0 * batch.process.dt);
    let scale = 2.0 * std::f64::consts::PI * batch.process.mean_freq;
    if slope.abs() < 1e-12 * scale {
        return Err(Error::NumericalFailure(format!(
            "mean phase is degenerate at t = {t}: slope {slope:.3e}"
        )));
    }
    Ok(batch.phase_spread[i] / slope.abs())
}

/// How well the inverse-frequency statistics track their leading-order
/// expansions, `⟨1/ν⟩ ≈ 1/⟨ν⟩` and `Δ(1/ν) ≈ Δν/⟨ν⟩²`, both with remainder
/// of order Δν²/⟨ν⟩³.
#[derive(Debug, Clone, Serialize)]
pub struct TaylorRemainderReport {
    pub mean_freq: f64,
    pub rel_spread: f64,
    pub replicas: usize,
    /// |⟨1/ν⟩ − 1/⟨ν⟩| from the ensemble.
    pub gap_mean_inverse: f64,
    /// |Δ(1/ν) − Δν/⟨ν⟩²| from the ensemble.
    pub gap_spread_inverse: f64,
    /// The remainder scale Δν²/⟨ν⟩³.
    pub leading_scale: f64,
    /// Fitted remainder constants, gap/scale; order unity when the
    /// expansion is in its validity regime.
    pub c_mean: f64,
    pub c_spread: f64,
    /// 3σ bootstrap bands on the two gaps.
    pub band_mean: f64,
    pub band_spread: f64,
    /// Both gaps within `2·leading_scale` plus their bands.
    pub pass: bool,
}

/// Measures the Taylor remainders of the inverse-frequency expansion on the
/// ensemble drawn by `process` and checks them against a remainder constant
/// of 2.
pub fn taylor_remainder_check(process: &ClockProcess) -> Result<TaylorRemainderReport> {
    process.validate()?;
    let (freqs, clipped) = draw_initial_freqs(process);
    if clipped as f64 > 1e-3 * process.replicas as f64 {
        return Err(Error::NumericalFailure(format!(
            "{clipped} of {} frequency draws needed positivity clipping (> 0.1%)",
            process.replicas
        )));
    }
    let inverses: Vec<f64> = freqs.iter().map(|nu| 1.0 / nu).collect();

    let nu_bar = stats::mean(&freqs);
    let d_nu = stats::std_dev(&freqs)?;
    let gap_mean_inverse = (stats::mean(&inverses) - 1.0 / nu_bar).abs();
    let gap_spread_inverse = (stats::std_dev(&inverses)? - d_nu / (nu_bar * nu_bar)).abs();
    let leading_scale = d_nu * d_nu / (nu_bar * nu_bar * nu_bar);

    let band_mean = 3.0 * stats::bootstrap_sigma(&freqs, 300, process.seed, "taylor-mean", |f| {
        let inv: Vec<f64> = f.iter().map(|nu| 1.0 / nu).collect();
        stats::mean(&inv) - 1.0 / stats::mean(f)
    })?;
    let band_spread =
        3.0 * stats::bootstrap_sigma(&freqs, 300, process.seed, "taylor-spread", |f| {
            let inv: Vec<f64> = f.iter().map(|nu| 1.0 / nu).collect();
            let m = stats::mean(f);
            stats::std_dev(&inv).unwrap_or(0.0) - stats::std_dev(f).unwrap_or(0.0) / (m * m)
        })?;

    let pass = gap_mean_inverse <= 2.0 * leading_scale + band_mean
        && gap_spread_inverse <= 2.0 * leading_scale + band_spread;
    Ok(TaylorRemainderReport {
        mean_freq: process.mean_freq,
        rel_spread: process.rel_spread,
        replicas: process.replicas,
        gap_mean_inverse,
        gap_spread_inverse,
        leading_scale,
        c_mean: gap_mean_inverse / leading_scale,
        c_spread: gap_spread_inverse / leading_scale,
        band_mean,
        band_spread,
        pass,
    })
}
