//! Pairwise energy exchange in an isolated composite system.
//!
//! `m` subsystems of `n` units each share a fixed total energy. Each step
//! picks a pair of units, pools their energy, and resplits it uniformly:
//! `(eᵢ, eⱼ) → (u·c, (1−u)·c)` with `c = eᵢ + eⱼ` and `u ~ U(0,1)`. The pair
//! crosses subsystem boundaries with probability `exchange_rate`, otherwise
//! both units come from one subsystem.
//!
//! The stationary law is uniform on the energy simplex, so a single unit's
//! energy is marginally `E_total·Beta(1, mn−1)` and a subsystem's energy is
//! `E_total·Beta(n, (m−1)n)`. Unit-level equilibration is fast while
//! subsystem totals drift slowly; the report carries both autocorrelation
//! times so that separation can be checked directly.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::derive_stream;
use crate::stats;

/// Geometry and schedule of an exchange run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExchangeConfig {
    /// Number of subsystems.
    pub m: usize,
    /// Units per subsystem.
    pub n: usize,
    /// Conserved total energy.
    pub e_total: f64,
    pub steps: u64,
    /// Probability that a step pairs units from two different subsystems.
    pub exchange_rate: f64,
    pub seed: u64,
    /// Steps between recorded subsystem snapshots; 0 picks a stride keeping
    /// roughly 50 000 records.
    pub record_stride: u64,
}

impl ExchangeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.m * self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least two units in total, got m={}, n={}",
                self.m, self.n
            )));
        }
        if self.m == 1 && self.n < 2 {
            return Err(Error::InvalidParameter("a single subsystem needs n ≥ 2".into()));
        }
        if !(self.e_total > 0.0) || !self.e_total.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "total energy must be positive, got {}",
                self.e_total
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be positive".into()));
        }
        if !(self.exchange_rate > 0.0 && self.exchange_rate <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "exchange rate must lie in (0, 1], got {}",
                self.exchange_rate
            )));
        }
        Ok(())
    }

    fn stride(&self) -> u64 {
        if self.record_stride > 0 {
            self.record_stride
        } else {
            (self.steps / 50_000).max(1)
        }
    }
}

/// Time series and diagnostics from an exchange run.
#[derive(Debug, Clone, Serialize)]
pub struct ExchangeReport {
    pub config: ExchangeConfig,
    /// 1-based step counts at which snapshots were taken.
    pub recorded_steps: Vec<u64>,
    /// `subsystem_energies[j][r]`: energy of subsystem `j` at record `r`.
    pub subsystem_energies: Vec<Vec<f64>>,
    /// Temperature estimates `T̂ⱼ = 2Eⱼ/n` (one quadratic degree of freedom
    /// per unit, natural units).
    pub t_hats: Vec<Vec<f64>>,
    /// Integrated autocorrelation time of a single unit's energy, in steps.
    pub tau_unit: f64,
    /// Integrated autocorrelation time of a subsystem's energy, in steps.
    pub tau_subsystem_total: f64,
    pub timescales_separated: bool,
    /// Largest relative deviation of the running total from `e_total`.
    pub max_drift_rel: f64,
}

impl ExchangeReport {
    /// Snapshot rows as CSV with header `step,subsystem_id,energy,t_hat`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,subsystem_id,energy,t_hat\n");
        for (r, &step) in self.recorded_steps.iter().enumerate() {
            for j in 0..self.config.m {
                out.push_str(&format!(
                    "{step},{j},{:.12e},{:.12e}\n",
                    self.subsystem_energies[j][r], self.t_hats[j][r]
                ));
            }
        }
        out
    }

    /// Records with the first fifth dropped, past the relaxation from the
    /// equal-shares initial condition.
    pub fn stationary_records(&self, subsystem: usize) -> &[f64] {
        let series = &self.subsystem_energies[subsystem];
        &series[series.len() / 5..]
    }
}

/// Window of full-resolution unit history kept for the τ estimate.
const UNIT_WINDOW: usize = 100_000;

/// Runs the exchange dynamics and returns recorded series plus timescale
/// and conservation diagnostics.
pub fn run_exchange(config: &ExchangeConfig) -> Result<ExchangeReport> {
    config.validate()?;
    let (m, n) = (config.m, config.n);
    let total_units = m * n;
    let stride = config.stride();
    let mut rng = derive_stream(config.seed, "exchange", 0);

    let mut energies = vec![config.e_total / total_units as f64; total_units];
    let window = UNIT_WINDOW.min(config.steps as usize);
    let mut unit_trace = vec![0.0f64; window];

    let record_count = (config.steps / stride) as usize + 1;
    let mut recorded_steps = Vec::with_capacity(record_count);
    let mut subsystem_energies = vec![Vec::with_capacity(record_count); m];
    let mut max_drift_rel = 0.0f64;

    for t in 0..config.steps {
        let inter = if m < 2 {
            false
        } else if n < 2 {
            true
        } else {
            rng.random::<f64>() < config.exchange_rate
        };
        let (i, j) = if inter {
            let a = rng.random_range(0..m);
            let b = {
                let shift = rng.random_range(1..m);
                (a + shift) % m
            };
            (a * n + rng.random_range(0..n), b * n + rng.random_range(0..n))
        } else {
            let s = rng.random_range(0..m);
            let u1 = rng.random_range(0..n);
            let u2 = {
                let shift = rng.random_range(1..n);
                (u1 + shift) % n
            };
            (s * n + u1, s * n + u2)
        };
        let pooled = energies[i] + energies[j];
        let u = rng.random::<f64>();
        energies[i] = u * pooled;
        energies[j] = pooled - energies[i];

        unit_trace[(t as usize) % window] = energies[0];

        let step = t + 1;
        if step % stride == 0 || step == config.steps {
            recorded_steps.push(step);
            let mut running_total = 0.0;
            for (jdx, sub) in subsystem_energies.iter_mut().enumerate() {
                let e_j: f64 = energies[jdx * n..(jdx + 1) * n].iter().sum();
                sub.push(e_j);
                running_total += e_j;
            }
            let drift = (running_total - config.e_total).abs() / config.e_total;
            max_drift_rel = max_drift_rel.max(drift);
        }
    }

    // Chronological unit series out of the circular buffer.
    let split = (config.steps as usize) % window;
    let unit_series: Vec<f64> = if (config.steps as usize) <= window {
        unit_trace[..config.steps as usize].to_vec()
    } else {
        unit_trace[split..].iter().chain(&unit_trace[..split]).copied().collect()
    };
    let (tau_unit, _) = stats::integrated_autocorr_time(&unit_series)?;

    let sub_series = &subsystem_energies[0];
    let (tau_rec, _) = stats::integrated_autocorr_time(sub_series)?;
    let tau_subsystem_total = tau_rec * stride as f64;

    if (config.steps as f64) < 50.0 * tau_subsystem_total {
        return Err(Error::InsufficientData {
            needed: (50.0 * tau_subsystem_total) as usize,
            got: config.steps as usize,
            what: format!(
                "steps against a subsystem relaxation time of {tau_subsystem_total:.0}"
            ),
        });
    }

    let t_hats = subsystem_energies
        .iter()
        .map(|series| series.iter().map(|e| 2.0 * e / n as f64).collect())
        .collect();

    Ok(ExchangeReport {
        config: config.clone(),
        recorded_steps,
        subsystem_energies,
        t_hats,
        tau_unit,
        tau_subsystem_total,
        timescales_separated: tau_unit < tau_subsystem_total,
        max_drift_rel,
    })
}

/// Stationary variance of one subsystem's energy: the simplex-uniform law
/// aggregates `n` of `mn` Dirichlet(1,…,1) coordinates into a
/// `Beta(n, (m−1)n)` fraction of the total.
pub fn subsystem_energy_variance(m: usize, n: usize, e_total: f64) -> Result<f64> {
    if m < 2 || n == 0 {
        return Err(Error::InvalidParameter(
            "finite-bath prediction needs m ≥ 2 subsystems".into(),
        ));
    }
    let a = n as f64;
    let b = ((m - 1) * n) as f64;
    let s = a + b;
    Ok(e_total * e_total * a * b / (s * s * (s + 1.0)))
}
