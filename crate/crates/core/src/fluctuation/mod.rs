//! Macrostate fluctuation statistics around equilibrium.
//!
//! A small system in weak contact with a large environment at inverse
//! temperature θ₀ fluctuates over macrostates `(E, X₁…)` with log probability
//!
//! ```text
//! ln P(E, X) = −θ₀(E + Σᵢ F₀ᵢXᵢ) + S(E, X)/k − ln N
//! ```
//!
//! where `S` is the small system's entropy and the normalization `N` is
//! computed by quadrature on the support. The local inverse temperature
//! `β(E) = ∂S/∂E` then pairs with the energy into the covariance identity
//! `Cov(E, β) = −k`, whose Cauchy–Schwarz relaxation is the uncertainty
//! product `ΔE·Δβ ≥ k`.
//!
//! Three entropy models ship, chosen as the smallest set exercising every
//! term of the fluctuation law: a Gaussian entropy (exactly saturating the
//! product), a power law in energy (ideal-gas-like, Gamma fluctuations), and
//! a power law with one volume-like displacement coupled to a pressure-like
//! force. [`exchange`] adds the isolated-system energy-exchange simulation
//! behind the subsystem-timescale picture.

pub mod exchange;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric;
use crate::rng::derive_stream;
use crate::stats;
use crate::units::{Theta, Units};

pub use exchange::{run_exchange, ExchangeConfig, ExchangeReport};

/// Entropy of the fluctuating small system, as `S/k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "entropy", rename_all = "kebab-case")]
pub enum EntropyModel {
    /// `S/k = −(E−e0)²/(2σ_s²) + θ*·E` on the whole real line.
    ///
    /// With `theta_star` equal to the environment θ₀ the fluctuation law is
    /// exactly Normal(e0, σ_s²) and the uncertainty product saturates at k.
    Gaussian { e0: f64, sigma_s: f64, theta_star: f64 },
    /// `S/k = ν·ln E` on (0, ∞); the Boltzmann entropy of a density of
    /// states `σ(E) = E^ν`, giving Gamma(ν+1, 1/θ₀) fluctuations.
    PowerLaw { nu: f64 },
    /// `S/k = ν·ln E + n_x·ln X` on (0, ∞)², with one displacement X coupled
    /// to a conjugate force; energy and displacement fluctuate independently.
    PowerLawWithVolume { nu: f64, n_x: f64 },
}

impl EntropyModel {
    /// Number of displacement coordinates the model carries.
    pub fn displacement_count(&self) -> usize {
        match self {
            EntropyModel::PowerLawWithVolume { .. } => 1,
            _ => 0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            EntropyModel::Gaussian { e0, sigma_s, theta_star } => {
                if !e0.is_finite() || !sigma_s.is_finite() || sigma_s <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "Gaussian entropy needs finite e0 and σ_s > 0, got e0={e0}, σ_s={sigma_s}"
                    )));
                }
                if !theta_star.is_finite() || theta_star <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "Gaussian entropy reference slope θ* must be positive, got {theta_star}"
                    )));
                }
            }
            EntropyModel::PowerLaw { nu } => {
                if !nu.is_finite() || nu < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "power-law exponent must be nonnegative, got {nu}"
                    )));
                }
            }
            EntropyModel::PowerLawWithVolume { nu, n_x } => {
                if !nu.is_finite() || nu < 0.0 || !n_x.is_finite() || n_x < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "power-law exponents must be nonnegative, got ν={nu}, n_x={n_x}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `S/k` at the given macrostate.
    pub fn s_over_k(&self, e: f64, x: &[f64]) -> Result<f64> {
        if x.len() != self.displacement_count() {
            return Err(Error::InvalidParameter(format!(
                "model carries {} displacement(s), got {}",
                self.displacement_count(),
                x.len()
            )));
        }
        match *self {
            EntropyModel::Gaussian { e0, sigma_s, theta_star } => {
                Ok(-(e - e0).powi(2) / (2.0 * sigma_s * sigma_s) + theta_star * e)
            }
            EntropyModel::PowerLaw { nu } => {
                if e <= 0.0 {
                    return Err(Error::Domain(format!("power-law entropy needs E > 0, got {e}")));
                }
                Ok(nu * e.ln())
            }
            EntropyModel::PowerLawWithVolume { nu, n_x } => {
                if e <= 0.0 || x[0] <= 0.0 {
                    return Err(Error::Domain(format!(
                        "volume model needs E > 0 and X > 0, got E={e}, X={}",
                        x[0]
                    )));
                }
                Ok(nu * e.ln() + n_x * x[0].ln())
            }
        }
    }

    /// `∂(S/k)/∂E`; independent of the displacements for all shipped models.
    fn ds_de_over_k(&self, e: f64) -> Result<f64> {
        match *self {
            EntropyModel::Gaussian { e0, sigma_s, theta_star } => {
                Ok(theta_star - (e - e0) / (sigma_s * sigma_s))
            }
            EntropyModel::PowerLaw { nu } | EntropyModel::PowerLawWithVolume { nu, .. } => {
                if e <= 0.0 {
                    return Err(Error::Domain(format!(
                        "entropy slope needs an interior energy E > 0, got {e}"
                    )));
                }
                Ok(nu / e)
            }
        }
    }

    /// Whether the fluctuation density vanishes at the edges of the energy
    /// support. The `Cov(E, β) = −k` identity comes from an integration by
    /// parts whose boundary terms must vanish; models failing this are still
    /// checked against the Cauchy–Schwarz inequality but the identity is
    /// downgraded to a warning.
    pub fn vanishes_at_boundary(&self) -> bool {
        match *self {
            EntropyModel::Gaussian { .. } => true,
            EntropyModel::PowerLaw { nu } => nu > 0.0,
            EntropyModel::PowerLawWithVolume { nu, .. } => nu > 0.0,
        }
    }
}

/// The environment the small system fluctuates against: its inverse
/// temperature, the conjugate forces, and the system's entropy model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacrostateEnvironment {
    pub theta0: Theta,
    pub forces: Vec<f64>,
    pub entropy: EntropyModel,
    pub units: Units,
}

impl MacrostateEnvironment {
    pub fn new(
        theta0: Theta,
        forces: Vec<f64>,
        entropy: EntropyModel,
        units: Units,
    ) -> Result<Self> {
        let env = MacrostateEnvironment { theta0, forces, entropy, units };
        env.validate()?;
        Ok(env)
    }

    /// Validates parameters and checks entropy concavity in E by sampled
    /// second differences across the bulk of the distribution.
    pub fn validate(&self) -> Result<()> {
        self.units.validate()?;
        self.entropy.validate()?;
        if !(self.theta0.value() > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "environment θ₀ must be positive, got {}",
                self.theta0.value()
            )));
        }
        if self.forces.len() != self.entropy.displacement_count() {
            return Err(Error::InvalidParameter(format!(
                "entropy model carries {} displacement(s) but {} force(s) were supplied",
                self.entropy.displacement_count(),
                self.forces.len()
            )));
        }
        if let Some(f) = self.forces.first() {
            if !f.is_finite() || *f <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "the conjugate force must be positive for a normalizable law, got {f}"
                )));
            }
        }

        let (lo, hi) = self.energy_window();
        let x_ref = self.reference_displacements();
        let h = (hi - lo) / 65.0;
        for i in 1..64 {
            let e = lo + h * i as f64;
            let (Ok(sm), Ok(s0), Ok(sp)) = (
                self.entropy.s_over_k(e - h, &x_ref),
                self.entropy.s_over_k(e, &x_ref),
                self.entropy.s_over_k(e + h, &x_ref),
            ) else {
                continue;
            };
            let second = sm - 2.0 * s0 + sp;
            if second > 1e-9 * (1.0 + s0.abs()) {
                return Err(Error::InvalidParameter(format!(
                    "entropy is not concave in E near E = {e} (second difference {second})"
                )));
            }
        }
        Ok(())
    }

    /// Energy window containing all but a negligible tail of the fluctuation
    /// law; used for quadrature and the grid sampler.
    fn energy_window(&self) -> (f64, f64) {
        let theta0 = self.theta0.value();
        match self.entropy {
            EntropyModel::Gaussian { e0, sigma_s, theta_star } => {
                let mean = e0 + (theta_star - theta0) * sigma_s * sigma_s;
                (mean - 40.0 * sigma_s, mean + 40.0 * sigma_s)
            }
            EntropyModel::PowerLaw { nu } | EntropyModel::PowerLawWithVolume { nu, .. } => {
                let shape = nu + 1.0;
                let mean = shape / theta0;
                let sd = shape.sqrt() / theta0;
                (mean * 1e-12, mean + 40.0 * sd)
            }
        }
    }

    fn displacement_window(&self) -> Option<(f64, f64)> {
        match self.entropy {
            EntropyModel::PowerLawWithVolume { n_x, .. } => {
                let rate = self.theta0.value() * self.forces[0];
                let shape = n_x + 1.0;
                let mean = shape / rate;
                let sd = shape.sqrt() / rate;
                Some((mean * 1e-12, mean + 40.0 * sd))
            }
            _ => None,
        }
    }

    fn reference_displacements(&self) -> Vec<f64> {
        self.displacement_window()
            .map(|(lo, hi)| vec![0.5 * (lo + hi)])
            .unwrap_or_default()
    }

    /// Unnormalized energy part of the log fluctuation law.
    fn log_q_energy(&self, e: f64) -> Result<f64> {
        let x_free = match self.entropy {
            // The volume term separates; the energy marginal ignores it.
            EntropyModel::PowerLawWithVolume { nu, .. } => EntropyModel::PowerLaw { nu },
            ref other => other.clone(),
        };
        Ok(-self.theta0.value() * e + x_free.s_over_k(e, &[])?)
    }

    fn log_q_displacement(&self, x: f64) -> Result<f64> {
        match self.entropy {
            EntropyModel::PowerLawWithVolume { n_x, .. } => {
                if x <= 0.0 {
                    return Err(Error::Domain(format!("displacement must be positive, got {x}")));
                }
                Ok(-self.theta0.value() * self.forces[0] * x + n_x * x.ln())
            }
            _ => Err(Error::Domain("model has no displacement coordinate".into())),
        }
    }

    /// Log normalization of the joint law, by quadrature. The shipped models
    /// separate in (E, X), so the joint constant is a sum of 1-d integrals.
    fn log_norm(&self) -> Result<f64> {
        let (lo, hi) = self.energy_window();
        let mut ln_n = log_integral(|e| self.log_q_energy(e), lo, hi)?;
        if let Some((xlo, xhi)) = self.displacement_window() {
            ln_n += log_integral(|x| self.log_q_displacement(x), xlo, xhi)?;
        }
        Ok(ln_n)
    }
}

/// `ln ∫ exp(g)` over `[lo, hi]`, shifted by the max of `g` for stability.
fn log_integral(g: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<f64> {
    let mut g_max = f64::NEG_INFINITY;
    for i in 0..=256 {
        let v = lo + (hi - lo) * i as f64 / 256.0;
        if let Ok(gv) = g(v) {
            g_max = g_max.max(gv);
        }
    }
    if !g_max.is_finite() {
        return Err(Error::Divergent(
            "fluctuation law has no finite maximum on its support".into(),
        ));
    }
    let integral = numeric::integrate(
        |v| g(v).map(|gv| (gv - g_max).exp()).unwrap_or(0.0),
        lo,
        hi,
        1e-10 * (hi - lo),
    )?;
    if !(integral > 0.0) {
        return Err(Error::Divergent("fluctuation law integrates to zero".into()));
    }
    Ok(g_max + integral.ln())
}

/// A batch of macrostate draws with the environment that produced them.
#[derive(Debug, Clone, Serialize)]
pub struct FluctuationSample {
    pub energies: Vec<f64>,
    pub displacements: Vec<Vec<f64>>,
    /// `β(Eᵢ) = k·∂S/∂E` at each draw.
    pub local_betas: Vec<f64>,
    /// Normalized draw weights; uniform for the iid samplers here.
    pub weights: Vec<f64>,
    pub env: MacrostateEnvironment,
    pub seed: u64,
    pub replica_id: u64,
}

/// Normalized log probability (density) of the macrostate `(E, X)`.
pub fn fluctuation_log_prob(env: &MacrostateEnvironment, e: f64, x: &[f64]) -> Result<f64> {
    env.validate()?;
    let mut ln_q = env.log_q_energy(e)?;
    match env.entropy.displacement_count() {
        0 if x.is_empty() => {}
        1 if x.len() == 1 => ln_q += env.log_q_displacement(x[0])?,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "expected {} displacement(s), got {}",
                env.entropy.displacement_count(),
                x.len()
            )))
        }
    }
    Ok(ln_q - env.log_norm()?)
}

/// Out-of-equilibrium inverse temperature of the macrostate:
/// `β(E) = ∂S/∂E`, in the paper's β units (k carried by the environment).
pub fn local_inverse_temperature(env: &MacrostateEnvironment, e: f64, x: &[f64]) -> Result<f64> {
    if x.len() != env.entropy.displacement_count() {
        return Err(Error::InvalidParameter(format!(
            "expected {} displacement(s), got {}",
            env.entropy.displacement_count(),
            x.len()
        )));
    }
    Ok(env.units.k * env.entropy.ds_de_over_k(e)?)
}

/// Draws `count` macrostates by direct sampling of the recognized families
/// (Normal for the Gaussian entropy, Gamma for the power laws).
pub fn sample_macrostates(
    env: &MacrostateEnvironment,
    count: usize,
    seed: u64,
    replica_id: u64,
) -> Result<FluctuationSample> {
    env.validate()?;
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let theta0 = env.theta0.value();
    let mut rng = derive_stream(seed, "macrostate-sample", replica_id);

    let energies: Vec<f64> = match env.entropy {
        EntropyModel::Gaussian { e0, sigma_s, theta_star } => {
            let mean = e0 + (theta_star - theta0) * sigma_s * sigma_s;
            let normal = Normal::new(mean, sigma_s)
                .map_err(|e| Error::InvalidParameter(format!("normal sampler: {e}")))?;
            (0..count).map(|_| normal.sample(&mut rng)).collect()
        }
        EntropyModel::PowerLaw { nu } | EntropyModel::PowerLawWithVolume { nu, .. } => {
            let gamma = Gamma::new(nu + 1.0, 1.0 / theta0)
                .map_err(|e| Error::InvalidParameter(format!("gamma sampler: {e}")))?;
            (0..count).map(|_| gamma.sample(&mut rng)).collect()
        }
    };

    let displacements: Vec<Vec<f64>> = match env.entropy {
        EntropyModel::PowerLawWithVolume { n_x, .. } => {
            let gamma = Gamma::new(n_x + 1.0, 1.0 / (theta0 * env.forces[0]))
                .map_err(|e| Error::InvalidParameter(format!("gamma sampler: {e}")))?;
            (0..count).map(|_| vec![gamma.sample(&mut rng)]).collect()
        }
        _ => vec![Vec::new(); count],
    };

    finish_sample(env, energies, displacements, count, seed, replica_id)
}

/// Draws `count` macrostates by inverse-CDF lookup on an adaptively placed
/// grid, using nothing but the log fluctuation law itself.
///
/// Slower than [`sample_macrostates`] but independent of the recognized-family
/// shortcuts, which makes it a cross-check of the direct sampler.
pub fn sample_macrostates_grid(
    env: &MacrostateEnvironment,
    count: usize,
    seed: u64,
    replica_id: u64,
) -> Result<FluctuationSample> {
    env.validate()?;
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let mut rng = derive_stream(seed, "macrostate-grid-sample", replica_id);

    let (lo, hi) = env.energy_window();
    let e_table = inverse_cdf_table(|e| env.log_q_energy(e), lo, hi)?;
    let energies: Vec<f64> = (0..count)
        .map(|_| e_table.draw(rng.random::<f64>()))
        .collect();

    let displacements: Vec<Vec<f64>> = match env.displacement_window() {
        Some((xlo, xhi)) => {
            let x_table = inverse_cdf_table(|x| env.log_q_displacement(x), xlo, xhi)?;
            (0..count)
                .map(|_| vec![x_table.draw(rng.random::<f64>())])
                .collect()
        }
        None => vec![Vec::new(); count],
    };

    finish_sample(env, energies, displacements, count, seed, replica_id)
}

fn finish_sample(
    env: &MacrostateEnvironment,
    energies: Vec<f64>,
    displacements: Vec<Vec<f64>>,
    count: usize,
    seed: u64,
    replica_id: u64,
) -> Result<FluctuationSample> {
    let local_betas = energies
        .iter()
        .zip(&displacements)
        .map(|(&e, x)| local_inverse_temperature(env, e, x))
        .collect::<Result<Vec<f64>>>()?;
    Ok(FluctuationSample {
        energies,
        displacements,
        local_betas,
        weights: vec![1.0 / count as f64; count],
        env: env.clone(),
        seed,
        replica_id,
    })
}

struct CdfTable {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl CdfTable {
    fn draw(&self, u: f64) -> f64 {
        let idx = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.grid[idx - 1] + frac * (self.grid[idx] - self.grid[idx - 1])
    }
}

/// Tabulates the CDF of `exp(log_q)` on a grid refined to the region that
/// actually carries mass: a coarse scan locates where the log density is
/// within 45 nats of its peak, then a dense trapezoidal table covers it.
fn inverse_cdf_table(
    log_q: impl Fn(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
) -> Result<CdfTable> {
    const COARSE: usize = 512;
    const FINE: usize = 16_384;

    let coarse: Vec<f64> = (0..=COARSE)
        .map(|i| {
            let v = lo + (hi - lo) * i as f64 / COARSE as f64;
            log_q(v).unwrap_or(f64::NEG_INFINITY)
        })
        .collect();
    let peak = coarse.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(Error::Divergent("density is zero everywhere on the window".into()));
    }
    let first = coarse.iter().position(|&v| v > peak - 45.0).unwrap_or(0);
    let last = coarse.iter().rposition(|&v| v > peak - 45.0).unwrap_or(COARSE);
    let zlo = lo + (hi - lo) * first.saturating_sub(1) as f64 / COARSE as f64;
    let zhi = lo + (hi - lo) * (last + 1).min(COARSE) as f64 / COARSE as f64;

    let grid: Vec<f64> = (0..=FINE)
        .map(|i| zlo + (zhi - zlo) * i as f64 / FINE as f64)
        .collect();
    let dens: Vec<f64> = grid
        .iter()
        .map(|&v| log_q(v).map(|g| (g - peak).exp()).unwrap_or(0.0))
        .collect();
    let mut cdf = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    cdf.push(0.0);
    for i in 1..grid.len() {
        acc += 0.5 * (dens[i - 1] + dens[i]) * (grid[i] - grid[i - 1]);
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::Divergent("density integrates to zero on the window".into()));
    }
    for c in &mut cdf {
        *c /= acc;
    }
    Ok(CdfTable { grid, cdf })
}

/// Measured moments of `(E, β(E))` against the covariance identity and the
/// uncertainty product.
#[derive(Debug, Clone, Serialize)]
pub struct CovarianceReport {
    pub sample_size: usize,
    pub cov_e_beta: f64,
    pub delta_e: f64,
    pub delta_beta: f64,
    /// 3σ bootstrap band on `cov_e_beta`.
    pub cov_band: f64,
    /// Whether `Cov(E, β) = −k` holds within the band. Meaningful only when
    /// `boundary_warning` is false.
    pub cov_identity_holds: bool,
    /// `ΔE·Δβ − |Cov(E,β)|`; nonnegative by Cauchy–Schwarz.
    pub cauchy_schwarz_margin: f64,
    /// `ΔE·Δβ / k`.
    pub product_over_k: f64,
    /// 3σ bootstrap band on `product_over_k`.
    pub product_band: f64,
    pub product_holds: bool,
    /// Set when the density does not vanish at the support edges, where the
    /// integration by parts behind the −k identity loses its boundary terms.
    pub boundary_warning: bool,
}

/// Checks the covariance identity `Cov(E, β) = −k`, the Cauchy–Schwarz
/// inequality `ΔE·Δβ ≥ |Cov|`, and the uncertainty product `ΔE·Δβ ≥ k` on a
/// macrostate sample. Needs at least 10³ draws.
pub fn covariance_identity_check(sample: &FluctuationSample) -> Result<CovarianceReport> {
    let n = sample.energies.len();
    if n < 1000 {
        return Err(Error::InsufficientData {
            needed: 1000,
            got: n,
            what: "macrostate draws for moment estimation".into(),
        });
    }
    let k = sample.env.units.k;
    let cov = stats::covariance(&sample.energies, &sample.local_betas)?;
    let delta_e = stats::std_dev(&sample.energies)?;
    let delta_beta = stats::std_dev(&sample.local_betas)?;

    let cov_sigma = stats::bootstrap_sigma_paired(
        &sample.energies,
        &sample.local_betas,
        300,
        sample.seed,
        "cov-identity-band",
        |es, bs| stats::covariance(es, bs).unwrap_or(0.0),
    )?;
    let product_sigma = stats::bootstrap_sigma_paired(
        &sample.energies,
        &sample.local_betas,
        300,
        sample.seed,
        "product-band",
        |es, bs| {
            let de = stats::std_dev(es).unwrap_or(0.0);
            let db = stats::std_dev(bs).unwrap_or(0.0);
            de * db
        },
    )?;

    let product = delta_e * delta_beta;
    let cov_band = 3.0 * cov_sigma;
    let product_band = 3.0 * product_sigma;
    Ok(CovarianceReport {
        sample_size: n,
        cov_e_beta: cov,
        delta_e,
        delta_beta,
        cov_band,
        cov_identity_holds: (cov + k).abs() <= cov_band,
        cauchy_schwarz_margin: product - cov.abs(),
        product_over_k: product / k,
        product_band: product_band / k,
        product_holds: product >= k - product_band,
        boundary_warning: !sample.env.entropy.vanishes_at_boundary(),
    })
}
