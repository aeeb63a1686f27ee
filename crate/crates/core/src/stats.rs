//! Small statistics toolkit: moments, bootstrap bands, autocorrelation times.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::derive_stream;

/// Arithmetic mean. Returns 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (denominator `n - 1`).
///
/// Errors unless at least two points are supplied.
pub fn variance(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: xs.len(),
            what: "sample variance".into(),
        });
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Ok(ss / (xs.len() - 1) as f64)
}

/// Unbiased sample standard deviation.
pub fn std_dev(xs: &[f64]) -> Result<f64> {
    variance(xs).map(f64::sqrt)
}

/// Unbiased sample covariance between paired observations.
pub fn covariance(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter(format!(
            "covariance inputs must pair up, got {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: xs.len(),
            what: "sample covariance".into(),
        });
    }
    let mx = mean(xs);
    let my = mean(ys);
    let s: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(s / (xs.len() - 1) as f64)
}

/// Sample skewness (biased, moment-ratio form), used for shape diagnostics.
pub fn skewness(xs: &[f64]) -> Result<f64> {
    if xs.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: xs.len(),
            what: "sample skewness".into(),
        });
    }
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2: f64 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3: f64 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return Ok(0.0);
    }
    Ok(m3 / m2.powf(1.5))
}

/// One-sigma bootstrap spread of a statistic under resampling of `xs`.
///
/// Resampling indices come from a derived stream, so the band is reproducible
/// and does not perturb any other random stream in the run.
pub fn bootstrap_sigma<F>(xs: &[f64], resamples: usize, seed: u64, label: &str, stat: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if xs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: xs.len(),
            what: "bootstrap".into(),
        });
    }
    let mut rng = derive_stream(seed, label, 0);
    let mut buf = vec![0.0; xs.len()];
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for slot in buf.iter_mut() {
            *slot = xs[rng.random_range(0..xs.len())];
        }
        values.push(stat(&buf));
    }
    std_dev(&values)
}

/// Paired bootstrap: resamples row indices shared across both columns.
pub fn bootstrap_sigma_paired<F>(
    xs: &[f64],
    ys: &[f64],
    resamples: usize,
    seed: u64,
    label: &str,
    stat: F,
) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter(
            "paired bootstrap needs equal-length columns".into(),
        ));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: xs.len(),
            what: "paired bootstrap".into(),
        });
    }
    let mut rng = derive_stream(seed, label, 0);
    let mut bx = vec![0.0; xs.len()];
    let mut by = vec![0.0; ys.len()];
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for i in 0..bx.len() {
            let j = rng.random_range(0..xs.len());
            bx[i] = xs[j];
            by[i] = ys[j];
        }
        values.push(stat(&bx, &by));
    }
    std_dev(&values)
}

/// Index bootstrap: resamples row indices and hands them to the statistic,
/// for estimators built from several parallel per-row arrays.
pub fn bootstrap_sigma_indices<F>(
    n: usize,
    resamples: usize,
    seed: u64,
    label: &str,
    stat: F,
) -> Result<f64>
where
    F: Fn(&[usize]) -> f64,
{
    if n < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: n,
            what: "index bootstrap".into(),
        });
    }
    let mut rng = derive_stream(seed, label, 0);
    let mut idx = vec![0usize; n];
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for slot in idx.iter_mut() {
            *slot = rng.random_range(0..n);
        }
        values.push(stat(&idx));
    }
    std_dev(&values)
}

/// Integrated autocorrelation time with automatic windowing.
///
/// Uses the standard self-consistent window: the sum `τ(W) = 1 + 2·Σ ρ_t`
/// is truncated at the smallest `W` with `W ≥ c·τ(W)`, `c = 5`. Returns the
/// time in units of the series spacing, together with the window used.
pub fn integrated_autocorr_time(series: &[f64]) -> Result<(f64, usize)> {
    let n = series.len();
    if n < 8 {
        return Err(Error::InsufficientData {
            needed: 8,
            got: n,
            what: "autocorrelation time".into(),
        });
    }
    let m = mean(series);
    let centered: Vec<f64> = series.iter().map(|x| x - m).collect();
    let c0: f64 = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        // A constant series decorrelates instantly.
        return Ok((1.0, 0));
    }
    const C: f64 = 5.0;
    let max_lag = n / 3;
    let mut tau = 1.0;
    let mut window = max_lag;
    let mut sum = 0.0;
    for t in 1..=max_lag {
        let mut acc = 0.0;
        for i in 0..n - t {
            acc += centered[i] * centered[i + t];
        }
        let rho = acc / ((n - t) as f64 * c0);
        sum += rho;
        tau = 1.0 + 2.0 * sum;
        if (t as f64) >= C * tau {
            window = t;
            break;
        }
    }
    Ok((tau.max(1e-12), window))
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter(
            "linear fit needs two or more paired points".into(),
        ));
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("linear fit with degenerate abscissa".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
