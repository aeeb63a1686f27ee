//! End-to-end acceptance checks, one test per shipped claim. Each test
//! prints a single `criterion N (...) : PASS/FAIL` verdict line; the
//! assertions carry the per-configuration details.

use thermoclock_core::clock::{
    chain_verify, taylor_remainder_check, ChainConfig, ChainReport, ClockProcess, EnergySpec,
    FrequencyModel, Kinematics,
};
use thermoclock_core::ensembles::IsingSamplerOptions;
use thermoclock_core::fluctuation::{
    covariance_identity_check, run_exchange, sample_macrostates, EntropyModel, ExchangeConfig,
    MacrostateEnvironment,
};
use thermoclock_core::inference::{
    estimator_study, estimator_study_with, fisher_information, fisher_information_quadrature,
    gibbs_boltzmann_temperatures,
};
use thermoclock_core::{stats, EnsembleModel, Theta, Units};

/// Monte Carlo allowance on quantities estimated from finite replica sets.
const EPS_MC: f64 = 0.02;

fn verdict(number: u32, name: &str, ok: bool) {
    println!("criterion {number} ({name}): {}", if ok { "PASS" } else { "FAIL" });
}

/// Estimator spread saturates the information bound across all four model
/// families and three temperatures each: cr_ratio in [0.95, 1.2] and
/// uncertainty product at least 1 − EPS_MC.
#[test]
fn criterion_1_estimator_efficiency_floor() {
    let configs: [(EnsembleModel, f64, u64); 12] = [
        (EnsembleModel::IdealGas { n: 10, d: 3 }, 0.5, 221),
        (EnsembleModel::IdealGas { n: 10, d: 3 }, 1.0, 202),
        (EnsembleModel::IdealGas { n: 10, d: 3 }, 2.0, 203),
        (EnsembleModel::HarmonicOscillators { n: 6 }, 0.5, 204),
        (EnsembleModel::HarmonicOscillators { n: 6 }, 1.0, 205),
        (EnsembleModel::HarmonicOscillators { n: 6 }, 2.0, 206),
        (EnsembleModel::TwoLevel { n: 20, gap: 1.0 }, 0.3, 207),
        (EnsembleModel::TwoLevel { n: 20, gap: 1.0 }, 1.0, 208),
        (EnsembleModel::TwoLevel { n: 20, gap: 1.0 }, 2.0, 229),
        (EnsembleModel::IsingChain { n: 8, coupling: 1.0, field: 0.0 }, 0.3, 230),
        (EnsembleModel::IsingChain { n: 8, coupling: 1.0, field: 0.0 }, 0.5, 211),
        (EnsembleModel::IsingChain { n: 8, coupling: 1.0, field: 0.0 }, 0.8, 212),
    ];
    // Metropolis draws decorrelate before they enter the variance estimate;
    // the direct samplers ignore the options.
    let opts = IsingSamplerOptions { thinning_sweeps: 20, ..IsingSamplerOptions::default() };

    let mut failures = Vec::new();
    for (model, theta, seed) in &configs {
        let report =
            estimator_study_with(model, Theta(*theta), 10_000, 200, *seed, &opts).unwrap();
        let line = format!(
            "{} θ={theta}: cr_ratio={:.4} product={:.4}",
            model.family(),
            report.cr_ratio,
            report.uncertainty_product
        );
        println!("  {line}");
        let ok = (0.95..=1.2).contains(&report.cr_ratio)
            && report.uncertainty_product >= 1.0 - EPS_MC;
        if !ok {
            failures.push(line);
        }
    }
    verdict(1, "estimator efficiency floor", failures.is_empty());
    assert!(failures.is_empty(), "out of band: {failures:#?}");
}

/// Closed-form and quadrature Fisher information agree to 1e-4 relative
/// for every model family.
#[test]
fn criterion_2_fisher_information_dual_route() {
    let cases = [
        (EnsembleModel::IdealGas { n: 10, d: 3 }, 0.7),
        (EnsembleModel::HarmonicOscillators { n: 4 }, 1.3),
        (EnsembleModel::TwoLevel { n: 12, gap: 0.8 }, 0.9),
        (EnsembleModel::IsingChain { n: 6, coupling: 1.0, field: 0.3 }, 0.5),
    ];
    let mut worst: f64 = 0.0;
    for (model, theta) in &cases {
        let closed = fisher_information(model, Theta(*theta)).unwrap();
        let quad = fisher_information_quadrature(model, Theta(*theta)).unwrap();
        let rel = (closed - quad).abs() / closed;
        println!("  {}: closed={closed:.10e} quadrature={quad:.10e} rel={rel:.2e}", model.family());
        worst = worst.max(rel);
    }
    verdict(2, "Fisher information dual route", worst <= 1e-4);
    assert!(worst <= 1e-4, "worst relative disagreement {worst:.3e}");
}

/// Sampled macrostates reproduce Cov(E, β) = −k, never violate
/// Cauchy–Schwarz, and the Gaussian environment saturates ΔE·Δβ = k.
#[test]
fn criterion_3_covariance_identity() {
    let units = Units::default();
    let gaussian = MacrostateEnvironment::new(
        Theta(1.0),
        vec![],
        EntropyModel::Gaussian { e0: 8.0, sigma_s: 1.5, theta_star: 1.0 },
        units,
    )
    .unwrap();
    let gamma = MacrostateEnvironment::new(
        Theta(1.0),
        vec![],
        EntropyModel::PowerLaw { nu: 2.0 },
        units,
    )
    .unwrap();

    let mut ok = true;
    for (name, env) in [("gaussian", &gaussian), ("power-law", &gamma)] {
        let sample = sample_macrostates(env, 100_000, 3101, 0).unwrap();
        let report = covariance_identity_check(&sample).unwrap();
        let scale = report.delta_e * report.delta_beta;
        println!(
            "  {name}: cov={:.5} band={:.5} cs_margin={:.3e} product/k={:.4}",
            report.cov_e_beta, report.cov_band, report.cauchy_schwarz_margin,
            report.product_over_k
        );
        ok &= report.cov_identity_holds;
        ok &= report.cauchy_schwarz_margin >= -1e-12 * (1.0 + scale);
        if name == "gaussian" {
            ok &= report.product_holds
                && (report.product_over_k - 1.0).abs() <= report.product_band.max(EPS_MC);
        }
    }
    verdict(3, "covariance identity", ok);
    assert!(ok);
}

/// The two temperature definitions disagree by exactly a/(a−1) and the
/// relative gap decays as 1/N.
#[test]
fn criterion_4_temperature_definitions_converge() {
    let units = Units::default();
    let sizes = [2u32, 4, 8, 16, 32];
    let mut log_n = Vec::new();
    let mut log_gap = Vec::new();
    let mut ratio_ok = true;
    for &n in &sizes {
        let model = EnsembleModel::IdealGas { n, d: 3 };
        let a = model.gamma_shape().unwrap();
        let energy = 1.5 * n as f64;
        let (t_b, t_g) = gibbs_boltzmann_temperatures(&model, energy, &units).unwrap();
        let ratio = t_b / t_g;
        let expected = a / (a - 1.0);
        ratio_ok &= (ratio - expected).abs() <= 1e-10 * expected;
        let gap = (t_b - t_g) / t_b;
        log_n.push((n as f64).ln());
        log_gap.push(gap.ln());
        println!("  N={n}: T_B/T_G={ratio:.12} expected={expected:.12} gap={gap:.6}");
    }
    let (slope, _) = stats::linear_fit(&log_n, &log_gap).unwrap();
    println!("  gap slope = {slope:.4}");
    let ok = ratio_ok && (slope + 1.0).abs() <= 0.05;
    verdict(4, "temperature definitions converge", ok);
    assert!(ok, "ratio_ok={ratio_ok} slope={slope}");
}

/// Relativistic clock/wave split: ν_c·ν_w = ν₀², V_ph·v = c², λ·p = h
/// across the subluminal range, plus the v = 0.6c worked point.
#[test]
fn criterion_5_kinematic_identities() {
    let units = Units { k: 1.0, h: 0.7, c: 2.2 };
    let m0 = 1.3;
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let frac = -0.99 + 1.98 * i as f64 / 99.0;
        let kin = Kinematics::new(units, m0, frac * units.c).unwrap();
        let nu0 = kin.rest_frequency();
        let freq = (kin.clock_frequency() * kin.wave_frequency() / (nu0 * nu0) - 1.0).abs();
        let disp = (kin.phase_velocity().unwrap() * kin.v / (units.c * units.c) - 1.0).abs();
        let wave = (kin.de_broglie_wavelength().unwrap() * kin.momentum().abs() / units.h - 1.0)
            .abs();
        worst = worst.max(freq).max(disp).max(wave);
    }
    println!("  worst relative identity error over sweep: {worst:.3e}");

    let si = Units { k: 1.0, h: 1.0, c: 1.0 };
    let kin = Kinematics::new(si, 1.0, 0.6).unwrap();
    let point_ok = (kin.clock_frequency() - 0.8).abs() <= 1e-12
        && (kin.gamma() - 1.25).abs() <= 1e-12
        && (kin.phase_velocity().unwrap() - 5.0 / 3.0).abs() <= 1e-12
        && (kin.de_broglie_wavelength().unwrap() - 4.0 / 3.0).abs() <= 1e-12;
    println!(
        "  v=0.6c: ν_c={:.6} γ={:.6} V_ph={:.6} λ={:.6}",
        kin.clock_frequency(),
        kin.gamma(),
        kin.phase_velocity().unwrap(),
        kin.de_broglie_wavelength().unwrap()
    );

    let ok = worst <= 1e-12 && point_ok;
    verdict(5, "kinematic identities", ok);
    assert!(ok, "sweep worst {worst:.3e}, worked point ok = {point_ok}");
}

/// The inverse-frequency Taylor remainder scales quadratically with the
/// relative spread: log–log slope 2 ± 0.1 under common random numbers.
#[test]
fn criterion_6_taylor_remainder_scaling() {
    let spreads = [0.02, 0.04, 0.08, 0.16];
    let mut log_s = Vec::new();
    let mut log_gap = Vec::new();
    let mut each_pass = true;
    for &spread in &spreads {
        let process = ClockProcess::new(
            1.0,
            spread,
            FrequencyModel::StaticDisorder,
            0.01,
            10.0,
            20_000,
            61,
        )
        .unwrap();
        let report = taylor_remainder_check(&process).unwrap();
        each_pass &= report.pass;
        log_s.push(spread.ln());
        log_gap.push(report.gap_mean_inverse.ln());
        println!(
            "  spread={spread}: gap={:.3e} scale={:.3e} pass={}",
            report.gap_mean_inverse, report.leading_scale, report.pass
        );
    }
    let (slope, _) = stats::linear_fit(&log_s, &log_gap).unwrap();
    println!("  remainder slope = {slope:.4}");
    let ok = each_pass && (slope - 2.0).abs() <= 0.1;
    verdict(6, "Taylor remainder scaling", ok);
    assert!(ok, "slope {slope}, per-spread pass {each_pass}");
}

fn chain_summary(name: &str, report: &ChainReport) {
    println!(
        "  {name}: min ΔE·Δt/h = {:.4} at t = {:.4}, all_pass={}",
        report.min_product_over_h,
        report.min_product_time,
        report.all_pass()
    );
    for record in &report.records {
        println!(
            "    {}: margin={:+.4e} band={:.3e} pass={}",
            record.name, record.margin, record.sigma_band, record.pass
        );
    }
}

/// End-to-end chain: both shipped disorder levels satisfy every recorded
/// inequality at all sweep times and pin the minimum product.
#[test]
fn criterion_7_chain_end_to_end() {
    let saturated = chain_verify(&ChainConfig::new(
        EnergySpec::Gaussian { theta0: 1.0, delta_e: 10.0, product_k: 1.0 },
        FrequencyModel::StaticDisorder,
        20_000,
        71,
    ))
    .unwrap();
    chain_summary("saturated", &saturated);

    let five_k = chain_verify(&ChainConfig::new(
        EnergySpec::Gaussian { theta0: 1.0, delta_e: 50.0, product_k: 5.0 },
        FrequencyModel::StaticDisorder,
        20_000,
        72,
    ))
    .unwrap();
    chain_summary("5k spread", &five_k);

    let product_band_rel = |r: &ChainReport| {
        let rec = &r.records[4];
        rec.sigma_band / rec.lhs
    };
    let ok = saturated.all_pass()
        && (1.0 - EPS_MC..=1.2).contains(&saturated.min_product_over_h)
        && product_band_rel(&saturated) <= EPS_MC
        && five_k.all_pass()
        && five_k.min_product_over_h >= 5.0 * (1.0 - EPS_MC)
        && product_band_rel(&five_k) <= EPS_MC;
    verdict(7, "inequality chain end to end", ok);
    assert!(
        ok,
        "saturated min {} (band rel {:.4}), 5k min {} (band rel {:.4})",
        saturated.min_product_over_h,
        product_band_rel(&saturated),
        five_k.min_product_over_h,
        product_band_rel(&five_k)
    );
}

/// Exchange dynamics: energy conserved to 1e-12 over 1e6 steps, the
/// two-subsystem single-unit case is uniform (KS at 1%), and fluctuation
/// timescales sit above the unit timescale in the shipped configuration.
#[test]
fn criterion_8_exchange_statistics() {
    let big = run_exchange(&ExchangeConfig {
        m: 4,
        n: 64,
        e_total: 256.0,
        steps: 1_000_000,
        exchange_rate: 0.5,
        seed: 81,
        record_stride: 0,
    })
    .unwrap();
    println!(
        "  m=4 n=64: drift={:.2e} τ_unit={:.1} τ_fl={:.1} separated={}",
        big.max_drift_rel, big.tau_unit, big.tau_subsystem_total, big.timescales_separated
    );

    let pair = run_exchange(&ExchangeConfig {
        m: 2,
        n: 1,
        e_total: 2.0,
        steps: 200_000,
        exchange_rate: 1.0,
        seed: 82,
        record_stride: 4,
    })
    .unwrap();
    let mut values: Vec<f64> = pair.stationary_records(0).to_vec();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let count = values.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in values.iter().enumerate() {
        let cdf = v / pair.config.e_total;
        d = d.max((cdf - i as f64 / count).abs());
        d = d.max(((i + 1) as f64 / count - cdf).abs());
    }
    let ks = d * count.sqrt();
    println!("  m=2 n=1: KS statistic = {ks:.3} over {} stationary records", values.len());

    let ok = big.max_drift_rel < 1e-12 && big.timescales_separated && ks < 1.63;
    verdict(8, "exchange statistics", ok);
    assert!(
        ok,
        "drift {:.2e}, separated {}, KS {ks:.3}",
        big.max_drift_rel, big.timescales_separated
    );
}

/// Identical seeds reproduce byte-identical reports across every
/// simulation entry point.
#[test]
fn criterion_9_deterministic_replay() {
    let model = EnsembleModel::IdealGas { n: 4, d: 3 };
    let est: Vec<String> = (0..2)
        .map(|_| {
            serde_json::to_string(&estimator_study(&model, Theta(1.0), 2_000, 50, 42).unwrap())
                .unwrap()
        })
        .collect();

    let env = MacrostateEnvironment::new(
        Theta(1.0),
        vec![],
        EntropyModel::PowerLaw { nu: 2.0 },
        Units::default(),
    )
    .unwrap();
    let cov: Vec<String> = (0..2)
        .map(|_| {
            let sample = sample_macrostates(&env, 5_000, 42, 0).unwrap();
            serde_json::to_string(&covariance_identity_check(&sample).unwrap()).unwrap()
        })
        .collect();

    let exchange_config = ExchangeConfig {
        m: 2,
        n: 2,
        e_total: 4.0,
        steps: 10_000,
        exchange_rate: 0.5,
        seed: 42,
        record_stride: 1,
    };
    let exch: Vec<String> = (0..2)
        .map(|_| serde_json::to_string(&run_exchange(&exchange_config).unwrap()).unwrap())
        .collect();

    let chain_config = ChainConfig::new(
        EnergySpec::Gaussian { theta0: 1.0, delta_e: 10.0, product_k: 1.0 },
        FrequencyModel::MeanReverting { correlation_time: 5.0 },
        300,
        42,
    );
    let chain: Vec<String> = (0..2)
        .map(|_| serde_json::to_string(&chain_verify(&chain_config).unwrap()).unwrap())
        .collect();

    let ok = est[0] == est[1] && cov[0] == cov[1] && exch[0] == exch[1] && chain[0] == chain[1];
    verdict(9, "deterministic replay", ok);
    assert!(ok, "estimator {} covariance {} exchange {} chain {}",
        est[0] == est[1], cov[0] == cov[1], exch[0] == exch[1], chain[0] == chain[1]);
}
