//! `thermoclock`: runs the library's experiment families from flat config
//! files and writes deterministic JSON/CSV reports.
//!
//! Verbs: `run` (one experiment), `sweep` (one experiment per axis value,
//! aggregated CSV), `validate` (config check only), `list-models`.
//! Exit codes: 0 all checks pass, 1 at least one check fails beyond its
//! band, 2 configuration error, 3 numerical failure.

mod config;
mod experiments;
mod report;
mod sweep;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thermoclock_core::Error;

use config::Config;

/// Default output directory when neither `--out` nor the config gives one.
const OUT_ENV: &str = "THERMOCLOCK_OUT";

#[derive(Parser)]
#[command(name = "thermoclock", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Run(RunArgs),
    /// Run one experiment per value of a numeric config field.
    Sweep(SweepArgs),
    /// Parse and validate a config without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the model families and their config keys.
    ListModels,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config file's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: config `out` key, then $THERMOCLOCK_OUT,
    /// then the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Numeric config field to sweep.
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Run up to N sweep points concurrently.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

/// Maps library errors onto the documented exit codes: bad inputs are 2,
/// runtime numerical trouble is 3.
pub(crate) fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_)
        | Error::Domain(_)
        | Error::Divergent(_)
        | Error::InsufficientData { .. } => 2,
        Error::Saturated(_) | Error::Convergence(_) | Error::NumericalFailure(_) => 3,
    }
}

fn fail(e: &Error) -> ! {
    eprintln!("error: {e}");
    std::process::exit(exit_code(e));
}

fn load_config(path: &Path, seed: Option<u64>) -> Config {
    let mut cfg = match Config::load(path) {
        Ok(cfg) => cfg,
        Err(e) => fail(&e),
    };
    if let Some(seed) = seed {
        cfg.set("seed", seed.to_string());
    }
    cfg
}

fn resolve_out_dir(flag: Option<PathBuf>, cfg: &Config) -> PathBuf {
    flag.or_else(|| cfg.out_dir().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write_file(dir: &Path, name: &str, contents: &str) {
    if let Err(e) = std::fs::create_dir_all(dir)
        .and_then(|()| std::fs::write(dir.join(name), contents))
    {
        fail(&Error::InvalidParameter(format!(
            "cannot write {}: {e}",
            dir.join(name).display()
        )));
    }
}

fn main() {
    match Cli::parse().command {
        Command::Run(args) => run_verb(args),
        Command::Sweep(args) => sweep_verb(args),
        Command::Validate { config } => validate_verb(&config),
        Command::ListModels => {
            print!("{}", list_models());
            std::process::exit(0);
        }
    }
}

fn run_verb(args: RunArgs) -> ! {
    let cfg = load_config(&args.config, args.seed);
    let out_dir = resolve_out_dir(args.out, &cfg);
    let experiment = match experiments::prepare(&cfg) {
        Ok(exp) => exp,
        Err(e) => fail(&e),
    };
    let started = Instant::now();
    let mut output = match experiment.execute() {
        Ok(output) => output,
        Err(e) => fail(&e),
    };
    output.report.wall_time_seconds = started.elapsed().as_secs_f64();

    write_file(&out_dir, "report.json", &output.report.to_json());
    for (name, contents) in &output.files {
        write_file(&out_dir, name, contents);
    }
    for note in &output.notes {
        eprintln!("note: {note}");
    }
    match args.format {
        Format::Table => print!("{}", output.report.to_table()),
        Format::Json => print!("{}", output.report.to_json()),
        Format::Csv => print!("{}", output.report.to_csv()),
    }
    std::process::exit(if output.report.pass { 0 } else { 1 });
}

fn sweep_verb(args: SweepArgs) -> ! {
    let cfg = load_config(&args.run.config, args.run.seed);
    let out_dir = resolve_out_dir(args.run.out, &cfg);
    let outcome = match sweep::run_sweep(&cfg, &args.axis, &args.values, args.parallel) {
        Ok(outcome) => outcome,
        Err(e) => fail(&e),
    };
    write_file(&out_dir, "sweep.csv", &outcome.csv);
    write_file(&out_dir, "plot_sweep.py", sweep::PLOT_SWEEP);
    for line in &outcome.summary {
        println!("{line}");
    }
    std::process::exit(outcome.worst);
}

fn validate_verb(path: &Path) -> ! {
    let cfg = load_config(path, None);
    match experiments::prepare(&cfg) {
        Ok(exp) => {
            println!("configuration ok: experiment {}", exp.name);
            std::process::exit(0);
        }
        Err(e) => fail(&e),
    }
}

fn list_models() -> String {
    let mut out = String::new();
    out.push_str("ensemble models (tur-inference, chain energy = ensemble):\n");
    out.push_str("  ideal-gas    model.n, model.d\n");
    out.push_str("  harmonic     model.n\n");
    out.push_str("  two-level    model.n, model.gap\n");
    out.push_str("  ising        model.n, model.coupling, model.field\n");
    out.push_str("entropy models (tur-fluctuation):\n");
    out.push_str("  gaussian          entropy.e0, entropy.sigma_s, entropy.theta_star\n");
    out.push_str("  power-law         entropy.nu\n");
    out.push_str("  power-law-volume  entropy.nu, entropy.n_x, force\n");
    out.push_str("frequency models (chain):\n");
    out.push_str("  static\n");
    out.push_str("  mean-reverting    process.correlation_time\n");
    out.push_str("experiments: ");
    out.push_str(&experiments::EXPERIMENTS.join(", "));
    out.push('\n');
    out
}
