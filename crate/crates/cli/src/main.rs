//! `tcrab`: benchmark sweeps, oracle verification, and the identity test,
//! driven by JSON configs. Outputs are plot-ready CSV plus structured JSON,
//! byte-identical for a fixed config and seed at any thread count.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tcrab_core::bench::{
    run_benchmark, run_identity_sweep, verify_points, write_identity_outputs,
    write_outputs, BenchTimings, RunMode,
};
use tcrab_core::config::ExperimentConfig;
use tcrab_core::experiments::ExperimentKind;
use tcrab_core::{Error, Result};

/// The fast objective must match the master-equation integrator to this
/// absolute fidelity difference at every probe point.
const VERIFY_TOLERANCE: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "tcrab", version, about = "Time-optimized CRAB pulse benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the benchmark sweep and write plot-ready outputs.
    Run {
        /// Experiment config (JSON).
        config: PathBuf,
        /// Output directory; multi-seed configs get one subdirectory per seed.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Replace the config's seed list with this single master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Sweep worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Override the config's optimizer mode.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Cross-check the fast objective against the master-equation integrator
    /// at random (T, coefficient) draws.
    Verify {
        /// Experiment config (JSON).
        config: PathBuf,
        /// Master seed; defaults to the config's first seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of probe points.
        #[arg(long, default_value_t = 5)]
        points: usize,
    },
    /// Optimize toward doing nothing at every grid time. A flat zero curve
    /// means the controls can cancel the drift everywhere; oscillation means
    /// they cannot.
    IdentityTest {
        /// Experiment config (JSON).
        config: PathBuf,
        /// Output directory for identity_sweep.csv.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Master seed; defaults to the config's first seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the built-in experiments.
    ListExperiments,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Basinhopping,
    Bisection,
    Both,
}

impl From<ModeArg> for RunMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Basinhopping => RunMode::Basinhopping,
            ModeArg::Bisection => RunMode::Bisection,
            ModeArg::Both => RunMode::Both,
        }
    }
}

/// Reproducibility record written next to the data files: everything needed
/// to regenerate them byte-for-byte, plus the wall-clock cost of doing so.
#[derive(Serialize)]
struct RunManifest<'a> {
    artifact_version: &'static str,
    experiment: &'a str,
    config_sha256: &'a str,
    master_seed: u64,
    mode: RunMode,
    threads: usize,
    /// Derived stream seeds of the sweep runs actually executed.
    run_seeds: Vec<u64>,
    timings: &'a BenchTimings,
    outputs: &'a [String],
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TCRAB_LOG", "error"))
        .init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(1))
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, seed, threads, mode } => {
            cmd_run(&config, &out, seed, threads, mode)
        }
        Command::Verify { config, seed, points } => cmd_verify(&config, seed, points),
        Command::IdentityTest { config, out, seed } => cmd_identity_test(&config, &out, seed),
        Command::ListExperiments => {
            for kind in ExperimentKind::ALL {
                println!("{:<16} {}", kind.name(), describe(kind));
            }
            Ok(())
        }
    }
}

fn describe(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Josephson => {
            "two Josephson charge qubits, ZZ coupling control, Bell-state target"
        }
        ExperimentKind::Lmg => {
            "collective-spin model, global Z field control, even-parity superposition target"
        }
        ExperimentKind::SpinCzSwap => "two spin qubits, exchange control, CZ gate target",
        ExperimentKind::SpinCzDipole => "two spin qubits, dipolar ZZ control, CZ gate target",
    }
}

fn cmd_run(
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
    threads: usize,
    mode: Option<ModeArg>,
) -> Result<()> {
    let (mut config, config_sha256) = ExperimentConfig::from_path(config_path)?;
    if let Some(m) = mode {
        config.optimizer.mode = m.into();
    }
    let seeds = match seed {
        Some(s) => vec![s],
        None => config.seeds.clone(),
    };
    let experiment = config.experiment()?;

    let mut first_failure: Option<String> = None;
    for &master_seed in &seeds {
        let dir = if seeds.len() == 1 {
            out.to_path_buf()
        } else {
            out.join(format!("seed-{master_seed}"))
        };
        let settings = config.settings(master_seed, threads);
        let (report, timings) = run_benchmark(&experiment, &settings)?;
        let outputs = write_outputs(&report, &dir)?;

        let manifest = RunManifest {
            artifact_version: env!("CARGO_PKG_VERSION"),
            experiment: &report.experiment,
            config_sha256: &config_sha256,
            master_seed,
            mode: settings.mode,
            threads,
            run_seeds: report.runs.iter().map(|r| r.seed).collect(),
            timings: &timings,
            outputs: &outputs,
        };
        write_json(&dir.join("manifest.json"), &manifest)?;

        match (report.best_infidelity, report.t_opt) {
            (Some(f), Some(t)) => println!(
                "seed {master_seed}: best infidelity {f:.6e} at T = {t:.4} \
                 ({:.1} s) -> {}",
                timings.total_seconds,
                dir.display()
            ),
            _ => println!(
                "seed {master_seed}: no successful runs ({:.1} s) -> {}",
                timings.total_seconds,
                dir.display()
            ),
        }

        if !report.is_clean() {
            let detail = report
                .failures
                .first()
                .map(|f| format!("run {} (T = {:.4}): {}", f.index, f.t_init, f.message))
                .or_else(|| report.bisection_error.clone())
                .unwrap_or_else(|| "unknown failure".into());
            eprintln!(
                "seed {master_seed}: {} of {} runs failed; partial outputs kept",
                report.failures.len(),
                settings.n_points
            );
            first_failure.get_or_insert(format!("seed {master_seed}: {detail}"));
        }
    }

    match first_failure {
        Some(msg) => Err(Error::Numerical(msg)),
        None => Ok(()),
    }
}

fn cmd_verify(config_path: &Path, seed: Option<u64>, points: usize) -> Result<()> {
    let (config, _) = ExperimentConfig::from_path(config_path)?;
    let experiment = config.experiment()?;
    let master_seed = seed.unwrap_or(config.seeds[0]);
    let rows = verify_points(&experiment, points, master_seed)?;
    for row in &rows {
        let line = serde_json::to_string(row)
            .map_err(|e| Error::Numerical(format!("row serialization: {e}")))?;
        println!("{line}");
    }
    let sound = rows.iter().all(|r| r.certified);
    let worst = rows
        .iter()
        .max_by(|a, b| a.abs_diff.total_cmp(&b.abs_diff))
        .ok_or_else(|| Error::Config("verify needs at least one probe point".into()))?;
    if worst.abs_diff < VERIFY_TOLERANCE && sound {
        println!(
            "verify ok: max |dF| = {:.3e} over {} points, commutation certificate sound",
            worst.abs_diff,
            rows.len()
        );
        Ok(())
    } else {
        Err(Error::Verification(format!(
            "max |dF| = {:.6e} at T = {:.6}, seed = {}{}",
            worst.abs_diff,
            worst.t,
            worst.seed,
            if sound { "" } else { "; commutation certificate failed" }
        )))
    }
}

fn cmd_identity_test(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let (config, _) = ExperimentConfig::from_path(config_path)?;
    let experiment = config.experiment()?;
    let master_seed = seed.unwrap_or(config.seeds[0]);
    let settings = config.settings(master_seed, 0);
    let points =
        run_identity_sweep(&experiment, settings.n_points, master_seed, &settings.local)?;
    write_identity_outputs(&points, out)?;

    let max = points.iter().map(|p| p.infidelity).fold(f64::NEG_INFINITY, f64::max);
    let min = points.iter().map(|p| p.infidelity).fold(f64::INFINITY, f64::min);
    println!(
        "identity sweep over {} grid times: infidelity in [{:.3e}, {:.3e}] -> {}",
        points.len(),
        min,
        max,
        out.display()
    );
    if max < 1e-8 {
        println!("drift cancellable: every grid time reaches the identity");
    } else {
        let ratio = if min > 0.0 { max / min } else { f64::INFINITY };
        if ratio > 10.0 {
            println!("oscillation detected: max/min infidelity ratio {ratio:.1}");
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::Numerical(format!("serialization: {e}")))?;
    json.push(b'\n');
    std::fs::write(path, json)?;
    Ok(())
}
