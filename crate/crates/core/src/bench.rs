//! Sweep harness and plot-ready writers.
//!
//! One benchmark: for every grid time T_i, a fixed-time solve and a
//! time-optimizing solve seeded at T_i, plus a single bisection run. All
//! runs share one frequency draw, and each run owns an RNG stream derived
//! from the master seed and its grid index, so the report and every output
//! file are byte-identical at any thread count.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::experiments::{identity_test, sweep_grid, Experiment, IdentityPoint};
use crate::lindblad::{
    commutator_norm, dissipator_superop, hamiltonian_superop, oracle_fidelity,
};
use crate::optimize::{
    crab_optimize_cold, tcrab_basinhopping, tcrab_bisection, BasinHoppingConfig,
    BisectionConfig, ConvergedReason, CrabEvaluator, LocalConfig,
};
use crate::{Error, Result};

/// Which time optimizers a benchmark executes. The fixed-time baseline runs
/// whenever the grid sweep does; bisection-only mode skips the sweep
/// entirely, that being its point.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Basinhopping,
    Bisection,
    Both,
}

impl RunMode {
    pub fn name(self) -> &'static str {
        match self {
            RunMode::Basinhopping => "basinhopping",
            RunMode::Bisection => "bisection",
            RunMode::Both => "both",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        [RunMode::Basinhopping, RunMode::Bisection, RunMode::Both]
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown mode {name:?}")))
    }

    pub fn runs_sweep(self) -> bool {
        matches!(self, RunMode::Basinhopping | RunMode::Both)
    }

    pub fn runs_bisection(self) -> bool {
        matches!(self, RunMode::Bisection | RunMode::Both)
    }
}

/// SplitMix64 finalizer: decorrelates consecutive inputs.
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The RNG seed owned by one grid run. Runs neither share state nor depend
/// on execution order.
pub fn run_seed(master_seed: u64, run_index: usize) -> u64 {
    let stride = 0x9E37_79B9_7F4A_7C15u64;
    splitmix64(master_seed.wrapping_add((run_index as u64 + 1).wrapping_mul(stride)))
}

#[derive(Clone, Debug)]
pub struct BenchSettings {
    pub mode: RunMode,
    pub n_points: usize,
    pub master_seed: u64,
    /// 0 picks the default pool size.
    pub threads: usize,
    pub local: LocalConfig,
    pub basinhopping: BasinHoppingConfig,
    pub bisection: BisectionConfig,
}

/// Time-optimizing half of one grid run. `n_fun_evals` counts the full cost
/// of a standalone run, including the fixed-time solve that seeded it.
#[derive(Clone, Debug, Serialize)]
pub struct TcrabRun {
    pub infidelity: f64,
    pub t_opt: f64,
    pub n_fun_evals: usize,
    pub trace: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRun {
    pub index: usize,
    pub t_init: f64,
    pub seed: u64,
    pub crab_infidelity: f64,
    pub crab_n_fun_evals: usize,
    pub crab_trace: Vec<(usize, f64)>,
    pub tcrab: Option<TcrabRun>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BisectionRun {
    pub t_opt: f64,
    pub infidelity: f64,
    pub n_fun_evals: usize,
    pub converged_reason: ConvergedReason,
    pub trace: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunFailure {
    pub index: usize,
    pub t_init: f64,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub experiment: String,
    pub mode: RunMode,
    pub master_seed: u64,
    pub n_points: usize,
    pub t_max: f64,
    pub best_infidelity: Option<f64>,
    pub t_opt: Option<f64>,
    pub runs: Vec<SweepRun>,
    pub failures: Vec<RunFailure>,
    pub bisection: Option<BisectionRun>,
    pub bisection_error: Option<String>,
}

impl BenchReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty() && self.bisection_error.is_none()
    }
}

/// Wall-clock numbers, kept out of [`BenchReport`] so the report stays
/// byte-reproducible.
#[derive(Clone, Debug, Serialize)]
pub struct BenchTimings {
    pub sweep_seconds: f64,
    pub bisection_seconds: f64,
    pub total_seconds: f64,
}

fn run_one(
    evaluator: &CrabEvaluator,
    index: usize,
    t_init: f64,
    settings: &BenchSettings,
) -> std::result::Result<SweepRun, RunFailure> {
    let seed = run_seed(settings.master_seed, index);
    let crab = crab_optimize_cold(evaluator, t_init, &settings.local)
        .map_err(|e| RunFailure { index, t_init, message: e.to_string() })?;
    let tcrab = tcrab_basinhopping(
        evaluator,
        t_init,
        seed,
        &settings.local,
        &settings.basinhopping,
        Some(&crab),
    )
    .map_err(|e| RunFailure { index, t_init, message: e.to_string() })?;
    Ok(SweepRun {
        index,
        t_init,
        seed,
        crab_infidelity: crab.infidelity,
        crab_n_fun_evals: crab.n_fun_evals,
        crab_trace: crab.trace,
        tcrab: Some(TcrabRun {
            infidelity: tcrab.infidelity,
            t_opt: tcrab.t_opt,
            // seeding cost plus the joint search's own cost
            n_fun_evals: crab.n_fun_evals + tcrab.n_fun_evals,
            trace: tcrab.trace,
        }),
    })
}

/// Run the benchmark. Per-run failures do not abort the sweep; they are
/// recorded in the report so partial results can still be persisted.
pub fn run_benchmark(
    experiment: &Experiment,
    settings: &BenchSettings,
) -> Result<(BenchReport, BenchTimings)> {
    let total_start = Instant::now();
    let grid = sweep_grid(settings.n_points, experiment.t_max())?;
    let templates = experiment.seeded_templates(settings.master_seed)?;
    let evaluator = experiment.evaluator(&templates)?;

    let sweep_start = Instant::now();
    let (runs, failures) = if settings.mode.runs_sweep() {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
        let outcomes: Vec<std::result::Result<SweepRun, RunFailure>> = pool.install(|| {
            grid.par_iter()
                .enumerate()
                .map(|(i, &t_i)| run_one(&evaluator, i, t_i, settings))
                .collect()
        });
        let mut runs = Vec::new();
        let mut failures = Vec::new();
        for outcome in outcomes {
            match outcome {
                Ok(run) => runs.push(run),
                Err(failure) => failures.push(failure),
            }
        }
        (runs, failures)
    } else {
        (Vec::new(), Vec::new())
    };
    let sweep_seconds = sweep_start.elapsed().as_secs_f64();

    let bisection_start = Instant::now();
    let (bisection, bisection_error) = if settings.mode.runs_bisection() {
        match tcrab_bisection(&evaluator, &settings.bisection, &settings.local) {
            Ok(out) => (
                Some(BisectionRun {
                    t_opt: out.t_opt,
                    infidelity: out.infidelity,
                    n_fun_evals: out.n_fun_evals,
                    converged_reason: out.converged_reason,
                    trace: out.trace,
                }),
                None,
            ),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    let bisection_seconds = bisection_start.elapsed().as_secs_f64();

    let mut best: Option<(f64, f64)> = None;
    {
        let mut consider = |infidelity: f64, t: f64| {
            let better = match best {
                None => true,
                Some((bi, bt)) => match infidelity.total_cmp(&bi) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Equal => t < bt,
                    std::cmp::Ordering::Greater => false,
                },
            };
            if better {
                best = Some((infidelity, t));
            }
        };
        for run in &runs {
            consider(run.crab_infidelity, run.t_init);
            if let Some(tc) = &run.tcrab {
                consider(tc.infidelity, tc.t_opt);
            }
        }
        if let Some(b) = &bisection {
            consider(b.infidelity, b.t_opt);
        }
    }

    let report = BenchReport {
        experiment: experiment.kind().name().to_string(),
        mode: settings.mode,
        master_seed: settings.master_seed,
        n_points: settings.n_points,
        t_max: experiment.t_max(),
        best_infidelity: best.map(|(f, _)| f),
        t_opt: best.map(|(_, t)| t),
        runs,
        failures,
        bisection,
        bisection_error,
    };
    let timings = BenchTimings {
        sweep_seconds,
        bisection_seconds,
        total_seconds: total_start.elapsed().as_secs_f64(),
    };
    Ok((report, timings))
}

/// 17 significant digits: enough for f64 round-trip, few enough to be stable.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Histogram of the time-optimized T_opt values over the sweep, one bin per
/// grid step. Returns (bin_left, bin_right, count) rows covering [0, t_max].
pub fn topt_histogram(report: &BenchReport) -> Vec<(f64, f64, usize)> {
    let n_bins = report.n_points.max(1);
    let mut counts = vec![0usize; n_bins];
    for run in &report.runs {
        if let Some(tc) = &run.tcrab {
            let k = ((tc.t_opt / report.t_max * n_bins as f64).floor() as usize)
                .min(n_bins - 1);
            counts[k] += 1;
        }
    }
    (0..n_bins)
        .map(|k| {
            let left = report.t_max * k as f64 / n_bins as f64;
            let right = report.t_max * (k + 1) as f64 / n_bins as f64;
            (left, right, counts[k])
        })
        .collect()
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(dir.join(name))?;
    f.write_all(bytes)?;
    Ok(())
}

/// Write the four data files into `dir` and return their names. Bytes are a
/// pure function of the report.
pub fn write_outputs(report: &BenchReport, dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;

    let mut infid = String::from("T_i,crab_infid,tcrab_infid\n");
    let mut nfev = String::from("T_i,nfev_crab,nfev_tcrab\n");
    for run in &report.runs {
        let t = fmt_float(run.t_init);
        match &run.tcrab {
            Some(tc) => {
                infid.push_str(&format!(
                    "{t},{},{}\n",
                    fmt_float(run.crab_infidelity),
                    fmt_float(tc.infidelity)
                ));
                nfev.push_str(&format!(
                    "{t},{},{}\n",
                    run.crab_n_fun_evals, tc.n_fun_evals
                ));
            }
            None => {
                infid.push_str(&format!("{t},{},\n", fmt_float(run.crab_infidelity)));
                nfev.push_str(&format!("{t},{},\n", run.crab_n_fun_evals));
            }
        }
    }

    let mut hist = String::from("bin_left,bin_right,count\n");
    for (left, right, count) in topt_histogram(report) {
        hist.push_str(&format!("{},{},{count}\n", fmt_float(left), fmt_float(right)));
    }

    let mut json = serde_json::to_vec_pretty(report)
        .map_err(|e| Error::Numerical(format!("report serialization: {e}")))?;
    json.push(b'\n');

    write_file(dir, "sweep_infidelity.csv", infid.as_bytes())?;
    write_file(dir, "sweep_nfev.csv", nfev.as_bytes())?;
    write_file(dir, "topt_histogram.csv", hist.as_bytes())?;
    write_file(dir, "result.json", &json)?;
    Ok(vec![
        "sweep_infidelity.csv".into(),
        "sweep_nfev.csv".into(),
        "topt_histogram.csv".into(),
        "result.json".into(),
    ])
}

/// Identity-test sweep with the harness's seeding discipline: the frequency
/// draw comes from the master seed exactly as in [`run_benchmark`], then
/// each grid point warm-starts from the previous solution.
pub fn run_identity_sweep(
    experiment: &Experiment,
    n_points: usize,
    master_seed: u64,
    local: &LocalConfig,
) -> Result<Vec<IdentityPoint>> {
    let grid = sweep_grid(n_points, experiment.t_max())?;
    let templates = experiment.seeded_templates(master_seed)?;
    identity_test(experiment, &grid, &templates, local, true)
}

/// Write the identity sweep into `dir` and return the file names written.
pub fn write_identity_outputs(points: &[IdentityPoint], dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut csv = String::from("T_i,infidelity,n_fun_evals\n");
    for p in points {
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt_float(p.t),
            fmt_float(p.infidelity),
            p.n_fun_evals
        ));
    }
    write_file(dir, "identity_sweep.csv", csv.as_bytes())?;
    Ok(vec!["identity_sweep.csv".into()])
}

/// One shortcut-vs-oracle comparison point.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyRow {
    pub experiment: String,
    pub t: f64,
    pub seed: u64,
    pub fidelity_shortcut: f64,
    pub fidelity_oracle: f64,
    pub abs_diff: f64,
    /// Whether the noise passed the static commutation certificate; when
    /// false the shortcut column is the uniform-decay approximation.
    pub certified: bool,
    /// Frobenius norm of the superoperator commutator between the unit-pulse
    /// Hamiltonian generator and the dissipator; zero iff the shortcut's
    /// commutation premise holds structurally.
    pub commutator_norm: f64,
}

/// Compare the fast objective against the master-equation integrator at
/// `n_points` random (T, alpha) draws. An uncertified objective is still
/// measured (that is the point of verifying); the rows carry the verdict.
pub fn verify_points(
    experiment: &Experiment,
    n_points: usize,
    master_seed: u64,
) -> Result<Vec<VerifyRow>> {
    let templates = experiment.seeded_templates(master_seed)?;
    let evaluator = match experiment.evaluator(&templates) {
        Ok(e) => e,
        Err(Error::Contract(_)) => {
            let mut forced = experiment.clone();
            forced.force_assume_commuting();
            forced.evaluator(&templates)?
        }
        Err(e) => return Err(e),
    };
    let structure = experiment.state_problem(&templates)?;
    let certified = structure.certify()?.commutes();

    let dim = 1usize << structure.n_qubits();
    let comm_norm = match structure.noise.jumps(structure.n_qubits())? {
        Some(set) => {
            let mut h_probe = structure.drift.matrix();
            for (h, _) in &structure.controls {
                h_probe += h.matrix();
            }
            let l_h = hamiltonian_superop(&h_probe);
            let l_d = dissipator_superop(dim, &set.lindblad_matrices());
            commutator_norm(&l_h, &l_d)
        }
        None => 0.0,
    };

    let mut rows = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let seed = run_seed(master_seed, i);
        let mut point_rng = ChaCha8Rng::seed_from_u64(seed);
        let t = point_rng.random_range(0.0..=experiment.t_max());
        let alpha: Vec<f64> = (0..evaluator.n_parameters())
            .map(|_| point_rng.random_range(-2.0..=2.0))
            .collect();
        let shortcut = 1.0 - evaluator.infidelity(t, &alpha)?;
        let problem = experiment.state_problem(&evaluator.pulses_with(&alpha)?)?;
        let oracle = oracle_fidelity(&problem, t)?;
        rows.push(VerifyRow {
            experiment: experiment.kind().name().to_string(),
            t,
            seed,
            fidelity_shortcut: shortcut,
            fidelity_oracle: oracle,
            abs_diff: (shortcut - oracle).abs(),
            certified,
            commutator_norm: comm_norm,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{spin_cz_dipole_problem, ExperimentKind};
    use crate::noise::{JumpEntry, NoiseModel};

    fn quick_settings(mode: RunMode, t_max: f64) -> BenchSettings {
        BenchSettings {
            mode,
            n_points: 4,
            master_seed: 7,
            threads: 1,
            local: LocalConfig { max_fun: 120, ..LocalConfig::default() },
            basinhopping: BasinHoppingConfig { n_iterations: 2, ..Default::default() },
            bisection: BisectionConfig {
                t_lo: 0.0,
                t_hi: t_max,
                fd_step_t: 1e-2,
                tol_derivative: 1e-3,
                tol_interval: 0.3,
                warm_start: true,
            },
        }
    }

    fn quick_experiment() -> Experiment {
        ExperimentKind::Josephson
            .default_experiment()
            .unwrap()
            .with_sweep(60, 3.0)
            .unwrap()
    }

    #[test]
    fn run_seeds_are_distinct_and_stable() {
        assert_eq!(run_seed(0, 0), run_seed(0, 0));
        let seeds: std::collections::HashSet<u64> =
            (0..100).map(|i| run_seed(42, i)).collect();
        assert_eq!(seeds.len(), 100);
        assert_ne!(run_seed(1, 0), run_seed(2, 0));
    }

    #[test]
    fn outputs_are_byte_identical_across_thread_counts() {
        let exp = quick_experiment();
        let mut s1 = quick_settings(RunMode::Both, 3.0);
        let mut s2 = s1.clone();
        s1.threads = 1;
        s2.threads = 2;
        let (r1, _) = run_benchmark(&exp, &s1).unwrap();
        let (r2, _) = run_benchmark(&exp, &s2).unwrap();
        assert!(r1.is_clean(), "failures: {:?}", r1.failures);

        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let names = write_outputs(&r1, d1.path()).unwrap();
        write_outputs(&r2, d2.path()).unwrap();
        assert_eq!(names.len(), 4);
        for name in &names {
            let b1 = std::fs::read(d1.path().join(name)).unwrap();
            let b2 = std::fs::read(d2.path().join(name)).unwrap();
            assert_eq!(b1, b2, "{name} differs across thread counts");
        }
    }

    #[test]
    fn sweep_csv_round_trips_to_full_precision() {
        let exp = quick_experiment();
        let (report, _) = run_benchmark(&exp, &quick_settings(RunMode::Both, 3.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&report, dir.path()).unwrap();

        let text = std::fs::read_to_string(dir.path().join("sweep_infidelity.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "T_i,crab_infid,tcrab_infid");
        for (line, run) in lines.zip(&report.runs) {
            let cols: Vec<f64> =
                line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(cols[0], run.t_init);
            assert_eq!(cols[1], run.crab_infidelity);
            assert_eq!(cols[2], run.tcrab.as_ref().unwrap().infidelity);
        }

        // best over everything recorded, ties broken toward smaller T
        let best = report.best_infidelity.unwrap();
        for run in &report.runs {
            assert!(best <= run.crab_infidelity);
            assert!(best <= run.tcrab.as_ref().unwrap().infidelity);
        }
    }

    #[test]
    fn histogram_partitions_the_time_range() {
        let exp = quick_experiment();
        let (report, _) = run_benchmark(&exp, &quick_settings(RunMode::Both, 3.0)).unwrap();
        let hist = topt_histogram(&report);
        assert_eq!(hist.len(), report.n_points);
        assert_eq!(hist[0].0, 0.0);
        assert_eq!(hist.last().unwrap().1, report.t_max);
        for pair in hist.windows(2) {
            assert_eq!(pair[0].1, pair[1].0);
        }
        let total: usize = hist.iter().map(|(_, _, c)| c).sum();
        assert_eq!(total, report.runs.len());
    }

    #[test]
    fn bisection_only_mode_skips_the_sweep() {
        let exp = quick_experiment();
        let (report, _) =
            run_benchmark(&exp, &quick_settings(RunMode::Bisection, 3.0)).unwrap();
        assert!(report.runs.is_empty());
        assert!(report.bisection.is_some());
        assert!(report.best_infidelity.is_some());

        let dir = tempfile::tempdir().unwrap();
        write_outputs(&report, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("sweep_infidelity.csv")).unwrap();
        assert_eq!(text, "T_i,crab_infid,tcrab_infid\n");
        let hist = std::fs::read_to_string(dir.path().join("topt_histogram.csv")).unwrap();
        assert!(hist.lines().skip(1).all(|l| l.ends_with(",0")));
    }

    #[test]
    fn verify_rows_flag_the_certified_and_uncertified_cases() {
        let certified = quick_experiment();
        let rows = verify_points(&certified, 2, 1).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!(row.abs_diff < 1e-8, "certified diff {}", row.abs_diff);
            assert!(row.certified);
            assert!(row.commutator_norm < 1e-10);
            assert_eq!(row.experiment, "josephson");
        }

        // the exchange-control experiment's objective is an approximation:
        // the commutator is structurally nonzero and the fidelity gap is
        // orders of magnitude above the certified cases
        let swap = ExperimentKind::SpinCzSwap
            .default_experiment()
            .unwrap()
            .with_sweep(120, 4.0)
            .unwrap();
        let rows = verify_points(&swap, 2, 1).unwrap();
        let max_diff = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
        assert!(!rows[0].certified);
        assert!(rows[0].commutator_norm > 1e-2);
        assert!(max_diff > 1e-8, "approximation gap {max_diff}");
    }

    #[test]
    fn verify_measures_an_injected_noncommuting_jump() {
        // an X jump against a Z drift defeats both certificate branches, yet
        // the verdict must come with measured numbers, not a refusal
        let noise = NoiseModel::Custom {
            jumps: vec![JumpEntry { pauli: "XI".into(), rate: 0.05 }],
        };
        let exp = spin_cz_dipole_problem(1.0, 1.0, noise, 8)
            .unwrap()
            .with_sweep(120, 2.0)
            .unwrap();
        let rows = verify_points(&exp, 2, 5).unwrap();
        assert!(!rows[0].certified);
        assert!(rows[0].commutator_norm > 1e-3);
        for row in &rows {
            assert!(row.fidelity_shortcut.is_finite());
            assert!(row.fidelity_oracle.is_finite());
        }
    }
}
