//! Command implementations behind the `contact-slam` binary. Each command
//! returns a process exit code: 0 success, 1 task failure, 2 bad input.

use crate::exploration::{run_policy, run_push, ExplorationReport, PolicyConfig, PushReport, StepRecord};
use crate::simulator::{synthetic_calibration, NoiseConfig, Scenario, ScenarioKind};
use crate::tactile::{calibrate_lever_arms, read_samples_csv, write_samples_csv, SensorAxisMap};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_TASK_FAILURE: i32 = 1;
pub const EXIT_INPUT_ERROR: i32 = 2;

/// Bounds a socket benchmark must meet.
pub const BENCH_ITERATIONS: (f64, f64) = (4.0, 12.0);
pub const BENCH_SOCKET_ERROR_MM: f64 = 5.0;
pub const BENCH_OBSTACLE_ERROR_MM: f64 = 10.0;
/// Fraction of push runs that must end with the block in the target.
pub const BENCH_PUSH_SUCCESS: f64 = 0.8;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Scenario(#[from] crate::simulator::SimError),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_INPUT_ERROR
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Everything one exploration or pushing run depends on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: String,
    pub seed: u64,
    pub particles: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub gamma: f64,
    pub delta_thr: f64,
    pub n_thr: usize,
    pub w_thr_factor: f64,
    pub noise_scale: f64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PolicyConfig::default();
        Self {
            scenario: "socket_two_pin".into(),
            seed: p.seed,
            particles: p.particles,
            alpha1: p.alpha1,
            alpha2: p.alpha2,
            gamma: p.gamma,
            delta_thr: p.delta_thr,
            n_thr: p.n_thr,
            w_thr_factor: p.w_thr_factor,
            noise_scale: 1.0,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn policy(&self) -> Result<PolicyConfig, CliError> {
        let cfg = PolicyConfig {
            seed: self.seed,
            particles: self.particles,
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            gamma: self.gamma,
            delta_thr: self.delta_thr,
            n_thr: self.n_thr,
            w_thr_factor: self.w_thr_factor,
            ..PolicyConfig::default()
        };
        cfg.validate().map_err(CliError::Config)?;
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(CliError::Config("noise scale must be finite and non-negative".into()));
        }
        Ok(cfg)
    }

    fn stem(&self, name: &str) -> String {
        format!("{name}_seed{}", self.seed)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_steps_csv(path: &Path, steps: &[StepRecord], initial: Option<(f64, usize)>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut rows: Vec<[String; 7]> = Vec::new();
    if let Some((std, count)) = initial {
        rows.push([
            "0".into(),
            format!("{std:.6}"),
            count.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    for s in steps {
        rows.push([
            s.step.to_string(),
            format!("{:.6}", s.particle_std_mm),
            s.particle_count.to_string(),
            s.peak_count.to_string(),
            s.action.clone(),
            format!("{:.6}", s.traveled_mm),
            s.contact.to_string(),
        ]);
    }
    w.write_record([
        "step",
        "particle_std_mm",
        "particle_count",
        "peak_count",
        "action",
        "traveled_mm",
        "contact",
    ])
    .map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Runs the socket pipeline without touching the filesystem.
pub fn explore(cfg: &RunConfig) -> Result<ExplorationReport, CliError> {
    let policy = cfg.policy()?;
    let scenario = Scenario::resolve(&cfg.scenario)?;
    if scenario.kind != ScenarioKind::Socket {
        return Err(CliError::Config(format!(
            "`{}` is not a socket scenario",
            scenario.name
        )));
    }
    let mut world = scenario.build(Some(cfg.seed), cfg.noise_scale)?;
    let task = world.socket_task();
    Ok(run_policy(&task, &mut world, &policy))
}

/// Runs the pushing pipeline without touching the filesystem.
pub fn push(cfg: &RunConfig) -> Result<PushReport, CliError> {
    let policy = cfg.policy()?;
    let scenario = Scenario::resolve(&cfg.scenario)?;
    if scenario.kind != ScenarioKind::Push {
        return Err(CliError::Config(format!("`{}` is not a push scenario", scenario.name)));
    }
    let mut world = scenario.build(Some(cfg.seed), cfg.noise_scale)?;
    let task = world.push_task();
    Ok(run_push(&task, &mut world, &policy))
}

fn report_failure(e: &CliError) -> i32 {
    log::error!("{e}");
    eprintln!("error: {e}");
    e.exit_code()
}

pub fn cmd_explore(cfg: &RunConfig) -> i32 {
    let run = || -> Result<i32, CliError> {
        let report = explore(cfg)?;
        let stem = cfg.stem(&report.scenario);
        write_json(&cfg.out.join(format!("{stem}_report.json")), &report)?;
        write_steps_csv(
            &cfg.out.join(format!("{stem}_steps.csv")),
            &report.steps,
            Some((report.initial_std_mm, report.initial_particle_count)),
        )?;
        println!(
            "{}: success={} iterations={} final_error_mm={}",
            report.scenario,
            report.success,
            report.iterations,
            report.final_error_mm.map_or("n/a".into(), |e| format!("{e:.3}"))
        );
        if let Some(f) = &report.failure {
            eprintln!("run failed: {f}");
        }
        Ok(if report.success { EXIT_OK } else { EXIT_TASK_FAILURE })
    };
    run().unwrap_or_else(|e| report_failure(&e))
}

pub fn cmd_push(cfg: &RunConfig) -> i32 {
    let run = || -> Result<i32, CliError> {
        let report = push(cfg)?;
        let stem = cfg.stem(&report.scenario);
        write_json(&cfg.out.join(format!("{stem}_report.json")), &report)?;
        write_steps_csv(&cfg.out.join(format!("{stem}_steps.csv")), &report.steps, None)?;
        println!(
            "{}: success={} exploration_steps={} obstacle_error_mm={}",
            report.scenario,
            report.success,
            report.exploration_steps,
            report.obstacle_error_mm.map_or("n/a".into(), |e| format!("{e:.3}"))
        );
        if let Some(f) = &report.failure {
            eprintln!("run failed: {f}");
        }
        Ok(if report.block_in_target {
            EXIT_OK
        } else {
            EXIT_TASK_FAILURE
        })
    };
    run().unwrap_or_else(|e| report_failure(&e))
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    #[serde(flatten)]
    pub result: crate::tactile::CalibrationResult,
}

/// Estimates lever arms from a sample CSV and writes them as JSON.
pub fn cmd_calibrate(samples_csv: &Path, out_path: &Path) -> i32 {
    let run = || -> Result<i32, CliError> {
        let file = fs::File::open(samples_csv).map_err(|e| io_err(samples_csv, e))?;
        let samples = read_samples_csv(file).map_err(|e| CliError::Config(e.to_string()))?;
        match calibrate_lever_arms(&samples, &SensorAxisMap::default()) {
            Ok(result) => {
                write_json(out_path, &CalibrationReport { result: result.clone() })?;
                println!(
                    "lever arms estimated from {} samples: residual mean {:.4} mm, max {:.4} mm",
                    result.samples, result.residuals.mean_mm, result.residuals.max_mm
                );
                Ok(EXIT_OK)
            }
            Err(e) => {
                eprintln!("calibration failed: {e}");
                Ok(EXIT_TASK_FAILURE)
            }
        }
    };
    run().unwrap_or_else(|e| report_failure(&e))
}

/// Writes `count` synthetic calibration samples for the grasped body of
/// `scenario`.
pub fn cmd_synth_calibration(scenario: &str, count: usize, seed: u64, noise_scale: f64, out_path: &Path) -> i32 {
    let run = || -> Result<i32, CliError> {
        let sc = Scenario::resolve(scenario)?;
        let world = sc.build(Some(seed), 1.0)?;
        if !(noise_scale.is_finite() && noise_scale >= 0.0) {
            return Err(CliError::Config("noise scale must be finite and non-negative".into()));
        }
        let noise = NoiseConfig::default().scaled(noise_scale);
        let samples = synthetic_calibration(count, &world.grasped, &world.synth, &noise, seed);
        if let Some(dir) = out_path.parent() {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        let file = fs::File::create(out_path).map_err(|e| io_err(out_path, e))?;
        write_samples_csv(file, &samples).map_err(|e| io_err(out_path, e))?;
        Ok(EXIT_OK)
    };
    run().unwrap_or_else(|e| report_failure(&e))
}

/// One cell of the benchmark matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub scenario: String,
    pub seed: u64,
    pub success: bool,
    /// Exploration iterations (socket) or tool probes (push).
    pub iterations: usize,
    /// Grasped-object error (socket) or obstacle error (push), mm.
    pub final_error_mm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub scenario: String,
    pub kind: String,
    pub runs: usize,
    pub successes: usize,
    pub mean_iterations: f64,
    pub mean_final_error_mm: f64,
    pub thresholds_met: bool,
}

fn bench_cell(base: &RunConfig, scenario: &str, seed: u64) -> Result<(ScenarioKind, BenchRow), CliError> {
    let cfg = RunConfig {
        scenario: scenario.to_string(),
        seed,
        ..base.clone()
    };
    let kind = Scenario::resolve(scenario)?.kind;
    let row = match kind {
        ScenarioKind::Socket => {
            let r = explore(&cfg)?;
            BenchRow {
                scenario: r.scenario,
                seed,
                success: r.success,
                iterations: r.iterations,
                final_error_mm: r.final_error_mm,
            }
        }
        ScenarioKind::Push => {
            let r = push(&cfg)?;
            BenchRow {
                scenario: r.scenario,
                seed,
                success: r.block_in_target,
                iterations: r.exploration_steps,
                final_error_mm: r.obstacle_error_mm,
            }
        }
    };
    Ok((kind, row))
}

/// Runs the scenario × seed matrix; rows come back in matrix order
/// whatever the execution order.
pub fn benchmark(
    base: &RunConfig,
    scenarios: &[String],
    seeds: &[u64],
) -> Result<(Vec<BenchRow>, Vec<BenchSummary>), CliError> {
    if scenarios.is_empty() || seeds.is_empty() {
        return Err(CliError::Config("benchmark suite is empty".into()));
    }
    base.policy()?;
    let cells: Vec<(String, u64)> = scenarios
        .iter()
        .flat_map(|s| seeds.iter().map(move |&k| (s.clone(), k)))
        .collect();
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        cells.par_iter().map(|(s, k)| bench_cell(base, s, *k)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = cells.iter().map(|(s, k)| bench_cell(base, s, *k)).collect();
    let results: Vec<(ScenarioKind, BenchRow)> = results.into_iter().collect::<Result<_, _>>()?;

    let mut summaries = Vec::new();
    for rows in results.chunks(seeds.len()) {
        let kind = rows[0].0;
        let n = rows.len();
        let successes = rows.iter().filter(|(_, r)| r.success).count();
        let mean_iterations = rows.iter().map(|(_, r)| r.iterations as f64).sum::<f64>() / n as f64;
        let errors: Vec<f64> = rows.iter().filter_map(|(_, r)| r.final_error_mm).collect();
        let mean_err = if errors.is_empty() {
            f64::NAN
        } else {
            errors.iter().sum::<f64>() / errors.len() as f64
        };
        let thresholds_met = match kind {
            ScenarioKind::Socket => {
                successes == n
                    && (BENCH_ITERATIONS.0..=BENCH_ITERATIONS.1).contains(&mean_iterations)
                    && mean_err <= BENCH_SOCKET_ERROR_MM
            }
            ScenarioKind::Push => {
                successes as f64 >= BENCH_PUSH_SUCCESS * n as f64
                    && errors.iter().all(|e| *e <= BENCH_OBSTACLE_ERROR_MM)
            }
        };
        summaries.push(BenchSummary {
            scenario: rows[0].1.scenario.clone(),
            kind: format!("{kind:?}").to_lowercase(),
            runs: n,
            successes,
            mean_iterations,
            mean_final_error_mm: mean_err,
            thresholds_met,
        });
    }
    Ok((results.into_iter().map(|(_, r)| r).collect(), summaries))
}

pub fn cmd_benchmark(base: &RunConfig, scenarios: &[String], seeds: &[u64]) -> i32 {
    let run = || -> Result<i32, CliError> {
        let (rows, summaries) = benchmark(base, scenarios, seeds)?;
        fs::create_dir_all(&base.out).map_err(|e| io_err(&base.out, e))?;
        let path = base.out.join("benchmark.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        w.write_record(["scenario", "seed", "success", "iterations", "final_error_mm"])
            .map_err(|e| io_err(&path, e))?;
        for r in &rows {
            w.write_record([
                r.scenario.clone(),
                r.seed.to_string(),
                r.success.to_string(),
                r.iterations.to_string(),
                r.final_error_mm.map_or(String::new(), |e| format!("{e:.6}")),
            ])
            .map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        let path = base.out.join("benchmark_summary.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        for s in &summaries {
            w.serialize(s).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;

        println!(
            "{:<24} {:>5} {:>9} {:>10} {:>12}  ok",
            "scenario", "runs", "successes", "mean iter", "mean err mm"
        );
        for s in &summaries {
            println!(
                "{:<24} {:>5} {:>9} {:>10.2} {:>12.3}  {}",
                s.scenario, s.runs, s.successes, s.mean_iterations, s.mean_final_error_mm, s.thresholds_met
            );
        }
        let all_ok = summaries.iter().all(|s| s.thresholds_met);
        if !all_ok {
            for r in rows.iter().filter(|r| !r.success) {
                eprintln!("failed run: {} seed {}", r.scenario, r.seed);
            }
        }
        Ok(if all_ok { EXIT_OK } else { EXIT_TASK_FAILURE })
    };
    run().unwrap_or_else(|e| report_failure(&e))
}
