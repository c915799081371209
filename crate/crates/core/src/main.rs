use clap::{Args, Parser, Subcommand};
use contact_slam::cli::{self, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "contact-slam",
    version,
    about = "Tactile contact SLAM simulator and benchmarks"
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Scenario file, or the name of a bundled scenario.
    #[arg(long, default_value = "socket_two_pin")]
    scenario: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    particles: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha1: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha2: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Peak-support diameter for convergence, mm.
    #[arg(long, default_value_t = 5.0)]
    delta_thr: f64,
    /// Cluster count below which the belief counts as unimodal.
    #[arg(long, default_value_t = 10)]
    n_thr: usize,
    /// Peak threshold as a multiple of the uniform weight.
    #[arg(long, default_value_t = 1.0)]
    w_thr_factor: f64,
    /// Multiplier on every sensor noise level.
    #[arg(long, default_value_t = 1.0)]
    noise_scale: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            scenario: self.scenario.clone(),
            seed: self.seed,
            particles: self.particles,
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            gamma: self.gamma,
            delta_thr: self.delta_thr,
            n_thr: self.n_thr,
            w_thr_factor: self.w_thr_factor,
            noise_scale: self.noise_scale,
            out: self.out.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate lever arms from a calibration CSV.
    Calibrate {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, default_value = "out/calibration.json")]
        out: PathBuf,
    },
    /// Write synthetic calibration samples for a scenario's grasped body.
    SynthCalibration {
        #[arg(long, default_value = "socket_two_pin")]
        scenario: String,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        noise_scale: f64,
        #[arg(long, default_value = "out/calibration_samples.csv")]
        out: PathBuf,
    },
    /// Run active exploration on a socket scenario.
    Explore(RunArgs),
    /// Run the block-pushing pipeline.
    Push(RunArgs),
    /// Run scenarios × seeds and check the aggregate thresholds.
    Benchmark {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated scenario names or files.
        #[arg(long, value_delimiter = ',', default_value = "socket_two_pin,socket_three_pin")]
        scenarios: Vec<String>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
    },
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let level = match args.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = match args.command {
        Command::Calibrate { samples, out } => cli::cmd_calibrate(&samples, &out),
        Command::SynthCalibration {
            scenario,
            count,
            seed,
            noise_scale,
            out,
        } => cli::cmd_synth_calibration(&scenario, count, seed, noise_scale, &out),
        Command::Explore(run) => cli::cmd_explore(&run.config()),
        Command::Push(run) => cli::cmd_push(&run.config()),
        Command::Benchmark { run, scenarios, seeds } => cli::cmd_benchmark(&run.config(), &scenarios, &seeds),
    };
    ExitCode::from(code as u8)
}
