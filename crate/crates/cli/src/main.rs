use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use softsnake::parallel::Execution;
use softsnake::pipeline::{
    run_gait, run_ik, run_pipeline, run_schedule, run_sweep, Inputs, Overrides, PipelineError, GAIT_CONFIG_NAME,
    ROBOT_CONFIG_NAME,
};

/// Gait curves, inverse kinematics and pressure schedules for a four-section
/// soft robotic snake.
#[derive(Parser)]
#[command(name = "softsnake", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the taskspace curve set (curves.csv).
    Gait(Common),
    /// Generate curves and solve the joint trajectory (joints.csv, joints.json).
    Ik(Common),
    /// Map a solved joint trajectory to a pressure schedule (schedule.csv).
    Schedule {
        #[command(flatten)]
        common: Common,
        /// Joint trajectory written by `ik` or `run`; defaults to <out>/joints.json.
        #[arg(long)]
        joints: Option<PathBuf>,
    },
    /// Full pipeline with manifest.
    Run(Common),
    /// Pressure ceiling × frequency grid of schedules.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Robot geometry TOML; defaults to robot.toml in the config directory, then built-in values.
    #[arg(long)]
    robot: Option<PathBuf>,
    /// Gait and pipeline TOML; defaults to gait.toml in the config directory, then built-in values.
    #[arg(long)]
    gait: Option<PathBuf>,
    /// Directory searched for robot.toml and gait.toml.
    #[arg(long, env = "SOFTSNAKE_CONFIG_DIR")]
    config_dir: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
    /// Seed of the random IK starts.
    #[arg(long)]
    seed: Option<u64>,
    /// Weight of the actuator-length penalty.
    #[arg(long)]
    lambda: Option<f64>,
    /// Number of IK starts per frame.
    #[arg(long)]
    starts: Option<usize>,
    /// Phase between adjacent sections of a rolling gait, in radians.
    #[arg(long)]
    phase: Option<f64>,
    /// Time samples per gait period.
    #[arg(long)]
    nt: Option<usize>,
    /// Points per curve (4·n + 1).
    #[arg(long)]
    ns: Option<usize>,
    /// Control rate in hertz.
    #[arg(long)]
    rate: Option<f64>,
    /// Schedule duration in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Run on a single thread.
    #[arg(long)]
    sequential: bool,
}

fn resolve(explicit: &Option<PathBuf>, dir: &Option<PathBuf>, name: &str) -> Option<PathBuf> {
    explicit.clone().or_else(|| {
        dir.as_ref()
            .map(|d| d.join(name))
            .filter(|p| p.exists())
    })
}

impl Common {
    fn inputs(&self) -> Result<Inputs, PipelineError> {
        let overrides = Overrides {
            seed: self.seed,
            lambda: self.lambda,
            starts: self.starts,
            section_phase: self.phase,
            samples_per_period: self.nt,
            samples_per_curve: self.ns,
            rate: self.rate,
            duration: self.duration,
            execution: self.sequential.then_some(Execution::Sequential),
        };
        let robot = resolve(&self.robot, &self.config_dir, ROBOT_CONFIG_NAME);
        let gait = resolve(&self.gait, &self.config_dir, GAIT_CONFIG_NAME);
        Inputs::load(robot.as_deref(), gait.as_deref(), &overrides)
    }
}

fn describe(p: Option<&Path>) -> String {
    p.map_or_else(|| "built-in".to_string(), |p| p.display().to_string())
}

fn execute(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Gait(c) => {
            let inputs = c.inputs()?;
            let set = run_gait(&inputs, &c.out)?;
            println!(
                "{}: {} curves × {} points -> {}",
                set.kind.as_str(),
                set.curves.len(),
                set.curves.first().map_or(0, |x| x.points.len()),
                c.out.display()
            );
        }
        Command::Ik(c) => {
            let inputs = c.inputs()?;
            let traj = run_ik(&inputs, &c.out)?;
            println!(
                "{}: {} frames, mean residual {:.3} mm, max {:.3} mm -> {}",
                traj.kind.as_str(),
                traj.samples.len(),
                traj.mean_residual() * 1e3,
                traj.max_residual() * 1e3,
                c.out.display()
            );
        }
        Command::Schedule { common, joints } => {
            let inputs = common.inputs()?;
            let joints = joints.unwrap_or_else(|| common.out.join("joints.json"));
            let table = run_schedule(&inputs, &joints, &common.out)?;
            println!("{} rows at {} Hz -> {}", table.rows.len(), table.rate, common.out.display());
        }
        Command::Run(c) => {
            let inputs = c.inputs()?;
            eprintln!(
                "robot config: {}; gait config: {}",
                describe(inputs.robot.source.as_deref()),
                describe(inputs.gait.source.as_deref())
            );
            let m = run_pipeline(&inputs, &c.out)?;
            println!(
                "{}: {} frames, mean residual {:.3} mm, {} schedule rows, clamps {}/{} (floor/ceiling) -> {}",
                m.gait.as_str(),
                m.residuals.frames,
                m.residuals.mean * 1e3,
                m.schedule.rows,
                m.schedule.clamps.floor,
                m.schedule.clamps.ceiling,
                c.out.display()
            );
        }
        Command::Sweep(c) => {
            let inputs = c.inputs()?;
            let m = run_sweep(&inputs, &c.out)?;
            println!(
                "{}: {} schedules, mean residual {:.3} mm -> {}",
                m.gait.as_str(),
                m.entries.len(),
                m.residuals.mean * 1e3,
                c.out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
