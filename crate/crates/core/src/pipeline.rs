//! End-to-end runs: configs → curves → joints → pressures → files.

use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actuation::{
    map_pressures, resample_schedule, scale_amplitude, with_period, ActuationError, ClampCounts, ControlSchedule,
    PressureMap, PressureTable,
};
use crate::config::{load_gait, load_robot, ConfigError, GaitFile, Loaded};
use crate::export::{
    read_joints_json, write_curves_csv, write_joints_csv, write_json, write_schedule_csv, JointsDocument, CURVES_FILE,
    JOINTS_FILE, JOINTS_JSON_FILE, MANIFEST_FILE, SCHEDULE_FILE, SCHEMA_VERSION,
};
use crate::gait::{generate_curve_set, GaitCurveSet, GaitError, GaitKind, GaitSpec};
use crate::ik::{solve_period, IkError, IkSettings, JointTrajectory, SmoothnessViolation};
use crate::kinematics::{RobotConfig, ACTUATOR_COUNT};
use crate::parallel::{map_indexed, Execution};

pub const ROBOT_CONFIG_NAME: &str = "robot.toml";
pub const GAIT_CONFIG_NAME: &str = "gait.toml";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Gait(#[from] GaitError),
    #[error(transparent)]
    Actuation(#[from] ActuationError),
    #[error("{0}")]
    Ik(IkError),
    #[error("{count} of {total} IK frames did not converge (first: frame {first}, mean residual {residual} m)")]
    NonConvergence {
        count: usize,
        total: usize,
        first: usize,
        residual: f64,
    },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl From<IkError> for PipelineError {
    fn from(e: IkError) -> Self {
        match e {
            IkError::NoConvergence { frame, residual } => PipelineError::NonConvergence {
                count: 1,
                total: 1,
                first: frame,
                residual,
            },
            other => PipelineError::Ik(other),
        }
    }
}

impl PipelineError {
    /// Process exit code: 2 configuration, 3 IK non-convergence, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Gait(_) | PipelineError::Actuation(_) | PipelineError::Ik(_) => 2,
            PipelineError::NonConvergence { .. } => 3,
            PipelineError::Io { .. } => 4,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Command-line overrides applied on top of the gait file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub lambda: Option<f64>,
    pub starts: Option<usize>,
    /// Section phase of a rolling gait.
    pub section_phase: Option<f64>,
    pub samples_per_period: Option<usize>,
    pub samples_per_curve: Option<usize>,
    pub rate: Option<f64>,
    pub duration: Option<f64>,
    pub execution: Option<Execution>,
}

impl Overrides {
    pub fn apply(&self, file: &mut GaitFile) -> Result<(), ConfigError> {
        if let Some(v) = self.seed {
            file.ik.seed = v;
        }
        if let Some(v) = self.lambda {
            file.ik.lambda = v;
        }
        if let Some(v) = self.starts {
            file.ik.starts = v;
        }
        if let Some(v) = self.execution {
            file.ik.execution = v;
        }
        if let Some(v) = self.section_phase {
            match &mut file.gait {
                GaitSpec::Rolling(p) => p.section_phase = v,
                GaitSpec::Sidewinding(_) => {
                    return Err(ConfigError::Invalid("section phase applies to rolling gaits only".into()))
                }
            }
        }
        file.gait.set_samples(self.samples_per_period, self.samples_per_curve);
        if let Some(v) = self.rate {
            file.schedule.rate = v;
        }
        if let Some(v) = self.duration {
            file.schedule.duration = v;
        }
        file.validate()
    }
}

/// Loaded and validated inputs of a run.
#[derive(Clone, Debug)]
pub struct Inputs {
    pub robot: Loaded<RobotConfig>,
    pub gait: Loaded<GaitFile>,
}

impl Inputs {
    /// Loads the two config files; a missing path means the built-in default.
    pub fn load(robot: Option<&Path>, gait: Option<&Path>, overrides: &Overrides) -> Result<Self, PipelineError> {
        let robot = match robot {
            Some(p) => load_robot(p)?,
            None => Loaded::builtin(),
        };
        let mut gait = match gait {
            Some(p) => load_gait(p)?,
            None => Loaded::builtin(),
        };
        overrides.apply(&mut gait.value)?;
        Ok(Self { robot, gait })
    }

    pub fn from_values(robot: RobotConfig, gait: GaitFile) -> Self {
        Self {
            robot: Loaded {
                value: robot,
                ..Loaded::builtin()
            },
            gait: Loaded {
                value: gait,
                ..Loaded::builtin()
            },
        }
    }

    fn exec(&self) -> Execution {
        self.gait.value.ik.execution
    }
}

fn prepare_dir(dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn generate_curves(inputs: &Inputs) -> Result<GaitCurveSet, PipelineError> {
    Ok(generate_curve_set(&inputs.gait.value.gait, &inputs.robot.value, inputs.exec())?)
}

pub fn solve(inputs: &Inputs, curves: &GaitCurveSet) -> Result<JointTrajectory, PipelineError> {
    Ok(solve_period(curves, &inputs.robot.value, &inputs.gait.value.ik)?)
}

/// Fails when more than the configured fraction of frames did not converge.
pub fn check_convergence(traj: &JointTrajectory, max_fraction: f64) -> Result<(), PipelineError> {
    let failed = traj.nonconverged_frames();
    let total = traj.samples.len();
    if failed.len() as f64 > max_fraction * total as f64 {
        return Err(PipelineError::NonConvergence {
            count: failed.len(),
            total,
            first: failed[0],
            residual: traj.samples[failed[0]].residual,
        });
    }
    Ok(())
}

/// Pressure table for one replay setting.
pub fn schedule_for(
    traj: &JointTrajectory,
    map: &PressureMap,
    schedule: &ControlSchedule,
    amplitude_scale: f64,
    frequency: Option<f64>,
) -> Result<(PressureTable, ClampCounts, f64), PipelineError> {
    let scaled = scale_amplitude(traj, amplitude_scale);
    let replay = match frequency {
        Some(f) => with_period(&scaled, 1.0 / f),
        None => scaled,
    };
    let pressures = map_pressures(&replay, map);
    let table = resample_schedule(&pressures, schedule)?;
    Ok((table, pressures.clamps, replay.period))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub path: Option<PathBuf>,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub frames: usize,
    /// Mean over frames of the per-frame mean point distance, meters.
    pub mean: f64,
    pub max: f64,
    pub per_frame: Vec<f64>,
    pub nonconverged_frames: Vec<usize>,
    pub closure_pass: bool,
    pub smoothness_violations: Vec<SmoothnessViolation>,
}

impl ResidualReport {
    pub fn from_trajectory(traj: &JointTrajectory) -> Self {
        Self {
            frames: traj.samples.len(),
            mean: traj.mean_residual(),
            max: traj.max_residual(),
            per_frame: traj.samples.iter().map(|s| s.residual).collect(),
            nonconverged_frames: traj.nonconverged_frames(),
            closure_pass: traj.closure_pass,
            smoothness_violations: traj.smoothness_violations.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub rate: f64,
    pub duration: f64,
    /// Replay period in seconds.
    pub period: f64,
    pub amplitude_scale: f64,
    pub rows: usize,
    pub channels: usize,
    pub pressure_map: PressureMap,
    pub clamps: ClampCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub gait: GaitKind,
    pub robot_config: ConfigRecord,
    pub gait_config: ConfigRecord,
    /// Resolved settings after overrides.
    pub settings: GaitFile,
    pub robot: RobotConfig,
    pub residuals: ResidualReport,
    pub solver: IkSettings,
    pub schedule: ScheduleReport,
    pub files: Vec<String>,
}

fn record<T>(l: &Loaded<T>) -> ConfigRecord {
    ConfigRecord {
        path: l.source.clone(),
        sha256: l.sha256.clone(),
    }
}

fn joints_document(inputs: &Inputs, traj: &JointTrajectory) -> JointsDocument {
    JointsDocument {
        schema_version: SCHEMA_VERSION,
        solver: inputs.gait.value.ik.clone(),
        trajectory: traj.clone(),
    }
}

/// `gait` stage: writes the curve CSV.
pub fn run_gait(inputs: &Inputs, out_dir: &Path) -> Result<GaitCurveSet, PipelineError> {
    let curves = generate_curves(inputs)?;
    prepare_dir(out_dir)?;
    let path = out_dir.join(CURVES_FILE);
    write_curves_csv(&path, &curves).map_err(io_err(&path))?;
    Ok(curves)
}

/// `ik` stage: writes curves and the joint trajectory (CSV and JSON). The
/// files are written before the convergence check so failures can be
/// inspected.
pub fn run_ik(inputs: &Inputs, out_dir: &Path) -> Result<JointTrajectory, PipelineError> {
    let curves = run_gait(inputs, out_dir)?;
    let traj = solve(inputs, &curves)?;
    let path = out_dir.join(JOINTS_FILE);
    write_joints_csv(&path, &traj).map_err(io_err(&path))?;
    let path = out_dir.join(JOINTS_JSON_FILE);
    write_json(&path, &joints_document(inputs, &traj)).map_err(io_err(&path))?;
    check_convergence(&traj, inputs.gait.value.run.max_nonconverged_fraction)?;
    Ok(traj)
}

/// `schedule` stage: pressure table from a previously written joints JSON.
pub fn run_schedule(inputs: &Inputs, joints_json: &Path, out_dir: &Path) -> Result<PressureTable, PipelineError> {
    let doc = read_joints_json(joints_json).map_err(|e| match e.kind() {
        io::ErrorKind::InvalidData => PipelineError::Config(ConfigError::Parse {
            path: joints_json.to_path_buf(),
            message: e.to_string(),
        }),
        _ => io_err(joints_json)(e),
    })?;
    let g = &inputs.gait.value;
    let (table, _, _) = schedule_for(&doc.trajectory, &g.pressure, &g.schedule, g.run.amplitude_scale, g.run.frequency)?;
    prepare_dir(out_dir)?;
    let path = out_dir.join(SCHEDULE_FILE);
    write_schedule_csv(&path, &table).map_err(io_err(&path))?;
    Ok(table)
}

/// Full pipeline. Configs are validated before anything is written.
pub fn run_pipeline(inputs: &Inputs, out_dir: &Path) -> Result<Manifest, PipelineError> {
    let g = &inputs.gait.value;
    let curves = generate_curves(inputs)?;
    let traj = solve(inputs, &curves)?;
    let (table, clamps, period) = schedule_for(&traj, &g.pressure, &g.schedule, g.run.amplitude_scale, g.run.frequency)?;

    prepare_dir(out_dir)?;
    let path = out_dir.join(CURVES_FILE);
    write_curves_csv(&path, &curves).map_err(io_err(&path))?;
    let path = out_dir.join(JOINTS_FILE);
    write_joints_csv(&path, &traj).map_err(io_err(&path))?;
    let path = out_dir.join(JOINTS_JSON_FILE);
    write_json(&path, &joints_document(inputs, &traj)).map_err(io_err(&path))?;
    let path = out_dir.join(SCHEDULE_FILE);
    write_schedule_csv(&path, &table).map_err(io_err(&path))?;

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        gait: curves.kind,
        robot_config: record(&inputs.robot),
        gait_config: record(&inputs.gait),
        settings: g.clone(),
        robot: inputs.robot.value.clone(),
        residuals: ResidualReport::from_trajectory(&traj),
        solver: g.ik.clone(),
        schedule: ScheduleReport {
            rate: g.schedule.rate,
            duration: g.schedule.duration,
            period,
            amplitude_scale: g.run.amplitude_scale,
            rows: table.rows.len(),
            channels: ACTUATOR_COUNT,
            pressure_map: g.pressure,
            clamps,
        },
        files: [CURVES_FILE, JOINTS_FILE, JOINTS_JSON_FILE, SCHEDULE_FILE]
            .map(String::from)
            .to_vec(),
    };
    let path = out_dir.join(MANIFEST_FILE);
    write_json(&path, &manifest).map_err(io_err(&path))?;
    check_convergence(&traj, g.run.max_nonconverged_fraction)?;
    Ok(manifest)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub ceiling: f64,
    pub frequency: f64,
    pub period: f64,
    pub amplitude_scale: f64,
    pub file: String,
    pub clamps: ClampCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub gait: GaitKind,
    pub robot_config: ConfigRecord,
    pub gait_config: ConfigRecord,
    pub settings: GaitFile,
    pub residuals: ResidualReport,
    pub entries: Vec<SweepEntry>,
}

pub const SWEEP_DIR: &str = "schedules";

/// Joint amplitude multiplier for a pressure ceiling: the configured scale
/// times the ratio of the ceiling's headroom above bias to the configured
/// headroom.
pub fn ceiling_amplitude(g: &GaitFile, ceiling: f64) -> f64 {
    let base = g.pressure.ceiling - g.pressure.bias;
    if base > 0.0 {
        g.run.amplitude_scale * (ceiling - g.pressure.bias) / base
    } else {
        g.run.amplitude_scale
    }
}

/// Pressure ceiling × frequency grid. IK runs once; every grid point gets
/// its own schedule file under `schedules/`.
pub fn run_sweep(inputs: &Inputs, out_dir: &Path) -> Result<SweepManifest, PipelineError> {
    let g = &inputs.gait.value;
    let ceilings = g.sweep.ceilings.values()?;
    let frequencies = g.sweep.frequencies.values()?;
    for &c in &ceilings {
        PressureMap { ceiling: c, ..g.pressure }.validate()?;
    }
    if frequencies.iter().any(|&f| !(f > 0.0)) {
        return Err(ConfigError::Invalid("sweep frequencies must be positive".into()).into());
    }
    let curves = generate_curves(inputs)?;
    let traj = solve(inputs, &curves)?;

    let grid: Vec<(f64, f64)> = ceilings.iter().flat_map(|&c| frequencies.iter().map(move |&f| (c, f))).collect();
    let tables = map_indexed(grid.len(), inputs.exec(), |i| {
        let (c, f) = grid[i];
        let map = PressureMap { ceiling: c, ..g.pressure };
        let amp = ceiling_amplitude(g, c);
        schedule_for(&traj, &map, &g.schedule, amp, Some(f)).map(|r| (r, amp))
    });

    prepare_dir(out_dir)?;
    let sweep_dir = out_dir.join(SWEEP_DIR);
    prepare_dir(&sweep_dir)?;
    let path = out_dir.join(CURVES_FILE);
    write_curves_csv(&path, &curves).map_err(io_err(&path))?;
    let path = out_dir.join(JOINTS_FILE);
    write_joints_csv(&path, &traj).map_err(io_err(&path))?;
    let path = out_dir.join(JOINTS_JSON_FILE);
    write_json(&path, &joints_document(inputs, &traj)).map_err(io_err(&path))?;

    let mut entries = Vec::with_capacity(grid.len());
    for ((c, f), result) in grid.into_iter().zip(tables) {
        let ((table, clamps, period), amp) = result?;
        let file = format!("{SWEEP_DIR}/ceiling_{c:.2}_freq_{f:.2}.csv");
        let path = out_dir.join(&file);
        write_schedule_csv(&path, &table).map_err(io_err(&path))?;
        entries.push(SweepEntry {
            ceiling: c,
            frequency: f,
            period,
            amplitude_scale: amp,
            file,
            clamps,
        });
    }
    let manifest = SweepManifest {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        gait: curves.kind,
        robot_config: record(&inputs.robot),
        gait_config: record(&inputs.gait),
        settings: g.clone(),
        residuals: ResidualReport::from_trajectory(&traj),
        entries,
    };
    let path = out_dir.join(MANIFEST_FILE);
    write_json(&path, &manifest).map_err(io_err(&path))?;
    check_convergence(&traj, g.run.max_nonconverged_fraction)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::RollingParams;

    fn rolling_inputs() -> Inputs {
        let gait = GaitFile {
            gait: GaitSpec::Rolling(RollingParams::planar()),
            ..GaitFile::default()
        };
        Inputs::from_values(RobotConfig::default(), gait)
    }

    #[test]
    fn run_writes_all_files_with_expected_rows() {
        let dir = tempfile::tempdir().unwrap();
        let m = run_pipeline(&rolling_inputs(), dir.path()).unwrap();
        let rows = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap().lines().count() - 1;
        assert_eq!(rows(CURVES_FILE), 20 * 61);
        assert_eq!(rows(JOINTS_FILE), 20);
        assert_eq!(rows(SCHEDULE_FILE), 240);
        assert_eq!(m.schedule.rows, 240);
        let mean = m.residuals.per_frame.iter().sum::<f64>() / 20.0;
        assert!((m.residuals.mean - mean).abs() <= 1e-12);
        assert!(dir.path().join(MANIFEST_FILE).exists());
    }

    #[test]
    fn missing_config_fails_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let err = Inputs::load(Some(&dir.path().join("nope.toml")), None, &Overrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!out.exists());
    }

    #[test]
    fn section_phase_override_needs_rolling() {
        let o = Overrides {
            section_phase: Some(0.5),
            ..Overrides::default()
        };
        assert!(o.apply(&mut GaitFile::default()).is_err());
    }

    #[test]
    fn too_few_iterations_exit_with_code_3() {
        let mut inputs = Inputs::from_values(RobotConfig::default(), GaitFile::default());
        inputs.gait.value.ik.max_iterations = 1;
        let dir = tempfile::tempdir().unwrap();
        let err = run_pipeline(&inputs, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
    }

    #[test]
    fn ceiling_scales_amplitude_from_bias() {
        let g = GaitFile::default();
        assert_eq!(ceiling_amplitude(&g, 4.0), 1.0);
        assert_eq!(ceiling_amplitude(&g, 3.0), 0.5);
    }

    #[test]
    fn sweep_writes_one_schedule_per_grid_point() {
        let mut inputs = rolling_inputs();
        inputs.gait.value.sweep.ceilings = crate::config::SweepRange::single(4.0);
        let dir = tempfile::tempdir().unwrap();
        let m = run_sweep(&inputs, dir.path()).unwrap();
        assert_eq!(m.entries.len(), 16);
        assert_eq!(std::fs::read_dir(dir.path().join(SWEEP_DIR)).unwrap().count(), 16);
        let slow = &m.entries[0];
        assert_eq!(slow.file, "schedules/ceiling_4.00_freq_0.25.csv");
        assert!((slow.period - 4.0).abs() < 1e-12);
    }
}
