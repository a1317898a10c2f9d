//! Taskspace gait curves, their periodic discretization, and projection into
//! the robot base frame.
//!
//! Each time instant of a gait period yields one curve sampled at the arc
//! length stations of the robot's backbone grid (see
//! [`RobotConfig::sample_stations`]), so target point `k` pairs with backbone
//! sample `k` during fitting.

mod frames;
mod rolling;
mod sidewinding;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use frames::{local_frame_at, local_frame_from_tangent, project_to_robot_frame, robot_alignment};
pub use rolling::{rolling_curve, rolling_joint_pattern, RollingParams};
pub use sidewinding::{sidewinding_curve, SidewindingGait, SidewindingParams};

use crate::kinematics::{sample_backbone, BasePose, PoseTransform, RobotConfig, SECTION_COUNT};
use crate::parallel::{map_indexed, Execution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaitError {
    #[error("invalid gait parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),
    #[error("degenerate frame: tangent norm {norm}")]
    DegenerateFrame { norm: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaitKind {
    Sidewinding,
    PlanarRolling,
    HelicalRolling,
}

impl GaitKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GaitKind::Sidewinding => "sidewinding",
            GaitKind::PlanarRolling => "planar-rolling",
            GaitKind::HelicalRolling => "helical-rolling",
        }
    }
}

/// A gait and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GaitSpec {
    Sidewinding(SidewindingParams),
    Rolling(RollingParams),
}

impl Default for GaitSpec {
    fn default() -> Self {
        GaitSpec::Sidewinding(SidewindingParams::default())
    }
}

impl GaitSpec {
    pub fn kind(&self) -> GaitKind {
        match self {
            GaitSpec::Sidewinding(_) => GaitKind::Sidewinding,
            GaitSpec::Rolling(p) if p.section_phase == 0.0 => GaitKind::PlanarRolling,
            GaitSpec::Rolling(_) => GaitKind::HelicalRolling,
        }
    }

    pub fn period(&self) -> f64 {
        match self {
            GaitSpec::Sidewinding(p) => p.period,
            GaitSpec::Rolling(p) => p.period,
        }
    }

    pub fn samples_per_period(&self) -> usize {
        match self {
            GaitSpec::Sidewinding(p) => p.samples_per_period,
            GaitSpec::Rolling(p) => p.samples_per_period,
        }
    }

    pub fn samples_per_curve(&self) -> usize {
        match self {
            GaitSpec::Sidewinding(p) => p.samples_per_curve,
            GaitSpec::Rolling(p) => p.samples_per_curve,
        }
    }

    pub fn set_samples(&mut self, per_period: Option<usize>, per_curve: Option<usize>) {
        let (nt, ns) = match self {
            GaitSpec::Sidewinding(p) => (&mut p.samples_per_period, &mut p.samples_per_curve),
            GaitSpec::Rolling(p) => (&mut p.samples_per_period, &mut p.samples_per_curve),
        };
        if let Some(v) = per_period {
            *nt = v;
        }
        if let Some(v) = per_curve {
            *ns = v;
        }
    }

    pub fn validate(&self) -> Result<(), GaitError> {
        match self {
            GaitSpec::Sidewinding(p) => p.validate()?,
            GaitSpec::Rolling(p) => p.validate()?,
        }
        samples_per_section(self.samples_per_curve()).map(|_| ())
    }

    /// Uniform timestamps `n · T / N_t` covering one period.
    pub fn timestamps(&self) -> Vec<f64> {
        let n = self.samples_per_period();
        let period = self.period();
        (0..n).map(|i| i as f64 * period / n as f64).collect()
    }
}

/// Backbone samples per section implied by a curve sample count `4 n + 1`.
pub fn samples_per_section(samples_per_curve: usize) -> Result<usize, GaitError> {
    if samples_per_curve < SECTION_COUNT + 1 || !(samples_per_curve - 1).is_multiple_of(SECTION_COUNT) {
        return Err(GaitError::InvalidParams(format!(
            "samples_per_curve must be {SECTION_COUNT}·n + 1 with n >= 1, got {samples_per_curve}"
        )));
    }
    Ok((samples_per_curve - 1) / SECTION_COUNT)
}

/// One time instant of a discretized gait, still in the world frame.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizedCurve {
    pub timestamp: f64,
    pub points: Vec<Vector3<f64>>,
    /// Pose of the robot base frame in the world frame at this instant.
    pub body_frame: PoseTransform,
}

/// A curve expressed in the robot base frame, with the world-frame local
/// frames of its points.
#[derive(Clone, Debug, PartialEq)]
pub struct FramedCurve {
    pub timestamp: f64,
    pub points: Vec<Vector3<f64>>,
    pub source_frames: Vec<PoseTransform>,
    pub body_frame: PoseTransform,
}

/// Projected curves for every time instant of one gait period.
#[derive(Clone, Debug, PartialEq)]
pub struct GaitCurveSet {
    pub kind: GaitKind,
    pub period: f64,
    pub samples_per_section: usize,
    pub curves: Vec<FramedCurve>,
}

fn discretize_instant(
    spec: &GaitSpec,
    robot: &RobotConfig,
    sidewinding: Option<&SidewindingGait>,
    stations: &[f64],
    n_per_section: usize,
    t: f64,
) -> Result<DiscretizedCurve, GaitError> {
    match spec {
        GaitSpec::Sidewinding(_) => {
            let gait = sidewinding.expect("sidewinding gait prepared");
            let points = gait.sample_at_arc_lengths(t, stations);
            let local = local_frame_from_tangent(gait.point(t, 0.0), gait.tangent(t, 0.0))?;
            Ok(DiscretizedCurve {
                timestamp: t,
                points,
                body_frame: local * robot_alignment(),
            })
        }
        GaitSpec::Rolling(params) => {
            let q = rolling_joint_pattern(params, robot, t);
            Ok(DiscretizedCurve {
                timestamp: t,
                points: sample_backbone(&BasePose::identity(), &q, robot, n_per_section),
                body_frame: PoseTransform::identity(),
            })
        }
    }
}

/// Samples one gait period at `N_t` uniform instants, each with `N_s` points
/// placed at the robot's backbone sample stations.
pub fn discretize_gait(
    spec: &GaitSpec,
    robot: &RobotConfig,
    exec: Execution,
) -> Result<Vec<DiscretizedCurve>, GaitError> {
    spec.validate()?;
    let n_per_section = samples_per_section(spec.samples_per_curve())?;
    let stations = robot.sample_stations(n_per_section);
    let sidewinding = match spec {
        GaitSpec::Sidewinding(p) => Some(SidewindingGait::fit_to_length(p.clone(), robot.total_length())?),
        GaitSpec::Rolling(_) => None,
    };
    let times = spec.timestamps();
    let curves = map_indexed(times.len(), exec, |i| {
        discretize_instant(spec, robot, sidewinding.as_ref(), &stations, n_per_section, times[i])
    });
    let curves = curves.into_iter().collect::<Result<Vec<_>, _>>()?;
    for c in &curves {
        for (i, w) in c.points.windows(2).enumerate() {
            if (w[1] - w[0]).norm() < 1e-9 {
                return Err(GaitError::DegenerateCurve(format!(
                    "zero tangent between points {i} and {} at t = {}",
                    i + 1,
                    c.timestamp
                )));
            }
        }
    }
    Ok(curves)
}

/// Full gait generation: discretize, build local frames, project every curve
/// into its robot base frame.
pub fn generate_curve_set(spec: &GaitSpec, robot: &RobotConfig, exec: Execution) -> Result<GaitCurveSet, GaitError> {
    let raw = discretize_gait(spec, robot, exec)?;
    let curves = map_indexed(raw.len(), exec, |i| {
        project_to_robot_frame(raw[i].timestamp, &raw[i].points, &raw[i].body_frame)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(GaitCurveSet {
        kind: spec.kind(),
        period: spec.period(),
        samples_per_section: samples_per_section(spec.samples_per_curve())?,
        curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamps_are_uniform() {
        let t = GaitSpec::default().timestamps();
        assert_eq!(t.len(), 20);
        for (i, v) in t.iter().enumerate() {
            assert!((v - 0.05 * i as f64).abs() < 1e-15);
        }
        assert!((t[19] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn sample_count_must_match_backbone_grid() {
        assert_eq!(samples_per_section(61).unwrap(), 15);
        assert!(samples_per_section(60).is_err());
        assert!(samples_per_section(1).is_err());
    }

    #[test]
    fn kind_follows_phase() {
        assert_eq!(GaitSpec::Rolling(RollingParams::planar()).kind(), GaitKind::PlanarRolling);
        assert_eq!(GaitSpec::Rolling(RollingParams::default()).kind(), GaitKind::HelicalRolling);
        assert_eq!(GaitSpec::default().kind(), GaitKind::Sidewinding);
    }

    #[test]
    fn curve_sets_put_base_at_origin_with_proper_frames() {
        let robot = RobotConfig::default();
        for spec in [GaitSpec::default(), GaitSpec::Rolling(RollingParams::default())] {
            let set = generate_curve_set(&spec, &robot, Execution::Sequential).unwrap();
            assert_eq!(set.curves.len(), 20);
            for c in &set.curves {
                assert_eq!(c.points.len(), 61);
                assert!(c.points[0].norm() <= 1e-12);
                assert!(c.body_frame.is_proper(1e-9));
                assert!(c.source_frames.iter().all(|f| f.is_proper(1e-9)));
            }
            for w in set.curves.windows(2) {
                assert!(w[1].timestamp > w[0].timestamp);
            }
        }
    }

    #[test]
    fn sidewinding_starts_along_robot_axis() {
        let robot = RobotConfig::default();
        let set = generate_curve_set(&GaitSpec::default(), &robot, Execution::Sequential).unwrap();
        for c in &set.curves {
            let first = c.points[1].normalize();
            // First span is 16 mm of a gently curving path.
            assert!(first.z > 0.99, "{first}");
        }
    }

    #[test]
    fn parallel_and_sequential_generation_agree() {
        let robot = RobotConfig::default();
        let spec = GaitSpec::default();
        let a = generate_curve_set(&spec, &robot, Execution::Sequential).unwrap();
        let b = generate_curve_set(&spec, &robot, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
