//! Serial chain of four sections on a floating base.
//!
//! The selector `ξ ∈ [0, 4]` walks the bending sections only: `⌊ξ⌋` completed
//! sections, each followed by its rigid trailing offset, then a fraction of
//! section `⌈ξ⌉`. Offsets are crossed atomically at integer `ξ`, so the map is
//! right-continuous with a jump of exactly `d_off` (along the local Z axis)
//! when approaching an integer from below.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::pose::{BasePose, PoseTransform};
use super::section::{
    arc_pose, arc_position_partials, curvature_partials, section_transform, tip_angular_partials,
    JointBounds, SectionConfig, SectionJoints,
};
use super::KinematicsError;

pub const SECTION_COUNT: usize = 4;
/// Independent joint variables: two per section.
pub const JOINT_DIM: usize = 2 * SECTION_COUNT;
/// Actuator channels: three per section.
pub const ACTUATOR_COUNT: usize = 3 * SECTION_COUNT;
/// Backbone samples per section giving the 61-point fitting grid.
pub const DEFAULT_SAMPLES_PER_SECTION: usize = 15;

/// Geometry of the whole robot plus the actuator limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotConfig {
    pub sections: [SectionConfig; SECTION_COUNT],
    pub bounds: JointBounds,
}

impl Default for RobotConfig {
    fn default() -> Self {
        let mut sections = [SectionConfig::default(); SECTION_COUNT];
        sections[SECTION_COUNT - 1].trailing_offset = 0.0;
        Self {
            sections,
            bounds: JointBounds::default(),
        }
    }
}

impl RobotConfig {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        for s in &self.sections {
            s.validate()?;
        }
        self.bounds.validate()
    }

    /// Sum of the bending-section backbone lengths.
    pub fn bending_length(&self) -> f64 {
        self.sections.iter().map(|s| s.backbone_length).sum()
    }

    /// Straight-pose length including the rigid offsets.
    pub fn total_length(&self) -> f64 {
        self.sections
            .iter()
            .map(|s| s.backbone_length + s.trailing_offset)
            .sum()
    }

    pub fn with_bounds(mut self, bounds: JointBounds) -> Self {
        self.bounds = bounds;
        self
    }

    /// Checks every actuator of `q` against the configured strain limits.
    pub fn check_joints(&self, q: &JointVector) -> Result<(), KinematicsError> {
        for (i, (j, c)) in q.0.iter().zip(&self.sections).enumerate() {
            self.bounds.check(j, c).map_err(|e| match e {
                KinematicsError::BoundsViolation {
                    actuator,
                    value,
                    min,
                    max,
                } => KinematicsError::SectionBoundsViolation {
                    section: i + 1,
                    actuator,
                    value,
                    min,
                    max,
                },
                other => other,
            })?;
        }
        Ok(())
    }

    /// Projects every section of `q` onto its feasible set.
    pub fn project(&self, q: &JointVector) -> JointVector {
        let mut out = *q;
        for (j, c) in out.0.iter_mut().zip(&self.sections) {
            *j = self.bounds.project(*j, c);
        }
        out
    }

    /// Arc-length position along the physical backbone (offsets included) of
    /// every point returned by [`sample_backbone`].
    pub fn sample_stations(&self, n_per_section: usize) -> Vec<f64> {
        let mut stations = Vec::with_capacity(SECTION_COUNT * n_per_section + 1);
        stations.push(0.0);
        let mut start = 0.0;
        for s in &self.sections {
            for m in 1..=n_per_section {
                stations.push(start + s.backbone_length * m as f64 / n_per_section as f64);
            }
            start += s.backbone_length + s.trailing_offset;
        }
        stations
    }
}

/// Jointspace state of the robot: two independent length changes per section.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JointVector(pub [SectionJoints; SECTION_COUNT]);

impl JointVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_array(x: &[f64; JOINT_DIM]) -> Self {
        let mut q = [SectionJoints::zero(); SECTION_COUNT];
        for (i, s) in q.iter_mut().enumerate() {
            *s = SectionJoints::new(x[2 * i], x[2 * i + 1]);
        }
        Self(q)
    }

    pub fn to_array(&self) -> [f64; JOINT_DIM] {
        let mut x = [0.0; JOINT_DIM];
        for (i, s) in self.0.iter().enumerate() {
            x[2 * i] = s.l1;
            x[2 * i + 1] = s.l2;
        }
        x
    }

    /// All twelve actuator length changes ordered `l_11, l_12, l_13, l_21, …`.
    pub fn actuator_lengths(&self) -> [f64; ACTUATOR_COUNT] {
        let mut out = [0.0; ACTUATOR_COUNT];
        for (i, s) in self.0.iter().enumerate() {
            out[3 * i..3 * i + 3].copy_from_slice(&s.lengths());
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = *self;
        for s in out.0.iter_mut() {
            s.l1 *= factor;
            s.l2 *= factor;
        }
        out
    }

    /// Largest absolute difference over all twelve actuators.
    pub fn max_abs_diff(&self, other: &JointVector) -> f64 {
        self.actuator_lengths()
            .iter()
            .zip(other.actuator_lengths())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn offset(c: &SectionConfig) -> PoseTransform {
    PoseTransform::from_translation(Vector3::new(0.0, 0.0, c.trailing_offset))
}

/// Pose of the neutral-axis point selected by `xi ∈ [0, 4]`.
pub fn robot_transform(
    base: &BasePose,
    q: &JointVector,
    config: &RobotConfig,
    xi: f64,
) -> Result<PoseTransform, KinematicsError> {
    if !(0.0..=SECTION_COUNT as f64).contains(&xi) {
        return Err(KinematicsError::OutOfRange {
            quantity: "xi",
            value: xi,
        });
    }
    let whole = (xi.floor() as usize).min(SECTION_COUNT);
    let mut t = base.to_transform();
    for i in 0..whole {
        let c = &config.sections[i];
        t = t * section_transform(&q.0[i], c, 1.0) * offset(c);
    }
    if whole < SECTION_COUNT {
        let frac = xi - whole as f64;
        t = t * section_transform(&q.0[whole], &config.sections[whole], frac);
    }
    Ok(t)
}

/// Pose of the backbone point at arc length `s` (meters, offsets included)
/// from the base; clamps to the tip.
pub fn pose_at_arc_length(base: &BasePose, q: &JointVector, config: &RobotConfig, s: f64) -> PoseTransform {
    let mut t = base.to_transform();
    let mut remaining = s.max(0.0);
    for (i, c) in config.sections.iter().enumerate() {
        let last = i + 1 == SECTION_COUNT;
        if remaining <= c.backbone_length || (last && c.trailing_offset == 0.0) {
            let xi = (remaining / c.backbone_length).min(1.0);
            return t * section_transform(&q.0[i], c, xi);
        }
        t = t * section_transform(&q.0[i], c, 1.0);
        remaining -= c.backbone_length;
        if remaining <= c.trailing_offset || last {
            let along = remaining.min(c.trailing_offset);
            return t * PoseTransform::from_translation(Vector3::new(0.0, 0.0, along));
        }
        t = t * offset(c);
        remaining -= c.trailing_offset;
    }
    t
}

/// Neutral-axis sample points: the base point followed by `n_per_section`
/// evenly spaced points in each section, the last of which is the section tip
/// (before its trailing offset).
pub fn sample_backbone(
    base: &BasePose,
    q: &JointVector,
    config: &RobotConfig,
    n_per_section: usize,
) -> Vec<Vector3<f64>> {
    assert!(n_per_section >= 1, "n_per_section must be at least 1");
    let mut points = Vec::with_capacity(SECTION_COUNT * n_per_section + 1);
    let mut prefix = base.to_transform();
    points.push(prefix.translation);
    for (j, c) in q.0.iter().zip(&config.sections) {
        let (u, v) = j.curvature(c);
        for m in 1..=n_per_section {
            let xi = m as f64 / n_per_section as f64;
            let local = arc_pose(u, v, c.backbone_length, xi);
            points.push(prefix.transform_point(&local.translation));
        }
        prefix = prefix * arc_pose(u, v, c.backbone_length, 1.0) * offset(c);
    }
    points
}

/// Backbone samples with identity base together with their derivatives with
/// respect to the eight independent joints (`[l_11, l_12, l_21, …]`).
pub fn sample_backbone_with_jacobian(
    q: &JointVector,
    config: &RobotConfig,
    n_per_section: usize,
) -> (Vec<Vector3<f64>>, Vec<[Vector3<f64>; JOINT_DIM]>) {
    struct Upstream {
        tip: Vector3<f64>,
        dpos: [Vector3<f64>; 2],
        dang: [Vector3<f64>; 2],
    }

    let count = SECTION_COUNT * n_per_section + 1;
    let mut points = Vec::with_capacity(count);
    let mut jac = Vec::with_capacity(count);
    points.push(Vector3::zeros());
    jac.push([Vector3::zeros(); JOINT_DIM]);

    let mut prefix = PoseTransform::identity();
    let mut upstream: Vec<Upstream> = Vec::with_capacity(SECTION_COUNT);
    for (i, (j, c)) in q.0.iter().zip(&config.sections).enumerate() {
        let (u, v) = j.curvature(c);
        let cp = curvature_partials(c);
        let to_joints = |du: Vector3<f64>, dv: Vector3<f64>| {
            [du * cp[0][0] + dv * cp[1][0], du * cp[0][1] + dv * cp[1][1]]
        };
        for m in 1..=n_per_section {
            let xi = m as f64 / n_per_section as f64;
            let local = arc_pose(u, v, c.backbone_length, xi);
            let p = prefix.transform_point(&local.translation);
            let mut row = [Vector3::zeros(); JOINT_DIM];
            for (k, up) in upstream.iter().enumerate() {
                let delta = p - up.tip;
                row[2 * k] = up.dpos[0] + up.dang[0].cross(&delta);
                row[2 * k + 1] = up.dpos[1] + up.dang[1].cross(&delta);
            }
            let [du, dv] = arc_position_partials(u, v, c.backbone_length, xi);
            let [dl1, dl2] = to_joints(prefix.rotation * du, prefix.rotation * dv);
            row[2 * i] = dl1;
            row[2 * i + 1] = dl2;
            points.push(p);
            jac.push(row);
        }
        let tip_local = arc_pose(u, v, c.backbone_length, 1.0);
        let [du, dv] = arc_position_partials(u, v, c.backbone_length, 1.0);
        let [wu, wv] = tip_angular_partials(u, v);
        upstream.push(Upstream {
            tip: prefix.transform_point(&tip_local.translation),
            dpos: to_joints(prefix.rotation * du, prefix.rotation * dv),
            dang: to_joints(prefix.rotation * wu, prefix.rotation * wv),
        });
        prefix = prefix * tip_local * offset(c);
    }
    (points, jac)
}
