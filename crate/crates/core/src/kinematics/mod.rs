//! Constant-curvature section kinematics and the floating-base robot chain.

mod pose;
mod robot;
mod section;

use thiserror::Error;

pub use pose::{BasePose, PoseTransform};
pub use robot::{
    pose_at_arc_length, robot_transform, sample_backbone, sample_backbone_with_jacobian, JointVector,
    RobotConfig, ACTUATOR_COUNT, DEFAULT_SAMPLES_PER_SECTION, JOINT_DIM, SECTION_COUNT,
};
pub use section::{
    bend_to_joints, joints_to_bend, section_transform, skin_point_transform, BendParameters, JointBounds,
    SectionConfig, SectionJoints, SERIES_THRESHOLD,
};

pub(crate) use section::bend_to_joints_unchecked;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("{quantity} = {value} is out of range")]
    OutOfRange { quantity: &'static str, value: f64 },
    #[error("actuator {actuator} length change {value} outside [{min}, {max}]")]
    BoundsViolation {
        actuator: usize,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("section {section} actuator {actuator} length change {value} outside [{min}, {max}]")]
    SectionBoundsViolation {
        section: usize,
        actuator: usize,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("invalid robot configuration: {0}")]
    InvalidConfig(String),
}
