use std::f64::consts::{FRAC_PI_3, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::GaitError;
use crate::kinematics::{
    bend_to_joints_unchecked, pose_at_arc_length, BasePose, BendParameters, JointVector, RobotConfig, SectionJoints,
    SECTION_COUNT,
};

/// Rolling gait: every section keeps the same bending angle while its bending
/// direction rotates about the neutral axis. Section `i` (0-based) lags by
/// `i · section_phase`; a zero phase gives planar rolling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RollingParams {
    /// Rotation rate of the bending direction in rad/s; `None` means one full
    /// turn per period.
    pub direction_rate: Option<f64>,
    pub arc_angle: f64,
    pub section_phase: f64,
    pub period: f64,
    pub samples_per_period: usize,
    pub samples_per_curve: usize,
}

impl Default for RollingParams {
    fn default() -> Self {
        Self {
            direction_rate: None,
            arc_angle: 0.5,
            section_phase: FRAC_PI_3,
            period: 1.0,
            samples_per_period: 20,
            samples_per_curve: 61,
        }
    }
}

impl RollingParams {
    pub fn planar() -> Self {
        Self {
            section_phase: 0.0,
            ..Self::default()
        }
    }

    pub fn direction_rate(&self) -> f64 {
        self.direction_rate.unwrap_or(TAU / self.period)
    }

    pub fn validate(&self) -> Result<(), GaitError> {
        let bad = |what: &str| Err(GaitError::InvalidParams(what.to_string()));
        if !(self.period > 0.0) {
            return bad("period must be positive");
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.arc_angle) {
            return bad("arc_angle must lie in [0, pi]");
        }
        if !self.section_phase.is_finite() || !self.direction_rate().is_finite() {
            return bad("phase and rate must be finite");
        }
        if self.samples_per_period < 2 || self.samples_per_curve < 2 {
            return bad("at least two samples per period and per curve are required");
        }
        Ok(())
    }

    /// Bending direction of section `index` (0-based) at time `t`.
    pub fn direction(&self, index: usize, t: f64) -> f64 {
        self.direction_rate() * t + index as f64 * self.section_phase
    }
}

/// Joint pattern generating the rolling shape at time `t`.
pub fn rolling_joint_pattern(params: &RollingParams, robot: &RobotConfig, t: f64) -> JointVector {
    let mut q = [SectionJoints::zero(); SECTION_COUNT];
    for (i, (j, c)) in q.iter_mut().zip(&robot.sections).enumerate() {
        *j = bend_to_joints_unchecked(&BendParameters::new(params.direction(i, t), params.arc_angle), c);
    }
    JointVector(q)
}

/// Backbone point of the rolling shape at time `t` and body coordinate
/// `s ∈ [0, 1]` (fraction of the full length, offsets included), in the world
/// frame, which coincides with the robot base frame for this gait.
pub fn rolling_curve(params: &RollingParams, robot: &RobotConfig, t: f64, s: f64) -> Vector3<f64> {
    let q = rolling_joint_pattern(params, robot, t);
    pose_at_arc_length(&BasePose::identity(), &q, robot, s * robot.total_length()).translation
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{joints_to_bend, robot_transform, sample_backbone};
    use std::f64::consts::PI;

    #[test]
    fn zero_phase_uses_identical_bends() {
        let robot = RobotConfig::default();
        let params = RollingParams::planar();
        let q = rolling_joint_pattern(&params, &robot, 0.0);
        for s in &q.0 {
            let b = joints_to_bend(s, &robot.sections[0]).unwrap();
            assert!(b.direction.abs() < 1e-12);
            assert!((b.angle - params.arc_angle).abs() < 1e-12);
        }
        // The curve tip is the robot tip of that pattern.
        let tip = rolling_curve(&params, &robot, 0.0, 1.0);
        let expected = robot_transform(&BasePose::identity(), &q, &robot, 4.0).unwrap();
        assert!((tip - expected.translation).norm() < 1e-12);
    }

    #[test]
    fn helical_first_and_last_sections_oppose() {
        let robot = RobotConfig::default();
        let params = RollingParams::default();
        let q = rolling_joint_pattern(&params, &robot, 0.13);
        let b1 = joints_to_bend(&q.0[0], &robot.sections[0]).unwrap();
        let b4 = joints_to_bend(&q.0[3], &robot.sections[3]).unwrap();
        let diff = (b4.direction - b1.direction).rem_euclid(TAU);
        assert!((diff - PI).abs() < 1e-9);
        let cumulative: Vec<f64> = (1..4).map(|i| params.direction(i, 0.0)).collect();
        for (c, e) in cumulative.iter().zip([PI / 3.0, 2.0 * PI / 3.0, PI]) {
            assert!((c - e).abs() < 1e-15);
        }
    }

    #[test]
    fn full_rotation_is_periodic() {
        let robot = RobotConfig::default();
        let params = RollingParams::default();
        for &t in &[0.0, 0.21, 0.6] {
            for k in 0..=8 {
                let s = k as f64 / 8.0;
                let a = rolling_curve(&params, &robot, t, s);
                let b = rolling_curve(&params, &robot, t + params.period, s);
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn last_section_lags_first_by_half_period() {
        let robot = RobotConfig::default();
        let params = RollingParams::default();
        for k in 0..20 {
            let t = k as f64 * 0.05;
            let a = rolling_joint_pattern(&params, &robot, t);
            let b = rolling_joint_pattern(&params, &robot, t + params.period / 2.0);
            for (x, y) in a.0[0].lengths().iter().zip(b.0[3].lengths()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn default_pattern_respects_bounds() {
        let robot = RobotConfig::default();
        let params = RollingParams::default();
        for k in 0..40 {
            let q = rolling_joint_pattern(&params, &robot, k as f64 / 40.0);
            robot.check_joints(&q).unwrap();
            assert_eq!(sample_backbone(&BasePose::identity(), &q, &robot, 15).len(), 61);
        }
    }
}
