//! Inverse kinematics: fit the backbone samples of the robot to a projected
//! gait curve by bounded minimization of the point-distance cost.

mod cost;
mod solver;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cost::{actuator_penalty, cost_gradient, evaluate_cost, min_point_distance, numeric_gradient, smoothed_cost};
pub use solver::{solve_frame, solve_frame_seeded, solve_period};

use crate::gait::{FramedCurve, GaitKind};
use crate::kinematics::{JointVector, RobotConfig, SECTION_COUNT};
use crate::parallel::Execution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IkError {
    #[error("target has {got} points, the backbone grid has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("frame {frame} did not converge (mean residual {residual} m)")]
    NoConvergence { frame: usize, residual: f64 },
    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),
}

/// Solver settings shared by every frame of a period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IkSettings {
    /// Weight of the actuator-length penalty.
    pub lambda: f64,
    pub starts: usize,
    pub max_iterations: usize,
    pub seed: u64,
    /// ε of the smoothed norm, in meters.
    pub smoothing: f64,
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
    /// Largest accepted per-actuator change between adjacent frames, in meters.
    pub smoothness_bound: f64,
    pub execution: Execution,
}

impl Default for IkSettings {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            starts: 8,
            max_iterations: 500,
            seed: 0,
            smoothing: 1e-9,
            gradient_tolerance: 1e-8,
            step_tolerance: 1e-10,
            smoothness_bound: 0.02,
            execution: Execution::default(),
        }
    }
}

impl IkSettings {
    pub fn validate(&self) -> Result<(), IkError> {
        let bad = |what: &str| Err(IkError::InvalidSettings(what.to_string()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and non-negative");
        }
        if self.starts == 0 || self.max_iterations == 0 {
            return bad("starts and max_iterations must be positive");
        }
        if !(self.smoothing >= 0.0 && self.gradient_tolerance > 0.0 && self.step_tolerance > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.smoothness_bound > 0.0) {
            return bad("smoothness_bound must be positive");
        }
        Ok(())
    }
}

/// One fitting problem: target points in the robot base frame, paired index
/// to index with the backbone samples of `config`.
#[derive(Clone, Debug, PartialEq)]
pub struct IkProblem {
    pub target: Vec<Vector3<f64>>,
    pub config: RobotConfig,
    pub samples_per_section: usize,
    pub lambda: f64,
}

impl IkProblem {
    pub fn new(
        target: Vec<Vector3<f64>>,
        config: RobotConfig,
        samples_per_section: usize,
        lambda: f64,
    ) -> Result<Self, IkError> {
        let p = Self {
            target,
            config,
            samples_per_section,
            lambda,
        };
        p.check_dimensions()?;
        Ok(p)
    }

    pub fn from_curve(
        curve: &FramedCurve,
        config: RobotConfig,
        samples_per_section: usize,
        lambda: f64,
    ) -> Result<Self, IkError> {
        Self::new(curve.points.clone(), config, samples_per_section, lambda)
    }

    /// Number of backbone samples `K`.
    pub fn sample_count(&self) -> usize {
        SECTION_COUNT * self.samples_per_section + 1
    }

    pub(crate) fn check_dimensions(&self) -> Result<(), IkError> {
        let expected = self.sample_count();
        if self.samples_per_section == 0 || self.target.len() != expected {
            return Err(IkError::DimensionMismatch {
                expected,
                got: self.target.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IkSolution {
    pub joints: JointVector,
    /// Mean per-point distance in meters.
    pub residual: f64,
    /// True (unsmoothed) cost.
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Index of the start that produced this solution.
    pub start: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub timestamp: f64,
    pub joints: JointVector,
    pub residual: f64,
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Adjacent frames whose joints differ by more than the smoothness bound.
/// `to == 0` marks the wrap from the last frame back to the first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessViolation {
    pub from: usize,
    pub to: usize,
    pub max_change: f64,
}

/// Joint solutions over one gait period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointTrajectory {
    pub kind: GaitKind,
    pub period: f64,
    pub lambda: f64,
    pub samples: Vec<TrajectorySample>,
    /// Whether the periodic closure pass ran.
    pub closure_pass: bool,
    pub smoothness_violations: Vec<SmoothnessViolation>,
}

impl JointTrajectory {
    pub fn mean_residual(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.residual).sum::<f64>() / self.samples.len() as f64
    }

    pub fn max_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.residual).fold(0.0, f64::max)
    }

    pub fn nonconverged_frames(&self) -> Vec<usize> {
        (0..self.samples.len()).filter(|&i| !self.samples[i].converged).collect()
    }

    /// Fails with the first frame that did not converge.
    pub fn check_convergence(&self) -> Result<(), IkError> {
        match self.samples.iter().position(|s| !s.converged) {
            Some(frame) => Err(IkError::NoConvergence {
                frame,
                residual: self.samples[frame].residual,
            }),
            None => Ok(()),
        }
    }
}
