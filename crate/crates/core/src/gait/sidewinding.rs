use std::f64::consts::{FRAC_PI_3, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::GaitError;
use crate::kinematics::RobotConfig;

/// Traveling-wave sidewinding curve parameters.
///
/// The body coordinate `s ∈ [0, 1]` enters the wave through
/// `τ = s · body_period − t`, so `body_period` sets how much of the wave the
/// body spans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SidewindingParams {
    pub amplitude_y: f64,
    pub amplitude_z: f64,
    pub frequency_y: f64,
    pub frequency_z: f64,
    pub phase: f64,
    pub period: f64,
    /// Wave time spanned by one body length.
    pub body_period: f64,
    pub samples_per_period: usize,
    pub samples_per_curve: usize,
}

impl Default for SidewindingParams {
    fn default() -> Self {
        Self {
            amplitude_y: 0.2,
            amplitude_z: 0.05,
            frequency_y: 2.0,
            frequency_z: 2.0,
            phase: FRAC_PI_3,
            period: 1.0,
            body_period: 0.25,
            samples_per_period: 20,
            samples_per_curve: 61,
        }
    }
}

impl SidewindingParams {
    pub fn validate(&self) -> Result<(), GaitError> {
        let bad = |what: &str| Err(GaitError::InvalidParams(what.to_string()));
        if !(self.amplitude_y >= 0.0 && self.amplitude_z >= 0.0) {
            return bad("amplitudes must be non-negative");
        }
        if !(self.frequency_y > 0.0 && self.frequency_z > 0.0) {
            return bad("frequencies must be positive");
        }
        if !(self.period > 0.0 && self.body_period > 0.0) {
            return bad("periods must be positive");
        }
        if !self.phase.is_finite() {
            return bad("phase must be finite");
        }
        if self.samples_per_period < 2 || self.samples_per_curve < 2 {
            return bad("at least two samples per period and per curve are required");
        }
        Ok(())
    }
}

/// Sidewinding curve with its forward (x) scale fitted to a body length.
#[derive(Clone, Debug, PartialEq)]
pub struct SidewindingGait {
    pub params: SidewindingParams,
    /// Meters of x travel per unit of `s`.
    pub forward_scale: f64,
}

// Polyline resolution per unit of `s` for arc-length evaluation.
const ARC_SEGMENTS: usize = 4096;

impl SidewindingGait {
    /// Chooses the forward scale so that `s ∈ [0, 1]` at `t = 0` has arc
    /// length `body_length`.
    pub fn fit_to_length(params: SidewindingParams, body_length: f64) -> Result<Self, GaitError> {
        params.validate()?;
        let arc = |scale: f64| {
            Self {
                params: params.clone(),
                forward_scale: scale,
            }
            .arc_length(0.0, 1.0)
        };
        if arc(0.0) > body_length {
            return Err(GaitError::InvalidParams(format!(
                "lateral wave alone is longer ({:.4} m) than the body ({body_length:.4} m)",
                arc(0.0)
            )));
        }
        let (mut lo, mut hi) = (0.0, body_length);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if arc(mid) < body_length {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        Ok(Self {
            params,
            forward_scale: 0.5 * (lo + hi),
        })
    }

    /// Point of the curve at time `t` and body coordinate `s`, in the world frame.
    pub fn point(&self, t: f64, s: f64) -> Vector3<f64> {
        let p = &self.params;
        let tau = s * p.body_period - t;
        Vector3::new(
            self.forward_scale * s,
            p.amplitude_y * (TAU * p.frequency_y * tau).sin(),
            p.amplitude_z * (TAU * p.frequency_z * tau + p.phase).sin(),
        )
    }

    /// Derivative of [`SidewindingGait::point`] with respect to `s`.
    pub fn tangent(&self, t: f64, s: f64) -> Vector3<f64> {
        let p = &self.params;
        let tau = s * p.body_period - t;
        let wy = TAU * p.frequency_y;
        let wz = TAU * p.frequency_z;
        Vector3::new(
            self.forward_scale,
            p.amplitude_y * wy * p.body_period * (wy * tau).cos(),
            p.amplitude_z * wz * p.body_period * (wz * tau + p.phase).cos(),
        )
    }

    /// Polyline arc length of `s ∈ [0, s_end]` at time `t`.
    pub fn arc_length(&self, t: f64, s_end: f64) -> f64 {
        let n = ((ARC_SEGMENTS as f64 * s_end).ceil() as usize).max(1);
        let h = s_end / n as f64;
        let mut prev = self.point(t, 0.0);
        let mut total = 0.0;
        for i in 1..=n {
            let p = self.point(t, i as f64 * h);
            total += (p - prev).norm();
            prev = p;
        }
        total
    }

    /// Curve points at the given arc-length stations (meters from `s = 0`).
    pub fn sample_at_arc_lengths(&self, t: f64, stations: &[f64]) -> Vec<Vector3<f64>> {
        let target = stations.iter().copied().fold(0.0, f64::max);
        let h = 1.0 / ARC_SEGMENTS as f64;
        let mut s_table = vec![0.0];
        let mut arc_table = vec![0.0];
        let mut prev = self.point(t, 0.0);
        let mut i = 0usize;
        while *arc_table.last().unwrap() < target {
            i += 1;
            let s = i as f64 * h;
            let p = self.point(t, s);
            let next = arc_table.last().unwrap() + (p - prev).norm();
            s_table.push(s);
            arc_table.push(next);
            prev = p;
        }
        stations
            .iter()
            .map(|&station| {
                let k = arc_table.partition_point(|&a| a < station);
                let s = if k == 0 {
                    0.0
                } else {
                    let (a0, a1) = (arc_table[k - 1], arc_table[k]);
                    let w = if a1 > a0 { (station - a0) / (a1 - a0) } else { 0.0 };
                    s_table[k - 1] + w * (s_table[k] - s_table[k - 1])
                };
                self.point(t, s)
            })
            .collect()
    }
}

impl SidewindingGait {
    /// Cumulative chord length over the bending sections of a robot laid on
    /// the curve at time `t`: each section is sampled at `n_per_section + 1`
    /// stations from its base to its tip, rigid offsets are skipped.
    pub fn bending_chord_length(&self, t: f64, robot: &RobotConfig, n_per_section: usize) -> f64 {
        let mut start = 0.0;
        let mut total = 0.0;
        for c in &robot.sections {
            let stations: Vec<f64> = (0..=n_per_section)
                .map(|m| start + c.backbone_length * m as f64 / n_per_section as f64)
                .collect();
            let pts = self.sample_at_arc_lengths(t, &stations);
            total += pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum::<f64>();
            start += c.backbone_length + c.trailing_offset;
        }
        total
    }
}

/// Free-function form of [`SidewindingGait::point`].
pub fn sidewinding_curve(gait: &SidewindingGait, t: f64, s: f64) -> Vector3<f64> {
    gait.point(t, s)
}
