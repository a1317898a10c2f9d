//! Joint trajectories to actuator pressures, and resampling onto the
//! controller's fixed-rate grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ik::JointTrajectory;
use crate::kinematics::ACTUATOR_COUNT;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActuationError {
    #[error("trajectory has no samples")]
    EmptyTrajectory,
    #[error("invalid pressure map: {0}")]
    InvalidMap(String),
    #[error("invalid control schedule: {0}")]
    InvalidSchedule(String),
}

/// Affine per-channel map `p = clamp(bias + gain · l, floor, ceiling)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PressureMap {
    /// Bar per meter of length change.
    pub gain: f64,
    /// Pressure at zero length change, in bar.
    pub bias: f64,
    pub ceiling: f64,
    pub floor: f64,
}

impl Default for PressureMap {
    fn default() -> Self {
        Self {
            gain: 40.0,
            bias: 2.0,
            ceiling: 4.0,
            floor: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clamp {
    None,
    Floor,
    Ceiling,
}

impl PressureMap {
    pub fn validate(&self) -> Result<(), ActuationError> {
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(ActuationError::InvalidMap(format!("gain must be positive, got {}", self.gain)));
        }
        if !(self.floor <= self.bias && self.bias <= self.ceiling) || !self.floor.is_finite() || !self.ceiling.is_finite() {
            return Err(ActuationError::InvalidMap(format!(
                "need floor <= bias <= ceiling, got {} / {} / {}",
                self.floor, self.bias, self.ceiling
            )));
        }
        Ok(())
    }

    /// Pressure for one length change, with the clamp that applied. Landing
    /// exactly on a limit counts as clamped.
    pub fn pressure(&self, l: f64) -> (f64, Clamp) {
        let p = self.bias + self.gain * l;
        if p >= self.ceiling {
            (self.ceiling, Clamp::Ceiling)
        } else if p <= self.floor {
            (self.floor, Clamp::Floor)
        } else {
            (p, Clamp::None)
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClampCounts {
    pub floor: usize,
    pub ceiling: usize,
}

/// Pressures of the twelve channels at each trajectory sample, ordered
/// `p_11, p_12, p_13, p_21, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureTrajectory {
    pub period: f64,
    pub timestamps: Vec<f64>,
    pub pressures: Vec<[f64; ACTUATOR_COUNT]>,
    pub clamps: ClampCounts,
    pub map: PressureMap,
}

pub fn map_pressures(traj: &JointTrajectory, map: &PressureMap) -> PressureTrajectory {
    let mut clamps = ClampCounts::default();
    let pressures = traj
        .samples
        .iter()
        .map(|s| {
            let lengths = s.joints.actuator_lengths();
            let mut row = [0.0; ACTUATOR_COUNT];
            for (p, l) in row.iter_mut().zip(lengths) {
                let (value, clamp) = map.pressure(l);
                match clamp {
                    Clamp::Floor => clamps.floor += 1,
                    Clamp::Ceiling => clamps.ceiling += 1,
                    Clamp::None => {}
                }
                *p = value;
            }
            row
        })
        .collect();
    PressureTrajectory {
        period: traj.period,
        timestamps: traj.samples.iter().map(|s| s.timestamp).collect(),
        pressures,
        clamps,
        map: *map,
    }
}

/// Scales every joint sample by `factor` (jointspace amplitude control).
pub fn scale_amplitude(traj: &JointTrajectory, factor: f64) -> JointTrajectory {
    let mut out = traj.clone();
    for s in out.samples.iter_mut() {
        s.joints = s.joints.scaled(factor);
    }
    out
}

/// Replays the trajectory at a new period by scaling its timestamps
/// (frequency control).
pub fn with_period(traj: &JointTrajectory, period: f64) -> JointTrajectory {
    let mut out = traj.clone();
    let k = period / traj.period;
    for s in out.samples.iter_mut() {
        s.timestamp *= k;
    }
    out.period = period;
    out
}

/// Rate and duration of the controller's pressure table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSchedule {
    /// Hertz.
    pub rate: f64,
    /// Seconds.
    pub duration: f64,
}

impl Default for ControlSchedule {
    fn default() -> Self {
        Self {
            rate: 20.0,
            duration: 12.0,
        }
    }
}

impl ControlSchedule {
    pub fn validate(&self) -> Result<(), ActuationError> {
        if !(self.rate > 0.0 && self.rate.is_finite() && self.duration > 0.0 && self.duration.is_finite()) {
            return Err(ActuationError::InvalidSchedule(format!(
                "rate and duration must be positive, got {} Hz / {} s",
                self.rate, self.duration
            )));
        }
        Ok(())
    }

    /// Rows in the table: `rate · duration`, rounded down.
    pub fn row_count(&self) -> usize {
        (self.rate * self.duration + 1e-9).floor() as usize
    }

    pub const CHANNELS: usize = ACTUATOR_COUNT;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureTable {
    pub rate: f64,
    pub times: Vec<f64>,
    pub rows: Vec<[f64; ACTUATOR_COUNT]>,
}

const NODE_SNAP: f64 = 1e-9;

/// Periodic extension of the pressure trajectory sampled at `k / rate` for
/// `k = 0 … rate·duration − 1` with linear interpolation; the interval after
/// the last sample interpolates back to the first one period later.
pub fn resample_schedule(p: &PressureTrajectory, sched: &ControlSchedule) -> Result<PressureTable, ActuationError> {
    if p.timestamps.is_empty() || p.pressures.len() != p.timestamps.len() {
        return Err(ActuationError::EmptyTrajectory);
    }
    sched.validate()?;
    if !(p.period > 0.0) {
        return Err(ActuationError::InvalidSchedule(format!("period must be positive, got {}", p.period)));
    }
    let n = p.timestamps.len();
    let t0 = p.timestamps[0];
    let rows_n = sched.row_count();
    let mut times = Vec::with_capacity(rows_n);
    let mut rows = Vec::with_capacity(rows_n);
    for k in 0..rows_n {
        let t = k as f64 / sched.rate;
        let tau = t0 + (t - t0).rem_euclid(p.period);
        // Last sample not after tau.
        let i = p.timestamps.partition_point(|&s| s <= tau).saturating_sub(1);
        let (ta, tb, b) = if i + 1 < n {
            (p.timestamps[i], p.timestamps[i + 1], i + 1)
        } else {
            (p.timestamps[i], t0 + p.period, 0)
        };
        let w = if tb > ta { (tau - ta) / (tb - ta) } else { 0.0 };
        // Grid times that hit a node up to rounding take the node value.
        let mut row = if w > 1.0 - NODE_SNAP { p.pressures[b] } else { p.pressures[i] };
        if w > NODE_SNAP && w <= 1.0 - NODE_SNAP {
            for (r, pb) in row.iter_mut().zip(&p.pressures[b]) {
                *r += w * (pb - *r);
            }
        }
        times.push(t);
        rows.push(row);
    }
    Ok(PressureTable {
        rate: sched.rate,
        times,
        rows,
    })
}
