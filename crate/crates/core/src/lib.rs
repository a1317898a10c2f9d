//! Kinematics, gait synthesis and inverse kinematics for a four-section soft
//! robotic snake driven by twelve pneumatic artificial muscles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuation;
pub mod config;
pub mod export;
pub mod gait;
pub mod ik;
pub mod kinematics;
pub mod parallel;
pub mod pipeline;
