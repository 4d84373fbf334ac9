//! Sparse online Gaussian process (SOGP) regression with a bounded basis-vector
//! set and pluggable deletion policies, together with the pieces needed to use
//! it as a learned inverse-dynamics feedforward on a simulated planar arm.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, the clock or the command line lives in the companion
//! `sogp-bench` crate.
//!
//! Modules:
//!
//! - [`kernel`]: ARD Gaussian kernel, kernel vectors and Gram matrices.
//! - [`sogp`]: the online model with novelty gating and PIS / OPS / FS deletion.
//! - [`gp_oracle`]: exact batch GP posterior, used to check the online model.
//! - [`armsim`]: 2-DoF planar arm dynamics, measurement noise and state estimators.
//! - [`control`]: PD + GP-feedforward controller over a bank of per-joint models.
//! - [`trajgen`]: quintic point-to-point and circular reference trajectories.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod armsim;
pub mod control;
mod error;
pub mod gp_oracle;
pub mod kernel;
pub mod linalg;
pub mod sogp;
pub mod trajgen;

pub use error::{Error, Result};
pub use kernel::KernelParams;
pub use linalg::Matrix;
pub use sogp::{
    Deletion, DeletionPolicy, DeletionRule, ScoreRule, SogpConfig, SogpModel, UpdateBranch, UpdateReport,
};
