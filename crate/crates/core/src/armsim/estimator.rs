use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};

/// Joint positions, velocities and accelerations for `n` joints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Kinematics {
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
}

impl Kinematics {
    pub fn zeros(n: usize) -> Self {
        Kinematics {
            q: vec![0.0; n],
            v: vec![0.0; n],
            a: vec![0.0; n],
        }
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    /// `[q; v; a]`, the GP input layout.
    pub fn stacked(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * self.q.len());
        out.extend_from_slice(&self.q);
        out.extend_from_slice(&self.v);
        out.extend_from_slice(&self.a);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorMode {
    /// Pass the simulator truth through. For tests and baselines only.
    Exact,
    /// Backward differences, each smoothed by a first-order low-pass with the
    /// given cutoff (Hz).
    FiniteDifference { cutoff_hz: f64 },
    /// Third-order linear observer per joint with poles at `−bandwidth` (rad/s).
    LinearEso { bandwidth: f64 },
}

impl EstimatorMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EstimatorMode::Exact => Ok(()),
            EstimatorMode::FiniteDifference { cutoff_hz } if cutoff_hz > 0.0 => Ok(()),
            EstimatorMode::LinearEso { bandwidth } if bandwidth > 0.0 => Ok(()),
            _ => Err(Error::invalid("estimator cutoff/bandwidth must be positive")),
        }
    }
}

/// Reconstructs velocity and acceleration from sampled joint positions.
#[derive(Debug, Clone)]
pub struct Estimator {
    mode: EstimatorMode,
    state: Kinematics,
    prev_q: Vec<f64>,
    prev_v: Vec<f64>,
    initialised: bool,
}

impl Estimator {
    pub fn new(mode: EstimatorMode, dof: usize) -> Result<Self> {
        mode.validate()?;
        Ok(Estimator {
            mode,
            state: Kinematics::zeros(dof),
            prev_q: vec![0.0; dof],
            prev_v: vec![0.0; dof],
            initialised: false,
        })
    }

    pub fn mode(&self) -> EstimatorMode {
        self.mode
    }

    pub fn current(&self) -> &Kinematics {
        &self.state
    }

    /// Feeds one position sample and returns the updated estimate.
    ///
    /// `truth` is only read in [`EstimatorMode::Exact`]. The first sample
    /// initialises the position estimate with zero velocity and acceleration.
    pub fn estimate_step(&mut self, q_meas: &[f64], dt: f64, truth: &Kinematics) -> Result<&Kinematics> {
        let n = self.state.dof();
        check_dim("measured positions", n, q_meas.len())?;
        if !(dt > 0.0) {
            return Err(Error::invalid("estimator time step must be positive"));
        }
        if let EstimatorMode::Exact = self.mode {
            check_dim("truth", n, truth.dof())?;
            self.state.clone_from(truth);
            self.initialised = true;
            return Ok(&self.state);
        }
        if !self.initialised {
            self.state.q.copy_from_slice(q_meas);
            self.state.v.iter_mut().for_each(|v| *v = 0.0);
            self.state.a.iter_mut().for_each(|a| *a = 0.0);
            self.prev_q.copy_from_slice(q_meas);
            self.prev_v.iter_mut().for_each(|v| *v = 0.0);
            self.initialised = true;
            return Ok(&self.state);
        }
        match self.mode {
            EstimatorMode::Exact => unreachable!(),
            EstimatorMode::FiniteDifference { cutoff_hz } => {
                let tau = 1.0 / (2.0 * core::f64::consts::PI * cutoff_hz);
                let w = dt / (tau + dt);
                for i in 0..n {
                    let raw_v = (q_meas[i] - self.prev_q[i]) / dt;
                    let v = self.state.v[i] + w * (raw_v - self.state.v[i]);
                    let raw_a = (v - self.prev_v[i]) / dt;
                    self.state.a[i] += w * (raw_a - self.state.a[i]);
                    self.state.v[i] = v;
                    self.state.q[i] = q_meas[i];
                    self.prev_q[i] = q_meas[i];
                    self.prev_v[i] = v;
                }
            }
            EstimatorMode::LinearEso { bandwidth } => {
                let (b1, b2, b3) = (
                    3.0 * bandwidth,
                    3.0 * bandwidth * bandwidth,
                    bandwidth * bandwidth * bandwidth,
                );
                for i in 0..n {
                    let e = self.state.q[i] - q_meas[i];
                    let (z1, z2, z3) = (self.state.q[i], self.state.v[i], self.state.a[i]);
                    self.state.q[i] = z1 + dt * (z2 - b1 * e);
                    self.state.v[i] = z2 + dt * (z3 - b2 * e);
                    self.state.a[i] = z3 - dt * b3 * e;
                }
            }
        }
        Ok(&self.state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_truth() -> Kinematics {
        Kinematics::zeros(1)
    }

    #[test]
    fn constant_input_settles_to_rest() {
        for mode in [
            EstimatorMode::FiniteDifference { cutoff_hz: 20.0 },
            EstimatorMode::LinearEso { bandwidth: 50.0 },
        ] {
            let mut est = Estimator::new(mode, 1).unwrap();
            // start from a wrong guess so there is a transient
            est.estimate_step(&[0.0], 1e-3, &no_truth()).unwrap();
            for _ in 0..2000 {
                est.estimate_step(&[0.7], 1e-3, &no_truth()).unwrap();
            }
            let k = est.current();
            assert!((k.q[0] - 0.7).abs() < 1e-6, "{mode:?}");
            assert!(k.v[0].abs() < 1e-6 && k.a[0].abs() < 1e-6, "{mode:?}: {k:?}");
        }
    }

    #[test]
    fn eso_tracks_a_ramp() {
        let c = 0.8;
        let dt = 1e-3;
        let mut est = Estimator::new(EstimatorMode::LinearEso { bandwidth: 50.0 }, 1).unwrap();
        for k in 0..=500 {
            let t = k as f64 * dt;
            est.estimate_step(&[c * t], dt, &no_truth()).unwrap();
        }
        let v = est.current().v[0];
        assert!((v - c).abs() < 0.01 * c, "v = {v}");
    }

    #[test]
    fn exact_mode_is_pass_through() {
        let truth = Kinematics {
            q: vec![0.1, 0.2],
            v: vec![-1.0, 3.5],
            a: vec![7.25, -0.125],
        };
        let mut est = Estimator::new(EstimatorMode::Exact, 2).unwrap();
        let out = est.estimate_step(&[9.0, 9.0], 1e-3, &truth).unwrap();
        assert_eq!(out, &truth);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(Estimator::new(EstimatorMode::LinearEso { bandwidth: 0.0 }, 1).is_err());
        let mut est = Estimator::new(EstimatorMode::LinearEso { bandwidth: 10.0 }, 2).unwrap();
        assert!(est.estimate_step(&[0.0], 1e-3, &Kinematics::zeros(2)).is_err());
        assert!(est
            .estimate_step(&[0.0, 0.0], 0.0, &Kinematics::zeros(2))
            .is_err());
    }

    #[test]
    fn stacked_layout() {
        let k = Kinematics {
            q: vec![1.0, 2.0],
            v: vec![3.0, 4.0],
            a: vec![5.0, 6.0],
        };
        assert_eq!(k.stacked(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }
}
