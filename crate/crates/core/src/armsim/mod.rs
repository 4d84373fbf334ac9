//! Two-link planar revolute arm under gravity.
//!
//! Joint angles are measured from the +x axis (link 1) and relative to link 1
//! (link 2); gravity points along −y. With `q = 0` both links lie horizontal.
//!
//! `M(q) q̈ + C(q, q̇) q̇ + g(q) + ε(q̇) = τ` where `ε` is viscous joint friction.

mod estimator;

pub use estimator::{Estimator, EstimatorMode, Kinematics};

use libm::{cos, sin};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct ArmParams {
    /// Link masses (kg).
    pub mass: Vec2,
    /// Link lengths (m).
    pub length: Vec2,
    /// Distance from each joint to its link's centre of mass (m).
    pub com: Vec2,
    /// Link inertias about their centres of mass (kg m²).
    pub inertia: Vec2,
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
    /// Viscous friction per joint (N m s/rad).
    pub friction: Vec2,
}

impl Default for ArmParams {
    /// 1 kg, 0.5 m uniform rods with 0.1 N m s/rad friction.
    fn default() -> Self {
        let (m, l) = (1.0, 0.5);
        ArmParams {
            mass: [m, m],
            length: [l, l],
            com: [l / 2.0, l / 2.0],
            inertia: [m * l * l / 12.0; 2],
            gravity: 9.81,
            friction: [0.1, 0.1],
        }
    }
}

impl ArmParams {
    pub fn validate(&self) -> Result<()> {
        let positive = self.mass.iter().chain(&self.length).chain(&self.inertia);
        if positive.into_iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid(
                "arm masses, lengths and inertias must be positive",
            ));
        }
        if self.com.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("centre-of-mass offsets must be non-negative"));
        }
        if self.friction.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("friction must be non-negative"));
        }
        if !self.gravity.is_finite() {
            return Err(Error::invalid("gravity must be finite"));
        }
        Ok(())
    }

    /// Same arm without gravity and friction.
    pub fn conservative_unforced(&self) -> Self {
        ArmParams {
            gravity: 0.0,
            friction: [0.0, 0.0],
            ..self.clone()
        }
    }

    /// Same arm without friction.
    pub fn frictionless(&self) -> Self {
        ArmParams {
            friction: [0.0, 0.0],
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmState {
    pub q: Vec2,
    pub qd: Vec2,
    pub t: f64,
}

impl ArmState {
    pub fn at_rest(q: Vec2) -> Self {
        ArmState {
            q,
            qd: [0.0, 0.0],
            t: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.qd).all(|v| v.is_finite()) && self.t.is_finite()
    }
}

pub fn mass_matrix(p: &ArmParams, q: &Vec2) -> Mat2 {
    let [m1, m2] = p.mass;
    let [l1, _] = p.length;
    let [c1, c2] = p.com;
    let [i1, i2] = p.inertia;
    let c = cos(q[1]);
    let m22 = m2 * c2 * c2 + i2;
    let m12 = m22 + m2 * l1 * c2 * c;
    let m11 = m1 * c1 * c1 + i1 + m2 * (l1 * l1 + c2 * c2 + 2.0 * l1 * c2 * c) + i2;
    [[m11, m12], [m12, m22]]
}

/// Christoffel-form Coriolis/centripetal matrix; `Ṁ − 2C` is skew-symmetric.
pub fn coriolis_matrix(p: &ArmParams, q: &Vec2, qd: &Vec2) -> Mat2 {
    let h = -p.mass[1] * p.length[0] * p.com[1] * sin(q[1]);
    [[h * qd[1], h * (qd[0] + qd[1])], [-h * qd[0], 0.0]]
}

pub fn gravity_torque(p: &ArmParams, q: &Vec2) -> Vec2 {
    let [m1, m2] = p.mass;
    let g = p.gravity;
    let c1 = cos(q[0]);
    let c12 = cos(q[0] + q[1]);
    let g2 = m2 * p.com[1] * g * c12;
    [(m1 * p.com[0] + m2 * p.length[0]) * g * c1 + g2, g2]
}

pub fn friction_torque(p: &ArmParams, qd: &Vec2) -> Vec2 {
    [p.friction[0] * qd[0], p.friction[1] * qd[1]]
}

fn mat_vec(m: &Mat2, v: &Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Non-inertial part `C q̇ + g + ε`.
fn bias_torque(p: &ArmParams, q: &Vec2, qd: &Vec2) -> Vec2 {
    let cqd = mat_vec(&coriolis_matrix(p, q, qd), qd);
    let g = gravity_torque(p, q);
    let f = friction_torque(p, qd);
    [cqd[0] + g[0] + f[0], cqd[1] + g[1] + f[1]]
}

pub fn forward_dynamics(p: &ArmParams, s: &ArmState, tau: &Vec2) -> Vec2 {
    let m = mass_matrix(p, &s.q);
    let b = bias_torque(p, &s.q, &s.qd);
    let rhs = [tau[0] - b[0], tau[1] - b[1]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        (m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det,
        (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det,
    ]
}

pub fn inverse_dynamics(p: &ArmParams, q: &Vec2, qd: &Vec2, qdd: &Vec2) -> Vec2 {
    let mq = mat_vec(&mass_matrix(p, q), qdd);
    let b = bias_torque(p, q, qd);
    [mq[0] + b[0], mq[1] + b[1]]
}

/// Kinetic plus potential energy, with the potential measured from the
/// hanging-down configuration so that it is never negative.
pub fn mechanical_energy(p: &ArmParams, s: &ArmState) -> f64 {
    let m = mass_matrix(p, &s.q);
    let v = mat_vec(&m, &s.qd);
    let kinetic = 0.5 * (s.qd[0] * v[0] + s.qd[1] * v[1]);
    let [m1, m2] = p.mass;
    let y1 = p.com[0] * sin(s.q[0]);
    let y2 = p.length[0] * sin(s.q[0]) + p.com[1] * sin(s.q[0] + s.q[1]);
    let floor1 = -p.com[0];
    let floor2 = -(p.length[0] + p.com[1]);
    kinetic + p.gravity * (m1 * (y1 - floor1) + m2 * (y2 - floor2))
}

/// One classical Runge-Kutta step with `tau` held constant over `dt`.
pub fn step(p: &ArmParams, s: &ArmState, tau: &Vec2, dt: f64) -> Result<ArmState> {
    if !(dt > 0.0) {
        return Err(Error::invalid("time step must be positive"));
    }
    let deriv = |q: Vec2, qd: Vec2| -> (Vec2, Vec2) {
        let a = forward_dynamics(p, &ArmState { q, qd, t: s.t }, tau);
        (qd, a)
    };
    let add = |x: Vec2, k: Vec2, h: f64| [x[0] + h * k[0], x[1] + h * k[1]];

    let (k1q, k1v) = deriv(s.q, s.qd);
    let (k2q, k2v) = deriv(add(s.q, k1q, dt / 2.0), add(s.qd, k1v, dt / 2.0));
    let (k3q, k3v) = deriv(add(s.q, k2q, dt / 2.0), add(s.qd, k2v, dt / 2.0));
    let (k4q, k4v) = deriv(add(s.q, k3q, dt), add(s.qd, k3v, dt));

    let combine = |x: Vec2, a: Vec2, b: Vec2, c: Vec2, d: Vec2| {
        [
            x[0] + dt / 6.0 * (a[0] + 2.0 * b[0] + 2.0 * c[0] + d[0]),
            x[1] + dt / 6.0 * (a[1] + 2.0 * b[1] + 2.0 * c[1] + d[1]),
        ]
    };
    let next = ArmState {
        q: combine(s.q, k1q, k2q, k3q, k4q),
        qd: combine(s.qd, k1v, k2v, k3v, k4v),
        t: s.t + dt,
    };
    if !next.is_finite() {
        return Err(Error::SimulationDivergence {
            t: next.t,
            q: s.q,
            qd: s.qd,
        });
    }
    Ok(next)
}

/// Joint positions corrupted by zero-mean Gaussian noise of variance `noise_var`.
///
/// Always draws two samples so the generator advances identically regardless
/// of the variance.
pub fn measure<R: Rng + ?Sized>(s: &ArmState, noise_var: f64, rng: &mut R) -> Vec2 {
    let sd = libm::sqrt(noise_var.max(0.0));
    let n0: f64 = StandardNormal.sample(rng);
    let n1: f64 = StandardNormal.sample(rng);
    [s.q[0] + sd * n0, s.q[1] + sd * n1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::vec::Vec;

    fn random_state(rng: &mut ChaCha8Rng) -> ArmState {
        ArmState {
            q: [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)],
            qd: [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)],
            t: 0.0,
        }
    }

    /// Moments of the link weights about each joint, from the centre-of-mass
    /// x coordinates (independent of the Lagrangian expressions).
    fn statics_oracle(p: &ArmParams, q: &Vec2) -> Vec2 {
        let x_c1 = p.com[0] * cos(q[0]);
        let x_j2 = p.length[0] * cos(q[0]);
        let x_c2 = x_j2 + p.com[1] * cos(q[0] + q[1]);
        let w1 = p.mass[0] * p.gravity;
        let w2 = p.mass[1] * p.gravity;
        [w1 * x_c1 + w2 * x_c2, w2 * (x_c2 - x_j2)]
    }

    #[test]
    fn gravity_matches_statics_at_horizontal_and_random_poses() {
        let p = ArmParams::default();
        let g = gravity_torque(&p, &[0.0, 0.0]);
        // link 1 weight at 0.25 m, link 2 weight at 0.75 m about joint 1
        assert!((g[0] - 9.81 * (0.25 + 0.75)).abs() < 1e-12);
        assert!((g[1] - 9.81 * 0.25).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let s = random_state(&mut rng);
            let g = gravity_torque(&p, &s.q);
            let o = statics_oracle(&p, &s.q);
            assert!((g[0] - o[0]).abs() < 1e-12 && (g[1] - o[1]).abs() < 1e-12);
            let tau = inverse_dynamics(&p, &s.q, &[0.0, 0.0], &[0.0, 0.0]);
            assert!((tau[0] - o[0]).abs() < 1e-12 && (tau[1] - o[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn static_equilibrium() {
        let p = ArmParams::default().frictionless();
        let s = ArmState::at_rest([0.4, -1.1]);
        let qdd = forward_dynamics(&p, &s, &gravity_torque(&p, &s.q));
        assert!(qdd[0].abs() < 1e-12 && qdd[1].abs() < 1e-12);
    }

    #[test]
    fn zero_everything_gives_zero_torque() {
        let p = ArmParams {
            gravity: 0.0,
            ..ArmParams::default()
        };
        assert_eq!(
            inverse_dynamics(&p, &[0.3, 0.2], &[0.0, 0.0], &[0.0, 0.0]),
            [0.0, 0.0]
        );
    }

    #[test]
    fn forward_inverse_roundtrip() {
        let p = ArmParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let s = random_state(&mut rng);
            let tau = [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
            let qdd = forward_dynamics(&p, &s, &tau);
            let back = inverse_dynamics(&p, &s.q, &s.qd, &qdd);
            assert!((back[0] - tau[0]).abs() < 1e-10 && (back[1] - tau[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn mass_matrix_is_spd() {
        let p = ArmParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let s = random_state(&mut rng);
            let m = mass_matrix(&p, &s.q);
            assert_eq!(m[0][1], m[1][0]);
            let tr = m[0][0] + m[1][1];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let min_eig = 0.5 * (tr - libm::sqrt(tr * tr - 4.0 * det));
            assert!(min_eig > 0.0);
        }
    }

    #[test]
    fn skew_symmetry_with_numerical_mass_derivative() {
        let p = ArmParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = 1e-6;
        for _ in 0..1000 {
            let s = random_state(&mut rng);
            let fwd = [s.q[0] + h * s.qd[0], s.q[1] + h * s.qd[1]];
            let bwd = [s.q[0] - h * s.qd[0], s.q[1] - h * s.qd[1]];
            let (mf, mb) = (mass_matrix(&p, &fwd), mass_matrix(&p, &bwd));
            let c = coriolis_matrix(&p, &s.q, &s.qd);
            let mut val = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let mdot = (mf[i][j] - mb[i][j]) / (2.0 * h);
                    val += s.qd[i] * (mdot - 2.0 * c[i][j]) * s.qd[j];
                }
            }
            assert!(val.abs() < 1e-8, "{val}");
        }
    }

    #[test]
    fn energy_is_conserved_unforced() {
        let p = ArmParams::default().frictionless();
        let mut s = ArmState {
            q: [0.3, 1.0],
            qd: [0.5, -1.0],
            t: 0.0,
        };
        let e0 = mechanical_energy(&p, &s);
        let dt = 1e-4;
        let mut worst = 0.0f64;
        for _ in 0..10_000 {
            s = step(&p, &s, &[0.0, 0.0], dt).unwrap();
            worst = worst.max((mechanical_energy(&p, &s) - e0).abs() / e0);
        }
        assert!(worst < 1e-6, "relative drift {worst}");
        assert!((s.t - 1.0).abs() < 1e-9);
    }

    #[test]
    fn free_motion_advances_by_dt() {
        let p = ArmParams::default().conservative_unforced();
        let s = ArmState {
            q: [0.0, 0.0],
            qd: [1.0, 0.0],
            t: 0.0,
        };
        let n = step(&p, &s, &[0.0, 0.0], 1e-3).unwrap();
        assert!((n.q[0] - 1e-3).abs() < 1e-9);
        assert_eq!(step(&p, &s, &[0.0, 0.0], 1e-3).unwrap(), n);
        assert!(step(&p, &s, &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let p = ArmParams::default();
        let s = ArmState::at_rest([0.0, 0.0]);
        assert!(matches!(
            step(&p, &s, &[f64::INFINITY, 0.0], 1e-3),
            Err(Error::SimulationDivergence { .. })
        ));
    }

    #[test]
    fn measurement_noise() {
        let s = ArmState::at_rest([0.25, -0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(measure(&s, 0.0, &mut rng), s.q);

        let mut a = ChaCha8Rng::seed_from_u64(10);
        let mut b = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            assert_eq!(measure(&s, 1e-14, &mut a), measure(&s, 1e-14, &mut b));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let zero = ArmState::at_rest([0.0, 0.0]);
        let n = 500_000;
        let draws: Vec<f64> = (0..n).flat_map(|_| measure(&zero, 1e-14, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / draws.len() as f64;
        assert!((var / 1e-14 - 1.0).abs() < 0.05, "sample variance {var:e}");
    }
}
