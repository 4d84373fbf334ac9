//! PD feedback plus a learned inverse-dynamics feedforward.
//!
//! `τ = τ_ff + τ_fb`, with `τ_fb = K_p e + K_d ė` and `τ_ff` the
//! de-normalised prediction of one [`SogpModel`] per joint, evaluated at the
//! desired `(q_d, q̇_d, q̈_d)` and faded in by a linear ramp once warm-up ends.
//! The models are trained on the estimated actual `(q, q̇, q̈)` with the
//! applied torque as target.

use alloc::vec::Vec;

use crate::armsim::Kinematics;
use crate::error::{check_dim, Error, Result};
use crate::kernel::KernelParams;
use crate::sogp::{SogpConfig, SogpModel, UpdateReport};

/// Smallest normaliser scale.
pub const MIN_SCALE: f64 = 1e-6;
/// Fewest warm-up samples accepted by [`GpBank::fit_normalizer`].
pub const MIN_WARMUP_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    /// Diagonal of K_p.
    pub kp: Vec<f64>,
    /// Diagonal of K_d.
    pub kd: Vec<f64>,
    pub warmup_duration: f64,
    pub ramp_duration: f64,
    pub update_stride: usize,
}

impl ControllerConfig {
    pub fn dof(&self) -> usize {
        self.kp.len()
    }

    pub fn validate(&self) -> Result<()> {
        check_dim("K_d diagonal", self.kp.len(), self.kd.len())?;
        if self.kp.is_empty() {
            return Err(Error::invalid("controller needs at least one joint"));
        }
        if self
            .kp
            .iter()
            .chain(&self.kd)
            .any(|g| !(*g > 0.0) || !g.is_finite())
        {
            return Err(Error::invalid("gains must be positive"));
        }
        if self.update_stride == 0 {
            return Err(Error::invalid("update stride must be at least 1"));
        }
        if !(self.ramp_duration >= 0.0) || !(self.warmup_duration >= 0.0) {
            return Err(Error::invalid("warm-up and ramp durations must be non-negative"));
        }
        Ok(())
    }

    /// Feedforward weight in `[0, 1]`: zero during warm-up, then a linear ramp.
    pub fn ramp(&self, t: f64) -> f64 {
        if t < self.warmup_duration {
            return 0.0;
        }
        if self.ramp_duration == 0.0 {
            return 1.0;
        }
        ((t - self.warmup_duration) / self.ramp_duration).clamp(0.0, 1.0)
    }
}

/// Affine z-score transform for one joint's torque.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub mean: f64,
    pub scale: f64,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer {
            mean: 0.0,
            scale: 1.0,
        }
    }
}

impl Normalizer {
    pub fn normalize(&self, y: f64) -> f64 {
        (y - self.mean) / self.scale
    }

    pub fn denormalize(&self, z: f64) -> f64 {
        z * self.scale + self.mean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorqueCommand {
    pub tau: Vec<f64>,
    pub tau_ff: Vec<f64>,
    pub tau_fb: Vec<f64>,
}

/// One independent model per joint, sharing a `3n`-dimensional input.
#[derive(Debug, Clone)]
pub struct GpBank {
    models: Vec<SogpModel>,
    normalizers: Vec<Normalizer>,
    samples_seen: u64,
}

impl GpBank {
    /// `n` identical empty models. `params` must have dimension `3n`.
    pub fn new(n: usize, params: KernelParams, config: SogpConfig) -> Result<Self> {
        check_dim("kernel dimension (3 x joints)", 3 * n, params.dim())?;
        let model = SogpModel::new(params, config)?;
        Self::from_models(alloc::vec![model; n], alloc::vec![Normalizer::default(); n])
    }

    pub fn from_models(models: Vec<SogpModel>, normalizers: Vec<Normalizer>) -> Result<Self> {
        let n = models.len();
        if n == 0 {
            return Err(Error::invalid("bank needs at least one model"));
        }
        check_dim("normalizers", n, normalizers.len())?;
        for m in &models {
            check_dim("model input dimension (3 x joints)", 3 * n, m.dim())?;
        }
        if normalizers
            .iter()
            .any(|z| !(z.scale > 0.0) || !z.mean.is_finite())
        {
            return Err(Error::invalid("normalizer scale must be positive"));
        }
        Ok(GpBank {
            models,
            normalizers,
            samples_seen: 0,
        })
    }

    pub fn dof(&self) -> usize {
        self.models.len()
    }

    pub fn models(&self) -> &[SogpModel] {
        &self.models
    }

    pub fn normalizers(&self) -> &[Normalizer] {
        &self.normalizers
    }

    pub fn samples_seen(&self) -> u64 {
        self.samples_seen
    }

    /// Per-joint mean and population standard deviation of warm-up torques.
    pub fn fit_normalizer(&mut self, warmup_targets: &[Vec<f64>]) -> Result<()> {
        let n = self.dof();
        if warmup_targets.len() < MIN_WARMUP_SAMPLES {
            return Err(Error::invalid(alloc::format!(
                "need at least {MIN_WARMUP_SAMPLES} warm-up samples, got {}",
                warmup_targets.len()
            )));
        }
        for t in warmup_targets {
            check_dim("warm-up torque", n, t.len())?;
        }
        let count = warmup_targets.len() as f64;
        for j in 0..n {
            let mean = warmup_targets.iter().map(|t| t[j]).sum::<f64>() / count;
            let var = warmup_targets
                .iter()
                .map(|t| (t[j] - mean) * (t[j] - mean))
                .sum::<f64>()
                / count;
            self.normalizers[j] = Normalizer {
                mean,
                scale: libm::sqrt(var).max(MIN_SCALE),
            };
        }
        Ok(())
    }

    /// De-normalised mean prediction of every joint model at `input`.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.models
            .iter()
            .zip(&self.normalizers)
            .map(|(m, z)| m.predict(input).map(|(mean, _)| z.denormalize(mean)))
            .collect()
    }

    /// De-normalised mean and the raw (unclamped, normalised-units) variance
    /// of every joint model.
    pub fn predict_moments(&self, input: &[f64]) -> Result<Vec<(f64, f64)>> {
        self.models
            .iter()
            .zip(&self.normalizers)
            .map(|(m, z)| {
                m.predict_unclamped(input)
                    .map(|(mean, var)| (z.denormalize(mean), var))
            })
            .collect()
    }

    /// Counts one sample; on every `stride`-th call updates each joint model
    /// with input `[q; v; a]` and its normalised applied torque.
    pub fn observe(
        &mut self,
        cfg: &ControllerConfig,
        estimate: &Kinematics,
        tau_applied: &[f64],
    ) -> Result<Option<Vec<UpdateReport>>> {
        let n = self.dof();
        check_dim("estimate", n, estimate.dof())?;
        check_dim("estimate velocity", n, estimate.v.len())?;
        check_dim("estimate acceleration", n, estimate.a.len())?;
        check_dim("applied torque", n, tau_applied.len())?;
        self.samples_seen += 1;
        if self.samples_seen % cfg.update_stride as u64 != 0 {
            return Ok(None);
        }
        let input = estimate.stacked();
        let reports = self
            .models
            .iter_mut()
            .zip(&self.normalizers)
            .zip(tau_applied)
            .map(|((m, z), &tau)| m.update(&input, z.normalize(tau)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(reports))
    }
}

/// Evaluates the control law at time `t`.
pub fn compute_torque(
    cfg: &ControllerConfig,
    bank: Option<&GpBank>,
    desired: &Kinematics,
    q_hat: &[f64],
    v_hat: &[f64],
    t: f64,
) -> Result<TorqueCommand> {
    let n = cfg.dof();
    check_dim("desired position", n, desired.q.len())?;
    check_dim("desired velocity", n, desired.v.len())?;
    check_dim("desired acceleration", n, desired.a.len())?;
    check_dim("estimated position", n, q_hat.len())?;
    check_dim("estimated velocity", n, v_hat.len())?;
    if !(t >= 0.0) {
        return Err(Error::invalid("time must be non-negative"));
    }
    let tau_fb: Vec<f64> = (0..n)
        .map(|i| cfg.kp[i] * (desired.q[i] - q_hat[i]) + cfg.kd[i] * (desired.v[i] - v_hat[i]))
        .collect();
    let weight = cfg.ramp(t);
    let tau_ff = match bank {
        Some(bank) if weight > 0.0 => {
            check_dim("bank joints", n, bank.dof())?;
            let pred = bank.predict(&desired.stacked())?;
            pred.into_iter().map(|p| weight * p).collect()
        }
        _ => alloc::vec![0.0; n],
    };
    let tau = tau_ff.iter().zip(&tau_fb).map(|(a, b)| a + b).collect();
    Ok(TorqueCommand { tau, tau_ff, tau_fb })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sogp::DeletionPolicy;
    use alloc::vec;

    fn cfg(stride: usize) -> ControllerConfig {
        ControllerConfig {
            kp: vec![400.0, 400.0],
            kd: vec![20.0, 20.0],
            warmup_duration: 2.0,
            ramp_duration: 0.6,
            update_stride: stride,
        }
    }

    fn bank() -> GpBank {
        let p = KernelParams::new(1.0, 0.04, vec![0.5, 0.5, 0.5, 0.5, 0.2, 0.2]).unwrap();
        GpBank::new(2, p, SogpConfig::new(45, 0.01, DeletionPolicy::Fs { h: 15 })).unwrap()
    }

    fn kin(q: [f64; 2], v: [f64; 2], a: [f64; 2]) -> Kinematics {
        Kinematics {
            q: q.to_vec(),
            v: v.to_vec(),
            a: a.to_vec(),
        }
    }

    #[test]
    fn feedback_term() {
        let c = cfg(1);
        let d = kin([0.1, 0.0], [0.0, 0.0], [0.0, 0.0]);
        let out = compute_torque(&c, None, &d, &[0.0, 0.0], &[0.0, 0.0], 1.0).unwrap();
        assert_eq!(out.tau_fb, vec![40.0, 0.0]);
        assert_eq!(out.tau, out.tau_fb);
    }

    #[test]
    fn untrained_bank_with_zero_error_gives_zero_torque() {
        let c = cfg(1);
        let b = bank();
        let d = kin([0.3, -0.2], [0.1, 0.0], [0.0, 1.0]);
        let out = compute_torque(&c, Some(&b), &d, &d.q, &d.v, 10.0).unwrap();
        assert_eq!(out.tau, vec![0.0, 0.0]);
    }

    #[test]
    fn ramp_halfway_scales_feedforward() {
        let c = cfg(1);
        let mut b = bank();
        let warm: Vec<Vec<f64>> = (0..10).map(|_| vec![3.0, -1.0]).collect();
        b.fit_normalizer(&warm).unwrap();
        let d = kin([0.0; 2], [0.0; 2], [0.0; 2]);
        let out = compute_torque(&c, Some(&b), &d, &d.q, &d.v, 2.3).unwrap();
        assert!((out.tau_ff[0] - 1.5).abs() < 1e-12);
        assert!((out.tau_ff[1] + 0.5).abs() < 1e-12);
        for (t, (ff, fb)) in out.tau.iter().zip(out.tau_ff.iter().zip(&out.tau_fb)) {
            assert_eq!(*t, ff + fb);
        }
        let during = compute_torque(&c, Some(&b), &d, &d.q, &d.v, 1.0).unwrap();
        assert_eq!(during.tau_ff, vec![0.0, 0.0]);
    }

    #[test]
    fn ramp_is_monotone() {
        let c = cfg(1);
        let mut last = 0.0;
        for k in 0..400 {
            let r = c.ramp(k as f64 * 0.01);
            assert!(r >= last);
            last = r;
        }
        assert_eq!(c.ramp(1.99), 0.0);
        assert_eq!(c.ramp(2.6), 1.0);
        assert_eq!(c.ramp(100.0), 1.0);
        let step = ControllerConfig {
            ramp_duration: 0.0,
            ..cfg(1)
        };
        assert_eq!(step.ramp(2.0), 1.0);
    }

    #[test]
    fn stride_counts_updates() {
        let c = cfg(7);
        let mut b = bank();
        let e = kin([0.1, 0.2], [0.0, 0.1], [0.3, 0.0]);
        let mut updates = 0;
        for k in 0..100 {
            let mut e = e.clone();
            e.q[0] += 0.05 * k as f64;
            if b.observe(&c, &e, &[1.0, 2.0]).unwrap().is_some() {
                updates += 1;
            }
        }
        assert_eq!(updates, 100 / 7);

        let c1 = cfg(1);
        let mut b = bank();
        for _ in 0..5 {
            assert!(b.observe(&c1, &e, &[1.0, 2.0]).unwrap().is_some());
        }
    }

    #[test]
    fn joints_share_inputs_but_not_targets() {
        let c = cfg(1);
        let mut b = bank();
        let e = kin([0.1, 0.2], [0.0, 0.1], [0.3, 0.0]);
        b.observe(&c, &e, &[1.0, -2.0]).unwrap();
        let [m0, m1] = [&b.models()[0], &b.models()[1]];
        assert_eq!(m0.basis(), m1.basis());
        assert_eq!(m0.basis().row(0), e.stacked().as_slice());
        assert!((m0.alpha()[0] + 0.5 * m1.alpha()[0]).abs() < 1e-15);
    }

    #[test]
    fn normalizer_statistics() {
        let mut b = bank();
        let warm: Vec<Vec<f64>> = (0..10)
            .map(|k| {
                if k % 2 == 0 {
                    vec![1.0, 1.0]
                } else {
                    vec![3.0, 3.0]
                }
            })
            .collect();
        b.fit_normalizer(&warm).unwrap();
        assert_eq!(
            b.normalizers()[0],
            Normalizer {
                mean: 2.0,
                scale: 1.0
            }
        );

        let constant: Vec<Vec<f64>> = (0..12).map(|_| vec![4.0, 4.0]).collect();
        b.fit_normalizer(&constant).unwrap();
        assert_eq!(b.normalizers()[1].scale, MIN_SCALE);
        assert_eq!(b.normalizers()[1].denormalize(0.0), 4.0);

        assert!(b.fit_normalizer(&warm[..9]).is_err());
    }

    #[test]
    fn normalizer_roundtrip() {
        let z = Normalizer {
            mean: -3.7,
            scale: 0.42,
        };
        for y in [-100.0, -1.0, 0.0, 0.3, 12.5] {
            assert!((z.denormalize(z.normalize(y)) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_checks() {
        let c = cfg(1);
        let d = kin([0.0; 2], [0.0; 2], [0.0; 2]);
        assert!(compute_torque(&c, None, &d, &[0.0], &[0.0, 0.0], 0.0).is_err());
        let mut b = bank();
        assert!(b.observe(&c, &d, &[1.0]).is_err());
        let p = KernelParams::new(1.0, 0.04, vec![0.5; 5]).unwrap();
        assert!(GpBank::new(2, p, SogpConfig::new(4, 0.01, DeletionPolicy::Pis)).is_err());
    }
}
