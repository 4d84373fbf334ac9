//! Experiment configuration and its flat `key = value` file format.
//!
//! Blank lines and everything after `#` are ignored. Lists are comma
//! separated; the waypoint list separates waypoints with `;`:
//!
//! ```text
//! scheme = fs
//! h = 15
//! kp = 200, 200
//! traj.waypoints = -0.6, 0.9; 0.7, -0.5; 0.2, 1.1; -0.4, -0.6
//! ```
//!
//! Keys not present keep their defaults; unknown keys are an error.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sogp_core::armsim::{ArmParams, EstimatorMode};
use sogp_core::control::ControllerConfig;
use sogp_core::trajgen::TwoTaskSpec;
use sogp_core::{DeletionPolicy, KernelParams, ScoreRule, SogpConfig};

use crate::error::{BenchError, Result};

/// Basis-deletion scheme, or plain PD control without any GP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Pis,
    Ops,
    Fs,
    /// PD feedback only.
    None,
}

impl Scheme {
    pub const LEARNING: [Scheme; 3] = [Scheme::Pis, Scheme::Ops, Scheme::Fs];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Pis => "pis",
            Scheme::Ops => "ops",
            Scheme::Fs => "fs",
            Scheme::None => "none",
        }
    }

    pub fn policy(&self, h: u64) -> Option<DeletionPolicy> {
        match self {
            Scheme::Pis => Some(DeletionPolicy::Pis),
            Scheme::Ops => Some(DeletionPolicy::Ops),
            Scheme::Fs => Some(DeletionPolicy::Fs { h }),
            Scheme::None => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pis" => Ok(Scheme::Pis),
            "ops" => Ok(Scheme::Ops),
            "fs" => Ok(Scheme::Fs),
            "none" | "pd" => Ok(Scheme::None),
            other => Err(format!(
                "unknown scheme `{other}` (expected pis, ops, fs or none)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Exact,
    FiniteDifference,
    Eso,
}

impl EstimatorKind {
    fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Exact => "exact",
            EstimatorKind::FiniteDifference => "fd",
            EstimatorKind::Eso => "eso",
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(EstimatorKind::Exact),
            "fd" | "finite_difference" => Ok(EstimatorKind::FiniteDifference),
            "eso" | "linear_eso" => Ok(EstimatorKind::Eso),
            other => Err(format!("unknown estimator `{other}` (expected exact, fd or eso)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub h: u64,
    pub bv_capacity: usize,
    pub eps_tol: f64,
    pub score: ScoreRule,
    pub sigma_s2: f64,
    pub sigma_n2: f64,
    pub lengthscales: Vec<f64>,
    pub kp: Vec<f64>,
    pub kd: Vec<f64>,
    pub warmup: f64,
    pub ramp: f64,
    pub update_stride: usize,
    pub arm: ArmParams,
    pub noise_var: f64,
    pub estimator: EstimatorKind,
    /// ESO bandwidth (rad/s) or finite-difference cutoff (Hz).
    pub estimator_bandwidth: f64,
    pub trajectory: TwoTaskSpec,
    /// Multiplies waypoint and circle excursions.
    pub trajectory_scale: f64,
    pub dt: f64,
    pub seed: u64,
    pub out: PathBuf,
    /// Write every k-th step to the trace file.
    pub trace_decimation: usize,
    /// Width of the RMSE windows (s).
    pub window: f64,
    /// Check `‖Q K − I‖` every this many bank updates (0 disables).
    pub inverse_gram_check_every: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scheme: Scheme::Fs,
            h: 15,
            bv_capacity: 45,
            eps_tol: 0.01,
            score: ScoreRule::Magnitude,
            sigma_s2: 1.0,
            sigma_n2: 0.04,
            lengthscales: vec![0.5, 0.5, 0.5, 0.5, 0.2, 0.2],
            kp: vec![200.0, 200.0],
            kd: vec![20.0, 4.0],
            warmup: 2.0,
            ramp: 0.6,
            update_stride: 7,
            arm: ArmParams::default(),
            noise_var: 1e-14,
            estimator: EstimatorKind::Eso,
            estimator_bandwidth: 300.0,
            trajectory: TwoTaskSpec::default(),
            trajectory_scale: 1.0,
            dt: 1e-3,
            seed: 42,
            out: PathBuf::from("out"),
            trace_decimation: 10,
            window: 1.0,
            inverse_gram_check_every: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::parse(&text)
    }

    /// Defaults overridden by the keys in `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| BenchError::Config {
                line: i + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|msg| BenchError::Config { line: i + 1, msg })?;
        }
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let t = &mut self.trajectory;
        match key {
            "scheme" => self.scheme = value.parse()?,
            "h" => self.h = num(key, value)?,
            "bv_capacity" => self.bv_capacity = num(key, value)?,
            "eps_tol" => self.eps_tol = num(key, value)?,
            "score" => {
                self.score = match value {
                    "abs" | "magnitude" => ScoreRule::Magnitude,
                    "signed" => ScoreRule::Signed,
                    _ => return Err(format!("score must be `abs` or `signed`, got `{value}`")),
                }
            }
            "sigma_s2" => self.sigma_s2 = num(key, value)?,
            "sigma_n2" => self.sigma_n2 = num(key, value)?,
            "lengthscales" => self.lengthscales = list(key, value)?,
            "kp" => self.kp = list(key, value)?,
            "kd" => self.kd = list(key, value)?,
            "warmup" => self.warmup = num(key, value)?,
            "ramp" => self.ramp = num(key, value)?,
            "update_stride" => self.update_stride = num(key, value)?,
            "arm.mass" => self.arm.mass = pair(key, value)?,
            "arm.length" => self.arm.length = pair(key, value)?,
            "arm.com" => self.arm.com = pair(key, value)?,
            "arm.inertia" => self.arm.inertia = pair(key, value)?,
            "arm.gravity" => self.arm.gravity = num(key, value)?,
            "arm.friction" => self.arm.friction = pair(key, value)?,
            "noise_var" => self.noise_var = num(key, value)?,
            "estimator" => self.estimator = value.parse()?,
            "estimator_bandwidth" => self.estimator_bandwidth = num(key, value)?,
            "traj.waypoints" => {
                t.waypoints = value
                    .split(';')
                    .filter(|w| !w.trim().is_empty())
                    .map(|w| list(key, w))
                    .collect::<Result<_, _>>()?
            }
            "traj.segment_duration" => t.segment_duration = num(key, value)?,
            "traj.switch_time" => t.switch_time = num(key, value)?,
            "traj.bridge_duration" => t.bridge_duration = num(key, value)?,
            "traj.circle_center" => t.circle_center = list(key, value)?,
            "traj.circle_radius" => t.circle_radius = num(key, value)?,
            "traj.circle_rate" => t.circle_rate = num(key, value)?,
            "traj.total_duration" => t.total_duration = num(key, value)?,
            "traj.scale" => self.trajectory_scale = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "trace_decimation" => self.trace_decimation = num(key, value)?,
            "window" => self.window = num(key, value)?,
            "inverse_gram_check_every" => self.inverse_gram_check_every = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// The config as a file that [`ExperimentConfig::parse`] reads back unchanged.
    pub fn render(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let t = &self.trajectory;
        let score = match self.score {
            ScoreRule::Magnitude => "abs",
            ScoreRule::Signed => "signed",
        };
        let waypoints = t.waypoints.iter().map(|w| join(w)).collect::<Vec<_>>().join("; ");
        let entries: Vec<(&str, String)> = vec![
            ("scheme", self.scheme.to_string()),
            ("h", self.h.to_string()),
            ("bv_capacity", self.bv_capacity.to_string()),
            ("eps_tol", format!("{:?}", self.eps_tol)),
            ("score", score.to_string()),
            ("sigma_s2", format!("{:?}", self.sigma_s2)),
            ("sigma_n2", format!("{:?}", self.sigma_n2)),
            ("lengthscales", join(&self.lengthscales)),
            ("kp", join(&self.kp)),
            ("kd", join(&self.kd)),
            ("warmup", format!("{:?}", self.warmup)),
            ("ramp", format!("{:?}", self.ramp)),
            ("update_stride", self.update_stride.to_string()),
            ("arm.mass", join(&self.arm.mass)),
            ("arm.length", join(&self.arm.length)),
            ("arm.com", join(&self.arm.com)),
            ("arm.inertia", join(&self.arm.inertia)),
            ("arm.gravity", format!("{:?}", self.arm.gravity)),
            ("arm.friction", join(&self.arm.friction)),
            ("noise_var", format!("{:?}", self.noise_var)),
            ("estimator", self.estimator.name().to_string()),
            ("estimator_bandwidth", format!("{:?}", self.estimator_bandwidth)),
            ("traj.waypoints", waypoints),
            ("traj.segment_duration", format!("{:?}", t.segment_duration)),
            ("traj.switch_time", format!("{:?}", t.switch_time)),
            ("traj.bridge_duration", format!("{:?}", t.bridge_duration)),
            ("traj.circle_center", join(&t.circle_center)),
            ("traj.circle_radius", format!("{:?}", t.circle_radius)),
            ("traj.circle_rate", format!("{:?}", t.circle_rate)),
            ("traj.total_duration", format!("{:?}", t.total_duration)),
            ("traj.scale", format!("{:?}", self.trajectory_scale)),
            ("dt", format!("{:?}", self.dt)),
            ("seed", self.seed.to_string()),
            ("out", self.out.display().to_string()),
            ("trace_decimation", self.trace_decimation.to_string()),
            ("window", format!("{:?}", self.window)),
            (
                "inverse_gram_check_every",
                self.inverse_gram_check_every.to_string(),
            ),
        ];
        entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn dof(&self) -> usize {
        self.kp.len()
    }

    pub fn kernel_params(&self) -> Result<KernelParams> {
        Ok(KernelParams::new(
            self.sigma_s2,
            self.sigma_n2,
            self.lengthscales.clone(),
        )?)
    }

    pub fn sogp_config(&self) -> Option<SogpConfig> {
        self.scheme.policy(self.h).map(|policy| SogpConfig {
            capacity: self.bv_capacity,
            eps_tol: self.eps_tol,
            policy,
            score: self.score,
        })
    }

    pub fn controller(&self) -> ControllerConfig {
        ControllerConfig {
            kp: self.kp.clone(),
            kd: self.kd.clone(),
            warmup_duration: self.warmup,
            ramp_duration: self.ramp,
            update_stride: self.update_stride,
        }
    }

    pub fn estimator_mode(&self) -> EstimatorMode {
        match self.estimator {
            EstimatorKind::Exact => EstimatorMode::Exact,
            EstimatorKind::FiniteDifference => EstimatorMode::FiniteDifference {
                cutoff_hz: self.estimator_bandwidth,
            },
            EstimatorKind::Eso => EstimatorMode::LinearEso {
                bandwidth: self.estimator_bandwidth,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BenchError::InvalidConfig(m.to_string()));
        if self.dof() != 2 {
            return bad("the simulated arm has exactly two joints (kp/kd must have 2 entries)");
        }
        if self.lengthscales.len() != 3 * self.dof() {
            return bad("lengthscales needs 3 entries per joint");
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if self.trace_decimation == 0 {
            return bad("trace_decimation must be at least 1");
        }
        if !(self.window > 0.0) {
            return bad("window must be positive");
        }
        if !(self.noise_var >= 0.0) {
            return bad("noise_var must be non-negative");
        }
        if self.scheme != Scheme::None
            && self.warmup < sogp_core::control::MIN_WARMUP_SAMPLES as f64 * self.dt
        {
            return bad("warmup must span enough steps to fit the output normaliser");
        }
        self.kernel_params()?;
        if let Some(c) = self.sogp_config() {
            c.validate()?;
        }
        self.controller().validate()?;
        self.arm.validate()?;
        self.estimator_mode().validate()?;
        Ok(())
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .trim()
        .parse()
        .map_err(|_| format!("`{key}`: cannot parse `{value}`"))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>, String> {
    value.split(',').map(|v| num(key, v)).collect()
}

fn pair(key: &str, value: &str) -> Result<[f64; 2], String> {
    let v = list(key, value)?;
    v.try_into()
        .map_err(|_| format!("`{key}` needs exactly two values"))
}
