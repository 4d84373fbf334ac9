//! Closed-loop simulation of one scheme over the two-task schedule.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sogp_core::armsim::{self, ArmState, Estimator, Kinematics};
use sogp_core::control::{compute_torque, GpBank};
use sogp_core::{DeletionRule, UpdateBranch};

use crate::config::{ExperimentConfig, Scheme};
use crate::error::{BenchError, Result};
use crate::metrics::{rmse, rmse_per_joint};

/// Task-1 samples are those before the switch time, Task-2 samples the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    One,
    Two,
}

impl Task {
    pub fn label(&self) -> &'static str {
        match self {
            Task::One => "task1",
            Task::Two => "task2",
        }
    }
}

/// One decimated trace row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub q_desired: [f64; 2],
    pub q: [f64; 2],
    pub e: [f64; 2],
    pub tau_ff: [f64; 2],
    pub tau_fb: [f64; 2],
    pub e_model: [f64; 2],
    pub bv_size: [usize; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRmse {
    pub start: f64,
    pub end: f64,
    pub task: Task,
    pub tracking: f64,
    pub modeling: f64,
}

/// Per-joint RMSE of the three error signals within one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskRmse {
    pub tracking: Vec<f64>,
    pub velocity: Vec<f64>,
    pub modeling: Vec<f64>,
    /// Pooled position-tracking RMSE over both joints.
    pub tracking_pooled: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeletionCounts {
    pub oldest: u64,
    pub lowest_score: u64,
}

/// Wall-clock cost of one model update step (all joints together).
#[derive(Debug, Clone, Copy)]
pub struct UpdateTiming {
    /// Simulated time of the step.
    pub t: f64,
    pub wall: Duration,
    /// Bit `j` is set when joint `j`'s model admitted the input to its basis.
    pub admitted: u64,
}

/// Inverse-Gram residual checks performed during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InverseGramStats {
    pub checks: u64,
    pub violations: u64,
    pub max_residual: f64,
}

pub const INVERSE_GRAM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub scheme: Scheme,
    pub task1: TaskRmse,
    pub task2: TaskRmse,
    /// Pooled position-tracking RMSE from the end of warm-up to the end.
    pub total_tracking: f64,
    pub windows: Vec<WindowRmse>,
    pub trace: Vec<TraceRow>,
    /// Per joint.
    pub deletions: Vec<DeletionCounts>,
    pub updates: u64,
    /// Smallest raw predictive variance seen at the true state.
    pub min_variance: f64,
    pub inverse_gram: InverseGramStats,
    pub update_times: Vec<UpdateTiming>,
    pub steps: usize,
    pub bank: Option<GpBank>,
}

impl RunMetrics {
    pub fn task(&self, task: Task) -> &TaskRmse {
        match task {
            Task::One => &self.task1,
            Task::Two => &self.task2,
        }
    }

    pub fn windows_of(&self, task: Task) -> Vec<f64> {
        self.windows
            .iter()
            .filter(|w| w.task == task)
            .map(|w| w.tracking)
            .collect()
    }
}

struct Sample {
    t: f64,
    e: [f64; 2],
    ed: [f64; 2],
    em: [f64; 2],
}

/// Runs the configured scheme from scratch.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunMetrics> {
    run_with_bank(cfg, None)
}

/// Runs the configured scheme, optionally starting from a pre-trained bank.
/// A supplied bank keeps its normalisers and is not refitted after warm-up.
pub fn run_with_bank(cfg: &ExperimentConfig, initial: Option<GpBank>) -> Result<RunMetrics> {
    cfg.validate()?;
    let spec = cfg.trajectory.scaled(cfg.trajectory_scale);
    let schedule = spec.build()?;
    let ctrl = cfg.controller();
    let n = cfg.dof();

    let mut normalizer_fitted = initial.is_some();
    let mut bank = match (cfg.sogp_config(), initial) {
        (None, _) => None,
        (Some(_), Some(b)) => {
            if b.dof() != n {
                return Err(BenchError::InvalidConfig(
                    "loaded bank has the wrong joint count".into(),
                ));
            }
            Some(b)
        }
        (Some(sc), None) => Some(GpBank::new(n, cfg.kernel_params()?, sc)?),
    };
    let mut warmup_targets: Vec<Vec<f64>> = Vec::new();

    let start = schedule.eval(0.0)?;
    let mut state = ArmState::at_rest([start.q[0], start.q[1]]);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut estimator = Estimator::new(cfg.estimator_mode(), n)?;
    let truth0 = Kinematics {
        q: state.q.to_vec(),
        v: state.qd.to_vec(),
        a: armsim::forward_dynamics(&cfg.arm, &state, &[0.0; 2]).to_vec(),
    };
    let q0 = armsim::measure(&state, cfg.noise_var, &mut rng);
    estimator.estimate_step(&q0, cfg.dt, &truth0)?;

    let steps = (schedule.duration() / cfg.dt).round() as usize;
    let mut samples = Vec::with_capacity(steps);
    let mut trace = Vec::with_capacity(steps / cfg.trace_decimation + 1);
    let mut deletions = vec![DeletionCounts::default(); n];
    let mut updates = 0u64;
    let mut min_variance = f64::INFINITY;
    let mut ig = InverseGramStats::default();
    let mut update_times = Vec::new();

    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        let desired = schedule.eval(t)?;
        let est = estimator.current().clone();
        let cmd = compute_torque(&ctrl, bank.as_ref(), &desired, &est.q, &est.v, t)?;
        let tau = [cmd.tau[0], cmd.tau[1]];

        let qdd = armsim::forward_dynamics(&cfg.arm, &state, &tau);
        let true_input = [state.q[0], state.q[1], state.qd[0], state.qd[1], qdd[0], qdd[1]];
        let mut em = tau;
        if let Some(b) = &bank {
            for (j, (mean, var)) in b.predict_moments(&true_input)?.into_iter().enumerate() {
                em[j] = tau[j] - mean;
                if b.models()[j].len() > 0 {
                    min_variance = min_variance.min(var);
                }
            }
        }

        let e = [desired.q[0] - state.q[0], desired.q[1] - state.q[1]];
        let ed = [desired.v[0] - state.qd[0], desired.v[1] - state.qd[1]];
        samples.push(Sample { t, e, ed, em });
        if k % cfg.trace_decimation == 0 {
            let bv_size = match &bank {
                Some(b) => [b.models()[0].len(), b.models()[1].len()],
                None => [0, 0],
            };
            trace.push(TraceRow {
                t,
                q_desired: [desired.q[0], desired.q[1]],
                q: state.q,
                e,
                tau_ff: [cmd.tau_ff[0], cmd.tau_ff[1]],
                tau_fb: [cmd.tau_fb[0], cmd.tau_fb[1]],
                e_model: em,
                bv_size,
            });
        }

        state = armsim::step(&cfg.arm, &state, &tau, cfg.dt)?;
        let q_meas = armsim::measure(&state, cfg.noise_var, &mut rng);
        let truth = Kinematics {
            q: state.q.to_vec(),
            v: state.qd.to_vec(),
            a: armsim::forward_dynamics(&cfg.arm, &state, &tau).to_vec(),
        };
        let estimate = estimator.estimate_step(&q_meas, cfg.dt, &truth)?.clone();

        let Some(b) = bank.as_mut() else { continue };
        if t < cfg.warmup {
            if !normalizer_fitted {
                warmup_targets.push(tau.to_vec());
            }
            continue;
        }
        if !normalizer_fitted {
            b.fit_normalizer(&warmup_targets)?;
            normalizer_fitted = true;
        }
        let clock = Instant::now();
        let reports = b.observe(&ctrl, &estimate, &tau)?;
        let elapsed = clock.elapsed();
        let Some(reports) = reports else { continue };
        updates += 1;
        let admitted = reports
            .iter()
            .enumerate()
            .filter(|(_, r)| r.branch == UpdateBranch::Full)
            .fold(0, |mask, (j, _)| mask | 1 << j);
        update_times.push(UpdateTiming {
            t,
            wall: elapsed,
            admitted,
        });
        for (j, r) in reports.iter().enumerate() {
            match r.deleted.map(|d| d.rule) {
                Some(DeletionRule::Oldest) => deletions[j].oldest += 1,
                Some(DeletionRule::LowestScore) => deletions[j].lowest_score += 1,
                None => {}
            }
        }
        if cfg.inverse_gram_check_every > 0 && updates % cfg.inverse_gram_check_every as u64 == 0 {
            for m in b.models() {
                let r = m.inverse_gram_residual();
                ig.checks += 1;
                ig.max_residual = ig.max_residual.max(r);
                if !(r <= INVERSE_GRAM_TOLERANCE) {
                    ig.violations += 1;
                }
            }
        }
    }

    let scored: Vec<&Sample> = samples.iter().filter(|s| s.t >= cfg.warmup).collect();
    let task_of = |t: f64| {
        if t < spec.switch_time {
            Task::One
        } else {
            Task::Two
        }
    };
    let task_rmse = |task: Task| -> Result<TaskRmse> {
        let sel: Vec<&&Sample> = scored.iter().filter(|s| task_of(s.t) == task).collect();
        let e: Vec<[f64; 2]> = sel.iter().map(|s| s.e).collect();
        let ed: Vec<[f64; 2]> = sel.iter().map(|s| s.ed).collect();
        let em: Vec<[f64; 2]> = sel.iter().map(|s| s.em).collect();
        Ok(TaskRmse {
            tracking: rmse_per_joint(&e)?,
            velocity: rmse_per_joint(&ed)?,
            modeling: rmse_per_joint(&em)?,
            tracking_pooled: rmse(&e)?,
        })
    };
    let task1 = task_rmse(Task::One)?;
    let task2 = task_rmse(Task::Two)?;
    let all_e: Vec<[f64; 2]> = scored.iter().map(|s| s.e).collect();
    let total_tracking = rmse(&all_e)?;
    let windows = window_rmse(&scored, cfg.warmup, schedule.duration(), cfg.window, task_of)?;

    Ok(RunMetrics {
        scheme: cfg.scheme,
        task1,
        task2,
        total_tracking,
        windows,
        trace,
        deletions,
        updates,
        min_variance,
        inverse_gram: ig,
        update_times,
        steps,
        bank,
    })
}

/// Consecutive windows of width `width` tiling `[from, to)`; the last window
/// is shortened if needed. Windows straddling the task switch are split.
fn window_rmse(
    samples: &[&Sample],
    from: f64,
    to: f64,
    width: f64,
    task_of: impl Fn(f64) -> Task,
) -> Result<Vec<WindowRmse>> {
    let mut out = Vec::new();
    let mut i = 0;
    let mut start = from;
    while i < samples.len() {
        let nominal_end = (start + width).min(to);
        let task = task_of(samples[i].t);
        let mut j = i;
        while j < samples.len() && samples[j].t < nominal_end && task_of(samples[j].t) == task {
            j += 1;
        }
        let end = if j < samples.len() { samples[j].t } else { to };
        let chunk = &samples[i..j];
        let e: Vec<[f64; 2]> = chunk.iter().map(|s| s.e).collect();
        let em: Vec<[f64; 2]> = chunk.iter().map(|s| s.em).collect();
        out.push(WindowRmse {
            start,
            end,
            task,
            tracking: rmse(&e)?,
            modeling: rmse(&em)?,
        });
        start = end;
        i = j;
    }
    Ok(out)
}
