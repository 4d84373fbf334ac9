//! CSV writers for run traces, summaries and scheme comparisons.
//!
//! Every number is printed with Rust's shortest round-trip formatting, so
//! identical runs produce identical bytes. Wall-clock timings are never
//! written here.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::{ExperimentConfig, Scheme};
use crate::error::{BenchError, Result};
use crate::experiment::{RunMetrics, Task};

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const WINDOWS_FILE: &str = "windows.csv";
pub const STATS_FILE: &str = "stats.csv";
pub const CONFIG_FILE: &str = "config.txt";
pub const COMPARISON_FILE: &str = "comparison.csv";

/// Trace header for `n` joints.
pub fn trace_header(n: usize) -> String {
    let groups = ["qd", "q", "e", "tauff", "taufb", "em", "bv_size"];
    let mut cols = vec!["t".to_string()];
    for g in groups {
        cols.extend((1..=n).map(|i| format!("{g}{i}")));
    }
    cols.join(",")
}

pub fn trace_csv(m: &RunMetrics) -> String {
    let mut out = trace_header(2);
    out.push('\n');
    for r in &m.trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.q_desired[0],
            r.q_desired[1],
            r.q[0],
            r.q[1],
            r.e[0],
            r.e[1],
            r.tau_ff[0],
            r.tau_ff[1],
            r.tau_fb[0],
            r.tau_fb[1],
            r.e_model[0],
            r.e_model[1],
            r.bv_size[0],
            r.bv_size[1],
        );
    }
    out
}

/// The three metric families in summary order.
pub const METRICS: [&str; 3] = ["tracking", "velocity", "modeling"];

fn metric_values<'a>(m: &'a RunMetrics, metric: &str, task: Task) -> &'a [f64] {
    let t = m.task(task);
    match metric {
        "tracking" => &t.tracking,
        "velocity" => &t.velocity,
        _ => &t.modeling,
    }
}

/// One row per metric, task and joint.
pub fn summary_csv(m: &RunMetrics) -> String {
    let mut out = String::from("metric,task,joint,rmse\n");
    for metric in METRICS {
        for task in [Task::One, Task::Two] {
            for (j, v) in metric_values(m, metric, task).iter().enumerate() {
                let _ = writeln!(out, "{metric},{},{},{v}", task.label(), j + 1);
            }
        }
    }
    out
}

pub fn windows_csv(m: &RunMetrics) -> String {
    let mut out = String::from("start,end,task,tracking_rmse,modeling_rmse\n");
    for w in &m.windows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            w.start,
            w.end,
            w.task.label(),
            w.tracking,
            w.modeling
        );
    }
    out
}

/// Deterministic run counters.
pub fn stats_csv(m: &RunMetrics) -> String {
    let mut out = String::from("key,value\n");
    let mut row = |k: String, v: String| {
        let _ = writeln!(out, "{k},{v}");
    };
    row("scheme".into(), m.scheme.to_string());
    row("steps".into(), m.steps.to_string());
    row("updates".into(), m.updates.to_string());
    row("total_tracking_rmse".into(), m.total_tracking.to_string());
    row("task1_tracking_rmse".into(), m.task1.tracking_pooled.to_string());
    row("task2_tracking_rmse".into(), m.task2.tracking_pooled.to_string());
    for (j, d) in m.deletions.iter().enumerate() {
        row(format!("deletions_oldest{}", j + 1), d.oldest.to_string());
        row(format!("deletions_score{}", j + 1), d.lowest_score.to_string());
    }
    if let Some(bank) = &m.bank {
        for (j, model) in bank.models().iter().enumerate() {
            row(format!("n_added{}", j + 1), model.n_added().to_string());
        }
    }
    row("min_variance".into(), m.min_variance.to_string());
    row("inverse_gram_checks".into(), m.inverse_gram.checks.to_string());
    row(
        "inverse_gram_violations".into(),
        m.inverse_gram.violations.to_string(),
    );
    row(
        "inverse_gram_max_residual".into(),
        m.inverse_gram.max_residual.to_string(),
    );
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

/// Writes trace, summary, windows, stats and the effective config into `dir`.
pub fn write_csv(m: &RunMetrics, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    write(&dir.join(TRACE_FILE), &trace_csv(m))?;
    write(&dir.join(SUMMARY_FILE), &summary_csv(m))?;
    write(&dir.join(WINDOWS_FILE), &windows_csv(m))?;
    write(&dir.join(STATS_FILE), &stats_csv(m))?;
    write(&dir.join(CONFIG_FILE), &cfg.render())
}

/// Side-by-side table: per metric, one row per joint and a `sum` row; two
/// columns (Task 1, Task 2) per scheme. Failed schemes show `error`.
pub fn comparison_csv(results: &[(Scheme, Option<&RunMetrics>)]) -> String {
    let mut out = String::from("metric,joint");
    for (s, _) in results {
        let _ = write!(out, ",{s}_task1,{s}_task2");
    }
    out.push('\n');
    for metric in METRICS {
        for joint in ["1", "2", "sum"] {
            let _ = write!(out, "{metric},{joint}");
            for (_, m) in results {
                for task in [Task::One, Task::Two] {
                    match m {
                        Some(m) => {
                            let v = metric_values(m, metric, task);
                            let x: f64 = match joint {
                                "sum" => v.iter().sum(),
                                j => v[j.parse::<usize>().unwrap() - 1],
                            };
                            let _ = write!(out, ",{x}");
                        }
                        None => out.push_str(",error"),
                    }
                }
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_comparison(results: &[(Scheme, Option<&RunMetrics>)], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    write(&dir.join(COMPARISON_FILE), &comparison_csv(results))
}
