//! Running PIS, OPS and FS side by side on one configuration.

use std::path::Path;

use crate::config::{ExperimentConfig, Scheme};
use crate::csv_out::{write_comparison, write_csv};
use crate::error::Result;
use crate::experiment::{run_experiment, RunMetrics, Task};

pub struct Comparison {
    /// In [`Scheme::LEARNING`] order.
    pub runs: Vec<(Scheme, Result<RunMetrics>)>,
}

impl Comparison {
    pub fn get(&self, scheme: Scheme) -> Option<&RunMetrics> {
        self.runs
            .iter()
            .find(|(s, _)| *s == scheme)
            .and_then(|(_, r)| r.as_ref().ok())
    }

    /// Scheme with the lowest pooled tracking RMSE on `task`, among the runs
    /// that succeeded. Ties keep the earlier scheme.
    pub fn winner(&self, task: Task) -> Option<Scheme> {
        self.runs
            .iter()
            .filter_map(|(s, r)| r.as_ref().ok().map(|m| (*s, m.task(task).tracking_pooled)))
            .fold(None, |best: Option<(Scheme, f64)>, (s, v)| match best {
                Some((_, b)) if b <= v => best,
                _ => Some((s, v)),
            })
            .map(|(s, _)| s)
    }

    pub fn all_ok(&self) -> bool {
        self.runs.iter().all(|(_, r)| r.is_ok())
    }
}

/// Runs every learning scheme on `base` (same seed and settings, only the
/// scheme differs). The runs are independent and execute on separate threads;
/// one failing does not stop the others.
pub fn compare_schemes(base: &ExperimentConfig) -> Comparison {
    let runs = std::thread::scope(|scope| {
        let handles: Vec<_> = Scheme::LEARNING
            .iter()
            .map(|&scheme| {
                let mut cfg = base.clone();
                cfg.scheme = scheme;
                (scheme, scope.spawn(move || run_experiment(&cfg)))
            })
            .collect();
        handles
            .into_iter()
            .map(|(s, h)| (s, h.join().expect("experiment thread panicked")))
            .collect()
    });
    Comparison { runs }
}

/// Writes `<out>/<scheme>/...` for each successful run and `<out>/comparison.csv`.
pub fn write_comparison_outputs(base: &ExperimentConfig, cmp: &Comparison, out: &Path) -> Result<()> {
    for (scheme, r) in &cmp.runs {
        if let Ok(m) = r {
            let mut cfg = base.clone();
            cfg.scheme = *scheme;
            write_csv(m, &cfg, &out.join(scheme.name()))?;
        }
    }
    let table: Vec<(Scheme, Option<&RunMetrics>)> =
        cmp.runs.iter().map(|(s, r)| (*s, r.as_ref().ok())).collect();
    write_comparison(&table, out)
}
