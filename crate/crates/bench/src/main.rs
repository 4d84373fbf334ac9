use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use sogp_bench::compare::{compare_schemes, write_comparison_outputs};
use sogp_bench::csv_out::write_csv;
use sogp_bench::metrics::median;
use sogp_bench::selftest::run_selftest;
use sogp_bench::snapshot::{load_bank, save_bank};
use sogp_bench::{run_with_bank, BenchError, ExperimentConfig, RunMetrics, Scheme, Task};

#[derive(Parser)]
#[command(
    name = "sogp-bench",
    version,
    about = "Sparse online GP learning-control benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file (`key = value` lines); unspecified keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Forgetting period of the FS scheme.
    #[arg(long)]
    h: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme and write its CSVs.
    Run {
        #[command(flatten)]
        common: Common,
        /// pis, ops, fs, or none for PD-only control.
        #[arg(long)]
        scheme: Option<Scheme>,
        /// Save the trained models to this directory.
        #[arg(long)]
        save_models: Option<PathBuf>,
        /// Start from models previously saved with --save-models.
        #[arg(long)]
        load_models: Option<PathBuf>,
    },
    /// Run PIS, OPS and FS with identical settings and tabulate them.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Check the core invariants and print PASS/FAIL per group.
    Selftest,
    /// Print the default configuration file.
    Defaults,
}

fn load_config(c: &Common) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(h) = c.h {
        cfg.h = h;
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &c.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn print_timing(m: &RunMetrics) {
    if m.update_times.is_empty() {
        return;
    }
    let us: Vec<f64> = m
        .update_times
        .iter()
        .map(|u| u.wall.as_secs_f64() * 1e6)
        .collect();
    let max = m
        .update_times
        .iter()
        .map(|u| u.wall)
        .max()
        .unwrap_or(Duration::ZERO);
    println!(
        "  update time: median {:.1} us, max {:.1} us over {} updates",
        median(&us),
        max.as_secs_f64() * 1e6,
        us.len()
    );
}

fn print_run(m: &RunMetrics) {
    println!(
        "{}: task1 rmse {:.6e}, task2 rmse {:.6e}, total {:.6e}",
        m.scheme, m.task1.tracking_pooled, m.task2.tracking_pooled, m.total_tracking
    );
    for (j, d) in m.deletions.iter().enumerate() {
        println!(
            "  joint {}: {} oldest / {} score deletions",
            j + 1,
            d.oldest,
            d.lowest_score
        );
    }
    print_timing(m);
}

fn run(
    common: &Common,
    scheme: Option<Scheme>,
    save: Option<&Path>,
    load: Option<&Path>,
) -> Result<(), BenchError> {
    let mut cfg = load_config(common)?;
    if let Some(s) = scheme {
        cfg.scheme = s;
    }
    let initial = load.map(load_bank).transpose()?;
    let m = run_with_bank(&cfg, initial)?;
    let dir = cfg.out.join(cfg.scheme.name());
    write_csv(&m, &cfg, &dir)?;
    print_run(&m);
    if let Some(dir) = save {
        let bank = m
            .bank
            .as_ref()
            .ok_or_else(|| BenchError::InvalidConfig("--save-models needs a learning scheme".into()))?;
        save_bank(bank, dir)?;
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn compare(common: &Common) -> Result<(), BenchError> {
    let cfg = load_config(common)?;
    let cmp = compare_schemes(&cfg);
    write_comparison_outputs(&cfg, &cmp, &cfg.out)?;
    for (scheme, r) in &cmp.runs {
        match r {
            Ok(m) => print_run(m),
            Err(e) => println!("{scheme}: failed: {e}"),
        }
    }
    for task in [Task::One, Task::Two] {
        if let Some(w) = cmp.winner(task) {
            println!("{} winner: {w}", task.label());
        }
    }
    println!("wrote {}", cfg.out.display());
    let failed: Vec<String> = cmp
        .runs
        .iter()
        .filter_map(|(s, r)| r.as_ref().err().map(|e| format!("{s}: {e}")))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(BenchError::Failed(format!(
            "scheme runs failed ({})",
            failed.join("; ")
        )))
    }
}

fn selftest() -> Result<(), BenchError> {
    let results = run_selftest();
    let mut failures = 0;
    for r in &results {
        match &r.outcome {
            Ok(()) => println!("PASS {}", r.name),
            Err(msg) => {
                failures += 1;
                println!("FAIL {}: {msg}", r.name);
            }
        }
    }
    if failures == 0 {
        Ok(())
    } else {
        Err(BenchError::Failed(format!("{failures} selftest group(s) failed")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            common,
            scheme,
            save_models,
            load_models,
        } => run(common, *scheme, save_models.as_deref(), load_models.as_deref()),
        Command::Compare { common } => compare(common),
        Command::Selftest => selftest(),
        Command::Defaults => {
            print!("{}", ExperimentConfig::default().render());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
