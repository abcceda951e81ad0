//! Configuration-driven experiments: Jacobian verification, timing,
//! temporal convergence and time-dependent simulations.

pub mod bench;
pub mod build;
pub mod config;
pub mod converge;
pub mod output;
pub mod simulate;
pub mod verify;

use std::path::Path;

use serde_json::json;

use fluxjac::oracles::{reports_csv, reports_table};
use fluxjac::Result;

use config::{Command, ExperimentConfig};
use output::{write_text, Check};

/// Environment variable selecting the worker count for residual and
/// Jacobian assembly.
pub const THREADS_VAR: &str = "FLUXJAC_THREADS";

/// Worker count from [`THREADS_VAR`]; one when unset or invalid.
pub fn threads() -> usize {
    std::env::var(THREADS_VAR)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

/// Outcome of one experiment: its report and the checks it ran.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: String,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs the configured experiment, writing its outputs into `cfg.out`.
/// Checks that only apply under `--assert` are dropped without it, except
/// verification tolerances, which always apply.
pub fn execute(cfg: &ExperimentConfig, assert: bool) -> Result<Outcome> {
    let n = threads();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| fluxjac::Error::Unsupported(format!("thread pool: {e}")))?;
    pool.install(|| execute_inner(cfg, assert))
}

fn execute_inner(cfg: &ExperimentConfig, assert: bool) -> Result<Outcome> {
    let out = cfg.out.as_path();
    write_text(&out.join("config.cfg"), &cfg.to_text())?;
    match cfg.command {
        Command::Verify => run_verify(cfg, out),
        Command::Bench => run_bench(cfg, out),
        Command::Converge => {
            let o = converge::run(&cfg.converge)?;
            write_text(&out.join("converge.csv"), &o.csv())?;
            let checks = if assert { o.checks.clone() } else { Vec::new() };
            Ok(Outcome {
                report: o.table(),
                checks,
            })
        }
        Command::Simulate => {
            let o = simulate::run(cfg, Some(out))?;
            let mut report = String::new();
            for r in &o.runs {
                report.push_str(&serde_json::to_string(&r.summary()).unwrap());
                report.push('\n');
            }
            let checks = if assert {
                o.checks
            } else {
                // Newton failures are reported regardless
                o.checks.into_iter().filter(|c| !c.passed && c.name.ends_with(" newton")).collect()
            };
            Ok(Outcome { report, checks })
        }
    }
}

fn run_verify(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let v = &cfg.verify;
    let o = verify::run(cfg.seed, v.table1, v.sweep, v.tolerance)?;
    write_text(&out.join("verify.csv"), &reports_csv(&o.reports))?;
    let failures: Vec<&str> = o.failures().iter().map(|r| r.case.as_str()).collect();
    let worst = o.reports.iter().map(|r| r.rel_diff).fold(0.0, f64::max);
    let summary = json!({
        "cases": o.reports.len(),
        "tolerance": v.tolerance,
        "max_rel_diff": worst,
        "failures": failures,
    });
    write_text(&out.join("summary.json"), &serde_json::to_string_pretty(&summary).unwrap())?;
    let check = Check::new(
        "jacobian equivalence",
        o.passed(),
        format!("{} cases, max relative difference {worst:.3e} (limit {:.1e})", o.reports.len(), v.tolerance),
    );
    Ok(Outcome {
        report: reports_table(&o.reports),
        checks: vec![check],
    })
}

fn run_bench(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let b = &cfg.bench;
    let mut report = String::new();
    if cfg!(debug_assertions) {
        report.push_str("warning: debug build; timings are not representative\n");
    }
    let rows = bench::run(&b.sizes, b.samples, b.inner, cfg.seed)?;
    write_text(&out.join("bench.csv"), &bench::rows_csv(&rows))?;
    report.push_str(&bench::rows_csv(&rows));
    Ok(Outcome {
        report,
        checks: Vec::new(),
    })
}
