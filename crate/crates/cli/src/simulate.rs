//! Time-dependent runs with entropy, energy and Newton diagnostics.

use std::path::Path;

use serde_json::{json, Value};

use fluxjac::linalg::export_matrix_market;
use fluxjac::timestepping::{step, NewtonOptions, OdeSystem, StepReport, StepSize, TimeIntegratorConfig};
use fluxjac::{with_law, Error, Result};

use crate::build::{self, InitialData};
use crate::config::{ExperimentConfig, InitialCondition};
use crate::output::{write_text, Check};

/// Tolerated per-step entropy increase, relative to `|S(0)|`, for runs that
/// are required to dissipate entropy.
pub const ENTROPY_ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct RunResult {
    pub cfl: Option<f64>,
    pub dt: f64,
    pub reports: Vec<StepReport>,
    /// Set when Newton failed; the reports cover the steps before it.
    pub failure: Option<String>,
}

impl RunResult {
    pub fn label(&self) -> String {
        match self.cfl {
            Some(c) => format!("cfl-{c}"),
            None => format!("dt-{}", self.dt),
        }
    }

    fn initial(&self) -> &StepReport {
        &self.reports[0]
    }

    pub fn max_entropy_change(&self) -> Option<f64> {
        let s0 = self.initial().entropy?;
        self.reports
            .iter()
            .map(|r| r.entropy.map(|s| (s - s0).abs()))
            .try_fold(0.0_f64, |m, v| v.map(|v| m.max(v)))
    }

    pub fn max_relative_energy_change(&self) -> f64 {
        let e0 = self.initial().energy;
        self.reports
            .iter()
            .map(|r| (r.energy - e0).abs() / e0.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// Newton iterations over the steps taken, excluding the initial row.
    pub fn newton_range(&self) -> Option<(usize, usize)> {
        let it = self.reports[1..].iter().map(|r| r.newton_iterations);
        Some((it.clone().min()?, it.max()?))
    }

    /// `S(T) ≤ S(0)` and no step raising `S` beyond roundoff.
    pub fn entropy_decays(&self) -> bool {
        let Some(s0) = self.initial().entropy else {
            return false;
        };
        let slack = ENTROPY_ROUNDOFF * s0.abs().max(1.0);
        let s: Option<Vec<f64>> = self.reports.iter().map(|r| r.entropy).collect();
        let Some(s) = s else {
            return false;
        };
        s.windows(2).all(|w| w[1] <= w[0] + slack) && *s.last().unwrap() <= s0 + slack
    }

    pub fn csv(&self) -> String {
        let r0 = self.initial();
        let mut out = String::from("step,time,dt,entropy,entropy_change,energy,energy_change,newton_iterations,newton_residual\n");
        for r in &self.reports {
            let (s, ds) = match (r.entropy, r0.entropy) {
                (Some(s), Some(s0)) => (format!("{s:.16e}"), format!("{:.6e}", s - s0)),
                _ => (String::new(), String::new()),
            };
            let res = r.newton_residual.map(|v| format!("{v:.6e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{},{},{:.16e},{:.6e},{},{}\n",
                r.step,
                r.time,
                r.dt,
                s,
                ds,
                r.energy,
                r.energy - r0.energy,
                r.newton_iterations,
                res
            ));
        }
        out
    }

    pub fn summary(&self) -> Value {
        let last = self.reports.last().unwrap();
        json!({
            "label": self.label(),
            "cfl": self.cfl,
            "dt": self.dt,
            "steps": self.reports.len() - 1,
            "final_time": last.time,
            "max_entropy_change": self.max_entropy_change(),
            "max_relative_energy_change": self.max_relative_energy_change(),
            "newton_iterations": self.newton_range().map(|(a, b)| vec![a, b]),
            "entropy_decays": self.entropy_decays(),
            "failure": self.failure,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub runs: Vec<RunResult>,
    pub checks: Vec<Check>,
}

impl SimulateOutcome {
    pub fn passed(&self) -> bool {
        self.runs.iter().all(|r| r.failure.is_none()) && self.checks.iter().all(|c| c.passed)
    }
}

fn step_sizes(cfg: &ExperimentConfig) -> Vec<(Option<f64>, StepSize)> {
    if cfg.simulate.cfls.is_empty() {
        let cfl = match cfg.integrator.step {
            StepSize::Cfl(c) => Some(c),
            StepSize::Fixed(_) => None,
        };
        vec![(cfl, cfg.integrator.step)]
    } else {
        cfg.simulate.cfls.iter().map(|&c| (Some(c), StepSize::Cfl(c))).collect()
    }
}

fn run_law<L: InitialData<N>, const N: usize>(
    cfg: &ExperimentConfig,
    law: L,
    out: Option<&Path>,
) -> Result<Vec<RunResult>> {
    let sys = build::system(&cfg.scheme, law)?;
    let ic = cfg.simulate.initial.unwrap_or(InitialCondition::Smooth);
    let u0 = build::initial_state(&sys, ic, cfg.seed)?;
    if cfg.simulate.dump_jacobian {
        if let Some(dir) = out {
            export_matrix_market(&sys.jacobian(&u0)?.flatten(), dir.join("jacobian.mtx"))?;
        }
    }
    let h_min = 2.0 / cfg.scheme.elements as f64;
    let degree = build::degree(&cfg.scheme);
    let mut runs = Vec::new();
    for (cfl, step) in step_sizes(cfg) {
        let mut tc = TimeIntegratorConfig::new(cfg.integrator.method, step, cfg.integrator.final_time);
        tc.newton = NewtonOptions {
            tolerance: cfg.integrator.newton_tolerance,
            max_iterations: cfg.integrator.newton_max_iterations,
            solver: cfg.integrator.solver,
        };
        tc.validate()?;
        runs.push(advance(&sys, &u0, &tc, cfl, h_min, degree)?);
    }
    Ok(runs)
}

/// Steps to the final time, stopping early with a recorded failure when
/// Newton does not converge.
fn advance<S: OdeSystem>(
    sys: &S,
    u0: &[f64],
    tc: &TimeIntegratorConfig,
    cfl: Option<f64>,
    h_min: f64,
    degree: usize,
) -> Result<RunResult> {
    let (n, dt) = tc.steps(h_min, degree);
    let mut u = u0.to_vec();
    let mut reports = vec![StepReport {
        step: 0,
        time: 0.0,
        dt,
        newton_iterations: 0,
        newton_residual: None,
        entropy: sys.entropy(&u),
        energy: sys.energy(&u),
    }];
    let mut failure = None;
    for k in 0..n {
        match step(tc.method, sys, &u, k as f64 * dt, dt, tc.newton) {
            Ok((next, newton)) => {
                u = next;
                reports.push(StepReport {
                    step: k + 1,
                    time: (k + 1) as f64 * dt,
                    dt,
                    newton_iterations: newton.as_ref().map_or(0, |s| s.iterations),
                    newton_residual: newton.as_ref().and_then(|s| s.history.last().copied()),
                    entropy: sys.entropy(&u),
                    energy: sys.energy(&u),
                });
            }
            Err(e @ Error::NewtonFailure { .. }) => {
                failure = Some(format!("step {}: {e}", k + 1));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(RunResult {
        cfl,
        dt,
        reports,
        failure,
    })
}

/// Pass/fail checks requested by the configuration.
pub fn checks(cfg: &ExperimentConfig, runs: &[RunResult]) -> Vec<Check> {
    let sim = &cfg.simulate;
    let mut out = Vec::new();
    for run in runs {
        if let Some(f) = &run.failure {
            out.push(Check::new(format!("{} newton", run.label()), false, f.clone()));
        }
        if let Some(tol) = sim.assert_energy {
            let v = run.max_relative_energy_change();
            out.push(Check::new(
                format!("{} energy", run.label()),
                v <= tol,
                format!("max |E - E0|/E0 = {v:.3e} (limit {tol:.1e})"),
            ));
        }
        if let Some((lo, hi)) = sim.assert_newton {
            let (passed, detail) = match run.newton_range() {
                Some((a, b)) => (a >= lo && b <= hi, format!("iterations per step in [{a}, {b}] (allowed [{lo}, {hi}])")),
                None => (false, "no steps".into()),
            };
            out.push(Check::new(format!("{} newton iterations", run.label()), passed, detail));
        }
        if sim.assert_entropy_decay {
            let s = |r: &StepReport| r.entropy.map_or(f64::NAN, |v| v);
            out.push(Check::new(
                format!("{} entropy decay", run.label()),
                run.entropy_decays(),
                format!("S(0) = {:.12e}, S(T) = {:.12e}", s(run.initial()), s(run.reports.last().unwrap())),
            ));
        }
    }
    if let Some((lo, hi)) = sim.assert_entropy_ratio {
        let (passed, detail) = match runs {
            [a, b, ..] => match (a.max_entropy_change(), b.max_entropy_change()) {
                (Some(x), Some(y)) if y > 0.0 => {
                    let ratio = x / y;
                    (
                        ratio >= lo && ratio <= hi,
                        format!("max|dS| {x:.4e} / {y:.4e} = {ratio:.4} (allowed [{lo}, {hi}])"),
                    )
                }
                _ => (false, "entropy changes unavailable".into()),
            },
            _ => (false, "ratio needs two runs".into()),
        };
        out.push(Check::new("entropy ratio", passed, detail));
    }
    out
}

/// Runs every configured step size; writes per-run CSVs and a summary to `out`
/// when given.
pub fn run(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<SimulateOutcome> {
    let runs = with_law!(cfg.scheme.law, |law| run_law(cfg, law, out))?;
    let checks = checks(cfg, &runs);
    if let Some(dir) = out {
        for r in &runs {
            write_text(&dir.join(format!("{}.csv", r.label())), &r.csv())?;
        }
        let summary = json!({
            "law": cfg.scheme.law.name(),
            "method": cfg.integrator.method.name(),
            "runs": runs.iter().map(RunResult::summary).collect::<Vec<_>>(),
            "checks": checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        });
        write_text(&dir.join("summary.json"), &serde_json::to_string_pretty(&summary).unwrap())?;
    }
    Ok(SimulateOutcome { runs, checks })
}
