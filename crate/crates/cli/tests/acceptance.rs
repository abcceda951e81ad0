//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fluxjac::fluxes::{
    flux_jacobian_right, logmean, Burgers, ConservationLaw, Euler2D, Euler3D, LaxFriedrichs, ShallowWater1D,
    ShallowWater2D,
};
use fluxjac::operators::{assemble_global_periodic, fv_periodic, lobatto_sbp, tensor2d_affine, GlobalDiscretization, Mesh2D};
use fluxjac::oracles::{frobenius_difference, verify_table1};
use fluxjac::residual::{field_major, node_major, SemiDiscreteSystem, Variant};
use fluxjac::timestepping::convergence::{run_study, ConvergenceStudy, Manufactured};
use fluxjac::timestepping::Method;
use fluxjac_cli::config::ExperimentConfig;
use fluxjac_cli::{bench, simulate, verify};

const SEED: u64 = 2020;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn config(name: &str) -> ExperimentConfig {
    let path = format!("{}/../../configs/{name}.cfg", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    ExperimentConfig::parse(&text).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn table1() -> Outcome {
    let t0 = Instant::now();
    let reports = match verify_table1(SEED) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let secs = t0.elapsed().as_secs_f64();
    let worst = reports.iter().map(|r| r.rel_diff).fold(0.0, f64::max);
    let ok = reports.len() == 6 && reports.iter().all(|r| r.rel_diff <= 1e-10) && secs < 5.0;
    outcome(ok, format!("6 cases, max rel {worst:.2e} (<= 1e-10), {secs:.2} s (< 5 s)"))
}

fn sweep() -> Outcome {
    let t0 = Instant::now();
    let reports = match verify::sweep(SEED) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let secs = t0.elapsed().as_secs_f64();
    let worst = reports.iter().map(|r| r.rel_diff).fold(0.0, f64::max);
    let bad: Vec<&str> = reports.iter().filter(|r| !(r.rel_diff <= 1e-9)).map(|r| r.case.as_str()).collect();
    let ok = reports.len() == 20 && bad.is_empty() && secs < 60.0;
    outcome(
        ok,
        format!("{} cases, max rel {worst:.2e} (<= 1e-9), {secs:.2} s (< 60 s), failing {bad:?}", reports.len()),
    )
}

fn performance() -> Outcome {
    let row = match bench::bench_size(50, 30, 1000, SEED) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let (a, b) = (row.analytic_over_residual(), row.ad_over_analytic());
    let mut detail = format!(
        "n=50: residual {:.3} us, analytic {:.3} us, AD {:.3} us; analytic/residual {a:.2} (<= 3), AD/analytic {b:.1} (>= 10)",
        row.residual * 1e6,
        row.analytic * 1e6,
        row.ad * 1e6
    );
    if cfg!(debug_assertions) {
        detail.push_str(" [debug build]");
    }
    outcome(a <= 3.0 && b >= 10.0, detail)
}

fn rates(study: &ConvergenceStudy) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in [Method::Tdrk1, Method::Tdrk2, Method::Rk45, Method::Tdrk3] {
        match run_study(study, m) {
            Ok(r) => {
                let rate = r.asymptotic_rate();
                let nominal = m.order() as f64;
                let checked = m != Method::Tdrk3;
                if checked {
                    ok &= rate.is_some_and(|v| (v - nominal).abs() <= 0.1);
                }
                let shown = rate.map_or("none".into(), |v| format!("{v:.3}"));
                parts.push(format!("{} {shown}{}", m.name(), if checked { "" } else { " (info)" }));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{}: {e}", m.name()));
            }
        }
    }
    (ok, parts.join(", "))
}

fn convergence() -> Outcome {
    let t0 = Instant::now();
    let desk = ConvergenceStudy::desk(Manufactured::Burgers, vec![8, 16, 32, 64, 128]);
    let (desk_ok, desk_detail) = rates(&desk);
    let desk_secs = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let paper = ConvergenceStudy {
        problem: Manufactured::Burgers,
        degree: 40,
        frequency: 100.0,
        final_time: 5.0,
        steps: vec![1000, 2000, 4000, 8000, 16000, 32000],
    };
    let (paper_ok, paper_detail) = rates(&paper);
    let paper_secs = t0.elapsed().as_secs_f64();
    outcome(
        desk_ok && paper_ok && desk_secs < 120.0,
        format!(
            "desk N=16: {desk_detail} ({desk_secs:.1} s, < 120 s); N=40 k=100 T=5: {paper_detail} ({paper_secs:.1} s)"
        ),
    )
}

fn simulation(name: &str) -> Result<simulate::SimulateOutcome, Outcome> {
    simulate::run(&config(name), None).map_err(|e| outcome(false, e.to_string()))
}

fn energy() -> Outcome {
    let o = match simulation("burgers-energy") {
        Ok(o) => o,
        Err(e) => return e,
    };
    let run = &o.runs[0];
    let e = run.max_relative_energy_change();
    outcome(
        run.failure.is_none() && e <= 1e-12,
        format!(
            "EC Burgers 8x8 N=2, CFL 10, T=1, {} steps: max |dE|/E {e:.2e} (<= 1e-12){}",
            run.reports.len() - 1,
            run.failure.as_deref().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

fn entropy_ratio() -> Outcome {
    let o = match simulation("euler-ec-entropy") {
        Ok(o) => o,
        Err(e) => return e,
    };
    let check = o.checks.iter().find(|c| c.name == "entropy ratio");
    let failures: Vec<&str> = o.runs.iter().filter_map(|r| r.failure.as_deref()).collect();
    match check {
        Some(c) => outcome(
            c.passed && failures.is_empty(),
            format!("Euler EC density box 8x8 N=2, CFL 1/4 vs 1/8, T=2: {}", c.detail),
        ),
        None => outcome(false, "no ratio computed"),
    }
}

fn newton() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, lo, hi) in [("burgers-shock", 4, 7), ("euler-es-newton", 1, 8)] {
        let o = match simulation(name) {
            Ok(o) => o,
            Err(e) => return e,
        };
        for r in &o.runs {
            let range = r.newton_range();
            let good = r.failure.is_none() && range.is_some_and(|(a, b)| a >= lo && b <= hi);
            ok &= good;
            let shown = range.map_or("none".into(), |(a, b)| format!("{a}-{b}"));
            parts.push(format!("{name} {}: {shown} (allowed {lo}-{hi})", r.label()));
        }
    }
    outcome(ok, parts.join("; "))
}

// ---- always-on invariants ----

fn burgers_state(r: &mut ChaCha8Rng) -> [f64; 1] {
    [r.random_range(-2.0..2.0)]
}

fn swe1_state(r: &mut ChaCha8Rng) -> [f64; 2] {
    let h = r.random_range(0.5..2.0);
    [h, h * r.random_range(-1.0..1.0)]
}

fn swe2_state(r: &mut ChaCha8Rng) -> [f64; 3] {
    let h = r.random_range(0.5..2.0);
    [h, h * r.random_range(-1.0..1.0), h * r.random_range(-1.0..1.0)]
}

fn euler2_state(r: &mut ChaCha8Rng) -> [f64; 4] {
    let vel = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
    Euler2D::default().from_primitive(r.random_range(0.5..2.0), &vel, r.random_range(0.5..2.0))
}

fn euler3_state(r: &mut ChaCha8Rng) -> [f64; 5] {
    let vel = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
    Euler3D::default().from_primitive(r.random_range(0.5..2.0), &vel, r.random_range(0.5..2.0))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Worst flux consistency, symmetry, Tadmor and FD-Jacobian errors over
/// random pairs.
fn flux_errors<L: ConservationLaw<N>, const N: usize>(
    law: &L,
    r: &mut ChaCha8Rng,
    state: fn(&mut ChaCha8Rng) -> [f64; N],
) -> [f64; 4] {
    let mut worst = [0.0f64; 4];
    for _ in 0..100 {
        let (ul, ur) = (state(r), state(r));
        for d in 0..law.dim() {
            let f = law.flux(d, &ul);
            let fs = law.flux_ec(d, &ul, &ul);
            let diff: Vec<f64> = (0..N).map(|k| fs[k] - f[k]).collect();
            worst[0] = worst[0].max(norm(&diff) / norm(&f).max(f64::MIN_POSITIVE));

            let a = law.flux_ec(d, &ul, &ur);
            let b = law.flux_ec(d, &ur, &ul);
            let diff: Vec<f64> = (0..N).map(|k| a[k] - b[k]).collect();
            worst[1] = worst[1].max(norm(&diff) / norm(&a).max(f64::MIN_POSITIVE));

            let (vl, vr) = (law.entropy_vars(&ul), law.entropy_vars(&ur));
            let lhs: f64 = (0..N).map(|k| (vl[k] - vr[k]) * a[k]).sum();
            let rhs = law.potential(d, &ul) - law.potential(d, &ur);
            let dv: Vec<f64> = (0..N).map(|k| vl[k] - vr[k]).collect();
            let scale = (norm(&dv) * norm(&a)).max(law.potential(d, &ul).abs()).max(law.potential(d, &ur).abs());
            worst[2] = worst[2].max((lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE));

            let jad = flux_jacobian_right(law, d, &ul, &ur);
            let mut num = 0.0;
            let mut den = 0.0;
            for j in 0..N {
                let h = 1e-6 * ur[j].abs().max(1.0);
                let (mut up, mut dn) = (ur, ur);
                up[j] += h;
                dn[j] -= h;
                let (fp, fm) = (law.flux_ec(d, &ul, &up), law.flux_ec(d, &ul, &dn));
                for i in 0..N {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    num += (fd - jad[i][j]).powi(2);
                    den += jad[i][j].powi(2);
                }
            }
            worst[3] = worst[3].max(num.sqrt() / den.sqrt().max(1e-300));
        }
    }
    worst
}

/// `(a + b) / 2` divided by the full `atanh` series of `u = (a - b)/(a + b)`.
fn logmean_oracle(a: f64, b: f64) -> f64 {
    let u = (a - b) / (a + b);
    let u2 = u * u;
    let mut s = 0.0;
    let mut p = 1.0;
    for k in 0..60 {
        s += p / (2 * k + 1) as f64;
        p *= u2;
    }
    (a + b) / (2.0 * s)
}

fn periodic_schemes() -> Vec<(&'static str, GlobalDiscretization)> {
    let e = lobatto_sbp(3).unwrap();
    vec![
        ("fv", fv_periodic(7).unwrap()),
        ("dgsem", assemble_global_periodic(&e, 4).unwrap()),
        ("dgsem-2d", tensor2d_affine(&lobatto_sbp(2).unwrap(), &Mesh2D::uniform(3, 2).unwrap()).unwrap()),
    ]
}

/// Worst constant-state residual, entropy identity and Jacobian variant
/// mismatch for one law over the periodic schemes.
fn system_errors<L: ConservationLaw<N>, const N: usize>(
    law: L,
    r: &mut ChaCha8Rng,
    state: fn(&mut ChaCha8Rng) -> [f64; N],
) -> [f64; 3] {
    let mut worst = [0.0f64; 3];
    for (_, disc) in periodic_schemes() {
        let nodes = disc.solution_nodes();
        for lf in [None, Some(LaxFriedrichs::default())] {
            let sys = SemiDiscreteSystem::new(disc.clone(), law.clone()).unwrap().with_dissipation(lf);
            let c = state(r);
            let res = sys.residual(&field_major(&vec![c; nodes]), 0.0).unwrap();
            let scale = norm(&c).max(1.0);
            worst[0] = worst[0].max(res.iter().fold(0.0, |m: f64, v| m.max(v.abs())) / scale);

            let states: Vec<[f64; N]> = (0..nodes).map(|_| state(r)).collect();
            let u = field_major(&states);
            if lf.is_none() {
                let res = node_major::<N>(&sys.residual(&u, 0.0).unwrap());
                let v = node_major::<N>(&sys.entropy_test_vector(&u).unwrap());
                let mut dot = 0.0;
                let mut den = 0.0;
                for (vi, ri) in v.iter().zip(&res) {
                    dot += (0..N).map(|k| vi[k] * ri[k]).sum::<f64>();
                    den += norm(vi) * norm(ri);
                }
                worst[1] = worst[1].max(dot.abs() / den.max(f64::MIN_POSITIVE));
            }
            let a = sys.jacobian_with(&u, Variant::ColumnSum).unwrap().flatten().to_dense();
            let b = sys.jacobian_with(&u, Variant::RowSum).unwrap().flatten().to_dense();
            worst[2] = worst[2].max(frobenius_difference(&a, &b).1);
        }
    }
    worst
}

fn properties() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    let mut lines = Vec::new();
    let mut ok = true;
    let mut record = |name: &str, value: f64, limit: f64| {
        let good = value <= limit;
        ok &= good;
        lines.push(format!("{name} {value:.1e}{}", if good { "" } else { " FAIL" }));
    };

    let mut sbp = 0.0f64;
    for n in 1..=12 {
        let e = lobatto_sbp(n).unwrap();
        let m = e.q.add(&e.q.transpose()).unwrap().sub(&e.b).unwrap();
        sbp = sbp.max(m.max_abs());
    }
    record("sbp", sbp, 1e-13);

    let mut skew = 0.0f64;
    for (_, disc) in periodic_schemes() {
        for q in &disc.q {
            let d = q.to_dense();
            skew = skew.max(d.add(&d.transpose()).unwrap().max_abs() / d.max_abs());
            let rows = (0..d.rows()).map(|i| d.row(i).iter().sum::<f64>().abs()).fold(0.0, f64::max);
            skew = skew.max(rows / d.max_abs());
        }
    }
    record("skew", skew, 1e-13);

    let mut fl = [0.0f64; 4];
    let all = [
        flux_errors(&Burgers, &mut r, burgers_state),
        flux_errors(&ShallowWater1D::default(), &mut r, swe1_state),
        flux_errors(&ShallowWater2D::default(), &mut r, swe2_state),
        flux_errors(&Euler2D::default(), &mut r, euler2_state),
        flux_errors(&Euler3D::default(), &mut r, euler3_state),
    ];
    for w in all {
        for k in 0..4 {
            fl[k] = fl[k].max(w[k]);
        }
    }
    record("consistency", fl[0], 1e-13);
    record("symmetry", fl[1], 1e-14);
    record("tadmor", fl[2], 1e-11);
    record("dual-vs-fd", fl[3], 1e-5);

    let mut lm = 0.0f64;
    for a in [1e-2, 0.7, 1.0, 3.0, 1e2] {
        for e in (0..=140).map(|i| 10f64.powf(-10.0 + i as f64 * 0.06)) {
            for b in [a * (1.0 + e), a / (1.0 + e)] {
                let exact = logmean_oracle(a, b);
                lm = lm.max((logmean(a, b) - exact).abs() / exact);
            }
        }
    }
    record("logmean", lm, 1e-13);

    let mut sys = [0.0f64; 3];
    let all = [
        system_errors(Burgers, &mut r, burgers_state),
        system_errors(ShallowWater1D::default(), &mut r, swe1_state),
        system_errors(Euler2D::default(), &mut r, euler2_state),
    ];
    for w in all {
        for k in 0..3 {
            sys[k] = sys[k].max(w[k]);
        }
    }
    record("constant-state", sys[0], 1e-13);
    record("entropy-identity", sys[1], 1e-11);
    record("jacobian-variants", sys[2], 1e-13);

    outcome(ok, lines.join(", "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("jacobian correctness on dense random operators", table1),
        ("oracle equivalence sweep", sweep),
        ("assembly cost relative to residual and AD", performance),
        ("temporal convergence orders", convergence),
        ("symplectic energy conservation", energy),
        ("second-order entropy drift", entropy_ratio),
        ("newton iteration counts", newton),
        ("property suite", properties),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = f();
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{status} {} {name} [{:.1} s]: {}", i + 1, t0.elapsed().as_secs_f64(), o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
