use std::sync::Arc;

use fluxjac::fluxes::*;
use fluxjac::linalg::{DenseMatrix, SparseOperator, Symmetry};
use fluxjac::operators::*;
use fluxjac::residual::*;
use fluxjac::timestepping::convergence::{run_study, ConvergenceStudy, Manufactured};
use fluxjac::timestepping::*;
use fluxjac::{Error, Result};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scalar_ode(lambda: f64) -> LinearOde {
    LinearOde {
        a: DenseMatrix::from_row_major(1, 1, vec![lambda]).unwrap(),
    }
}

/// `x' = 1` written as the affine flow of `(x, 1)`.
struct ConstantOde;

impl OdeSystem for ConstantOde {
    fn dim(&self) -> usize {
        1
    }
    fn weights(&self) -> Vec<f64> {
        vec![1.0]
    }
    fn rhs(&self, _u: &[f64], _t: f64) -> Result<Vec<f64>> {
        Ok(vec![2.5])
    }
    fn rhs_jvp(&self, _u: &[f64], _w: &[f64], _t: f64) -> Result<Vec<f64>> {
        Ok(vec![0.0])
    }
    fn rhs_time_derivative(&self, _t: f64) -> Option<Vec<f64>> {
        None
    }
    fn rhs_jacobian(&self, _u: &[f64], _t: f64) -> Result<SparseOperator> {
        Ok(SparseOperator::zeros(1, 1))
    }
}

fn ec_burgers(k: usize, degree: usize) -> SemiDiscreteSystem<Burgers, 1> {
    let e = lobatto_sbp(degree).unwrap();
    SemiDiscreteSystem::new(assemble_global_periodic(&e, k).unwrap(), Burgers).unwrap()
}

fn random_state(n: usize, seed: u64) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let n: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    d / n.max(f64::MIN_POSITIVE)
}

#[test]
fn tdrk1_on_exponential_growth() {
    let dt = 0.1;
    let u = step_tdrk(1, &scalar_ode(1.0), &[1.0], 0.0, dt).unwrap();
    assert!((u[0] - (1.0 + dt + dt * dt / 2.0)).abs() < 1e-15);
}

#[test]
fn local_errors_on_exponential_scale_with_order() {
    // one-step error of an order-p scheme is O(dt^(p+1))
    let ode = scalar_ode(1.0);
    let local = |m: Method, dt: f64| {
        let u = step(m, &ode, &[1.0], 0.0, dt, NewtonOptions::default()).unwrap().0;
        (u[0] - dt.exp()).abs()
    };
    for (m, dt) in [
        (Method::Tdrk1, 0.1),
        (Method::Tdrk2, 0.2),
        (Method::Tdrk3, 0.4),
        (Method::Rk45, 0.2),
        (Method::ImplicitMidpoint, 0.1),
    ] {
        let p = m.order() as f64;
        let slope = (local(m, dt) / local(m, dt / 2.0)).log2();
        assert!((slope - (p + 1.0)).abs() < 0.25, "{}: slope {slope}", m.name());
    }
}

#[test]
fn rk45_is_exact_for_constant_rate() {
    let u = step_rk45(&ConstantOde, &[1.0], 0.0, 0.3).unwrap();
    assert!((u[0] - 1.75).abs() < 1e-15);
    for s in [1, 2, 3] {
        let u = step_tdrk(s, &ConstantOde, &[1.0], 0.0, 0.3).unwrap();
        assert!((u[0] - 1.75).abs() < 1e-15);
    }
}

#[test]
fn implicit_midpoint_linear_factor_in_one_iteration() {
    let (lambda, dt) = (-3.0, 0.1);
    let (u, s) = step_implicit_midpoint(&scalar_ode(lambda), &[1.0], 0.0, dt, NewtonOptions::default()).unwrap();
    let expect = (1.0 + lambda * dt / 2.0) / (1.0 - lambda * dt / 2.0);
    assert!((u[0] - expect).abs() < 1e-15);
    assert_eq!(s.iterations, 1);
}

#[test]
fn second_derivative_of_linear_system() {
    let a = DenseMatrix::from_row_major(2, 2, vec![0.5, -1.0, 2.0, 0.25]).unwrap();
    let u = [0.3, -0.7];
    let g = second_derivative(&LinearOde { a: a.clone() }, &u, 0.0).unwrap();
    let expect = a.matvec(&a.matvec(&u).unwrap()).unwrap();
    assert!(rel(&g, &expect) < 1e-15);
}

#[test]
fn second_derivative_matches_difference_along_flow() {
    let sys = ec_burgers(4, 3).with_dissipation(Some(LaxFriedrichs::default()));
    let u = random_state(sys.dofs(), 11);
    let f = rhs(&sys, &u, 0.0).unwrap();
    let eps = 1e-5;
    let shift = |s: f64| -> Vec<f64> { u.iter().zip(&f).map(|(u, f)| u + s * f).collect() };
    let fp = rhs(&sys, &shift(eps), 0.0).unwrap();
    let fm = rhs(&sys, &shift(-eps), 0.0).unwrap();
    let fd: Vec<f64> = fp.iter().zip(&fm).map(|(p, m)| (p - m) / (2.0 * eps)).collect();
    let g = second_derivative(&sys, &u, 0.0).unwrap();
    assert!(rel(&g, &fd) <= 1e-8, "{}", rel(&g, &fd));
}

#[test]
fn second_derivative_at_zero_is_source_rate() {
    let src = BurgersManufactured { k: 3.0 };
    let sys = ec_burgers(3, 2).with_source(Arc::new(src));
    let t = 0.4;
    let zero = vec![0.0; sys.dofs()];
    let g = second_derivative(&sys, &zero, t).unwrap();
    // f(0) = s, so g = (∂f/∂u)(0) s + s_t and (∂f/∂u)(0) = 0 for Burgers
    let st = sys.source_rate(t).unwrap();
    assert!(rel(&g, &st) < 1e-14);
}

#[test]
fn rhs_definitions() {
    let src = BurgersManufactured { k: 2.0 };
    let plain = ec_burgers(3, 3);
    let sys = plain.clone().with_source(Arc::new(src));
    let u = random_state(sys.dofs(), 5);
    let t = 0.3;
    let f = rhs(&sys, &u, t).unwrap();
    let r = plain.residual(&u, t).unwrap();
    let s = sys.source_vector(t).unwrap();
    let m = sys.mass_vector();
    for i in 0..u.len() {
        assert!((m[i] * f[i] + r[i] - m[i] * s[i]).abs() < 1e-13);
    }
    let c = vec![0.7; plain.dofs()];
    assert!(rhs(&plain, &c, 0.0).unwrap().iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn rhs_at_manufactured_solution_is_its_time_derivative() {
    let src = BurgersManufactured { k: 10.0 };
    let e = lobatto_sbp(24).unwrap();
    let sys = SemiDiscreteSystem::new(single_element_periodic(&e).unwrap(), Burgers)
        .unwrap()
        .with_source(Arc::new(src));
    let t = 0.37;
    let u = sys.project(|x| [src.exact(x[0], t)]);
    let f = rhs(&sys, &u, t).unwrap();
    // d/dt sin(kt) sin(πx)
    let ut = sys.project(|x| [src.k * (src.k * t).cos() * (std::f64::consts::PI * x[0]).sin()]);
    let err = f.iter().zip(&ut).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8, "{err}");
}

#[test]
fn compute_dt_examples() {
    assert!((compute_dt(0.5, 2, 1.0) - 0.5 / 6.0).abs() < 1e-16);
    assert_eq!(compute_dt(0.3, 0, 2.0), 0.6);
    assert_eq!(compute_dt(0.5, 3, 2.0), 2.0 * compute_dt(0.5, 3, 1.0));
}

#[test]
fn implicit_midpoint_conserves_burgers_energy() {
    let sys = ec_burgers(4, 3);
    let u0 = random_state(sys.dofs(), 21);
    let e0 = sys.energy(&u0);
    let cfg = TimeIntegratorConfig::new(Method::ImplicitMidpoint, StepSize::Fixed(0.01), 1.0);
    let (_, reports) = integrate(&sys, &u0, &cfg, sys.disc.h_min, 3).unwrap();
    assert_eq!(reports.len(), 101);
    for r in &reports {
        assert!(((r.energy - e0) / e0).abs() <= 1e-12, "{}: {}", r.step, r.energy - e0);
        // Burgers entropy is the energy
        assert!((r.entropy.unwrap() - r.energy).abs() < 1e-14);
    }
    assert!(reports[1..].iter().all(|r| r.newton_iterations >= 1 && r.newton_iterations <= 25));
}

#[test]
fn newton_with_fd_jacobian_gives_the_same_step() {
    let sys = ec_burgers(3, 2).with_dissipation(Some(LaxFriedrichs::default()));
    let u = random_state(sys.dofs(), 8);
    let dt = 0.05;
    let (a, _) = step_implicit_midpoint(&sys, &u, 0.0, dt, NewtonOptions::default()).unwrap();
    let fd = FdJacobian(sys.clone());
    let (b, _) = step_implicit_midpoint(&fd, &u, 0.0, dt, NewtonOptions::default()).unwrap();
    assert!(rel(&b, &a) <= 1e-6, "{}", rel(&b, &a));
}

#[test]
fn newton_failure_reports_history() {
    let sys = ec_burgers(3, 2);
    let u = random_state(sys.dofs(), 8);
    let opts = NewtonOptions {
        tolerance: 1e-14,
        max_iterations: 1,
        ..NewtonOptions::default()
    };
    match step_implicit_midpoint(&sys, &u, 0.0, 0.5, opts) {
        Err(Error::NewtonFailure { iterations, history, .. }) => {
            assert_eq!(iterations, 1);
            assert_eq!(history.len(), 1);
        }
        other => panic!("expected a Newton failure, got {other:?}"),
    }
}

#[test]
fn config_validation_and_method_names() {
    let ok = TimeIntegratorConfig::new(Method::Rk45, StepSize::Cfl(0.5), 1.0);
    assert!(ok.validate().is_ok());
    let mut bad = ok;
    bad.step = StepSize::Fixed(0.0);
    assert!(bad.validate().is_err());
    let mut bad = ok;
    bad.newton.tolerance = 1e-3;
    assert!(bad.validate().is_err());
    for m in Method::ALL {
        assert_eq!(m.name().parse::<Method>().unwrap(), m);
    }
    assert!("rk4".parse::<Method>().is_err());
    // a step of 0.3 rounds to four uniform steps
    let (n, dt) = TimeIntegratorConfig::new(Method::Tdrk1, StepSize::Fixed(0.3), 1.0).steps(1.0, 1);
    assert_eq!(n, 4);
    assert!((dt - 0.25).abs() < 1e-16);
    let (n, _) = TimeIntegratorConfig::new(Method::Tdrk1, StepSize::Fixed(0.25), 1.0).steps(1.0, 1);
    assert_eq!(n, 4);
}

#[test]
fn step_log_csv() {
    let sys = ec_burgers(2, 2);
    let u0 = random_state(sys.dofs(), 1);
    let cfg = TimeIntegratorConfig::new(Method::Tdrk2, StepSize::Cfl(0.1), 0.05);
    let (_, reports) = integrate(&sys, &u0, &cfg, sys.disc.h_min, 2).unwrap();
    let csv = reports_csv(&reports);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], StepReport::CSV_HEADER);
    assert_eq!(lines.len(), reports.len() + 1);
    assert!((reports.last().unwrap().time - 0.05).abs() < 1e-15);
    assert_eq!(lines[1].split(',').count(), 7);
}

#[test]
fn burgers_manufactured_rates() {
    for (m, lo, hi) in [(Method::Tdrk1, 1.9, 2.1), (Method::Tdrk2, 3.9, 4.1), (Method::Rk45, 3.9, 4.1)] {
        let study = ConvergenceStudy::desk(Manufactured::Burgers, vec![8, 16, 32, 64, 128]);
        let res = run_study(&study, m).unwrap();
        let rate = res.asymptotic_rate().unwrap();
        assert!(rate >= lo && rate <= hi, "{}: {rate}", m.name());
    }
}

#[test]
fn euler_entropy_error_is_second_order_in_dt() {
    // smooth periodic flow, EC flux, implicit midpoint
    let law = Euler2D::default();
    let e = lobatto_sbp(2).unwrap();
    let sys = SemiDiscreteSystem::new(tensor2d_affine(&e, &Mesh2D::uniform(2, 2).unwrap()).unwrap(), law).unwrap();
    let u0 = sys.project(|x| {
        let rho = 1.0 + 0.2 * (std::f64::consts::PI * (x[0] + x[1])).sin();
        law.from_primitive(rho, &[0.3, 0.1], 1.0)
    });
    let s0 = sys.total_entropy(&u0).unwrap();
    let drift = |dt: f64| {
        let cfg = TimeIntegratorConfig::new(Method::ImplicitMidpoint, StepSize::Fixed(dt), 0.2);
        let (_, reps) = integrate(&sys, &u0, &cfg, 1.0, 2).unwrap();
        reps.iter().map(|r| (r.entropy.unwrap() - s0).abs()).fold(0.0, f64::max)
    };
    let ratio = drift(0.02) / drift(0.01);
    assert!((ratio - 4.0).abs() < 0.5, "{ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn midpoint_conserves_quadratic_invariant_of_skew_flow(
        entries in prop::collection::vec(-1.0f64..1.0, 16),
        u in prop::collection::vec(-1.0f64..1.0, 4),
        dt in 0.01f64..0.5,
    ) {
        let a = DenseMatrix::from_fn(4, 4, |i, j| entries[i * 4 + j] - entries[j * 4 + i]);
        let ode = LinearOde { a };
        let (v, _) = step_implicit_midpoint(&ode, &u, 0.0, dt, NewtonOptions::default()).unwrap();
        let e0 = ode.energy(&u);
        prop_assert!((ode.energy(&v) - e0).abs() <= 1e-13 * e0.max(1e-3));
    }

    #[test]
    fn tdrk1_matches_expansion(lambda in -2.0f64..2.0, dt in 0.0f64..0.3, u0 in -3.0f64..3.0) {
        let u = step_tdrk(1, &scalar_ode(lambda), &[u0], 0.0, dt).unwrap();
        let z = lambda * dt;
        prop_assert!((u[0] - u0 * (1.0 + z + z * z / 2.0)).abs() <= 1e-14 * (1.0 + u0.abs()));
    }
}

#[test]
fn linear_ode_jacobian_is_the_matrix() {
    let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let j = LinearOde { a: a.clone() }.rhs_jacobian(&[0.0, 0.0], 0.0).unwrap();
    assert_eq!(j.to_dense(), a);
    assert_eq!(j.symmetry(), Symmetry::General);
}
