//! Explicit two-derivative and low-storage Runge-Kutta schemes, and the
//! implicit midpoint rule with a Newton solver on the analytic Jacobian.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fluxes::ConservationLaw;
use crate::linalg::{DenseMatrix, LuFactorization, SparseOperator, Symmetry};
use crate::residual::SemiDiscreteSystem;

pub mod convergence;

pub const NEWTON_TOLERANCE: f64 = 1e-11;
pub const NEWTON_MAX_ITERATIONS: usize = 25;
/// Consecutive residual increases after which Newton is declared divergent.
pub const NEWTON_DIVERGENCE_STREAK: usize = 3;
/// Relative residual treated as exact convergence.
const ROUNDOFF_RESIDUAL: f64 = 64.0 * f64::EPSILON;
/// Sufficient-decrease constant of the Newton line search.
const ARMIJO: f64 = 1e-4;
/// Shortest Newton step fraction tried by the line search.
const LINE_SEARCH_MIN: f64 = 1.0 / 64.0;

/// `du/dt = f(u, t)` with the pieces the integrators need.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    /// Weights of the norm used for convergence checks and energy.
    fn weights(&self) -> Vec<f64>;

    fn rhs(&self, u: &[f64], t: f64) -> Result<Vec<f64>>;

    /// `(∂f/∂u) w`.
    fn rhs_jvp(&self, u: &[f64], w: &[f64], t: f64) -> Result<Vec<f64>>;

    /// `∂f/∂t`, or `None` for autonomous systems.
    fn rhs_time_derivative(&self, t: f64) -> Option<Vec<f64>>;

    /// Assembled `∂f/∂u`.
    fn rhs_jacobian(&self, u: &[f64], t: f64) -> Result<SparseOperator>;

    fn entropy(&self, _u: &[f64]) -> Option<f64> {
        None
    }

    /// `½ Σ w u²`.
    fn energy(&self, u: &[f64]) -> f64 {
        0.5 * self.weights().iter().zip(u).map(|(w, v)| w * v * v).sum::<f64>()
    }
}

/// `f(u) = -M⁻¹ r(u, t)`, where `r` already contains `-M s(t)`.
pub fn rhs<L: ConservationLaw<N>, const N: usize>(sys: &SemiDiscreteSystem<L, N>, u: &[f64], t: f64) -> Result<Vec<f64>> {
    let r = sys.residual(u, t)?;
    Ok(r.iter().zip(sys.mass_vector()).map(|(r, m)| -r / m).collect())
}

/// `g = (∂f/∂u) f + ∂f/∂t`.
pub fn second_derivative<S: OdeSystem + ?Sized>(sys: &S, u: &[f64], t: f64) -> Result<Vec<f64>> {
    let f = sys.rhs(u, t)?;
    second_derivative_with(sys, u, &f, t)
}

fn second_derivative_with<S: OdeSystem + ?Sized>(sys: &S, u: &[f64], f: &[f64], t: f64) -> Result<Vec<f64>> {
    let mut g = sys.rhs_jvp(u, f, t)?;
    if let Some(ft) = sys.rhs_time_derivative(t) {
        for (g, s) in g.iter_mut().zip(ft) {
            *g += s;
        }
    }
    Ok(g)
}

impl<L: ConservationLaw<N>, const N: usize> OdeSystem for SemiDiscreteSystem<L, N> {
    fn dim(&self) -> usize {
        self.dofs()
    }

    fn weights(&self) -> Vec<f64> {
        self.mass_vector()
    }

    fn rhs(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        rhs(self, u, t)
    }

    fn rhs_jvp(&self, u: &[f64], w: &[f64], _t: f64) -> Result<Vec<f64>> {
        let jw = self.jacobian_vector_product(u, w)?;
        Ok(jw.iter().zip(self.mass_vector()).map(|(v, m)| -v / m).collect())
    }

    fn rhs_time_derivative(&self, t: f64) -> Option<Vec<f64>> {
        self.source_rate(t)
    }

    fn rhs_jacobian(&self, u: &[f64], _t: f64) -> Result<SparseOperator> {
        let mut j = self.jacobian(u)?.flatten().with_symmetry(Symmetry::General)?;
        let m = self.mass_vector();
        let row_ptr = j.row_ptr().to_vec();
        let values = j.values_mut();
        for (i, mi) in m.iter().enumerate() {
            for v in &mut values[row_ptr[i]..row_ptr[i + 1]] {
                *v = -*v / mi;
            }
        }
        Ok(j)
    }

    fn entropy(&self, u: &[f64]) -> Option<f64> {
        self.total_entropy(u).ok()
    }
}

/// Linear autonomous system `u' = A u`, with unit weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOde {
    pub a: DenseMatrix,
}

impl OdeSystem for LinearOde {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn weights(&self) -> Vec<f64> {
        vec![1.0; self.a.rows()]
    }

    fn rhs(&self, u: &[f64], _t: f64) -> Result<Vec<f64>> {
        self.a.matvec(u)
    }

    fn rhs_jvp(&self, _u: &[f64], w: &[f64], _t: f64) -> Result<Vec<f64>> {
        self.a.matvec(w)
    }

    fn rhs_time_derivative(&self, _t: f64) -> Option<Vec<f64>> {
        None
    }

    fn rhs_jacobian(&self, _u: &[f64], _t: f64) -> Result<SparseOperator> {
        SparseOperator::from_dense(&self.a, Symmetry::General)
    }
}

/// Wraps a system so that Newton uses a central-difference Jacobian.
#[derive(Debug, Clone)]
pub struct FdJacobian<S>(pub S);

impl<S: OdeSystem> OdeSystem for FdJacobian<S> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn weights(&self) -> Vec<f64> {
        self.0.weights()
    }

    fn rhs(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        self.0.rhs(u, t)
    }

    fn rhs_jvp(&self, u: &[f64], w: &[f64], t: f64) -> Result<Vec<f64>> {
        self.0.rhs_jvp(u, w, t)
    }

    fn rhs_time_derivative(&self, t: f64) -> Option<Vec<f64>> {
        self.0.rhs_time_derivative(t)
    }

    fn rhs_jacobian(&self, u: &[f64], t: f64) -> Result<SparseOperator> {
        let j = crate::oracles::fd_jacobian(|x| self.0.rhs(x, t), u)?;
        SparseOperator::from_dense(&j, Symmetry::General)
    }

    fn entropy(&self, u: &[f64]) -> Option<f64> {
        self.0.entropy(u)
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

fn weighted_norm(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(w, x)| w * x * x).sum::<f64>().sqrt()
}

/// Two-derivative Runge-Kutta step of the given number of stages (1, 2 or 3;
/// orders 2, 4 and 5).
pub fn step_tdrk<S: OdeSystem + ?Sized>(stages: usize, sys: &S, u: &[f64], t: f64, dt: f64) -> Result<Vec<f64>> {
    let f0 = sys.rhs(u, t)?;
    let g0 = second_derivative_with(sys, u, &f0, t)?;
    let h2 = dt * dt;
    let mut out = u.to_vec();
    axpy(&mut out, dt, &f0);
    match stages {
        1 => axpy(&mut out, h2 / 2.0, &g0),
        2 => {
            let mut y2 = u.to_vec();
            axpy(&mut y2, dt / 2.0, &f0);
            axpy(&mut y2, h2 / 8.0, &g0);
            let g2 = second_derivative(sys, &y2, t + dt / 2.0)?;
            axpy(&mut out, h2 / 6.0, &g0);
            axpy(&mut out, h2 / 3.0, &g2);
        }
        3 => {
            // c = (0, 1/5, 2/3)
            let (c2, c3) = (0.2, 2.0 / 3.0);
            let mut y2 = u.to_vec();
            axpy(&mut y2, c2 * dt, &f0);
            axpy(&mut y2, h2 / 50.0, &g0);
            let g2 = second_derivative(sys, &y2, t + c2 * dt)?;
            let mut y3 = u.to_vec();
            axpy(&mut y3, c3 * dt, &f0);
            axpy(&mut y3, -h2 / 27.0, &g0);
            axpy(&mut y3, 7.0 * h2 / 27.0, &g2);
            let g3 = second_derivative(sys, &y3, t + c3 * dt)?;
            axpy(&mut out, h2 / 24.0, &g0);
            axpy(&mut out, 25.0 * h2 / 84.0, &g2);
            axpy(&mut out, 9.0 * h2 / 56.0, &g3);
        }
        s => return Err(Error::InvalidIntegrator(format!("TDRK with {s} stages"))),
    }
    Ok(out)
}

const RK4A: [f64; 5] = [
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
];
const RK4B: [f64; 5] = [
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
];
const RK4C: [f64; 5] = [
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363962896.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
];

/// Five-stage fourth-order low-storage Runge-Kutta step.
pub fn step_rk45<S: OdeSystem + ?Sized>(sys: &S, u: &[f64], t: f64, dt: f64) -> Result<Vec<f64>> {
    let mut out = u.to_vec();
    let mut res = vec![0.0; u.len()];
    for k in 0..5 {
        let f = sys.rhs(&out, t + RK4C[k] * dt)?;
        for (r, f) in res.iter_mut().zip(&f) {
            *r = RK4A[k] * *r + dt * f;
        }
        axpy(&mut out, RK4B[k], &res);
    }
    Ok(out)
}

/// Factorization used for the Newton iteration matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolver {
    /// Dense below [`crate::linalg::DENSE_LIMIT`] unknowns, sparse above.
    #[default]
    Auto,
    Dense,
    Sparse,
}

impl LinearSolver {
    pub fn name(self) -> &'static str {
        match self {
            LinearSolver::Auto => "auto",
            LinearSolver::Dense => "dense",
            LinearSolver::Sparse => "sparse",
        }
    }

    fn factor(self, a: &SparseOperator) -> Result<LuFactorization> {
        match self {
            LinearSolver::Auto => LuFactorization::sparse(a),
            LinearSolver::Dense => LuFactorization::dense(&a.to_dense()),
            LinearSolver::Sparse => LuFactorization::sparse_direct(a),
        }
    }
}

impl FromStr for LinearSolver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [LinearSolver::Auto, LinearSolver::Dense, LinearSolver::Sparse]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidIntegrator(format!("unknown linear solver {s:?}")))
    }
}

/// Newton controls for the implicit midpoint rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub solver: LinearSolver,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tolerance: NEWTON_TOLERANCE,
            max_iterations: NEWTON_MAX_ITERATIONS,
            solver: LinearSolver::Auto,
        }
    }
}

/// Outcome of one implicit solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSummary {
    pub iterations: usize,
    /// Weighted norm of the nonlinear residual after each iteration.
    pub history: Vec<f64>,
}

/// Implicit midpoint step: solves `w = u + (dt/2) f(w, t + dt/2)` by Newton
/// from `w = u`, then returns `2w - u`. Each Newton step is shortened by
/// halving until the weighted residual decreases (Armijo condition).
///
/// Iteration stops when the weighted update falls below `tolerance` relative
/// to `‖w‖`, or when the weighted residual has reached roundoff level (which
/// ends linear problems after a single solve).
pub fn step_implicit_midpoint<S: OdeSystem + ?Sized>(
    sys: &S,
    u: &[f64],
    t: f64,
    dt: f64,
    opts: NewtonOptions,
) -> Result<(Vec<f64>, NewtonSummary)> {
    let tm = t + dt / 2.0;
    let weights = sys.weights();
    let n = u.len();
    let mut w = u.to_vec();
    let residual = |w: &[f64]| -> Result<Vec<f64>> {
        let f = sys.rhs(w, tm)?;
        Ok((0..n).map(|i| w[i] - u[i] - 0.5 * dt * f[i]).collect())
    };
    let mut g = residual(&w)?;
    let mut history = Vec::new();
    let mut last_norm = weighted_norm(&weights, &g);
    let mut growth = 0;
    let mut last_update = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let jf = sys.rhs_jacobian(&w, tm)?;
        let trip = (0..n).map(|i| (i, i, 1.0)).chain(jf.triplets().map(|(i, j, v)| (i, j, -0.5 * dt * v)));
        let a = SparseOperator::from_triplets(n, n, trip, Symmetry::General)?;
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        let delta = opts.solver.factor(&a)?.solve(&neg)?;
        // backtrack until the residual decreases sufficiently; the full step
        // is kept when no shorter one helps
        let mut lambda = 1.0;
        let (trial, trial_g, norm) = loop {
            let mut trial = w.clone();
            axpy(&mut trial, lambda, &delta);
            let trial_g = match residual(&trial) {
                Ok(g) => Some(g),
                Err(Error::Inadmissible { .. }) | Err(Error::InadmissibleProjection { .. })
                    if lambda > LINE_SEARCH_MIN =>
                {
                    None
                }
                Err(e) => return Err(e),
            };
            if let Some(trial_g) = trial_g {
                let norm = weighted_norm(&weights, &trial_g);
                if norm <= (1.0 - ARMIJO * lambda) * last_norm || lambda <= LINE_SEARCH_MIN {
                    break (trial, trial_g, norm);
                }
            }
            lambda *= 0.5;
        };
        w = trial;
        g = trial_g;
        let scale = weighted_norm(&weights, &w).max(f64::MIN_POSITIVE);
        last_update = lambda * weighted_norm(&weights, &delta) / scale;
        history.push(norm);
        if last_update <= opts.tolerance || norm <= ROUNDOFF_RESIDUAL * scale {
            let out = (0..n).map(|i| 2.0 * w[i] - u[i]).collect();
            return Ok((out, NewtonSummary { iterations: it, history }));
        }
        growth = if norm > last_norm { growth + 1 } else { 0 };
        last_norm = norm;
        if growth >= NEWTON_DIVERGENCE_STREAK || !norm.is_finite() {
            return Err(Error::NewtonFailure {
                iterations: it,
                last_update,
                history,
            });
        }
    }
    Err(Error::NewtonFailure {
        iterations: opts.max_iterations,
        last_update,
        history,
    })
}

/// `dt = CFL h_min / C_N` with the trace constant `C_N = (N+1)(N+2)/2`.
pub fn compute_dt(h_min: f64, degree: usize, cfl: f64) -> f64 {
    let c = ((degree + 1) * (degree + 2)) as f64 / 2.0;
    cfl * h_min / c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Tdrk1,
    Tdrk2,
    Tdrk3,
    Rk45,
    ImplicitMidpoint,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Tdrk1,
        Method::Tdrk2,
        Method::Tdrk3,
        Method::Rk45,
        Method::ImplicitMidpoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Tdrk1 => "tdrk1",
            Method::Tdrk2 => "tdrk2",
            Method::Tdrk3 => "tdrk3",
            Method::Rk45 => "rk45",
            Method::ImplicitMidpoint => "implicit-midpoint",
        }
    }

    /// Nominal order of accuracy.
    pub fn order(self) -> usize {
        match self {
            Method::Tdrk1 | Method::ImplicitMidpoint => 2,
            Method::Tdrk2 | Method::Rk45 => 4,
            Method::Tdrk3 => 5,
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidIntegrator(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Fixed(f64),
    Cfl(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeIntegratorConfig {
    pub method: Method,
    pub step: StepSize,
    pub final_time: f64,
    pub newton: NewtonOptions,
}

impl TimeIntegratorConfig {
    pub fn new(method: Method, step: StepSize, final_time: f64) -> Self {
        Self {
            method,
            step,
            final_time,
            newton: NewtonOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = match self.step {
            StepSize::Fixed(v) | StepSize::Cfl(v) => v > 0.0 && v.is_finite(),
        };
        if !positive {
            return Err(Error::InvalidIntegrator("time step and CFL must be positive".into()));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::InvalidIntegrator("final time must be positive".into()));
        }
        let tol = self.newton.tolerance;
        if !(tol > 0.0 && tol < 1e-3) {
            return Err(Error::InvalidIntegrator(format!("Newton tolerance {tol} outside (0, 1e-3)")));
        }
        if self.newton.max_iterations == 0 {
            return Err(Error::InvalidIntegrator("Newton needs at least one iteration".into()));
        }
        Ok(())
    }

    /// Step count and uniform step that lands exactly on the final time.
    pub fn steps(&self, h_min: f64, degree: usize) -> (usize, f64) {
        let dt = match self.step {
            StepSize::Fixed(dt) => dt,
            StepSize::Cfl(cfl) => compute_dt(h_min, degree, cfl),
        };
        let n = (self.final_time / dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.final_time / n as f64)
    }
}

/// State after one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    /// Zero for explicit methods.
    pub newton_iterations: usize,
    pub newton_residual: Option<f64>,
    pub entropy: Option<f64>,
    pub energy: f64,
}

impl StepReport {
    pub const CSV_HEADER: &'static str = "step,time,dt,entropy,energy,newton_iterations,newton_residual";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        format!(
            "{},{:.16e},{:.16e},{},{:.16e},{},{}",
            self.step,
            self.time,
            self.dt,
            opt(self.entropy),
            self.energy,
            self.newton_iterations,
            opt(self.newton_residual)
        )
    }
}

pub fn reports_csv(reports: &[StepReport]) -> String {
    let mut s = String::from(StepReport::CSV_HEADER);
    s.push('\n');
    for r in reports {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

/// One step of any method. The Newton summary is `None` for explicit methods.
pub fn step<S: OdeSystem + ?Sized>(
    method: Method,
    sys: &S,
    u: &[f64],
    t: f64,
    dt: f64,
    newton: NewtonOptions,
) -> Result<(Vec<f64>, Option<NewtonSummary>)> {
    Ok(match method {
        Method::Tdrk1 => (step_tdrk(1, sys, u, t, dt)?, None),
        Method::Tdrk2 => (step_tdrk(2, sys, u, t, dt)?, None),
        Method::Tdrk3 => (step_tdrk(3, sys, u, t, dt)?, None),
        Method::Rk45 => (step_rk45(sys, u, t, dt)?, None),
        Method::ImplicitMidpoint => {
            let (v, s) = step_implicit_midpoint(sys, u, t, dt, newton)?;
            (v, Some(s))
        }
    })
}

/// Integrates from `t = 0` to the final time; the report list starts with
/// the initial state (step 0).
pub fn integrate<S: OdeSystem + ?Sized>(
    sys: &S,
    u0: &[f64],
    config: &TimeIntegratorConfig,
    h_min: f64,
    degree: usize,
) -> Result<(Vec<f64>, Vec<StepReport>)> {
    config.validate()?;
    let (n, dt) = config.steps(h_min, degree);
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
    for k in 0..n {
        let t = k as f64 * dt;
        let (next, newton) = step(config.method, sys, &u, t, dt, config.newton)?;
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
    Ok((u, reports))
}
