//! Temporal convergence studies against manufactured solutions on one
//! periodic Lobatto element.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fluxes::{Burgers, ConservationLaw, ShallowWater1D};
use crate::operators::{gauss_legendre, interpolation_matrix, lobatto_sbp, single_element_periodic};
use crate::residual::{BurgersManufactured, SemiDiscreteSystem, ShallowWaterManufactured};
use crate::timestepping::{step, Method, NewtonOptions};

/// Errors below this are treated as having reached the roundoff floor.
pub const ROUNDOFF_FLOOR: f64 = 1e-11;
/// A point is floored once its error is within this factor of the spatial
/// error, which no step refinement can remove.
pub const SPATIAL_MARGIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manufactured {
    Burgers,
    ShallowWater,
}

impl Manufactured {
    pub fn name(self) -> &'static str {
        match self {
            Manufactured::Burgers => "burgers",
            Manufactured::ShallowWater => "swe",
        }
    }
}

impl FromStr for Manufactured {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "burgers" => Ok(Manufactured::Burgers),
            "swe" | "shallow-water" => Ok(Manufactured::ShallowWater),
            _ => Err(Error::Unsupported(format!("no manufactured solution for {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub problem: Manufactured,
    pub degree: usize,
    /// Temporal frequency of the manufactured solution.
    pub frequency: f64,
    pub final_time: f64,
    /// Step counts, each refinement usually doubling the previous.
    pub steps: Vec<usize>,
}

impl ConvergenceStudy {
    /// Fast default: `N = 16`, `k = 10`, `T = 1`.
    pub fn desk(problem: Manufactured, steps: Vec<usize>) -> Self {
        Self {
            problem,
            degree: 16,
            frequency: 10.0,
            final_time: 1.0,
            steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub steps: usize,
    pub dt: f64,
    pub error: f64,
    pub floored: bool,
    /// `log2` of the error ratio to the previous point, scaled by the
    /// step-size ratio.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub points: Vec<ConvergencePoint>,
    /// Error of a reference run with a far smaller step, i.e. the spatial
    /// discretization error.
    pub spatial_error: f64,
}

impl ConvergenceResult {
    /// Rate from the last refinement pair whose finer error is above the
    /// floor.
    pub fn asymptotic_rate(&self) -> Option<f64> {
        self.points
            .iter()
            .rev()
            .find(|p| !p.floored && p.rate.is_some())
            .and_then(|p| p.rate)
    }
}

pub fn run_study(study: &ConvergenceStudy, method: Method) -> Result<ConvergenceResult> {
    let finest = study.steps.iter().copied().max().unwrap_or(1);
    let mut all_steps = study.steps.clone();
    // fifth-order reference with a much smaller step
    all_steps.push(8 * finest);
    let methods: Vec<Method> = study.steps.iter().map(|_| method).chain([Method::Tdrk3]).collect();
    let elem = lobatto_sbp(study.degree)?;
    let disc = single_element_periodic(&elem)?;
    let mut errors = match study.problem {
        Manufactured::Burgers => {
            let src = BurgersManufactured { k: study.frequency };
            let sys = SemiDiscreteSystem::new(disc, Burgers)?.with_source(Arc::new(src));
            errors(&sys, &elem.nodes, study, &all_steps, &methods, |x, t| [src.exact(x, t)])?
        }
        Manufactured::ShallowWater => {
            let law = ShallowWater1D::default();
            let src = ShallowWaterManufactured {
                k: study.frequency,
                gravity: law.gravity,
            };
            let sys = SemiDiscreteSystem::new(disc, law)?.with_source(Arc::new(src));
            errors(&sys, &elem.nodes, study, &all_steps, &methods, |x, t| src.exact(x, t))?
        }
    };
    let spatial_error = errors.pop().map_or(0.0, |e| e.2);
    let floor = ROUNDOFF_FLOOR.max(SPATIAL_MARGIN * spatial_error);
    let mut out: Vec<ConvergencePoint> = Vec::with_capacity(errors.len());
    for (i, &(steps, dt, error)) in errors.iter().enumerate() {
        let rate = (i > 0).then(|| {
            let prev = out[i - 1];
            (prev.error / error).log2() / (prev.dt / dt).log2()
        });
        out.push(ConvergencePoint {
            steps,
            dt,
            error,
            floored: error < floor,
            rate,
        });
    }
    Ok(ConvergenceResult {
        points: out,
        spatial_error,
    })
}

fn errors<L, const N: usize>(
    sys: &SemiDiscreteSystem<L, N>,
    nodes: &[f64],
    study: &ConvergenceStudy,
    all_steps: &[usize],
    methods: &[Method],
    exact: impl Fn(f64, f64) -> [f64; N],
) -> Result<Vec<(usize, f64, f64)>>
where
    L: ConservationLaw<N>,
{
    let (gx, gw) = gauss_legendre(2 * study.degree + 2)?;
    let interp = interpolation_matrix(nodes, &gx);
    let n = nodes.len();
    let u0 = sys.project(|x| exact(x[0], 0.0));
    let mut out = Vec::new();
    for (&steps, &method) in all_steps.iter().zip(methods) {
        let dt = study.final_time / steps as f64;
        let mut u = u0.clone();
        for s in 0..steps {
            u = step(method, sys, &u, s as f64 * dt, dt, NewtonOptions::default())?.0;
        }
        let mut err2 = 0.0;
        for (q, (&x, &w)) in gx.iter().zip(&gw).enumerate() {
            let e = exact(x, study.final_time);
            for (f, ef) in e.iter().enumerate() {
                let uh: f64 = (0..n).map(|j| interp[(q, j)] * u[f * n + j]).sum();
                err2 += w * (uh - ef).powi(2);
            }
        }
        out.push((steps, dt, err2.sqrt()));
    }
    Ok(out)
}

pub const CSV_HEADER: &str = "method,steps,dt,error,rate,floored";

pub fn points_csv(method: Method, points: &[ConvergencePoint]) -> String {
    let mut s = String::new();
    for p in points {
        let rate = p.rate.map(|r| format!("{r:.4}")).unwrap_or_default();
        let _ = writeln!(s, "{},{},{:.6e},{:.6e},{},{}", method.name(), p.steps, p.dt, p.error, rate, p.floored);
    }
    s
}
