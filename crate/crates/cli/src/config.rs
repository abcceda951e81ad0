//! Line-oriented experiment configuration.
//!
//! ```text
//! # comment
//! [section]
//! key = value
//! ```
//!
//! Lists are comma separated. Every key has a default, so an empty file is a
//! valid configuration. [`ExperimentConfig::to_text`] writes every key back
//! out, and parsing that text yields an equal configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use fluxjac::fluxes::LawId;
use fluxjac::timestepping::convergence::Manufactured;
use fluxjac::timestepping::{LinearSolver, Method, StepSize, NEWTON_MAX_ITERATIONS, NEWTON_TOLERANCE};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key [{section}] {key}")]
    UnknownKey { section: String, key: String },
    #[error("[{section}] {key}: invalid value {value:?}: {message}")]
    Value {
        section: String,
        key: String,
        value: String,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Bench,
    Converge,
    Simulate,
}

impl Command {
    pub const ALL: [Command; 4] = [Command::Verify, Command::Bench, Command::Converge, Command::Simulate];

    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Bench => "bench",
            Command::Converge => "converge",
            Command::Simulate => "simulate",
        }
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeId {
    Fv,
    Dgsem,
    Modal,
}

impl SchemeId {
    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Fv => "fv",
            SchemeId::Dgsem => "dgsem",
            SchemeId::Modal => "modal",
        }
    }
}

impl FromStr for SchemeId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        [SchemeId::Fv, SchemeId::Dgsem, SchemeId::Modal]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown scheme {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryId {
    Periodic,
    Dirichlet,
    Reflective,
    Extrapolated,
}

impl BoundaryId {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryId::Periodic => "periodic",
            BoundaryId::Dirichlet => "dirichlet",
            BoundaryId::Reflective => "reflective",
            BoundaryId::Extrapolated => "extrapolated",
        }
    }
}

impl FromStr for BoundaryId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        [
            BoundaryId::Periodic,
            BoundaryId::Dirichlet,
            BoundaryId::Reflective,
            BoundaryId::Extrapolated,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| format!("unknown boundary {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialCondition {
    /// Uniform random values in `(-1, 1)` (Burgers only).
    Random,
    /// `-sin(πx)` (Burgers only).
    MinusSine,
    /// Density 1.1 on `[-½, ½]²` and 1 elsewhere, at rest, `E = ρ^γ`.
    DensityBox,
    /// Smooth admissible profile for any law.
    Smooth,
}

impl InitialCondition {
    pub fn name(self) -> &'static str {
        match self {
            InitialCondition::Random => "random",
            InitialCondition::MinusSine => "minus-sine",
            InitialCondition::DensityBox => "density-box",
            InitialCondition::Smooth => "smooth",
        }
    }
}

impl FromStr for InitialCondition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        [
            InitialCondition::Random,
            InitialCondition::MinusSine,
            InitialCondition::DensityBox,
            InitialCondition::Smooth,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| format!("unknown initial condition {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub law: LawId,
    pub scheme: SchemeId,
    pub degree: usize,
    /// Elements per direction.
    pub elements: usize,
    pub dimension: usize,
    pub boundary: BoundaryId,
    pub dirichlet_left: Vec<f64>,
    pub dirichlet_right: Vec<f64>,
    pub dissipation: bool,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            law: LawId::Burgers,
            scheme: SchemeId::Dgsem,
            degree: 2,
            elements: 8,
            dimension: 1,
            boundary: BoundaryId::Periodic,
            dirichlet_left: Vec::new(),
            dirichlet_right: Vec::new(),
            dissipation: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub step: StepSize,
    pub final_time: f64,
    pub newton_tolerance: f64,
    pub newton_max_iterations: usize,
    pub solver: LinearSolver,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::ImplicitMidpoint,
            step: StepSize::Cfl(1.0),
            final_time: 1.0,
            newton_tolerance: NEWTON_TOLERANCE,
            newton_max_iterations: NEWTON_MAX_ITERATIONS,
            solver: LinearSolver::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub table1: bool,
    pub sweep: bool,
    pub tolerance: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            table1: true,
            sweep: true,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub samples: usize,
    pub inner: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![10, 25, 50],
            samples: 30,
            inner: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeConfig {
    pub problem: Manufactured,
    pub degree: usize,
    pub frequency: f64,
    pub final_time: f64,
    pub steps: Vec<usize>,
    pub methods: Vec<Method>,
    /// Allowed deviation of the observed rate from the nominal order.
    pub rate_tolerance: f64,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self {
            problem: Manufactured::Burgers,
            degree: 16,
            frequency: 10.0,
            final_time: 1.0,
            steps: vec![8, 16, 32, 64, 128],
            methods: vec![Method::Tdrk1, Method::Tdrk2, Method::Tdrk3, Method::Rk45],
            rate_tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulateConfig {
    pub initial: Option<InitialCondition>,
    /// One run per CFL number; empty means a single run with the
    /// integrator's step.
    pub cfls: Vec<f64>,
    pub dump_jacobian: bool,
    /// Bound on `max |E(t) - E(0)| / E(0)`.
    pub assert_energy: Option<f64>,
    /// Range for `max|S - S(0)|` of the first run over the second.
    pub assert_entropy_ratio: Option<(f64, f64)>,
    /// Range for the Newton iterations of every step.
    pub assert_newton: Option<(usize, usize)>,
    /// Requires `S(T) ≤ S(0)` and no step to raise `S` beyond roundoff.
    pub assert_entropy_decay: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub out: PathBuf,
    pub scheme: SchemeConfig,
    pub integrator: IntegratorConfig,
    pub verify: VerifyConfig,
    pub bench: BenchConfig,
    pub converge: ConvergeConfig,
    pub simulate: SimulateConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: Command::Verify,
            seed: 2020,
            out: PathBuf::from("out"),
            scheme: SchemeConfig::default(),
            integrator: IntegratorConfig::default(),
            verify: VerifyConfig::default(),
            bench: BenchConfig::default(),
            converge: ConvergeConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

type Sections = BTreeMap<String, BTreeMap<String, (usize, String)>>;

fn split_sections(text: &str) -> Result<Sections, ConfigError> {
    let mut out: Sections = BTreeMap::new();
    let mut section = String::from("experiment");
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let n = idx + 1;
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line: n,
                message: format!("unterminated section header {line:?}"),
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: n,
            message: format!("expected key = value, got {line:?}"),
        })?;
        let key = k.trim().to_string();
        let prev = out
            .entry(section.clone())
            .or_default()
            .insert(key.clone(), (n, v.trim().to_string()));
        if prev.is_some() {
            return Err(ConfigError::Syntax {
                line: n,
                message: format!("duplicate key {key:?}"),
            });
        }
    }
    Ok(out)
}

struct Reader {
    sections: Sections,
}

impl Reader {
    fn take<T>(
        &mut self,
        section: &str,
        key: &str,
        parse: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<Option<T>, ConfigError> {
        let Some((_, v)) = self.sections.get_mut(section).and_then(|s| s.remove(key)) else {
            return Ok(None);
        };
        parse(&v).map(Some).map_err(|message| ConfigError::Value {
            section: section.into(),
            key: key.into(),
            value: v.clone(),
            message,
        })
    }

    fn set<T>(
        &mut self,
        section: &str,
        key: &str,
        slot: &mut T,
        parse: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<(), ConfigError> {
        if let Some(v) = self.take(section, key, parse)? {
            *slot = v;
        }
        Ok(())
    }

    fn finish(self) -> Result<(), ConfigError> {
        for (section, keys) in self.sections {
            if let Some(key) = keys.into_keys().next() {
                return Err(ConfigError::UnknownKey { section, key });
            }
        }
        Ok(())
    }
}

fn from_str<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

fn list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| from_str(p.trim())).collect()
}

fn pair<T: FromStr + Copy>(s: &str) -> Result<(T, T), String>
where
    T::Err: std::fmt::Display,
{
    match list::<T>(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err("expected two comma-separated values".into()),
    }
}

fn step_size(s: &str) -> Result<StepSize, String> {
    let (kind, v) = s.split_once(':').ok_or("expected cfl:<value> or dt:<value>")?;
    let v: f64 = from_str(v.trim())?;
    match kind.trim() {
        "cfl" => Ok(StepSize::Cfl(v)),
        "dt" => Ok(StepSize::Fixed(v)),
        other => Err(format!("unknown step kind {other:?}")),
    }
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut r = Reader {
            sections: split_sections(text)?,
        };
        let mut c = ExperimentConfig::default();

        r.set("experiment", "command", &mut c.command, from_str)?;
        r.set("experiment", "seed", &mut c.seed, from_str)?;
        r.set("experiment", "out", &mut c.out, |s| Ok(PathBuf::from(s)))?;

        let s = &mut c.scheme;
        r.set("scheme", "law", &mut s.law, from_str)?;
        r.set("scheme", "scheme", &mut s.scheme, from_str)?;
        r.set("scheme", "degree", &mut s.degree, from_str)?;
        r.set("scheme", "elements", &mut s.elements, from_str)?;
        r.set("scheme", "dimension", &mut s.dimension, from_str)?;
        r.set("scheme", "boundary", &mut s.boundary, from_str)?;
        r.set("scheme", "dirichlet_left", &mut s.dirichlet_left, list)?;
        r.set("scheme", "dirichlet_right", &mut s.dirichlet_right, list)?;
        r.set("scheme", "dissipation", &mut s.dissipation, from_str)?;

        let i = &mut c.integrator;
        r.set("integrator", "method", &mut i.method, from_str)?;
        r.set("integrator", "step", &mut i.step, step_size)?;
        r.set("integrator", "final_time", &mut i.final_time, from_str)?;
        r.set("integrator", "newton_tolerance", &mut i.newton_tolerance, from_str)?;
        r.set("integrator", "newton_max_iterations", &mut i.newton_max_iterations, from_str)?;
        r.set("integrator", "solver", &mut i.solver, from_str)?;

        let v = &mut c.verify;
        r.set("verify", "table1", &mut v.table1, from_str)?;
        r.set("verify", "sweep", &mut v.sweep, from_str)?;
        r.set("verify", "tolerance", &mut v.tolerance, from_str)?;

        let b = &mut c.bench;
        r.set("bench", "sizes", &mut b.sizes, list)?;
        r.set("bench", "samples", &mut b.samples, from_str)?;
        r.set("bench", "inner", &mut b.inner, from_str)?;

        let cv = &mut c.converge;
        r.set("converge", "problem", &mut cv.problem, from_str)?;
        r.set("converge", "degree", &mut cv.degree, from_str)?;
        r.set("converge", "frequency", &mut cv.frequency, from_str)?;
        r.set("converge", "final_time", &mut cv.final_time, from_str)?;
        r.set("converge", "steps", &mut cv.steps, list)?;
        r.set("converge", "methods", &mut cv.methods, list)?;
        r.set("converge", "rate_tolerance", &mut cv.rate_tolerance, from_str)?;

        let sm = &mut c.simulate;
        sm.initial = r.take("simulate", "initial", from_str)?;
        r.set("simulate", "cfls", &mut sm.cfls, list)?;
        r.set("simulate", "dump_jacobian", &mut sm.dump_jacobian, from_str)?;
        sm.assert_energy = r.take("simulate", "assert_energy", from_str)?;
        sm.assert_entropy_ratio = r.take("simulate", "assert_entropy_ratio", pair)?;
        sm.assert_newton = r.take("simulate", "assert_newton", pair)?;
        r.set("simulate", "assert_entropy_decay", &mut sm.assert_entropy_decay, from_str)?;

        r.finish()?;
        Ok(c)
    }

    /// Full text form; every key is written, optional ones only when set.
    pub fn to_text(&self) -> String {
        let mut t = String::new();
        let step = match self.integrator.step {
            StepSize::Cfl(v) => format!("cfl:{v}"),
            StepSize::Fixed(v) => format!("dt:{v}"),
        };
        let s = &self.scheme;
        let i = &self.integrator;
        let v = &self.verify;
        let b = &self.bench;
        let cv = &self.converge;
        let sm = &self.simulate;
        let _ = writeln!(t, "[experiment]");
        let _ = writeln!(t, "command = {}", self.command.name());
        let _ = writeln!(t, "seed = {}", self.seed);
        let _ = writeln!(t, "out = {}", self.out.display());
        let _ = writeln!(t, "\n[scheme]");
        let _ = writeln!(t, "law = {}", s.law.name());
        let _ = writeln!(t, "scheme = {}", s.scheme.name());
        let _ = writeln!(t, "degree = {}", s.degree);
        let _ = writeln!(t, "elements = {}", s.elements);
        let _ = writeln!(t, "dimension = {}", s.dimension);
        let _ = writeln!(t, "boundary = {}", s.boundary.name());
        let _ = writeln!(t, "dirichlet_left = {}", join(&s.dirichlet_left));
        let _ = writeln!(t, "dirichlet_right = {}", join(&s.dirichlet_right));
        let _ = writeln!(t, "dissipation = {}", s.dissipation);
        let _ = writeln!(t, "\n[integrator]");
        let _ = writeln!(t, "method = {}", i.method.name());
        let _ = writeln!(t, "step = {step}");
        let _ = writeln!(t, "final_time = {}", i.final_time);
        let _ = writeln!(t, "newton_tolerance = {:e}", i.newton_tolerance);
        let _ = writeln!(t, "newton_max_iterations = {}", i.newton_max_iterations);
        let _ = writeln!(t, "solver = {}", i.solver.name());
        let _ = writeln!(t, "\n[verify]");
        let _ = writeln!(t, "table1 = {}", v.table1);
        let _ = writeln!(t, "sweep = {}", v.sweep);
        let _ = writeln!(t, "tolerance = {:e}", v.tolerance);
        let _ = writeln!(t, "\n[bench]");
        let _ = writeln!(t, "sizes = {}", join(&b.sizes));
        let _ = writeln!(t, "samples = {}", b.samples);
        let _ = writeln!(t, "inner = {}", b.inner);
        let _ = writeln!(t, "\n[converge]");
        let _ = writeln!(t, "problem = {}", cv.problem.name());
        let _ = writeln!(t, "degree = {}", cv.degree);
        let _ = writeln!(t, "frequency = {}", cv.frequency);
        let _ = writeln!(t, "final_time = {}", cv.final_time);
        let _ = writeln!(t, "steps = {}", join(&cv.steps));
        let methods: Vec<&str> = cv.methods.iter().map(|m| m.name()).collect();
        let _ = writeln!(t, "methods = {}", methods.join(","));
        let _ = writeln!(t, "rate_tolerance = {}", cv.rate_tolerance);
        let _ = writeln!(t, "\n[simulate]");
        if let Some(ic) = sm.initial {
            let _ = writeln!(t, "initial = {}", ic.name());
        }
        let _ = writeln!(t, "cfls = {}", join(&sm.cfls));
        let _ = writeln!(t, "dump_jacobian = {}", sm.dump_jacobian);
        if let Some(e) = sm.assert_energy {
            let _ = writeln!(t, "assert_energy = {e:e}");
        }
        if let Some((a, b)) = sm.assert_entropy_ratio {
            let _ = writeln!(t, "assert_entropy_ratio = {a},{b}");
        }
        if let Some((a, b)) = sm.assert_newton {
            let _ = writeln!(t, "assert_newton = {a},{b}");
        }
        let _ = writeln!(t, "assert_entropy_decay = {}", sm.assert_entropy_decay);
        t
    }
}
