//! Discretizations, systems and initial states from a configuration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fluxjac::fluxes::{Burgers, ConservationLaw, Euler, LaxFriedrichs, ShallowWater};
use fluxjac::operators::{
    assemble_global_modal, assemble_global_nonperiodic, assemble_global_periodic, fv_nonperiodic, fv_periodic,
    lobatto_sbp, modal_reference, tensor2d_affine, BoundaryPolicy, GlobalDiscretization, Mesh2D,
};
use fluxjac::residual::SemiDiscreteSystem;
use fluxjac::{Error, Result};

use crate::config::{BoundaryId, InitialCondition, SchemeConfig, SchemeId};

fn policy(cfg: &SchemeConfig) -> Option<BoundaryPolicy> {
    match cfg.boundary {
        BoundaryId::Periodic => None,
        BoundaryId::Reflective => Some(BoundaryPolicy::Reflective),
        BoundaryId::Extrapolated => Some(BoundaryPolicy::Extrapolated),
        BoundaryId::Dirichlet => Some(BoundaryPolicy::Dirichlet {
            left: cfg.dirichlet_left.clone(),
            right: cfg.dirichlet_right.clone(),
        }),
    }
}

pub fn discretization(cfg: &SchemeConfig) -> Result<GlobalDiscretization> {
    let k = cfg.elements;
    let periodic = cfg.boundary == BoundaryId::Periodic;
    match (cfg.dimension, cfg.scheme) {
        (1, SchemeId::Fv) => match policy(cfg) {
            None => fv_periodic(k),
            Some(p) => fv_nonperiodic(k, p),
        },
        (1, SchemeId::Dgsem) => {
            let e = lobatto_sbp(cfg.degree)?;
            match policy(cfg) {
                None => assemble_global_periodic(&e, k),
                p => assemble_global_nonperiodic(&e, k, p),
            }
        }
        (1, SchemeId::Modal) => {
            if !periodic {
                return Err(Error::Unsupported("modal schemes are periodic only".into()));
            }
            let e = modal_reference(cfg.degree, cfg.degree + 1, 2)?;
            assemble_global_modal(&e, k, true)
        }
        (2, SchemeId::Dgsem) => {
            if !periodic {
                return Err(Error::Unsupported("2D meshes are periodic only".into()));
            }
            tensor2d_affine(&lobatto_sbp(cfg.degree)?, &Mesh2D::uniform(k, k)?)
        }
        (d, s) => Err(Error::Unsupported(format!("{} scheme in {d}D", s.name()))),
    }
}

pub fn system<L: ConservationLaw<N>, const N: usize>(cfg: &SchemeConfig, law: L) -> Result<SemiDiscreteSystem<L, N>> {
    let sys = SemiDiscreteSystem::new(discretization(cfg)?, law)?;
    Ok(sys
        .with_dissipation(cfg.dissipation.then(LaxFriedrichs::default))
        .with_parallel(crate::threads() > 1))
}

/// Degree used by the time step estimate (zero for finite volumes).
pub fn degree(cfg: &SchemeConfig) -> usize {
    match cfg.scheme {
        SchemeId::Fv => 0,
        _ => cfg.degree,
    }
}

/// Law-specific initial data.
pub trait InitialData<const N: usize>: ConservationLaw<N> {
    /// Smooth admissible profile.
    fn smooth(&self, x: [f64; 2]) -> [f64; N];

    /// Density 1.1 on `[-½, ½]²` and 1 elsewhere, at rest with `E = ρ^γ`.
    fn density_box(&self, _x: [f64; 2]) -> Option<[f64; N]> {
        None
    }
}

impl InitialData<1> for Burgers {
    fn smooth(&self, x: [f64; 2]) -> [f64; 1] {
        [0.5 + 0.25 * (std::f64::consts::PI * (x[0] + x[1])).sin()]
    }
}

impl<const N: usize> InitialData<N> for ShallowWater<N> {
    fn smooth(&self, x: [f64; 2]) -> [f64; N] {
        let h = 2.0 + 0.2 * (std::f64::consts::PI * x[0]).sin();
        let mut s = [0.0; N];
        s[0] = h;
        s[1] = 0.1 * h;
        s
    }
}

impl<const N: usize> InitialData<N> for Euler<N> {
    fn smooth(&self, x: [f64; 2]) -> [f64; N] {
        let rho = 1.0 + 0.2 * (std::f64::consts::PI * (x[0] + x[1])).sin();
        let mut vel = vec![0.0; N - 2];
        vel[0] = 0.3;
        self.from_primitive(rho, &vel, 1.0)
    }

    fn density_box(&self, x: [f64; 2]) -> Option<[f64; N]> {
        let rho: f64 = if x[0].abs() <= 0.5 && x[1].abs() <= 0.5 { 1.1 } else { 1.0 };
        let mut s = [0.0; N];
        s[0] = rho;
        s[N - 1] = rho.powf(self.gamma);
        Some(s)
    }
}

/// Initial state; random values are drawn from U(0, 1) per degree of freedom
/// from the seed.
pub fn initial_state<L: InitialData<N>, const N: usize>(
    sys: &SemiDiscreteSystem<L, N>,
    ic: InitialCondition,
    seed: u64,
) -> Result<Vec<f64>> {
    let unsupported = || Error::Unsupported(format!("initial condition {} for {}", ic.name(), sys.law.name()));
    match ic {
        InitialCondition::Random if N == 1 => {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..sys.dofs()).map(|_| r.random::<f64>()).collect())
        }
        InitialCondition::MinusSine if N == 1 => Ok(sys.project(|x| {
            let mut s = [0.0; N];
            s[0] = -(std::f64::consts::PI * x[0]).sin();
            s
        })),
        InitialCondition::DensityBox => {
            if sys.law.density_box([0.0; 2]).is_none() {
                return Err(unsupported());
            }
            Ok(sys.project(|x| sys.law.density_box(x).unwrap()))
        }
        InitialCondition::Smooth => Ok(sys.project(|x| sys.law.smooth(x))),
        _ => Err(unsupported()),
    }
}
