//! Analytic Jacobians against the AD oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fluxjac::fluxes::{Burgers, ConservationLaw, Euler2D, LaxFriedrichs};
use fluxjac::operators::{
    assemble_global_modal, assemble_global_nonperiodic, assemble_global_periodic, fv_periodic, lobatto_sbp,
    modal_reference, tensor2d_affine, BoundaryPolicy, GlobalDiscretization, Mesh2D,
};
use fluxjac::oracles::{compare_system, verify_table1, OracleMethod, OracleReport};
use fluxjac::residual::{field_major, SemiDiscreteSystem};
use fluxjac::Result;

/// The schemes of the equivalence sweep: name, Burgers discretization and
/// Euler discretization (they differ only in the Dirichlet data).
pub fn sweep_schemes() -> Result<Vec<(&'static str, GlobalDiscretization, GlobalDiscretization)>> {
    let lobatto = lobatto_sbp(2)?;
    let modal = modal_reference(2, 3, 2)?;
    let euler = Euler2D::default();
    let burgers_dirichlet = BoundaryPolicy::Dirichlet {
        left: vec![0.5],
        right: vec![-0.3],
    };
    let euler_dirichlet = BoundaryPolicy::Dirichlet {
        left: euler.from_primitive(1.0, &[0.1, 0.0], 1.0).to_vec(),
        right: euler.from_primitive(0.9, &[0.0, 0.1], 1.1).to_vec(),
    };
    let mesh = Mesh2D::uniform(2, 2)?;
    Ok(vec![
        ("fv-periodic", fv_periodic(6)?, fv_periodic(6)?),
        (
            "dgsem-periodic",
            assemble_global_periodic(&lobatto, 3)?,
            assemble_global_periodic(&lobatto, 3)?,
        ),
        (
            "dgsem-dirichlet",
            assemble_global_nonperiodic(&lobatto, 3, Some(burgers_dirichlet))?,
            assemble_global_nonperiodic(&lobatto, 3, Some(euler_dirichlet))?,
        ),
        (
            "modal-gauss",
            assemble_global_modal(&modal, 3, true)?,
            assemble_global_modal(&modal, 3, true)?,
        ),
        ("dgsem-2d", tensor2d_affine(&lobatto, &mesh)?, tensor2d_affine(&lobatto, &mesh)?),
    ])
}

fn euler_state(law: &Euler2D, r: &mut ChaCha8Rng) -> [f64; 4] {
    let rho = r.random_range(0.6..1.4);
    let vel = [r.random_range(-0.5..0.5), r.random_range(-0.5..0.5)];
    let p = r.random_range(0.6..1.4);
    law.from_primitive(rho, &vel, p)
}

fn burgers_u(sys: &SemiDiscreteSystem<Burgers, 1>, r: &mut ChaCha8Rng) -> Vec<f64> {
    if sys.disc.modal.is_some() {
        // random coefficients of modest size keep the projected states smooth
        (0..sys.dofs()).map(|_| r.random_range(-0.5..0.5)).collect()
    } else {
        (0..sys.dofs()).map(|_| r.random_range(-1.0..1.0)).collect()
    }
}

fn euler_u(sys: &SemiDiscreteSystem<Euler2D, 4>, r: &mut ChaCha8Rng) -> Vec<f64> {
    let law = sys.law;
    if sys.disc.modal.is_some() {
        let (a, b, c) = (r.random_range(0.1..0.3), r.random_range(-0.3..0.3), r.random_range(0.0..1.0));
        sys.project(|x| {
            let rho = 1.0 + a * (std::f64::consts::PI * (x[0] + c)).sin();
            law.from_primitive(rho, &[b, 0.1 * b], 1.0 + 0.5 * a * x[0])
        })
    } else {
        let states: Vec<[f64; 4]> = (0..sys.disc.solution_nodes()).map(|_| euler_state(&law, r)).collect();
        field_major(&states)
    }
}

fn case<L: ConservationLaw<N>, const N: usize>(
    name: String,
    sys: &SemiDiscreteSystem<L, N>,
    u: &[f64],
) -> Result<OracleReport> {
    compare_system(&name, sys, u, OracleMethod::Ad)
}

/// Scheme × law × flux sweep against the AD oracle.
pub fn sweep(seed: u64) -> Result<Vec<OracleReport>> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (name, d_burgers, d_euler) in sweep_schemes()? {
        for lf in [None, Some(LaxFriedrichs::default())] {
            let tag = if lf.is_some() { "ec+lf" } else { "ec" };
            let sys = SemiDiscreteSystem::new(d_burgers.clone(), Burgers)?.with_dissipation(lf);
            let u = burgers_u(&sys, &mut r);
            out.push(case(format!("{name}/burgers/{tag}"), &sys, &u)?);
            let sys = SemiDiscreteSystem::new(d_euler.clone(), Euler2D::default())?.with_dissipation(lf);
            let u = euler_u(&sys, &mut r);
            out.push(case(format!("{name}/euler2d/{tag}"), &sys, &u)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub reports: Vec<OracleReport>,
    pub tolerance: f64,
}

impl VerifyOutcome {
    pub fn failures(&self) -> Vec<&OracleReport> {
        self.reports
            .iter()
            .filter(|r| !(r.rel_diff <= self.tolerance))
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }
}

pub fn run(seed: u64, table1: bool, sweep_cases: bool, tolerance: f64) -> Result<VerifyOutcome> {
    let mut reports = Vec::new();
    if table1 {
        reports.extend(verify_table1(seed)?);
    }
    if sweep_cases {
        reports.extend(sweep(seed)?);
    }
    Ok(VerifyOutcome { reports, tolerance })
}
