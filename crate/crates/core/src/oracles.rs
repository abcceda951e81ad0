//! Independent Jacobians of a whole residual: forward-mode AD with batched
//! seeds, and central finite differences.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};

use crate::autodiff::Dual;
use crate::error::Result;
use crate::fluxes::{Burgers, ConservationLaw, Euler3D, LaxFriedrichs, ShallowWater2D};
use crate::linalg::{BlockJacobian, DenseMatrix, SparseOperator, Symmetry};
use crate::operators::{Coupling, GlobalDiscretization};
use crate::residual::{SemiDiscreteSystem, Terms, Variant};

/// Number of tangent directions propagated per AD pass.
pub const AD_BATCH: usize = 8;

/// Jacobian of `f` at `u`; column `j` is the tangent of the output under a
/// unit seed on `u_j`.
pub fn ad_jacobian<F>(f: F, u: &[f64]) -> Result<DenseMatrix>
where
    F: Fn(&[Dual<AD_BATCH>]) -> Result<Vec<Dual<AD_BATCH>>>,
{
    let n = u.len();
    let mut out: Option<DenseMatrix> = None;
    for start in (0..n.max(1)).step_by(AD_BATCH) {
        let x: Vec<Dual<AD_BATCH>> = u
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                if j >= start && j < start + AD_BATCH {
                    Dual::variable(v, j - start)
                } else {
                    Dual::constant(v)
                }
            })
            .collect();
        let y = f(&x)?;
        let m = out.get_or_insert_with(|| DenseMatrix::zeros(y.len(), n));
        for (i, yi) in y.iter().enumerate() {
            for k in 0..AD_BATCH.min(n.saturating_sub(start)) {
                m[(i, start + k)] = yi.tangents[k];
            }
        }
    }
    Ok(out.unwrap_or_else(|| DenseMatrix::zeros(0, 0)))
}

/// Step used for the central difference in component `x`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Central-difference Jacobian of `f` at `u`.
pub fn fd_jacobian<F>(f: F, u: &[f64]) -> Result<DenseMatrix>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = u.len();
    let mut out: Option<DenseMatrix> = None;
    let mut x = u.to_vec();
    for j in 0..n {
        let h = fd_step(u[j]);
        x[j] = u[j] + h;
        let fp = f(&x)?;
        x[j] = u[j] - h;
        let fm = f(&x)?;
        x[j] = u[j];
        let m = out.get_or_insert_with(|| DenseMatrix::zeros(fp.len(), n));
        for i in 0..fp.len() {
            m[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(out.unwrap_or_else(|| DenseMatrix::zeros(0, 0)))
}

/// `(‖a - b‖_F, ‖a - b‖_F / ‖b‖_F)`.
pub fn frobenius_difference(a: &DenseMatrix, b: &DenseMatrix) -> (f64, f64) {
    let diff = a.sub(b).expect("same shape").frobenius_norm();
    let scale = b.frobenius_norm();
    (diff, if scale > 0.0 { diff / scale } else { diff })
}

/// AD oracle of the full residual of a system at time `t`.
pub fn system_ad_jacobian<L: ConservationLaw<N>, const N: usize>(
    sys: &SemiDiscreteSystem<L, N>,
    u: &[f64],
    t: f64,
) -> Result<DenseMatrix> {
    ad_jacobian(|x| sys.residual_generic(x, t), u)
}

/// FD oracle of the full residual of a system at time `t`.
pub fn system_fd_jacobian<L: ConservationLaw<N>, const N: usize>(
    sys: &SemiDiscreteSystem<L, N>,
    u: &[f64],
    t: f64,
) -> Result<DenseMatrix> {
    fd_jacobian(|x| sys.residual(x, t), u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    Ad,
    Fd,
}

impl OracleMethod {
    pub fn name(self) -> &'static str {
        match self {
            OracleMethod::Ad => "ad",
            OracleMethod::Fd => "fd",
        }
    }
}

/// One comparison of an analytic Jacobian against an oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub case: String,
    pub method: OracleMethod,
    pub abs_diff: f64,
    pub rel_diff: f64,
    /// Published absolute difference for this case, when there is one.
    pub reference: Option<f64>,
    pub analytic_seconds: f64,
    pub oracle_seconds: f64,
    pub residual_seconds: f64,
}

impl OracleReport {
    pub const CSV_HEADER: &'static str =
        "case,method,abs_diff,rel_diff,reference,analytic_seconds,oracle_seconds,residual_seconds";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.8e},{:.8e},{},{:.6e},{:.6e},{:.6e}",
            self.case,
            self.method.name(),
            self.abs_diff,
            self.rel_diff,
            self.reference.map(|r| format!("{r:.8e}")).unwrap_or_default(),
            self.analytic_seconds,
            self.oracle_seconds,
            self.residual_seconds
        )
    }
}

pub fn reports_csv(reports: &[OracleReport]) -> String {
    let mut s = String::from(OracleReport::CSV_HEADER);
    s.push('\n');
    for r in reports {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

pub fn reports_table(reports: &[OracleReport]) -> String {
    let mut s = format!("{:<14} {:>6} {:>14} {:>14} {:>14}\n", "case", "oracle", "abs diff", "rel diff", "reference");
    for r in reports {
        let reference = r.reference.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:<14} {:>6} {:>14.6e} {:>14.6e} {:>14}",
            r.case,
            r.method.name(),
            r.abs_diff,
            r.rel_diff,
            reference
        );
    }
    s
}

fn seconds(t: Instant) -> f64 {
    t.elapsed().as_secs_f64().max(1e-9)
}

/// Compares the analytic Jacobian of a system against an oracle.
pub fn compare_system<L: ConservationLaw<N>, const N: usize>(
    case: &str,
    sys: &SemiDiscreteSystem<L, N>,
    u: &[f64],
    method: OracleMethod,
) -> Result<OracleReport> {
    let t0 = Instant::now();
    let analytic = sys.jacobian(u)?.flatten().to_dense();
    let analytic_seconds = seconds(t0);
    let t0 = Instant::now();
    let oracle = match method {
        OracleMethod::Ad => system_ad_jacobian(sys, u, 0.0)?,
        OracleMethod::Fd => system_fd_jacobian(sys, u, 0.0)?,
    };
    let oracle_seconds = seconds(t0);
    let t0 = Instant::now();
    sys.residual(u, 0.0)?;
    let residual_seconds = seconds(t0);
    let (abs_diff, rel_diff) = frobenius_difference(&analytic, &oracle);
    Ok(OracleReport {
        case: case.to_string(),
        method,
        abs_diff,
        rel_diff,
        reference: None,
        analytic_seconds,
        oracle_seconds,
        residual_seconds,
    })
}

/// Published Frobenius differences: Burgers, SWE, Euler, then the three
/// Lax-Friedrichs cases.
pub const TABLE1_REFERENCE: [f64; 6] = [
    1.56616230e-15,
    9.17858305e-13,
    2.62285783e-14,
    2.03313333e-14,
    3.05403043e-12,
    5.04444613e-14,
];

/// Size of the random operators in [`verify_table1`].
pub const TABLE1_SIZE: usize = 25;

fn random_normal_matrix(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal))
}

fn random_unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = crate::linalg::norm2(&v);
        if norm > 1e-3 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

fn table1_case<L: ConservationLaw<N>, const N: usize>(
    case: &str,
    law: L,
    states: Vec<[f64; N]>,
    rng: &mut ChaCha8Rng,
    reference: (f64, f64),
) -> Result<[OracleReport; 2]> {
    let n = states.len();
    let a = random_normal_matrix(rng, n);
    let skew = a.sub(&a.transpose())?;
    let b = random_normal_matrix(rng, n);
    let sym = b.add(&b.transpose())?;
    let normal = random_unit_vector(rng, law.dim().max(1));
    // the residual carries a factor 2 on the volume term; halve Q to get (Q∘F)𝟙
    let q = SparseOperator::from_dense(&skew.scaled(0.5), Symmetry::Skew)?;
    let coupling = Coupling {
        b: SparseOperator::from_dense(&sym, Symmetry::Symmetric)?,
        normal,
    };
    let disc = GlobalDiscretization::from_operators(vec![q], vec![coupling])?;
    let sys = SemiDiscreteSystem::new(disc, law)?.with_dissipation(Some(LaxFriedrichs::default()));
    let u = crate::residual::field_major(&states);
    let mut out = Vec::new();
    for (terms, label, reference) in [
        (Terms::VOLUME, case.to_string(), reference.0),
        (Terms::DISSIPATION, format!("LF ({case})"), reference.1),
    ] {
        let t0 = Instant::now();
        let ut = sys.flux_node_states(&u)?;
        let analytic = sys.flux_node_jacobian(&ut, terms, Variant::ColumnSum)?.flatten().to_dense();
        let analytic_seconds = seconds(t0);
        let t0 = Instant::now();
        let oracle = ad_jacobian(|x| sys.residual_terms(x, 0.0, terms), &u)?;
        let oracle_seconds = seconds(t0);
        let t0 = Instant::now();
        sys.residual_terms(&u, 0.0, terms)?;
        let residual_seconds = seconds(t0);
        let (abs_diff, rel_diff) = frobenius_difference(&analytic, &oracle);
        out.push(OracleReport {
            case: label,
            method: OracleMethod::Ad,
            abs_diff,
            rel_diff,
            reference: Some(reference),
            analytic_seconds,
            oracle_seconds,
            residual_seconds,
        });
    }
    let lf = out.pop().expect("two rows");
    let ec = out.pop().expect("two rows");
    Ok([ec, lf])
}

/// Random dense 25 × 25 operators and random admissible states: analytic
/// versus AD Jacobians for Burgers, 2D shallow water and 3D Euler, with and
/// without Lax-Friedrichs dissipation. Rows are returned in the published
/// column order.
pub fn verify_table1(seed: u64) -> Result<Vec<OracleReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = TABLE1_SIZE;
    let unit = Uniform::new(0.0, 1.0).expect("valid range");
    let positive = |rng: &mut ChaCha8Rng| loop {
        let v: f64 = rng.sample(unit);
        if v > 0.0 {
            return v;
        }
    };

    let burgers: Vec<[f64; 1]> = (0..n).map(|_| [rng.sample(StandardNormal)]).collect();
    let [b_ec, b_lf] = table1_case("Burgers", Burgers, burgers, &mut rng, (TABLE1_REFERENCE[0], TABLE1_REFERENCE[3]))?;

    let swe: Vec<[f64; 3]> = (0..n)
        .map(|_| [positive(&mut rng), rng.sample(StandardNormal), rng.sample(StandardNormal)])
        .collect();
    let [s_ec, s_lf] = table1_case(
        "SWE",
        ShallowWater2D::default(),
        swe,
        &mut rng,
        (TABLE1_REFERENCE[1], TABLE1_REFERENCE[4]),
    )?;

    let law = Euler3D::default();
    let euler: Vec<[f64; 5]> = (0..n)
        .map(|_| {
            let rho = positive(&mut rng);
            let vel: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let p = positive(&mut rng);
            law.from_primitive(rho, &vel, p)
        })
        .collect();
    let [e_ec, e_lf] = table1_case("Euler", law, euler, &mut rng, (TABLE1_REFERENCE[2], TABLE1_REFERENCE[5]))?;

    Ok(vec![b_ec, s_ec, e_ec, b_lf, s_lf, e_lf])
}

/// Flattened dense form of a block Jacobian.
pub fn dense(j: &BlockJacobian) -> DenseMatrix {
    j.flatten().to_dense()
}

/// AD oracle for a generic scalar map, exposed for tests of small maps.
pub fn ad_jacobian_fn<F>(f: F, u: &[f64]) -> DenseMatrix
where
    F: Fn(&[Dual<AD_BATCH>]) -> Vec<Dual<AD_BATCH>>,
{
    ad_jacobian(|x| Ok(f(x)), u).expect("infallible map")
}
