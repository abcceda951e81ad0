//! Timing of the scalar Burgers Jacobian on dense skew operators.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use fluxjac::autodiff::derivative_wrt_right;
use fluxjac::fluxes::burgers_flux_ec;
use fluxjac::linalg::{DenseMatrix, Symmetry, TaggedDense};
use fluxjac::oracles::{ad_jacobian, fd_jacobian};
use fluxjac::residual::{scalar_jacobian, scalar_residual};
use fluxjac::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    /// Median seconds per call.
    pub residual: f64,
    pub analytic: f64,
    pub analytic_ad_flux: f64,
    pub ad: f64,
    pub fd: f64,
}

impl BenchRow {
    pub const CSV_HEADER: &'static str =
        "n,residual_s,analytic_s,analytic_ad_flux_s,ad_s,fd_s,analytic_over_residual,ad_over_analytic";

    pub fn analytic_over_residual(&self) -> f64 {
        self.analytic / self.residual
    }

    pub fn ad_over_analytic(&self) -> f64 {
        self.ad / self.analytic
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.4},{:.4}",
            self.n,
            self.residual,
            self.analytic,
            self.analytic_ad_flux,
            self.ad,
            self.fd,
            self.analytic_over_residual(),
            self.ad_over_analytic()
        )
    }
}

pub fn rows_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(BenchRow::CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

/// Random skew operator `A - Aᵀ` with standard normal `A`.
pub fn random_skew(n: usize, rng: &mut ChaCha8Rng) -> Result<TaggedDense> {
    let a: Vec<f64> = (0..n * n).map(|_| StandardNormal.sample(rng)).collect();
    let m = DenseMatrix::from_fn(n, n, |i, j| a[i * n + j] - a[j * n + i]);
    TaggedDense::new(m, Symmetry::Skew)
}

/// Median over `samples` of the mean time of `inner` calls.
pub fn median_seconds<T>(samples: usize, inner: usize, mut f: impl FnMut() -> T) -> f64 {
    let inner = inner.max(1);
    let mut times: Vec<f64> = (0..samples.max(1))
        .map(|_| {
            let t0 = Instant::now();
            for _ in 0..inner {
                black_box(f());
            }
            t0.elapsed().as_secs_f64() / inner as f64
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[times.len() / 2]
}

fn dfdy(ul: f64, ur: f64) -> f64 {
    (ul + 2.0 * ur) / 6.0
}

pub fn bench_size(n: usize, samples: usize, inner: usize, seed: u64) -> Result<BenchRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
    let op = random_skew(n, &mut rng)?;
    let u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let residual = median_seconds(samples, inner, || scalar_residual(&op, black_box(&u), burgers_flux_ec));
    let analytic = median_seconds(samples, inner, || scalar_jacobian(&op, black_box(&u), dfdy));
    let analytic_ad_flux = median_seconds(samples, inner, || {
        scalar_jacobian(&op, black_box(&u), |l, r| derivative_wrt_right(burgers_flux_ec, l, r))
    });
    // the oracles are orders of magnitude slower; fewer repetitions suffice
    let slow = (inner / 20).max(1);
    let ad = median_seconds(samples, slow, || {
        ad_jacobian(|x| Ok(scalar_residual(&op, x, burgers_flux_ec)), black_box(&u))
    });
    let fd = median_seconds(samples, slow, || {
        fd_jacobian(|x| Ok(scalar_residual(&op, x, burgers_flux_ec)), black_box(&u))
    });
    Ok(BenchRow {
        n,
        residual,
        analytic,
        analytic_ad_flux,
        ad,
        fd,
    })
}

pub fn run(sizes: &[usize], samples: usize, inner: usize, seed: u64) -> Result<Vec<BenchRow>> {
    sizes.iter().map(|&n| bench_size(n, samples, inner, seed)).collect()
}
