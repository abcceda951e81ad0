//! Quadrature rules, Legendre bases and 1D reference SBP operators.

use crate::error::{Error, Result};
use crate::linalg::{lu_solve_dense, DenseMatrix};

pub const MAX_DEGREE: usize = 40;
pub const MAX_QUADRATURE_POINTS: usize = 2 * MAX_DEGREE + 2;

const NEWTON_TOLERANCE: f64 = 1e-15;
const NEWTON_MAX_ITERATIONS: usize = 100;

/// `(P_n(x), P_{n-1}(x))` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

pub fn legendre(n: usize, x: f64) -> f64 {
    legendre_pair(n, x).0
}

/// Values and derivatives of `P_0..=P_n` at `x`.
fn legendre_all(n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = x;
        dp[1] = 1.0;
    }
    for k in 1..n {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        dp[k + 1] = dp[k - 1] + (2.0 * kf + 1.0) * p[k];
    }
    (p, dp)
}

/// Orthonormal Legendre basis `φ_j = sqrt((2j+1)/2) P_j` and derivatives.
pub fn orthonormal_legendre(n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let (mut p, mut dp) = legendre_all(n, x);
    for j in 0..=n {
        let s = ((2 * j + 1) as f64 / 2.0).sqrt();
        p[j] *= s;
        dp[j] *= s;
    }
    (p, dp)
}

fn newton<F: Fn(f64) -> (f64, f64)>(mut x: f64, f: F) -> f64 {
    for _ in 0..NEWTON_MAX_ITERATIONS {
        let (g, dg) = f(x);
        let dx = g / dg;
        x -= dx;
        if dx.abs() <= NEWTON_TOLERANCE * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Gauss-Lobatto nodes and weights with `n + 1` points.
pub fn gauss_lobatto(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || n > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(n));
    }
    let nf = n as f64;
    let mut x = vec![0.0; n + 1];
    x[0] = -1.0;
    x[n] = 1.0;
    for i in 1..n {
        let guess = -(std::f64::consts::PI * i as f64 / nf).cos();
        // roots of P'_n, using P''_n from the Legendre ODE
        x[i] = newton(guess, |t| {
            let (p, q) = legendre_pair(n, t);
            let dp = nf * (t * p - q) / (t * t - 1.0);
            let d2p = (2.0 * t * dp - nf * (nf + 1.0) * p) / (1.0 - t * t);
            (dp, d2p)
        });
    }
    // exact symmetry about the origin
    for i in 0..n / 2 {
        let m = 0.5 * (x[n - i] - x[i]);
        x[i] = -m;
        x[n - i] = m;
    }
    if n % 2 == 0 {
        x[n / 2] = 0.0;
    }
    let w = x
        .iter()
        .map(|&t| {
            let p = legendre(n, t);
            2.0 / (nf * (nf + 1.0) * p * p)
        })
        .collect();
    Ok((x, w))
}

/// Gauss-Legendre nodes and weights with `npts` points.
pub fn gauss_legendre(npts: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if npts == 0 || npts > MAX_QUADRATURE_POINTS {
        return Err(Error::UnsupportedDegree(npts));
    }
    let nf = npts as f64;
    let mut x = vec![0.0; npts];
    let mut w = vec![0.0; npts];
    for i in 0..npts {
        let guess = -(std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let t = newton(guess, |t| {
            let (p, q) = legendre_pair(npts, t);
            (p, nf * (t * p - q) / (t * t - 1.0))
        });
        let (p, q) = legendre_pair(npts, t);
        let dp = nf * (t * p - q) / (t * t - 1.0);
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    for i in 0..npts / 2 {
        let m = 0.5 * (x[npts - 1 - i] - x[i]);
        let wm = 0.5 * (w[i] + w[npts - 1 - i]);
        x[i] = -m;
        x[npts - 1 - i] = m;
        w[i] = wm;
        w[npts - 1 - i] = wm;
    }
    if npts % 2 == 1 {
        x[npts / 2] = 0.0;
    }
    Ok((x, w))
}

/// Lagrange differentiation matrix at distinct nodes (barycentric form,
/// diagonal by the negative-sum rule so rows annihilate constants).
pub fn differentiation_matrix(x: &[f64]) -> DenseMatrix {
    let n = x.len();
    let lambda: Vec<f64> = (0..n)
        .map(|j| {
            1.0 / (0..n)
                .filter(|&k| k != j)
                .map(|k| x[j] - x[k])
                .product::<f64>()
        })
        .collect();
    let mut d = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = lambda[j] / lambda[i] / (x[i] - x[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Lagrange interpolation matrix from nodes `x` to points `y`.
pub fn interpolation_matrix(x: &[f64], y: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(y.len(), x.len(), |i, j| {
        (0..x.len())
            .filter(|&k| k != j)
            .map(|k| (y[i] - x[k]) / (x[j] - x[k]))
            .product()
    })
}

/// Operators specific to a non-collocated (modal) element.
#[derive(Debug, Clone)]
pub struct ModalData {
    /// Volume quadrature points and weights.
    pub quad_nodes: Vec<f64>,
    pub quad_weights: Vec<f64>,
    /// `V_ij = φ_j(x_i)` at volume points.
    pub v: DenseMatrix,
    /// Basis at the face points `-1, 1`.
    pub vf: DenseMatrix,
    /// `[V; V_f]`.
    pub vh: DenseMatrix,
    /// `M = VᵀWV` on coefficients.
    pub mass: DenseMatrix,
    /// `P = M⁻¹VᵀW`.
    pub projection: DenseMatrix,
    /// `E = V_f P`.
    pub extrapolation: DenseMatrix,
    /// Nodal operator `PᵀQ̂P` on volume points.
    pub q_nodal: DenseMatrix,
    /// Hybridized operator on volume and face points.
    pub q_hybrid: DenseMatrix,
}

impl ModalData {
    pub fn quad_points(&self) -> usize {
        self.quad_nodes.len()
    }

    pub fn hybrid_points(&self) -> usize {
        self.quad_nodes.len() + 2
    }
}

/// 1D reference element on `[-1, 1]`.
///
/// For collocated elements the nodes carry the solution; `mass` is diagonal
/// and `q` satisfies `Q + Qᵀ = B`. Modal elements store coefficients and the
/// SBP structure lives in [`ModalData::q_hybrid`].
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub degree: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub mass: DenseMatrix,
    pub q: DenseMatrix,
    pub b: DenseMatrix,
    pub modal: Option<ModalData>,
}

impl ReferenceElement {
    pub fn nodes_per_element(&self) -> usize {
        self.degree + 1
    }

    pub fn is_modal(&self) -> bool {
        self.modal.is_some()
    }

    /// Points carrying flux evaluations per element.
    pub fn flux_points(&self) -> usize {
        self.modal
            .as_ref()
            .map_or(self.degree + 1, ModalData::hybrid_points)
    }
}

fn boundary_matrix(n: usize) -> DenseMatrix {
    let mut b = DenseMatrix::zeros(n, n);
    b[(0, 0)] = -1.0;
    b[(n - 1, n - 1)] = 1.0;
    b
}

/// Lobatto DG-SEM element: `M = diag(w)`, `Q = M D`.
pub fn lobatto_sbp(degree: usize) -> Result<ReferenceElement> {
    let (nodes, weights) = gauss_lobatto(degree)?;
    let d = differentiation_matrix(&nodes);
    let mass = DenseMatrix::diagonal(&weights);
    let q = mass.matmul(&d)?;
    Ok(ReferenceElement {
        degree,
        b: boundary_matrix(degree + 1),
        nodes,
        weights,
        mass,
        q,
        modal: None,
    })
}

/// Modal element with orthonormal Legendre basis of degree `degree`,
/// `volume_points` Gauss points and the two endpoints as face points.
pub fn modal_reference(degree: usize, volume_points: usize, face_points: usize) -> Result<ReferenceElement> {
    if volume_points < degree + 1 {
        return Err(Error::InsufficientQuadrature {
            points: volume_points,
            degree: 2 * degree,
        });
    }
    if face_points != 2 {
        return Err(Error::Unsupported(format!("{face_points} face points in 1D")));
    }
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(degree));
    }
    let np = degree + 1;
    let (xq, wq) = gauss_legendre(volume_points)?;
    let nq = xq.len();
    let mut v = DenseMatrix::zeros(nq, np);
    let mut dv = DenseMatrix::zeros(nq, np);
    for (i, &x) in xq.iter().enumerate() {
        let (p, dp) = orthonormal_legendre(degree, x);
        for j in 0..np {
            v[(i, j)] = p[j];
            dv[(i, j)] = dp[j];
        }
    }
    let mut vf = DenseMatrix::zeros(2, np);
    for (i, x) in [-1.0, 1.0].into_iter().enumerate() {
        let (p, _) = orthonormal_legendre(degree, x);
        for j in 0..np {
            vf[(i, j)] = p[j];
        }
    }
    let w = DenseMatrix::diagonal(&wq);
    let vtw = v.transpose().matmul(&w)?;
    let mass = vtw.matmul(&v)?;
    let mut projection = DenseMatrix::zeros(np, nq);
    for c in 0..nq {
        let col: Vec<f64> = (0..np).map(|r| vtw[(r, c)]).collect();
        let sol = lu_solve_dense(&mass, &col)?;
        for r in 0..np {
            projection[(r, c)] = sol[r];
        }
    }
    let extrapolation = vf.matmul(&projection)?;
    // Q̂_ij = Σ_q w_q φ_i(x_q) φ_j'(x_q)
    let q_modal = vtw.matmul(&dv)?;
    let q_nodal = projection.transpose().matmul(&q_modal)?.matmul(&projection)?;
    let b = boundary_matrix(2);
    let nh = nq + 2;
    let mut q_hybrid = DenseMatrix::zeros(nh, nh);
    let et_b = extrapolation.transpose().matmul(&b)?;
    let b_e = b.matmul(&extrapolation)?;
    for i in 0..nq {
        for j in 0..nq {
            q_hybrid[(i, j)] = 0.5 * (q_nodal[(i, j)] - q_nodal[(j, i)]);
        }
        for f in 0..2 {
            q_hybrid[(i, nq + f)] = 0.5 * et_b[(i, f)];
            q_hybrid[(nq + f, i)] = -0.5 * b_e[(f, i)];
        }
    }
    q_hybrid[(nq, nq)] = -0.5;
    q_hybrid[(nq + 1, nq + 1)] = 0.5;
    let vh = DenseMatrix::from_fn(nh, np, |i, j| if i < nq { v[(i, j)] } else { vf[(i - nq, j)] });
    Ok(ReferenceElement {
        degree,
        nodes: xq.clone(),
        weights: wq.clone(),
        mass: mass.clone(),
        q: q_nodal.clone(),
        b,
        modal: Some(ModalData {
            quad_nodes: xq,
            quad_weights: wq,
            v,
            vf,
            vh,
            mass,
            projection,
            extrapolation,
            q_nodal,
            q_hybrid,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lobatto_linear_element() {
        let e = lobatto_sbp(1).unwrap();
        assert_eq!(e.nodes, vec![-1.0, 1.0]);
        assert_eq!(e.weights, vec![1.0, 1.0]);
        let expect = [[-0.5, 0.5], [-0.5, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((e.q[(i, j)] - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn quadrature_weights_sum_to_two() {
        for n in 1..=MAX_DEGREE {
            let (_, w) = gauss_lobatto(n).unwrap();
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "lobatto {n}");
        }
        for n in 1..=MAX_QUADRATURE_POINTS {
            let (x, w) = gauss_legendre(n).unwrap();
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "gauss {n}");
            if n < 2 {
                continue;
            }
            let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
            assert!((m2 - 2.0 / 3.0).abs() < 1e-13, "gauss {n}");
        }
        assert!(gauss_legendre(MAX_QUADRATURE_POINTS + 1).is_err());
        assert!(gauss_lobatto(0).is_err());
        assert!(gauss_lobatto(41).is_err());
    }

    #[test]
    fn insufficient_quadrature_is_rejected() {
        assert!(matches!(
            modal_reference(3, 3, 2),
            Err(Error::InsufficientQuadrature { .. })
        ));
    }
}
