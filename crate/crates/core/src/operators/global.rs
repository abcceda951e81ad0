//! Mesh-wide operators assembled from reference elements.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{SparseOperator, Symmetry};
use crate::operators::reference::ReferenceElement;

/// Domain `[-1, 1]` split into `k` uniform elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    pub k: usize,
    pub periodic: bool,
}

impl Mesh1D {
    pub fn new(k: usize, periodic: bool) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidMesh("no elements".into()));
        }
        Ok(Self { k, periodic })
    }

    pub fn h(&self) -> f64 {
        2.0 / self.k as f64
    }

    pub fn jacobian(&self) -> f64 {
        self.h() / 2.0
    }

    /// Left endpoint of element `e`.
    pub fn left(&self, e: usize) -> f64 {
        -1.0 + e as f64 * self.h()
    }

    /// `(left, right)` neighbours of element `e`; `None` across a
    /// non-periodic boundary.
    pub fn neighbors(&self, e: usize) -> (Option<usize>, Option<usize>) {
        let k = self.k;
        let left = if e > 0 {
            Some(e - 1)
        } else {
            self.periodic.then_some(k - 1)
        };
        let right = if e + 1 < k {
            Some(e + 1)
        } else {
            self.periodic.then_some(0)
        };
        (left, right)
    }
}

/// Uniform periodic quadrilateral mesh of `[-1, 1]²`, elements numbered
/// row-major (`e = ex + kx * ey`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh2D {
    pub kx: usize,
    pub ky: usize,
    pub hx: f64,
    pub hy: f64,
}

impl Mesh2D {
    pub fn uniform(kx: usize, ky: usize) -> Result<Self> {
        if kx == 0 || ky == 0 {
            return Err(Error::InvalidMesh("no elements".into()));
        }
        Ok(Self {
            kx,
            ky,
            hx: 2.0 / kx as f64,
            hy: 2.0 / ky as f64,
        })
    }

    /// Builds a mesh from explicit element widths, which must be uniform.
    pub fn from_widths(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let uniform = |w: &[f64]| !w.is_empty() && w.iter().all(|&v| (v - w[0]).abs() <= 1e-14 * w[0].abs());
        if !uniform(xs) || !uniform(ys) {
            return Err(Error::InvalidMesh("only uniform affine quadrilateral meshes are supported".into()));
        }
        Ok(Self {
            kx: xs.len(),
            ky: ys.len(),
            hx: xs[0],
            hy: ys[0],
        })
    }

    pub fn elements(&self) -> usize {
        self.kx * self.ky
    }

    pub fn element(&self, ex: usize, ey: usize) -> usize {
        (ex % self.kx) + self.kx * (ey % self.ky)
    }

    pub fn jacobian(&self) -> f64 {
        self.hx * self.hy / 4.0
    }
}

/// Exterior states at the two ends of a non-periodic 1D domain.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryPolicy {
    /// Fixed exterior states (per field) at the left and right ends.
    Dirichlet { left: Vec<f64>, right: Vec<f64> },
    /// Interior state with reversed normal velocity.
    Reflective,
    /// Exterior equal to the interior trace.
    Extrapolated,
}

impl BoundaryPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryPolicy::Dirichlet { .. } => "dirichlet",
            BoundaryPolicy::Reflective => "reflective",
            BoundaryPolicy::Extrapolated => "extrapolated",
        }
    }
}

impl FromStr for BoundaryPolicy {
    type Err = Error;
    /// Parses `reflective`, `extrapolated` or `dirichlet` (exterior values
    /// are supplied separately and default to empty).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reflective" => Ok(BoundaryPolicy::Reflective),
            "extrapolated" => Ok(BoundaryPolicy::Extrapolated),
            "dirichlet" => Ok(BoundaryPolicy::Dirichlet {
                left: Vec::new(),
                right: Vec::new(),
            }),
            _ => Err(Error::Unsupported(format!("boundary policy {s:?}"))),
        }
    }
}

/// Boundary data for a non-periodic 1D discretization: `B_Ω` has `-1` at
/// `left_node` and `+1` at `right_node`.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    pub left_node: usize,
    pub right_node: usize,
    pub b_omega: SparseOperator,
    pub policy: BoundaryPolicy,
}

/// Symmetric interface coupling for dissipation, with the unit normal
/// pointing from the row node's element to the column node's element for
/// entries above the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub b: SparseOperator,
    pub normal: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    FiniteVolume,
    Dgsem,
    ModalGauss,
    Dgsem2D,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::FiniteVolume => "fv",
            SchemeKind::Dgsem => "dgsem",
            SchemeKind::ModalGauss => "modal-gauss",
            SchemeKind::Dgsem2D => "dgsem-2d",
        }
    }
}

impl FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            SchemeKind::FiniteVolume,
            SchemeKind::Dgsem,
            SchemeKind::ModalGauss,
            SchemeKind::Dgsem2D,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::Unsupported(format!("scheme {s:?}")))
    }
}

/// Global maps of a modal discretization (block-diagonal over elements).
#[derive(Debug, Clone, PartialEq)]
pub struct ModalGlobal {
    /// Coefficients to volume points.
    pub v: SparseOperator,
    /// Coefficients to volume and face points.
    pub vh: SparseOperator,
    /// Volume points to coefficients.
    pub p: SparseOperator,
    /// `V_h P`: volume points to volume and face points.
    pub vhp: SparseOperator,
    /// Volume quadrature weights including the element Jacobian.
    pub quad_weights: Vec<f64>,
    /// Physical coordinates of the volume points.
    pub quad_coords: Vec<[f64; 2]>,
}

/// Assembled discretization on a mesh.
///
/// Flux differencing acts on "flux nodes": the solution nodes for collocated
/// schemes and the volume plus face quadrature points for modal schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalDiscretization {
    pub kind: SchemeKind,
    pub dim: usize,
    pub degree: usize,
    /// Skew global operators, one per coordinate direction.
    pub q: Vec<SparseOperator>,
    /// Dissipation couplings between neighbouring flux nodes.
    pub couplings: Vec<Coupling>,
    /// Diagonal mass of the solution degrees of freedom.
    pub mass: Vec<f64>,
    /// Coordinates of solution nodes (collocated) or flux nodes (modal).
    pub coords: Vec<[f64; 2]>,
    pub boundary: Option<Boundary>,
    pub modal: Option<ModalGlobal>,
    pub h_min: f64,
}

impl GlobalDiscretization {
    /// Wraps bare operators acting on `n` unit-mass nodes, without geometry
    /// or boundary treatment.
    pub fn from_operators(q: Vec<SparseOperator>, couplings: Vec<Coupling>) -> Result<Self> {
        let n = q.first().ok_or_else(|| Error::DimensionMismatch("no operators".into()))?.rows();
        if q.iter().chain(couplings.iter().map(|c| &c.b)).any(|op| op.rows() != n || op.cols() != n) {
            return Err(Error::DimensionMismatch("operators differ in size".into()));
        }
        Ok(Self {
            kind: SchemeKind::Dgsem,
            dim: q.len(),
            degree: 0,
            q,
            couplings,
            mass: vec![1.0; n],
            coords: vec![[0.0; 2]; n],
            boundary: None,
            modal: None,
            h_min: 1.0,
        })
    }

    pub fn solution_nodes(&self) -> usize {
        self.mass.len()
    }

    pub fn flux_nodes(&self) -> usize {
        self.q[0].rows()
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary.is_none()
    }

    /// Weights for integrating a function given at the "entropy nodes"
    /// (solution nodes when collocated, volume points when modal).
    pub fn integration_weights(&self) -> &[f64] {
        match &self.modal {
            Some(m) => &m.quad_weights,
            None => &self.mass,
        }
    }

    /// Coordinates matching [`Self::integration_weights`].
    pub fn integration_coords(&self) -> &[[f64; 2]] {
        match &self.modal {
            Some(m) => &m.quad_coords,
            None => &self.coords,
        }
    }
}

fn skew(n: usize, trip: Vec<(usize, usize, f64)>) -> Result<SparseOperator> {
    SparseOperator::from_triplets(n, n, trip, Symmetry::Skew)
}

fn symmetric(n: usize, trip: Vec<(usize, usize, f64)>) -> Result<SparseOperator> {
    SparseOperator::from_triplets(n, n, trip, Symmetry::Symmetric)
}

/// Pushes a coupling pair `(i, j) = +v`, `(j, i) = -v` into a skew operator and
/// its symmetric `|v|` twin into a dissipation operator.
fn couple(q: &mut Vec<(usize, usize, f64)>, b: &mut Vec<(usize, usize, f64)>, i: usize, j: usize, v: f64) {
    q.push((i, j, v));
    q.push((j, i, -v));
    b.push((i, j, v.abs()));
    b.push((j, i, v.abs()));
}

/// Periodic second-order finite volume scheme on `k` cells of `[-1, 1]`.
pub fn fv_periodic(k: usize) -> Result<GlobalDiscretization> {
    fv(k, None)
}

/// Finite volume scheme with boundary treatment at the two ends.
pub fn fv_nonperiodic(k: usize, policy: BoundaryPolicy) -> Result<GlobalDiscretization> {
    fv(k, Some(policy))
}

fn fv(k: usize, policy: Option<BoundaryPolicy>) -> Result<GlobalDiscretization> {
    if k < 3 {
        return Err(Error::InvalidMesh(format!("finite volume needs at least 3 cells, got {k}")));
    }
    let h = 2.0 / k as f64;
    let periodic = policy.is_none();
    let (mut qt, mut bt) = (Vec::new(), Vec::new());
    for i in 0..k {
        if i + 1 < k {
            couple(&mut qt, &mut bt, i, i + 1, 0.5);
        } else if periodic {
            couple(&mut qt, &mut bt, i, 0, 0.5);
        }
    }
    let boundary = policy.map(|p| make_boundary(k, 0, k - 1, p)).transpose()?;
    Ok(GlobalDiscretization {
        kind: SchemeKind::FiniteVolume,
        dim: 1,
        degree: 0,
        q: vec![skew(k, qt)?],
        couplings: vec![Coupling {
            b: symmetric(k, bt)?,
            normal: vec![1.0],
        }],
        mass: vec![h; k],
        coords: (0..k).map(|i| [-1.0 + (i as f64 + 0.5) * h, 0.0]).collect(),
        boundary,
        modal: None,
        h_min: h,
    })
}

fn make_boundary(n: usize, left: usize, right: usize, policy: BoundaryPolicy) -> Result<Boundary> {
    let b_omega = SparseOperator::from_triplets(n, n, vec![(left, left, -1.0), (right, right, 1.0)], Symmetry::Symmetric)?;
    Ok(Boundary {
        left_node: left,
        right_node: right,
        b_omega,
        policy,
    })
}

fn check_collocated(elem: &ReferenceElement) -> Result<()> {
    if elem.is_modal() {
        return Err(Error::Unsupported("collocated assembly of a modal element".into()));
    }
    Ok(())
}

/// Periodic multi-element DG-SEM operator on `k` elements of `[-1, 1]`.
pub fn assemble_global_periodic(elem: &ReferenceElement, k: usize) -> Result<GlobalDiscretization> {
    check_collocated(elem)?;
    if k < 2 && elem.degree == 0 {
        return Err(Error::InvalidMesh("periodic assembly needs K ≥ 2".into()));
    }
    assemble_collocated_1d(elem, Mesh1D::new(k, true)?, None)
}

/// Non-periodic multi-element DG-SEM operator with boundary treatment.
pub fn assemble_global_nonperiodic(
    elem: &ReferenceElement,
    k: usize,
    policy: Option<BoundaryPolicy>,
) -> Result<GlobalDiscretization> {
    check_collocated(elem)?;
    let policy = policy.ok_or(Error::MissingBoundaryPolicy)?;
    assemble_collocated_1d(elem, Mesh1D::new(k, false)?, Some(policy))
}

fn assemble_collocated_1d(
    elem: &ReferenceElement,
    mesh: Mesh1D,
    policy: Option<BoundaryPolicy>,
) -> Result<GlobalDiscretization> {
    let np = elem.nodes_per_element();
    let n = mesh.k * np;
    let (mut qt, mut bt) = (Vec::new(), Vec::new());
    for e in 0..mesh.k {
        let off = e * np;
        for i in 0..np {
            for j in 0..np {
                let s = 0.5 * (elem.q[(i, j)] - elem.q[(j, i)]);
                if i != j && s != 0.0 {
                    qt.push((off + i, off + j, s));
                }
            }
        }
        if let (_, Some(r)) = mesh.neighbors(e) {
            couple(&mut qt, &mut bt, off + np - 1, r * np, 0.5);
        }
    }
    let jac = mesh.jacobian();
    let mass = (0..mesh.k)
        .flat_map(|_| elem.weights.iter().map(move |w| jac * w))
        .collect();
    let coords = (0..mesh.k)
        .flat_map(|e| elem.nodes.iter().map(move |&r| [mesh.left(e) + (1.0 + r) * jac, 0.0]))
        .collect();
    let boundary = policy.map(|p| make_boundary(n, 0, n - 1, p)).transpose()?;
    Ok(GlobalDiscretization {
        kind: SchemeKind::Dgsem,
        dim: 1,
        degree: elem.degree,
        q: vec![skew(n, qt)?],
        couplings: vec![Coupling {
            b: symmetric(n, bt)?,
            normal: vec![1.0],
        }],
        mass,
        coords,
        boundary,
        modal: None,
        h_min: mesh.h(),
    })
}

/// Discretization with one element exposed as the whole domain; the
/// interface couplings wrap to the element itself.
pub fn single_element_periodic(elem: &ReferenceElement) -> Result<GlobalDiscretization> {
    if elem.is_modal() {
        assemble_global_modal(elem, 1, true)
    } else {
        assemble_collocated_1d(elem, Mesh1D::new(1, true)?, None)
    }
}

fn block_diagonal(d: &crate::linalg::DenseMatrix, k: usize) -> Result<SparseOperator> {
    Ok(SparseOperator::from_dense(d, Symmetry::General)?.block_diagonal(k))
}

/// Globally skew modal operator on stacked volume and face points.
pub fn assemble_global_modal(elem: &ReferenceElement, k: usize, periodic: bool) -> Result<GlobalDiscretization> {
    let modal = elem
        .modal
        .as_ref()
        .ok_or_else(|| Error::Unsupported("modal assembly of a collocated element".into()))?;
    if !periodic {
        return Err(Error::Unsupported("modal schemes are implemented for periodic meshes only".into()));
    }
    let mesh = Mesh1D::new(k, true)?;
    let nq = modal.quad_points();
    let nh = modal.hybrid_points();
    let n = k * nh;
    let (mut qt, mut bt) = (Vec::new(), Vec::new());
    for e in 0..k {
        let off = e * nh;
        for i in 0..nh {
            for j in 0..nh {
                let v = modal.q_hybrid[(i, j)];
                // the face-face block B is replaced by inter-element coupling
                if i >= nq && j >= nq {
                    continue;
                }
                if v != 0.0 {
                    qt.push((off + i, off + j, v));
                }
            }
        }
        if let (_, Some(r)) = mesh.neighbors(e) {
            couple(&mut qt, &mut bt, off + nq + 1, r * nh + nq, 0.5);
        }
    }
    let jac = mesh.jacobian();
    let np = elem.nodes_per_element();
    let v = block_diagonal(&modal.v, k)?;
    let vh = block_diagonal(&modal.vh, k)?;
    let p = block_diagonal(&modal.projection, k)?;
    let vhp = vh.matmul(&p)?;
    let mass_diag: Vec<f64> = (0..np).map(|i| modal.mass[(i, i)]).collect();
    let offdiag = (0..np).any(|i| (0..np).any(|j| i != j && modal.mass[(i, j)].abs() > 1e-12));
    if offdiag || mass_diag.iter().any(|m| (m - 1.0).abs() > 1e-12) {
        return Err(Error::Unsupported("modal mass matrix is not the identity".into()));
    }
    let point = |e: usize, r: f64| [mesh.left(e) + (1.0 + r) * jac, 0.0];
    let coords = (0..k)
        .flat_map(|e| {
            modal
                .quad_nodes
                .iter()
                .map(move |&r| point(e, r))
                .chain([point(e, -1.0), point(e, 1.0)])
        })
        .collect();
    let quad_coords = (0..k)
        .flat_map(|e| modal.quad_nodes.iter().map(move |&r| point(e, r)))
        .collect();
    let quad_weights = (0..k)
        .flat_map(|_| modal.quad_weights.iter().map(move |w| jac * w))
        .collect();
    Ok(GlobalDiscretization {
        kind: SchemeKind::ModalGauss,
        dim: 1,
        degree: elem.degree,
        q: vec![skew(n, qt)?],
        couplings: vec![Coupling {
            b: symmetric(n, bt)?,
            normal: vec![1.0],
        }],
        mass: vec![jac; k * np],
        coords,
        boundary: None,
        modal: Some(ModalGlobal {
            v,
            vh,
            p,
            vhp,
            quad_weights,
            quad_coords,
        }),
        h_min: mesh.h(),
    })
}

/// Periodic tensor-product DG-SEM on an affine quadrilateral mesh. Local
/// node `a = ix + (N+1) iy`; global node `e (N+1)² + a`.
pub fn tensor2d_affine(elem: &ReferenceElement, mesh: &Mesh2D) -> Result<GlobalDiscretization> {
    check_collocated(elem)?;
    let np = elem.nodes_per_element();
    let nloc = np * np;
    let n = mesh.elements() * nloc;
    let w = &elem.weights;
    // constant metric terms g_11 = hy/2, g_22 = hx/2
    let (gx, gy) = (mesh.hy / 2.0, mesh.hx / 2.0);
    let glob = |ex: usize, ey: usize, ix: usize, iy: usize| mesh.element(ex, ey) * nloc + ix + np * iy;
    let (mut qx, mut qy) = (Vec::new(), Vec::new());
    let (mut bx, mut by) = (Vec::new(), Vec::new());
    for ey in 0..mesh.ky {
        for ex in 0..mesh.kx {
            for a in 0..np {
                for i in 0..np {
                    for j in 0..np {
                        let s = 0.5 * (elem.q[(i, j)] - elem.q[(j, i)]);
                        if i != j && s != 0.0 {
                            // x: rows (i, a), y: rows (a, i)
                            qx.push((glob(ex, ey, i, a), glob(ex, ey, j, a), gx * w[a] * s));
                            qy.push((glob(ex, ey, a, i), glob(ex, ey, a, j), gy * w[a] * s));
                        }
                    }
                }
                let right = (glob(ex, ey, np - 1, a), glob(ex + 1, ey, 0, a));
                couple(&mut qx, &mut bx, right.0, right.1, 0.5 * gx * w[a]);
                let top = (glob(ex, ey, a, np - 1), glob(ex, ey + 1, a, 0));
                couple(&mut qy, &mut by, top.0, top.1, 0.5 * gy * w[a]);
            }
        }
    }
    let jac = mesh.jacobian();
    let mut mass = vec![0.0; n];
    let mut coords = vec![[0.0; 2]; n];
    for ey in 0..mesh.ky {
        for ex in 0..mesh.kx {
            for iy in 0..np {
                for ix in 0..np {
                    let g = glob(ex, ey, ix, iy);
                    mass[g] = jac * w[ix] * w[iy];
                    coords[g] = [
                        -1.0 + ex as f64 * mesh.hx + (1.0 + elem.nodes[ix]) * mesh.hx / 2.0,
                        -1.0 + ey as f64 * mesh.hy + (1.0 + elem.nodes[iy]) * mesh.hy / 2.0,
                    ];
                }
            }
        }
    }
    Ok(GlobalDiscretization {
        kind: SchemeKind::Dgsem2D,
        dim: 2,
        degree: elem.degree,
        q: vec![skew(n, qx)?, skew(n, qy)?],
        couplings: vec![
            Coupling {
                b: symmetric(n, bx)?,
                normal: vec![1.0, 0.0],
            },
            Coupling {
                b: symmetric(n, by)?,
                normal: vec![0.0, 1.0],
            },
        ],
        mass,
        coords,
        boundary: None,
        modal: None,
        h_min: mesh.hx.min(mesh.hy),
    })
}
