use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::fluxes::{ConservationLaw, LaxFriedrichs};
use crate::linalg::{Accumulation, SparseOperator, Symmetry};
use crate::operators::{BoundaryPolicy, GlobalDiscretization};
use crate::residual::SourceTerm;

/// Selects which parts of the residual (or its Jacobian) are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terms {
    pub volume: bool,
    pub dissipation: bool,
    pub boundary: bool,
    pub source: bool,
}

impl Terms {
    pub const ALL: Terms = Terms {
        volume: true,
        dissipation: true,
        boundary: true,
        source: true,
    };
    pub const VOLUME: Terms = Terms {
        volume: true,
        dissipation: false,
        boundary: false,
        source: false,
    };
    pub const DISSIPATION: Terms = Terms {
        volume: false,
        dissipation: true,
        boundary: false,
        source: false,
    };
    pub const BOUNDARY: Terms = Terms {
        volume: false,
        dissipation: false,
        boundary: true,
        source: false,
    };
}

/// Union pattern of every operator acting on flux nodes plus the diagonal,
/// with maps from each operator's stored entries into it.
#[derive(Debug, Clone)]
pub(crate) struct JacobianPattern {
    pub pattern: SparseOperator,
    pub q_maps: Vec<Vec<usize>>,
    pub coupling_maps: Vec<Vec<usize>>,
    pub diag: Vec<usize>,
}

impl JacobianPattern {
    fn build(disc: &GlobalDiscretization) -> Result<Self> {
        let n = disc.flux_nodes();
        let mut trip: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
        for op in disc.q.iter().chain(disc.couplings.iter().map(|c| &c.b)) {
            trip.extend(op.triplets().map(|(i, j, _)| (i, j, 1.0)));
        }
        let pattern = SparseOperator::from_triplets(n, n, trip, Symmetry::General)?;
        let map = |op: &SparseOperator| -> Vec<usize> {
            op.triplets()
                .map(|(i, j, _)| pattern.position(i, j).expect("entry in union pattern"))
                .collect()
        };
        Ok(Self {
            q_maps: disc.q.iter().map(map).collect(),
            coupling_maps: disc.couplings.iter().map(|c| map(&c.b)).collect(),
            diag: (0..n).map(|i| pattern.position(i, i).expect("diagonal")).collect(),
            pattern,
        })
    }
}

/// A discretization paired with a conservation law: `du/dt = -M⁻¹ r(u, t)`.
///
/// Vectors passed in and out are field-major (`index = field * nodes + node`)
/// over the solution degrees of freedom: nodal values for collocated schemes
/// and modal coefficients for modal schemes.
#[derive(Clone)]
pub struct SemiDiscreteSystem<L: ConservationLaw<N>, const N: usize> {
    pub disc: GlobalDiscretization,
    pub law: L,
    pub dissipation: Option<LaxFriedrichs>,
    pub source: Option<Arc<dyn SourceTerm<N>>>,
    /// Accumulation order of the serial residual.
    pub accumulation: Accumulation,
    /// Row-parallel residual and Jacobian entry evaluation.
    pub parallel: bool,
    pub(crate) pattern: JacobianPattern,
    pub(crate) vh_t: Option<SparseOperator>,
}

impl<L: ConservationLaw<N>, const N: usize> fmt::Debug for SemiDiscreteSystem<L, N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SemiDiscreteSystem")
            .field("scheme", &self.disc.kind)
            .field("law", &self.law)
            .field("dissipation", &self.dissipation)
            .field("source", &self.source.is_some())
            .field("accumulation", &self.accumulation)
            .field("parallel", &self.parallel)
            .finish()
    }
}

pub(crate) fn gather<T: Copy, const N: usize>(u: &[T], n: usize) -> Vec<[T; N]> {
    (0..n).map(|i| std::array::from_fn(|a| u[a * n + i])).collect()
}

pub(crate) fn scatter<T: Copy + Default, const N: usize>(nodes: &[[T; N]]) -> Vec<T> {
    let n = nodes.len();
    let mut out = vec![T::default(); N * n];
    for (i, s) in nodes.iter().enumerate() {
        for a in 0..N {
            out[a * n + i] = s[a];
        }
    }
    out
}

fn scatter_scalar<T: Scalar, const N: usize>(nodes: &[[T; N]]) -> Vec<T> {
    let n = nodes.len();
    let mut out = vec![T::zero(); N * n];
    for (i, s) in nodes.iter().enumerate() {
        for a in 0..N {
            out[a * n + i] = s[a];
        }
    }
    out
}

/// Applies a scalar operator to every field of a node-major state list.
pub(crate) fn apply_nodes<T: Scalar, const N: usize>(a: &SparseOperator, x: &[[T; N]]) -> Vec<[T; N]> {
    (0..a.rows())
        .map(|i| {
            let mut acc = [T::zero(); N];
            for (j, v) in a.row(i) {
                for k in 0..N {
                    acc[k] += x[j][k] * v;
                }
            }
            acc
        })
        .collect()
}

fn values<T: Scalar, const N: usize>(u: &[T; N]) -> [f64; N] {
    std::array::from_fn(|k| u[k].value())
}

/// Boundary node data: `(node, B_Ω entry, outward normal)`.
pub(crate) type BoundaryNode = (usize, f64, [f64; 1]);

impl<L: ConservationLaw<N>, const N: usize> SemiDiscreteSystem<L, N> {
    pub fn new(disc: GlobalDiscretization, law: L) -> Result<Self> {
        if let Some(b) = &disc.boundary {
            if let BoundaryPolicy::Dirichlet { left, right } = &b.policy {
                if left.len() != N || right.len() != N {
                    return Err(Error::DimensionMismatch(format!(
                        "Dirichlet states need {N} values, got {} and {}",
                        left.len(),
                        right.len()
                    )));
                }
            }
        }
        let pattern = JacobianPattern::build(&disc)?;
        let vh_t = disc.modal.as_ref().map(|m| m.vh.transpose());
        Ok(Self {
            disc,
            law,
            dissipation: None,
            source: None,
            accumulation: Accumulation::Paired,
            parallel: false,
            pattern,
            vh_t,
        })
    }

    pub fn with_dissipation(mut self, lf: Option<LaxFriedrichs>) -> Self {
        self.dissipation = lf;
        self
    }

    pub fn with_source(mut self, source: Arc<dyn SourceTerm<N>>) -> Self {
        self.source = Some(source);
        self
    }

    pub fn with_accumulation(mut self, mode: Accumulation) -> Self {
        self.accumulation = mode;
        self
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    /// Number of unknowns.
    pub fn dofs(&self) -> usize {
        N * self.disc.solution_nodes()
    }

    /// Field-major diagonal mass.
    pub fn mass_vector(&self) -> Vec<f64> {
        (0..N).flat_map(|_| self.disc.mass.iter().copied()).collect()
    }

    /// Directions in which both the operator and the law have fluxes.
    pub(crate) fn directions(&self) -> usize {
        self.disc.q.len().min(self.law.dim())
    }

    pub(crate) fn boundary_nodes(&self) -> Vec<BoundaryNode> {
        match &self.disc.boundary {
            None => Vec::new(),
            Some(b) => vec![(b.left_node, b.b_omega.get(b.left_node, b.left_node), [-1.0]), (
                b.right_node,
                b.b_omega.get(b.right_node, b.right_node),
                [1.0],
            )],
        }
    }

    /// Exterior state prescribed by the boundary policy.
    pub(crate) fn exterior<T: Scalar>(&self, u: &[T; N], normal: &[f64], left: bool) -> [T; N] {
        match &self.disc.boundary.as_ref().expect("boundary").policy {
            BoundaryPolicy::Dirichlet { left: l, right: r } => {
                let s = if left { l } else { r };
                std::array::from_fn(|k| T::cst(s[k]))
            }
            BoundaryPolicy::Reflective => self.law.reflect(u, normal),
            BoundaryPolicy::Extrapolated => *u,
        }
    }

    /// Boundary contribution `b f_S(u, u⁺) + ½ d(u, u⁺)` at one node.
    pub(crate) fn boundary_term<T: Scalar>(&self, u: &[T; N], coef: f64, normal: &[f64; 1]) -> [T; N] {
        let ext = self.exterior(u, normal, coef < 0.0);
        let f = self.law.flux_ec(0, u, &ext);
        let mut out: [T; N] = std::array::from_fn(|k| f[k] * coef);
        if let Some(lf) = &self.dissipation {
            let d = lf.flux(&self.law, u, &ext, normal);
            for k in 0..N {
                out[k] += d[k] * 0.5;
            }
        }
        out
    }

    /// States at the flux nodes: the nodal values, or the entropy-projected
    /// states for modal schemes.
    pub fn flux_node_states<T: Scalar>(&self, u: &[T]) -> Result<Vec<[T; N]>> {
        if u.len() != self.dofs() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} entries, system has {} unknowns",
                u.len(),
                self.dofs()
            )));
        }
        if self.disc.modal.is_some() {
            return self.entropy_project(u);
        }
        let ut: Vec<[T; N]> = gather(u, self.disc.solution_nodes());
        for (i, s) in ut.iter().enumerate() {
            self.law.check_admissible(i, &values(s))?;
        }
        Ok(ut)
    }

    /// States at the entropy nodes: nodal values when collocated, values at
    /// the volume quadrature points when modal.
    pub fn entropy_node_states(&self, u: &[f64]) -> Result<Vec<[f64; N]>> {
        let ns = self.disc.solution_nodes();
        let nodes: Vec<[f64; N]> = gather(u, ns);
        Ok(match &self.disc.modal {
            None => nodes,
            Some(m) => apply_nodes(&m.v, &nodes),
        })
    }

    /// `ũ = u(V_h P v(V û))` at the volume and face points.
    pub fn entropy_project<T: Scalar>(&self, uhat: &[T]) -> Result<Vec<[T; N]>> {
        let m = self
            .disc
            .modal
            .as_ref()
            .ok_or_else(|| Error::Unsupported("entropy projection of a collocated scheme".into()))?;
        let coeffs: Vec<[T; N]> = gather(uhat, self.disc.solution_nodes());
        let uq = apply_nodes(&m.v, &coeffs);
        for (p, s) in uq.iter().enumerate() {
            self.law.check_admissible(p, &values(s))?;
        }
        let vq: Vec<[T; N]> = uq.iter().map(|s| self.law.entropy_vars(s)).collect();
        let vt = apply_nodes(&m.vhp, &vq);
        let ut: Vec<[T; N]> = vt.iter().map(|v| self.law.cons_vars(v)).collect();
        for (p, s) in ut.iter().enumerate() {
            let vals = values(s);
            if !self.law.admissible(&vals) || vals.iter().any(|x| !x.is_finite()) {
                return Err(Error::InadmissibleProjection {
                    point: p,
                    state: vals.to_vec(),
                });
            }
        }
        Ok(ut)
    }

    /// Residual on the flux nodes, row `i` only, in the fixed row-wise order.
    fn flux_row<T: Scalar>(&self, i: usize, ut: &[[T; N]], terms: Terms, bnodes: &[BoundaryNode]) -> [T; N] {
        let mut acc = [T::zero(); N];
        if terms.volume {
            for d in 0..self.directions() {
                for (j, q) in self.disc.q[d].row(i) {
                    let f = self.law.flux_ec(d, &ut[i], &ut[j]);
                    for k in 0..N {
                        acc[k] += f[k] * (2.0 * q);
                    }
                }
            }
        }
        if terms.dissipation {
            if let Some(lf) = &self.dissipation {
                for c in &self.disc.couplings {
                    for (j, b) in c.b.row(i) {
                        if j != i {
                            let dv = lf.flux(&self.law, &ut[i], &ut[j], &c.normal);
                            for k in 0..N {
                                acc[k] += dv[k] * b;
                            }
                        }
                    }
                }
            }
        }
        if terms.boundary {
            for (node, coef, normal) in bnodes {
                if *node == i {
                    let g = self.boundary_term(&ut[i], *coef, normal);
                    for k in 0..N {
                        acc[k] += g[k];
                    }
                }
            }
        }
        acc
    }

    /// Residual on the flux nodes with each unordered pair visited once.
    fn flux_paired<T: Scalar>(&self, ut: &[[T; N]], terms: Terms, bnodes: &[BoundaryNode]) -> Vec<[T; N]> {
        let n = ut.len();
        let mut r = vec![[T::zero(); N]; n];
        if terms.volume {
            for d in 0..self.directions() {
                let q = &self.disc.q[d];
                let paired = q.symmetry() == Symmetry::Skew;
                for i in 0..n {
                    for (j, v) in q.row(i) {
                        if paired && j < i {
                            continue;
                        }
                        let f = self.law.flux_ec(d, &ut[i], &ut[j]);
                        for k in 0..N {
                            let val = f[k] * (2.0 * v);
                            r[i][k] += val;
                            if paired {
                                r[j][k] -= val;
                            }
                        }
                    }
                }
            }
        }
        if terms.dissipation {
            if let Some(lf) = &self.dissipation {
                for c in &self.disc.couplings {
                    for i in 0..n {
                        for (j, b) in c.b.row(i) {
                            if j <= i {
                                continue;
                            }
                            let dv = lf.flux(&self.law, &ut[i], &ut[j], &c.normal);
                            for k in 0..N {
                                let val = dv[k] * b;
                                r[i][k] += val;
                                r[j][k] -= val;
                            }
                        }
                    }
                }
            }
        }
        if terms.boundary {
            for (node, coef, normal) in bnodes {
                let g = self.boundary_term(&ut[*node], *coef, normal);
                for k in 0..N {
                    r[*node][k] += g[k];
                }
            }
        }
        r
    }

    /// Residual `r̃` on the flux nodes for given flux-node states.
    pub fn flux_node_residual<T: Scalar>(&self, ut: &[[T; N]], terms: Terms) -> Vec<[T; N]> {
        let bnodes = self.boundary_nodes();
        if self.parallel {
            (0..ut.len())
                .into_par_iter()
                .map(|i| self.flux_row(i, ut, terms, &bnodes))
                .collect()
        } else if self.accumulation == Accumulation::RowWise {
            (0..ut.len()).map(|i| self.flux_row(i, ut, terms, &bnodes)).collect()
        } else {
            self.flux_paired(ut, terms, &bnodes)
        }
    }

    /// Residual restricted to selected terms, generic over the scalar type.
    pub fn residual_terms<T: Scalar>(&self, u: &[T], t: f64, terms: Terms) -> Result<Vec<T>> {
        let ut = self.flux_node_states(u)?;
        let rt = self.flux_node_residual(&ut, terms);
        let mut out = match &self.vh_t {
            None => scatter_scalar(&rt),
            Some(vh_t) => scatter_scalar(&apply_nodes(vh_t, &rt)),
        };
        if terms.source {
            if let Some(s) = self.source_vector(t) {
                let m = self.mass_vector();
                for ((o, s), m) in out.iter_mut().zip(s).zip(m) {
                    *o -= T::cst(m * s);
                }
            }
        }
        Ok(out)
    }

    pub fn residual_generic<T: Scalar>(&self, u: &[T], t: f64) -> Result<Vec<T>> {
        self.residual_terms(u, t, Terms::ALL)
    }

    /// `r(u, t)` including boundary, dissipation and `-M s(t)`.
    pub fn residual(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        self.residual_generic(u, t)
    }

    fn project_samples(&self, f: impl Fn([f64; 2]) -> [f64; N]) -> Vec<f64> {
        match &self.disc.modal {
            None => scatter(&self.disc.coords.iter().map(|&x| f(x)).collect::<Vec<_>>()),
            Some(m) => {
                let sq: Vec<[f64; N]> = m.quad_coords.iter().map(|&x| f(x)).collect();
                scatter(&apply_nodes(&m.p, &sq))
            }
        }
    }

    /// Field-major source `s(t)` on the solution degrees of freedom
    /// (projected onto the modal basis for modal schemes).
    pub fn source_vector(&self, t: f64) -> Option<Vec<f64>> {
        let s = self.source.as_ref()?;
        Some(self.project_samples(|x| s.value(x, t)))
    }

    /// `∂s/∂t` in the same layout as [`Self::source_vector`].
    pub fn source_rate(&self, t: f64) -> Option<Vec<f64>> {
        let s = self.source.as_ref()?;
        Some(self.project_samples(|x| s.time_derivative(x, t)))
    }

    /// Interpolates (collocated) or projects (modal) a function onto the
    /// solution degrees of freedom.
    pub fn project(&self, f: impl Fn([f64; 2]) -> [f64; N]) -> Vec<f64> {
        self.project_samples(f)
    }

    /// `Σ w S(u)` over the entropy nodes.
    pub fn total_entropy(&self, u: &[f64]) -> Result<f64> {
        let states = self.entropy_node_states(u)?;
        Ok(states
            .iter()
            .zip(self.disc.integration_weights())
            .map(|(s, w)| w * self.law.entropy(s))
            .sum())
    }

    /// Entropy variables paired with the solution unknowns: `v(u)` at nodes
    /// when collocated, `P v(V û)` when modal.
    pub fn entropy_test_vector(&self, u: &[f64]) -> Result<Vec<f64>> {
        let states = self.entropy_node_states(u)?;
        let v: Vec<[f64; N]> = states.iter().map(|s| self.law.entropy_vars(s)).collect();
        Ok(match &self.disc.modal {
            None => scatter(&v),
            Some(m) => scatter(&apply_nodes(&m.p, &v)),
        })
    }

    /// `vᵀ r(u)`: zero for entropy conservative periodic schemes and
    /// non-negative with dissipation, so that `dS/dt = -vᵀ r`.
    pub fn entropy_production(&self, u: &[f64], t: f64) -> Result<f64> {
        let r = self.residual(u, t)?;
        let v = self.entropy_test_vector(u)?;
        Ok(crate::linalg::dot(&v, &r))
    }
}
