use rayon::prelude::*;

use crate::autodiff::{self, Dual};
use crate::error::{Error, Result};
use crate::fluxes::{flux_jacobian_left, flux_jacobian_right, ConservationLaw};
use crate::linalg::{BlockJacobian, SparseOperator, Symmetry};
use crate::residual::system::{apply_nodes, gather, scatter, SemiDiscreteSystem, Terms};

pub(crate) type Block<const N: usize> = [[f64; N]; N];

/// Diagonal correction used for the volume Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// `A ∘ F_y ∓ diag(1ᵀ(A ∘ F_y))`: one flux derivative per stored entry,
    /// valid for skew or symmetric operators with symmetric fluxes.
    #[default]
    ColumnSum,
    /// `A ∘ F_y + diag((A ∘ F_x)𝟙)`: valid for any operator.
    RowSum,
}

fn add_block<const N: usize>(dst: &mut Block<N>, src: &Block<N>, s: f64) {
    for a in 0..N {
        for b in 0..N {
            dst[a][b] += s * src[a][b];
        }
    }
}

fn scale_block<const N: usize>(mut m: Block<N>, s: f64) -> Block<N> {
    for row in m.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    m
}

fn block_apply<const N: usize>(m: &Block<N>, w: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|a| (0..N).map(|b| m[a][b] * w[b]).sum())
}

/// Flattened field-major matrix of per-point `N × N` blocks.
fn pointwise_blocks<const N: usize>(blocks: &[Block<N>]) -> Result<SparseOperator> {
    let n = blocks.len();
    let trip = blocks.iter().enumerate().flat_map(|(p, m)| {
        (0..N).flat_map(move |a| (0..N).map(move |b| (a * n + p, b * n + p, m[a][b])))
    });
    SparseOperator::from_triplets(N * n, N * n, trip, Symmetry::General)
}

impl<L: ConservationLaw<N>, const N: usize> SemiDiscreteSystem<L, N> {
    /// Evaluates `f(i, j, a_ij)` for every stored entry in row order, in
    /// parallel when enabled. Collection order is independent of threads.
    fn entry_blocks<F>(&self, op: &SparseOperator, f: F) -> Vec<Block<N>>
    where
        F: Fn(usize, usize, f64) -> Block<N> + Sync,
    {
        if self.parallel {
            (0..op.rows())
                .into_par_iter()
                .flat_map_iter(|i| op.row(i).map(move |(j, v)| (i, j, v)).collect::<Vec<_>>())
                .map(|(i, j, v)| f(i, j, v))
                .collect()
        } else {
            op.triplets().map(|(i, j, v)| f(i, j, v)).collect()
        }
    }

    fn volume_blocks(&self, ut: &[[f64; N]], acc: &mut [Block<N>], variant: Variant) {
        for d in 0..self.directions() {
            let q = &self.disc.q[d];
            let map = &self.pattern.q_maps[d];
            let cols = q.col_indices();
            let variant = match q.symmetry() {
                Symmetry::General => Variant::RowSum,
                _ => variant,
            };
            match variant {
                Variant::ColumnSum => {
                    // the flux is symmetric, so the mirror sign is the operator's
                    let s = q.symmetry().sign().expect("signed operator");
                    let blocks = self.entry_blocks(q, |i, j, v| {
                        scale_block(flux_jacobian_right(&self.law, d, &ut[i], &ut[j]), 2.0 * v)
                    });
                    for (k, b) in blocks.iter().enumerate() {
                        add_block(&mut acc[map[k]], b, 1.0);
                        add_block(&mut acc[self.pattern.diag[cols[k]]], b, s);
                    }
                }
                Variant::RowSum => {
                    let blocks = self.entry_blocks(q, |i, j, v| {
                        scale_block(flux_jacobian_right(&self.law, d, &ut[i], &ut[j]), 2.0 * v)
                    });
                    let xblocks = self.entry_blocks(q, |i, j, v| {
                        scale_block(flux_jacobian_left(&self.law, d, &ut[i], &ut[j]), 2.0 * v)
                    });
                    for (k, (i, _, _)) in q.triplets().enumerate() {
                        add_block(&mut acc[map[k]], &blocks[k], 1.0);
                        add_block(&mut acc[self.pattern.diag[i]], &xblocks[k], 1.0);
                    }
                }
            }
        }
    }

    fn dissipation_blocks(&self, ut: &[[f64; N]], acc: &mut [Block<N>]) {
        let Some(lf) = &self.dissipation else { return };
        for (c, coupling) in self.disc.couplings.iter().enumerate() {
            let map = &self.pattern.coupling_maps[c];
            let cols = coupling.b.col_indices();
            let normal = &coupling.normal;
            let blocks = self.entry_blocks(&coupling.b, |i, j, v| {
                let dy = autodiff::flux_jacobian_right(|a, b| lf.flux(&self.law, a, b, normal), &ut[i], &ut[j]);
                scale_block(dy, v)
            });
            // symmetric B and antisymmetric d give mirror sign -1
            for (k, b) in blocks.iter().enumerate() {
                add_block(&mut acc[map[k]], b, 1.0);
                add_block(&mut acc[self.pattern.diag[cols[k]]], b, -1.0);
            }
        }
    }

    fn boundary_block(&self, u: &[f64; N], coef: f64, normal: &[f64; 1]) -> Block<N> {
        autodiff::jacobian(|w: &[Dual<N>; N]| self.boundary_term(w, coef, normal), u)
    }

    fn boundary_blocks(&self, ut: &[[f64; N]], acc: &mut [Block<N>]) {
        for (node, coef, normal) in self.boundary_nodes() {
            let b = self.boundary_block(&ut[node], coef, &normal);
            add_block(&mut acc[self.pattern.diag[node]], &b, 1.0);
        }
    }

    fn flux_node_blocks(&self, ut: &[[f64; N]], terms: Terms, variant: Variant) -> Vec<Block<N>> {
        let mut acc = vec![[[0.0; N]; N]; self.pattern.pattern.nnz()];
        if terms.volume {
            self.volume_blocks(ut, &mut acc, variant);
        }
        if terms.dissipation {
            self.dissipation_blocks(ut, &mut acc);
        }
        if terms.boundary {
            self.boundary_blocks(ut, &mut acc);
        }
        acc
    }

    fn to_block_jacobian(&self, acc: &[Block<N>]) -> Result<BlockJacobian> {
        let p = &self.pattern.pattern;
        let mut blocks = Vec::with_capacity(N * N);
        for a in 0..N {
            for b in 0..N {
                blocks.push(p.with_values(acc.iter().map(|m| m[a][b]).collect(), Symmetry::General)?);
            }
        }
        BlockJacobian::new(N, blocks)
    }

    /// Jacobian of `r̃` with respect to the flux-node states (selected terms).
    pub fn flux_node_jacobian(&self, ut: &[[f64; N]], terms: Terms, variant: Variant) -> Result<BlockJacobian> {
        self.to_block_jacobian(&self.flux_node_blocks(ut, terms, variant))
    }

    fn require_collocated(&self) -> Result<()> {
        if self.disc.modal.is_some() {
            return Err(Error::Unsupported("collocated Jacobian of a modal scheme".into()));
        }
        Ok(())
    }

    fn collocated_terms(&self, u: &[f64], terms: Terms, variant: Variant) -> Result<BlockJacobian> {
        self.require_collocated()?;
        let ut = self.flux_node_states(u)?;
        self.flux_node_jacobian(&ut, terms, variant)
    }

    /// Volume (entropy conservative) Jacobian of a collocated scheme.
    pub fn jacobian_collocated(&self, u: &[f64]) -> Result<BlockJacobian> {
        self.collocated_terms(u, Terms::VOLUME, Variant::ColumnSum)
    }

    /// Volume Jacobian with an explicit choice of diagonal correction.
    pub fn jacobian_collocated_variant(&self, u: &[f64], variant: Variant) -> Result<BlockJacobian> {
        self.collocated_terms(u, Terms::VOLUME, variant)
    }

    /// Jacobian of the interface dissipation term alone.
    pub fn jacobian_dissipation(&self, u: &[f64]) -> Result<BlockJacobian> {
        self.collocated_terms(u, Terms::DISSIPATION, Variant::ColumnSum)
    }

    /// Jacobian of the boundary terms alone.
    pub fn jacobian_boundary(&self, u: &[f64]) -> Result<BlockJacobian> {
        self.collocated_terms(u, Terms::BOUNDARY, Variant::ColumnSum)
    }

    /// Chain-rule Jacobian of a modal scheme:
    /// `V_hᵀ J̃ (∂u/∂v)(ṽ) V_h P (∂v/∂u)(V û) V`.
    pub fn jacobian_modal(&self, uhat: &[f64]) -> Result<BlockJacobian> {
        self.modal_terms(uhat, Terms::ALL, Variant::ColumnSum)
    }

    fn modal_terms(&self, uhat: &[f64], terms: Terms, variant: Variant) -> Result<BlockJacobian> {
        let m = self
            .disc
            .modal
            .as_ref()
            .ok_or_else(|| Error::Unsupported("modal Jacobian of a collocated scheme".into()))?;
        let ut = self.entropy_project(uhat)?;
        let jt = self.flux_node_jacobian(&ut, terms, variant)?.flatten();
        let uq = apply_nodes(&m.v, &gather::<f64, N>(uhat, self.disc.solution_nodes()));
        let dv = pointwise_blocks(&uq.iter().map(|s| self.law.dvdu(s)).collect::<Vec<_>>())?;
        let du = pointwise_blocks(&ut.iter().map(|s| self.law.dudv(s)).collect::<Vec<_>>())?;
        let vh_t = self.vh_t.as_ref().expect("modal transpose").block_diagonal(N);
        let chain = vh_t
            .matmul(&jt)?
            .matmul(&du)?
            .matmul(&m.vhp.block_diagonal(N))?
            .matmul(&dv)?
            .matmul(&m.v.block_diagonal(N))?;
        BlockJacobian::from_flat(&chain, N)
    }

    /// `∂r/∂u` of the full residual for any scheme.
    pub fn jacobian(&self, u: &[f64]) -> Result<BlockJacobian> {
        self.jacobian_with(u, Variant::ColumnSum)
    }

    pub fn jacobian_with(&self, u: &[f64], variant: Variant) -> Result<BlockJacobian> {
        if self.disc.modal.is_some() {
            self.modal_terms(u, Terms::ALL, variant)
        } else {
            self.collocated_terms(u, Terms::ALL, variant)
        }
    }

    /// `J̃ x` on the flux nodes without forming `J̃`, by the same traversal
    /// as the assembled Jacobian.
    fn flux_node_apply(&self, ut: &[[f64; N]], x: &[[f64; N]]) -> Vec<[f64; N]> {
        let mut y = vec![[0.0; N]; ut.len()];
        let mut push = |i: usize, j: usize, m: &Block<N>, mirror: f64| {
            let z = block_apply(m, &x[j]);
            for k in 0..N {
                y[i][k] += z[k];
                y[j][k] += mirror * z[k];
            }
        };
        for d in 0..self.directions() {
            let q = &self.disc.q[d];
            match q.symmetry().sign() {
                Some(s) => {
                    for (i, j, v) in q.triplets() {
                        let m = scale_block(flux_jacobian_right(&self.law, d, &ut[i], &ut[j]), 2.0 * v);
                        push(i, j, &m, s);
                    }
                }
                None => {
                    for (i, j, v) in q.triplets() {
                        let my = scale_block(flux_jacobian_right(&self.law, d, &ut[i], &ut[j]), 2.0 * v);
                        let mx = scale_block(flux_jacobian_left(&self.law, d, &ut[i], &ut[j]), 2.0 * v);
                        push(i, j, &my, 0.0);
                        push(i, i, &mx, 0.0);
                    }
                }
            }
        }
        if let Some(lf) = &self.dissipation {
            for c in &self.disc.couplings {
                for (i, j, v) in c.b.triplets() {
                    let dy = autodiff::flux_jacobian_right(|a, b| lf.flux(&self.law, a, b, &c.normal), &ut[i], &ut[j]);
                    push(i, j, &scale_block(dy, v), -1.0);
                }
            }
        }
        for (node, coef, normal) in self.boundary_nodes() {
            let m = self.boundary_block(&ut[node], coef, &normal);
            push(node, node, &m, 0.0);
        }
        y
    }

    /// Matrix-free Jacobian-vector product `J(u) w`.
    pub fn jacobian_vector_product(&self, u: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.dofs() {
            return Err(Error::DimensionMismatch("direction has the wrong length".into()));
        }
        let ut = self.flux_node_states(u)?;
        let ns = self.disc.solution_nodes();
        let wn: Vec<[f64; N]> = gather(w, ns);
        match &self.disc.modal {
            None => Ok(scatter(&self.flux_node_apply(&ut, &wn))),
            Some(m) => {
                let uq = apply_nodes(&m.v, &gather::<f64, N>(u, ns));
                let x1 = apply_nodes(&m.v, &wn);
                let x2: Vec<[f64; N]> = x1.iter().zip(&uq).map(|(x, s)| block_apply(&self.law.dvdu(s), x)).collect();
                let x3 = apply_nodes(&m.vhp, &x2);
                let x4: Vec<[f64; N]> = x3.iter().zip(&ut).map(|(x, s)| block_apply(&self.law.dudv(s), x)).collect();
                let x5 = self.flux_node_apply(&ut, &x4);
                Ok(scatter(&apply_nodes(self.vh_t.as_ref().expect("modal transpose"), &x5)))
            }
        }
    }
}
