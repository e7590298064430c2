//! Global sparse operators.
//!
//! | op | maps        | entry                       |
//! |----|-------------|-----------------------------|
//! | L  | V2 -> V2    | `<alpha_i, alpha_i'>` (diagonal, `1/A_i`) |
//! | M  | V1 -> V1    | `<v_e, v_e'>`               |
//! | N  | V0 -> V0    | `<gamma_j, gamma_j'>`       |
//! | R  | V2 -> V0    | `<gamma_j, alpha_i>`        |
//! | W  | V1 -> V1    | `-<v_e, k x v_e'>`          |
//! | H  | V^1 -> V1   | `<v_e, w_e'>`               |
//! | J  | V^2 -> V0   | `<gamma_j, beta_j'>`        |
//! | I  | V^0 -> V2   | `<alpha_i, chi_i'>`         |
//! | T  | per cell    | `A_i <alpha_i v_e, v_e'>`   |
//!
//! Everything is assembled on the unit sphere; [`OperatorSet::scaled`]
//! rescales to a planet of radius `a`.

mod cache;
pub mod calculus;

use std::collections::HashMap;

use crate::elements::Elements;
use crate::error::Result;
use crate::mesh::PolyMesh;
use crate::space::Space;
use crate::sparse::SparseOp;

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSet {
    pub radius: f64,
    pub mesh_hash: String,
    /// Primal cell areas `A_i` (scaled with the radius).
    pub cell_areas: Vec<f64>,
    /// Dual cell areas.
    pub dual_areas: Vec<f64>,
    pub d1: SparseOp,
    pub d2: SparseOp,
    pub db1: SparseOp,
    pub db2: SparseOp,
    pub l: SparseOp,
    pub m: SparseOp,
    pub n: SparseOp,
    pub r: SparseOp,
    pub w: SparseOp,
    pub h: SparseOp,
    pub j: SparseOp,
    pub i: SparseOp,
    /// Per-cell dense blocks of T, row-major over the cell's edge cycle.
    pub t: Vec<Vec<f64>>,
}

type Trip = Vec<(usize, usize, f64)>;

impl OperatorSet {
    pub fn assemble(mesh: &PolyMesh, el: &Elements) -> Result<Self> {
        let (nc, ne, nv) = (mesh.n_cells(), mesh.n_edges(), mesh.n_verts());
        let (mut m, mut n, mut r, mut w, mut h, mut j, mut i): (Trip, Trip, Trip, Trip, Trip, Trip, Trip) =
            Default::default();
        let mut t_blocks: Vec<Vec<f64>> = (0..nc).map(|c| vec![0.0; mesh.cell(c).1.len().pow(2)]).collect();

        for (tid, tri) in mesh.tris().iter().enumerate() {
            let g = &el.geom[tid];
            let (ci, vj) = (tri.cell, tri.vert);
            let a_i = el.cell_areas[ci];
            let a_j = el.dual_areas[vj];
            let v1 = &el.v1[tid];
            let edges = mesh.cell(ci).1;
            let nloc = edges.len();
            let local: HashMap<usize, usize> = edges.iter().enumerate().map(|(k, &e)| (e, k)).collect();
            for (p, (e, u)) in v1.iter().enumerate() {
                for (q, (e2, u2)) in v1.iter().enumerate() {
                    let ip = u.inner(u2, g);
                    m.push((*e, *e2, ip));
                    t_blocks[ci][local[e] * nloc + local[e2]] += ip;
                    if q > p {
                        let x = u.cross_inner(u2, g);
                        w.push((*e, *e2, x));
                        w.push((*e2, *e, -x));
                    }
                }
                for (e2, wv) in &el.dual_v1[tid] {
                    h.push((*e, *e2, u.inner(wv, g)));
                }
            }
            for (v, s) in &el.v0[tid] {
                for (v2, s2) in &el.v0[tid] {
                    n.push((*v, *v2, s.inner(s2, g)));
                }
                let int = s.integral(g);
                r.push((*v, ci, int / a_i));
                j.push((*v, vj, int / a_j));
            }
            for (c, s) in &el.dual_v0[tid] {
                i.push((ci, *c, s.integral(g) / a_i));
            }
        }

        let (d1, d2) = mesh.incidence();
        let (db1, db2) = mesh.dual_incidence();
        let inv_area: Vec<f64> = el.cell_areas.iter().map(|a| 1.0 / a).collect();
        Ok(OperatorSet {
            radius: 1.0,
            mesh_hash: mesh.content_hash(),
            cell_areas: el.cell_areas.clone(),
            dual_areas: el.dual_areas.clone(),
            d1,
            d2,
            db1,
            db2,
            l: SparseOp::diagonal(Space::V2, &inv_area),
            m: SparseOp::from_triplets(Space::V1, Space::V1, ne, ne, &m).with_symmetric(true),
            n: SparseOp::from_triplets(Space::V0, Space::V0, nv, nv, &n).with_symmetric(true),
            r: SparseOp::from_triplets(Space::V2, Space::V0, nv, nc, &r),
            w: SparseOp::from_triplets(Space::V1, Space::V1, ne, ne, &w),
            h: SparseOp::from_triplets(Space::DualV1, Space::V1, ne, ne, &h),
            j: SparseOp::from_triplets(Space::DualV2, Space::V0, nv, nv, &j),
            i: SparseOp::from_triplets(Space::DualV0, Space::V2, nc, nc, &i),
            t: t_blocks,
        })
    }

    /// Builds elements and operators for `mesh` in one go.
    pub fn build(mesh: &PolyMesh) -> Result<Self> {
        let el = Elements::build(mesh)?;
        Self::assemble(mesh, &el)
    }

    /// Operators for a sphere of radius `a`, from a unit-sphere set.
    pub fn scaled(&self, a: f64) -> Self {
        let s = a / self.radius;
        let s2 = s * s;
        OperatorSet {
            radius: a,
            cell_areas: self.cell_areas.iter().map(|x| x * s2).collect(),
            dual_areas: self.dual_areas.iter().map(|x| x * s2).collect(),
            l: self.l.scaled(1.0 / s2),
            n: self.n.scaled(s2),
            ..self.clone()
        }
    }

    pub fn n_cells(&self) -> usize {
        self.cell_areas.len()
    }

    pub fn n_verts(&self) -> usize {
        self.dual_areas.len()
    }

    pub fn n_edges(&self) -> usize {
        self.m.nrows()
    }

    /// `L` diagonal, i.e. `1 / A_i`.
    pub fn l_diag(&self) -> Vec<f64> {
        self.l.diag()
    }

    /// `k_i = 1/2 sum T_i,e,e' u_e u_e'`, the V2 coefficients of the
    /// kinetic energy.
    pub fn kinetic(&self, mesh: &PolyMesh, u: &[f64]) -> Vec<f64> {
        (0..self.n_cells())
            .map(|c| {
                let edges = mesh.cell(c).1;
                let n = edges.len();
                let blk = &self.t[c];
                let mut k = 0.0;
                for (p, &e) in edges.iter().enumerate() {
                    for (q, &e2) in edges.iter().enumerate() {
                        k += blk[p * n + q] * u[e] * u[e2];
                    }
                }
                0.5 * k
            })
            .collect()
    }

    /// Identity residuals of the operator set.
    pub fn verify(&self) -> IdentityReport {
        let row_dev = |op: &SparseOp| op.row_sums().iter().fold(0.0f64, |m, s| m.max((s - 1.0).abs()));
        let col_dev = |op: &SparseOp| {
            op.apply_transpose(&vec![1.0; op.nrows()])
                .iter()
                .fold(0.0f64, |m, s| m.max((s - 1.0).abs()))
        };
        IdentityReport {
            d2d1: self.d2.compose(&self.d1).max_abs(),
            db2db1: self.db2.compose(&self.db1).max_abs(),
            trisk: self.db2.compose(&self.w).scaled(-1.0).max_abs_diff(&self.r.compose(&self.d2)),
            curl_hodge: self.db2.compose(&self.h).max_abs_diff(&self.j.compose(&self.db2)),
            grad_hodge: self.db1.compose(&self.i).max_abs_diff(&self.h.compose(&self.db1)),
            w_antisymmetry: self.w.max_abs_diff(&self.w.transpose().scaled(-1.0)),
            m_symmetry: self.m.max_abs_diff(&self.m.transpose()),
            r_sum: col_dev(&self.r),
            j_sum: col_dev(&self.j),
            r_row_dev: row_dev(&self.r),
        }
    }
}

/// Max-norm residuals of the mimetic identities.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    /// `D2 D1`
    pub d2d1: f64,
    /// `Dbar2 Dbar1`
    pub db2db1: f64,
    /// `-Dbar2 W - R D2`
    pub trisk: f64,
    /// `Dbar2 H - J Dbar2`
    pub curl_hodge: f64,
    /// `Dbar1 I - H Dbar1`
    pub grad_hodge: f64,
    /// `W + W^T`
    pub w_antisymmetry: f64,
    pub m_symmetry: f64,
    /// `max_i |sum_j R_ji - 1|`
    pub r_sum: f64,
    /// `max_j' |sum_j J_jj' - 1|`
    pub j_sum: f64,
    /// Row-sum deviation of R (not an identity, reported for reference).
    pub r_row_dev: f64,
}

impl IdentityReport {
    pub fn lines(&self) -> Vec<(&'static str, f64, f64)> {
        vec![
            ("D2 D1 = 0", self.d2d1, 0.0),
            ("Dbar2 Dbar1 = 0", self.db2db1, 0.0),
            ("-Dbar2 W = R D2", self.trisk, 1e-12),
            ("Dbar2 H = J Dbar2", self.curl_hodge, 1e-12),
            ("Dbar1 I = H Dbar1", self.grad_hodge, 1e-12),
            ("W = -W^T", self.w_antisymmetry, 1e-14),
            ("sum_j R_ji = 1", self.r_sum, 1e-12),
            ("sum_j J_jj' = 1", self.j_sum, 1e-12),
        ]
    }

    pub fn passed(&self) -> bool {
        self.lines().iter().all(|(_, v, tol)| *v <= *tol)
    }
}
