//! Forward-in-time upwind finite-volume fluxes on the primal mesh (mass
//! fluxes from volume fluxes) and on the dual mesh (PV fluxes from dual mass
//! fluxes).
//!
//! The face value is the upwind cell's least-squares linear reconstruction
//! evaluated at the centroid of the swept region: the edge moved back by
//! half the fluid displacement over the step (normal depth `|T| / (rho L)`
//! plus the tangential displacement when it is supplied). Densities are also
//! compressed by half the upwind cell's divergence over the step. With the
//! limiter on, the high-order fluxes are blended with first-order upwind
//! fluxes by flux-corrected transport so that the updated mixing ratios
//! stay within the range of the upwind-cell neighbourhoods.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::mesh::{PolyMesh, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Primal,
    Dual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdvectionConfig {
    pub limiter: bool,
    /// 1: piecewise constant, 2: piecewise linear reconstruction.
    pub order: u8,
}

impl Default for AdvectionConfig {
    fn default() -> Self {
        AdvectionConfig {
            limiter: false,
            order: 2,
        }
    }
}

#[derive(Clone, Debug)]
struct Stencil {
    e1: Vec3,
    e2: Vec3,
    nbrs: Vec<usize>,
    offsets: Vec<Vector2<f64>>,
    inv: Option<Matrix2<f64>>,
}

/// Geometry and reconstruction stencils of one side of the mesh.
#[derive(Clone, Debug)]
pub struct AdvectionContext {
    pub side: Side,
    pub config: AdvectionConfig,
    pub radius: f64,
    pos: Vec<Vec3>,
    /// Unit-sphere facet areas.
    areas: Vec<f64>,
    /// `[a, b]`: positive flux moves content from `a` to `b`.
    edges: Vec<[usize; 2]>,
    edge_point: Vec<Vec3>,
    /// Unit tangent at the edge point pointing from `a` towards `b`.
    edge_dir: Vec<Vec3>,
    /// Unit tangent along the edge: `k x n` on the primal mesh, `n` on the
    /// dual mesh.
    edge_tan: Vec<Vec3>,
    edge_len: Vec<f64>,
    /// Per cell: `(edge, +1 if the cell is a)`.
    cell_edges: Vec<Vec<(usize, f64)>>,
    stencils: Vec<Stencil>,
}

/// Reconstruction stencil: cells sharing at least one vertex (primal) or
/// one primal cell (dual) with cell `i`.
fn wide_neighbours(mesh: &PolyMesh, side: Side, i: usize) -> Vec<usize> {
    let mut out = Vec::new();
    match side {
        Side::Primal => {
            for &v in mesh.cell(i).0 {
                out.extend(mesh.dual_cell(v).0.iter().copied());
            }
        }
        Side::Dual => {
            for &c in mesh.dual_cell(i).0 {
                out.extend(mesh.cell(c).0.iter().copied());
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out.retain(|&k| k != i);
    out
}

fn tangent_frame(x: Vec3) -> (Vec3, Vec3) {
    let helper = if x.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (helper - x * x.dot(&helper)).normalize();
    (e1, x.cross(&e1))
}

impl AdvectionContext {
    pub fn new(mesh: &PolyMesh, side: Side, radius: f64, config: AdvectionConfig) -> Self {
        let ne = mesh.n_edges();
        let (areas, n) = match side {
            Side::Primal => (mesh.cell_areas().to_vec(), mesh.n_cells()),
            Side::Dual => (mesh.dual_areas().to_vec(), mesh.n_verts()),
        };
        // cell means are second-order values at the area centroids
        let mut pos = vec![Vec3::zeros(); n];
        for t in mesh.tris() {
            let owner = match side {
                Side::Primal => t.cell,
                Side::Dual => t.vert,
            };
            pos[owner] += t.centroid * t.area;
        }
        for p in &mut pos {
            *p = p.normalize();
        }
        let mut edges = Vec::with_capacity(ne);
        let mut edge_dir = Vec::with_capacity(ne);
        let mut edge_tan = Vec::with_capacity(ne);
        let mut edge_len = Vec::with_capacity(ne);
        let mut cell_edges = vec![Vec::new(); n];
        for e in 0..ne {
            let x = mesh.crossings()[e];
            let nrm = mesh.edge_normal(e);
            let (ab, dir, tan, len) = match side {
                Side::Primal => (mesh.edge_cells(e), nrm, x.cross(&nrm), mesh.primal_edge_length(e)),
                Side::Dual => {
                    let [v0, v1] = mesh.edge_verts(e);
                    ([v1, v0], nrm.cross(&x), nrm, mesh.dual_edge_length(e))
                }
            };
            cell_edges[ab[0]].push((e, 1.0));
            cell_edges[ab[1]].push((e, -1.0));
            edges.push(ab);
            edge_dir.push(dir);
            edge_tan.push(tan);
            edge_len.push(len);
        }
        let stencils = (0..n)
            .map(|i| {
                let (e1, e2) = tangent_frame(pos[i]);
                let nbrs = wide_neighbours(mesh, side, i);
                let offsets: Vec<Vector2<f64>> = nbrs.iter().map(|&k| project(pos[i], e1, e2, pos[k])).collect();
                let g: Matrix2<f64> = offsets.iter().map(|d| d * d.transpose()).sum();
                Stencil {
                    e1,
                    e2,
                    nbrs,
                    offsets,
                    inv: g.try_inverse(),
                }
            })
            .collect();
        AdvectionContext {
            side,
            config,
            radius,
            pos,
            areas,
            edges,
            edge_point: mesh.crossings().to_vec(),
            edge_dir,
            edge_tan,
            edge_len,
            cell_edges,
            stencils,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.pos.len()
    }

    /// Physical cell areas.
    pub fn areas(&self) -> Vec<f64> {
        let a2 = self.radius * self.radius;
        self.areas.iter().map(|a| a * a2).collect()
    }

    /// Least-squares gradients in each cell's gnomonic tangent plane.
    pub fn gradients(&self, q: &[f64]) -> Vec<Vector2<f64>> {
        self.stencils
            .iter()
            .enumerate()
            .map(|(i, s)| match s.inv {
                Some(inv) => {
                    let b: Vector2<f64> = s.nbrs.iter().zip(&s.offsets).map(|(&k, d)| d * (q[k] - q[i])).sum();
                    inv * b
                }
                None => Vector2::zeros(),
            })
            .collect()
    }

    fn reconstruct(&self, i: usize, q: &[f64], grad: &Vector2<f64>, p: Vec3) -> f64 {
        let s = &self.stencils[i];
        q[i] + grad.dot(&project(self.pos[i], s.e1, s.e2, p))
    }

    /// `sum_e s_ie F_e`: net outflow of each cell.
    pub fn divergence(&self, flux: &[f64]) -> Vec<f64> {
        self.cell_edges
            .iter()
            .map(|list| list.iter().map(|&(e, s)| s * flux[e]).sum())
            .collect()
    }

    /// Physical lengths of the edges.
    pub fn edge_lengths(&self) -> Vec<f64> {
        self.edge_len.iter().map(|l| l * self.radius).collect()
    }

    /// Largest ratio of outflow to carrier amount over the cells, with the
    /// cell it occurs in.
    pub fn max_courant(&self, t: &[f64], carrier: &[f64]) -> Result<(usize, f64)> {
        let mut outflow = vec![0.0; self.n_cells()];
        for (e, &te) in t.iter().enumerate() {
            outflow[self.upwind(e, te)] += te.abs();
        }
        let mut worst = (0, 0.0f64);
        for (i, (o, c)) in outflow.iter().zip(carrier).enumerate() {
            if !(*c > 0.0) {
                return Err(Error::StateValidity(format!(
                    "non-positive carrier amount {c} in {:?} cell {i}",
                    self.side
                )));
            }
            if o / c > worst.1 {
                worst = (i, o / c);
            }
        }
        Ok(worst)
    }

    /// Fluxes of content `T q` for carrier fluxes `t` (time-integrated),
    /// mixing ratios `q` and carrier amounts `carrier` (volume or mass per
    /// cell, physical units). `shift` is the displacement of fluid along
    /// each edge over the time step (physical length, along `k x n` on the
    /// primal mesh and `n` on the dual mesh); without it the swept region
    /// is taken to move normal to the edge.
    pub fn fluxes(&self, t: &[f64], q: &[f64], carrier: &[f64], shift: Option<&[f64]>) -> Result<Vec<f64>> {
        self.swept_fluxes(t, q, carrier, shift, false)
    }

    /// Fluxes of a density `q` (content per unit area) moved by volume
    /// fluxes `t`. The face value also accounts for the compression of the
    /// upwind cell over half the step, `q (1 - div / 2)`, so that it is
    /// centred in time for divergent flow.
    pub fn density_fluxes(&self, t: &[f64], q: &[f64], shift: Option<&[f64]>) -> Result<Vec<f64>> {
        self.swept_fluxes(t, q, &self.areas(), shift, true)
    }

    fn swept_fluxes(
        &self,
        t: &[f64],
        q: &[f64],
        carrier: &[f64],
        shift: Option<&[f64]>,
        density: bool,
    ) -> Result<Vec<f64>> {
        let n = self.n_cells();
        assert_eq!(q.len(), n);
        assert_eq!(carrier.len(), n);
        assert_eq!(t.len(), self.edges.len());
        let (i, courant) = self.max_courant(t, carrier)?;
        if courant > 1.0 {
            let side = match self.side {
                Side::Primal => "primal",
                Side::Dual => "dual",
            };
            return Err(Error::Advection { side, cell: i, courant });
        }
        let low: Vec<f64> = t.iter().enumerate().map(|(e, &te)| te * q[self.upwind(e, te)]).collect();
        if self.config.order < 2 {
            return Ok(low);
        }
        let grads = self.gradients(q);
        let a2 = self.radius * self.radius;
        let squeeze: Vec<f64> = if density {
            self.divergence(t)
                .iter()
                .zip(carrier)
                .map(|(d, c)| 1.0 - 0.5 * d / c)
                .collect()
        } else {
            vec![1.0; q.len()]
        };
        let high: Vec<f64> = t
            .iter()
            .enumerate()
            .map(|(e, &te)| {
                if te == 0.0 {
                    return 0.0;
                }
                let up = self.upwind(e, te);
                let density = carrier[up] / (self.areas[up] * a2);
                let depth = te.abs() / (density * self.edge_len[e] * a2);
                let mut disp = self.edge_dir[e] * (te.signum() * depth);
                if let Some(sh) = shift {
                    disp += self.edge_tan[e] * (sh[e] / self.radius);
                }
                let centroid = (self.edge_point[e] - disp * 0.5).normalize();
                te * squeeze[up] * self.reconstruct(up, q, &grads[up], centroid)
            })
            .collect();
        if !self.config.limiter {
            return Ok(high);
        }
        Ok(self.flux_correct(&low, &high, t, q, carrier))
    }

    fn upwind(&self, e: usize, te: f64) -> usize {
        let [a, b] = self.edges[e];
        if te >= 0.0 {
            a
        } else {
            b
        }
    }

    /// Zalesak limiting of `high - low` against neighbourhood bounds of `q`.
    fn flux_correct(&self, low: &[f64], high: &[f64], t: &[f64], q: &[f64], carrier: &[f64]) -> Vec<f64> {
        let n = self.n_cells();
        let new_carrier: Vec<f64> = self.divergence(t).iter().zip(carrier).map(|(d, c)| c - d).collect();
        let low_div = self.divergence(low);
        let mut r_plus = vec![0.0; n];
        let mut r_minus = vec![0.0; n];
        for i in 0..n {
            let q_low = (carrier[i] * q[i] - low_div[i]) / new_carrier[i];
            let (mut qmin, mut qmax) = (q[i], q[i]);
            for &k in &self.stencils[i].nbrs {
                qmin = qmin.min(q[k]);
                qmax = qmax.max(q[k]);
            }
            let (mut p_in, mut p_out) = (0.0, 0.0);
            for &(e, s) in &self.cell_edges[i] {
                let anti = s * (high[e] - low[e]);
                if anti > 0.0 {
                    p_out += anti;
                } else {
                    p_in -= anti;
                }
            }
            let q_in = ((qmax - q_low) * new_carrier[i]).max(0.0);
            let q_out = ((q_low - qmin) * new_carrier[i]).max(0.0);
            r_plus[i] = if p_in > 0.0 { (q_in / p_in).min(1.0) } else { 0.0 };
            r_minus[i] = if p_out > 0.0 { (q_out / p_out).min(1.0) } else { 0.0 };
        }
        (0..self.edges.len())
            .map(|e| {
                let [a, b] = self.edges[e];
                let anti = high[e] - low[e];
                let c = if anti >= 0.0 {
                    r_plus[b].min(r_minus[a])
                } else {
                    r_plus[a].min(r_minus[b])
                };
                low[e] + c * anti
            })
            .collect()
    }
}

fn project(x: Vec3, e1: Vec3, e2: Vec3, p: Vec3) -> Vector2<f64> {
    let d = p / p.dot(&x) - x;
    Vector2::new(d.dot(&e1), d.dot(&e2))
}

/// Mass fluxes `F = Adv1(U_t, Phi)` from time-integrated volume fluxes
/// `U_t` and V2 coefficients `Phi` (cell integrals of the geopotential).
/// `shift`: time-integrated tangential velocity along `k x n`.
pub fn adv1(ctx: &AdvectionContext, u_t: &[f64], phi: &[f64], shift: Option<&[f64]>) -> Result<Vec<f64>> {
    let q: Vec<f64> = phi.iter().zip(ctx.areas()).map(|(p, a)| p / a).collect();
    ctx.density_fluxes(u_t, &q, shift)
}

/// PV fluxes `Q = Adv2(F_perp, Pi, Phi_bar)` on the dual mesh, from
/// time-integrated dual mass fluxes, PV mixing ratios and dual masses.
/// `shift`: time-integrated velocity along the primal edge normals.
pub fn adv2(
    ctx: &AdvectionContext,
    f_perp: &[f64],
    pi: &[f64],
    phi_bar: &[f64],
    shift: Option<&[f64]>,
) -> Result<Vec<f64>> {
    ctx.fluxes(f_perp, pi, phi_bar, shift)
}
