//! Primal and dual polygonal meshes of the unit sphere and their shared
//! triangular supermesh.
//!
//! Orientation conventions, fixed for every mesh:
//!
//! * Primal cells list their vertices and edges counterclockwise as seen from
//!   outside the sphere; `cell_edges[k]` joins `cell_verts[k]` and
//!   `cell_verts[k + 1]`.
//! * Edge `e` separates cells `[c0, c1]`. Its unit normal `n` points out of
//!   `c0` into `c1`, so `n_{e c0} = +1` and `n_{e c1} = -1`.
//! * Edge `e` joins vertices `[v0, v1]` and its tangent `t = k x n` points
//!   from `v0` to `v1` (`k` the outward radial direction), so `t_{e v1} = +1`
//!   and `t_{e v0} = -1`. The dual-edge tangent `m` runs from `c0` to `c1`.
//! * Dual cells (one per primal vertex) list the surrounding primal cells
//!   counterclockwise; `vert_edges[k]` separates `vert_cells[k]` and
//!   `vert_cells[k + 1]`.
//! * Every n-gon, primal or dual, is split into 2n supermesh triangles with
//!   corners {dual vertex, primal vertex, edge crossing}. Triangle `2s` is
//!   `(center, v_k, x_k)` and `2s + 1` is `(center, x_k, v_{k+1})` for cell
//!   slot `s = cell_offsets[i] + k`.

mod generate;
pub mod io;

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::sparse::SparseOp;
use crate::space::Space;

pub use generate::{
    cube_panel_for_level, gen_cubed_sphere, gen_hex_icos, generate, icosahedral_triangulation, MAX_CUBE_PANEL,
    MAX_HEX_LEVEL,
};

pub type Vec3 = Vector3<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeshFamily {
    Hex,
    Cube,
    Custom,
}

impl MeshFamily {
    pub fn code(self) -> &'static str {
        match self {
            MeshFamily::Hex => "hex",
            MeshFamily::Cube => "cube",
            MeshFamily::Custom => "custom",
        }
    }
}

impl std::str::FromStr for MeshFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hex" => Ok(MeshFamily::Hex),
            "cube" => Ok(MeshFamily::Cube),
            "custom" => Ok(MeshFamily::Custom),
            other => Err(Error::Config(format!("unknown mesh family `{other}`"))),
        }
    }
}

/// One planar facet of the supermesh.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperTri {
    /// Owning primal cell (its center is a corner).
    pub cell: usize,
    /// Owning dual cell, i.e. the primal vertex that is a corner.
    pub vert: usize,
    /// Primal edge whose crossing point is the third corner.
    pub edge: usize,
    pub area: f64,
    /// Unit normal pointing away from the sphere center.
    pub normal: Vec3,
    pub centroid: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolyMesh {
    pub family: MeshFamily,
    pub level: u32,
    verts: Vec<Vec3>,
    centers: Vec<Vec3>,
    crossings: Vec<Vec3>,
    cell_offsets: Vec<usize>,
    cell_verts: Vec<usize>,
    cell_edges: Vec<usize>,
    edge_cells: Vec<[usize; 2]>,
    edge_verts: Vec<[usize; 2]>,
    vert_offsets: Vec<usize>,
    vert_cells: Vec<usize>,
    vert_edges: Vec<usize>,
    tris: Vec<SuperTri>,
    /// `edge_tris[e][a][b]`: triangle of cell `edge_cells[e][a]` touching
    /// vertex `edge_verts[e][b]`.
    edge_tris: Vec<[[usize; 2]; 2]>,
    /// `tri_dual_pos[t]`: position of triangle `t` in its dual cell's wheel.
    tri_dual_pos: Vec<usize>,
    cell_areas: Vec<f64>,
    dual_areas: Vec<f64>,
}

impl PolyMesh {
    /// Builds the full primal/dual/supermesh structure from primal vertex
    /// positions and polygon vertex cycles. Cycles may be given in either
    /// orientation; they are made counterclockwise. Dual vertices are placed
    /// at the normalized centroid of each cell's vertices.
    pub fn from_polygons(
        family: MeshFamily,
        level: u32,
        verts: Vec<Vec3>,
        cells: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let centers = cells
            .iter()
            .map(|c| {
                let s: Vec3 = c.iter().map(|&v| verts[v]).sum();
                s.normalize()
            })
            .collect();
        Self::from_parts(family, level, verts, centers, cells)
    }

    /// As [`PolyMesh::from_polygons`] but with explicit dual vertices.
    pub fn from_parts(
        family: MeshFamily,
        level: u32,
        verts: Vec<Vec3>,
        centers: Vec<Vec3>,
        mut cells: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if centers.len() != cells.len() {
            return Err(Error::Dimension(format!(
                "{} dual vertices for {} cells",
                centers.len(),
                cells.len()
            )));
        }
        for (i, cyc) in cells.iter_mut().enumerate() {
            if cyc.len() < 3 {
                return Err(Error::ElementConstruction {
                    cell: i,
                    reason: format!("cell has only {} vertices", cyc.len()),
                });
            }
            let c = centers[i];
            let n = cyc.len();
            let orient: f64 = (0..n)
                .map(|k| {
                    let a = verts[cyc[k]] - c;
                    let b = verts[cyc[(k + 1) % n]] - c;
                    a.cross(&b).dot(&c)
                })
                .sum();
            if orient < 0.0 {
                cyc.reverse();
            }
        }

        let mut cell_offsets = Vec::with_capacity(cells.len() + 1);
        let mut cell_verts = Vec::new();
        let mut cell_edges = Vec::new();
        let mut edge_of: HashMap<(usize, usize), usize> = HashMap::new();
        // (first traversal a->b, cell)
        let mut edge_first: Vec<(usize, usize, usize)> = Vec::new();
        let mut edge_second: Vec<Option<usize>> = Vec::new();
        cell_offsets.push(0);
        for (i, cyc) in cells.iter().enumerate() {
            let n = cyc.len();
            for k in 0..n {
                let a = cyc[k];
                let b = cyc[(k + 1) % n];
                let key = (a.min(b), a.max(b));
                let e = match edge_of.get(&key) {
                    Some(&e) => {
                        if edge_second[e].is_some() || edge_first[e].0 != b {
                            return Err(Error::Geometry {
                                edge: e,
                                reason: "edge is not shared by exactly two consistently oriented cells"
                                    .into(),
                            });
                        }
                        edge_second[e] = Some(i);
                        e
                    }
                    None => {
                        let e = edge_first.len();
                        edge_of.insert(key, e);
                        edge_first.push((a, b, i));
                        edge_second.push(None);
                        e
                    }
                };
                cell_verts.push(a);
                cell_edges.push(e);
            }
            cell_offsets.push(cell_verts.len());
        }

        let mut edge_cells = Vec::with_capacity(edge_first.len());
        let mut edge_verts = Vec::with_capacity(edge_first.len());
        for (e, &(a, b, ca)) in edge_first.iter().enumerate() {
            let cb = edge_second[e].ok_or_else(|| Error::Geometry {
                edge: e,
                reason: "boundary edge; the mesh must be closed".into(),
            })?;
            // c0 is the lower cell index; c0 traverses v0 -> v1
            if ca < cb {
                edge_cells.push([ca, cb]);
                edge_verts.push([a, b]);
            } else {
                edge_cells.push([cb, ca]);
                edge_verts.push([b, a]);
            }
        }

        let nv = verts.len();
        let nc = cells.len();
        let ne = edge_cells.len();
        if nv + nc != ne + 2 {
            return Err(Error::Geometry {
                edge: 0,
                reason: format!("Euler characteristic V - E + F = {} != 2", nv as i64 - ne as i64 + nc as i64),
            });
        }

        // dual cells: around vertex v, ccw order is e_next(i), cell i, e_prev(i)
        let mut around: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); nv];
        for i in 0..nc {
            let (o, n) = (cell_offsets[i], cell_offsets[i + 1] - cell_offsets[i]);
            for k in 0..n {
                let v = cell_verts[o + k];
                let e_next = cell_edges[o + k];
                let e_prev = cell_edges[o + (k + n - 1) % n];
                around[v].push((i, e_prev, e_next));
            }
        }
        let mut vert_offsets = Vec::with_capacity(nv + 1);
        let mut vert_cells = Vec::new();
        let mut vert_edges = Vec::new();
        vert_offsets.push(0);
        for (v, list) in around.iter().enumerate() {
            if list.len() < 3 {
                return Err(Error::Geometry {
                    edge: list.first().map(|x| x.1).unwrap_or(0),
                    reason: format!("vertex {v} has valence {}", list.len()),
                });
            }
            let mut cur = 0;
            for _ in 0..list.len() {
                let (i, e_prev, _) = list[cur];
                vert_cells.push(i);
                vert_edges.push(e_prev);
                cur = list
                    .iter()
                    .position(|&(_, _, en)| en == e_prev)
                    .ok_or_else(|| Error::Geometry {
                        edge: e_prev,
                        reason: format!("cannot close the dual cell around vertex {v}"),
                    })?;
            }
            if cur != 0 {
                return Err(Error::Geometry {
                    edge: list[0].1,
                    reason: format!("dual cell around vertex {v} is not a single cycle"),
                });
            }
            vert_offsets.push(vert_cells.len());
        }

        let crossings = edge_cells
            .iter()
            .zip(&edge_verts)
            .enumerate()
            .map(|(e, (c, v))| edge_crossing(e, verts[v[0]], verts[v[1]], centers[c[0]], centers[c[1]]))
            .collect::<Result<Vec<_>>>()?;

        let mut mesh = PolyMesh {
            family,
            level,
            verts,
            centers,
            crossings,
            cell_offsets,
            cell_verts,
            cell_edges,
            edge_cells,
            edge_verts,
            vert_offsets,
            vert_cells,
            vert_edges,
            tris: Vec::new(),
            edge_tris: Vec::new(),
            tri_dual_pos: Vec::new(),
            cell_areas: Vec::new(),
            dual_areas: Vec::new(),
        };
        mesh.build_supermesh()?;
        Ok(mesh)
    }

    /// Splits every primal n-gon into 2n triangles (and thereby every dual
    /// m-gon into 2m of the same triangles) and records areas.
    fn build_supermesh(&mut self) -> Result<()> {
        let ne = self.n_edges();
        let mut tris = Vec::with_capacity(2 * self.cell_verts.len());
        let mut edge_tris = vec![[[usize::MAX; 2]; 2]; ne];
        let mut cell_areas = vec![0.0; self.n_cells()];
        for i in 0..self.n_cells() {
            let c = self.centers[i];
            let (verts, edges) = self.cell(i);
            let n = verts.len();
            for k in 0..n {
                let e = edges[k];
                let x = self.crossings[e];
                let corners = [(verts[k], [c, self.verts[verts[k]], x]), (verts[(k + 1) % n], [c, x, self.verts[verts[(k + 1) % n]]])];
                for (v, p) in corners {
                    let raw = (p[1] - p[0]).cross(&(p[2] - p[0]));
                    let centroid = (p[0] + p[1] + p[2]) / 3.0;
                    let area = 0.5 * raw.norm();
                    if raw.dot(&centroid) <= 0.0 || area <= 0.0 {
                        return Err(Error::Geometry {
                            edge: e,
                            reason: format!("supermesh triangle in cell {i} at vertex {v} has non-positive area"),
                        });
                    }
                    let side_c = usize::from(self.edge_cells[e][0] != i);
                    let side_v = usize::from(self.edge_verts[e][0] != v);
                    edge_tris[e][side_c][side_v] = tris.len();
                    cell_areas[i] += area;
                    tris.push(SuperTri {
                        cell: i,
                        vert: v,
                        edge: e,
                        area,
                        normal: raw / (2.0 * area),
                        centroid,
                    });
                }
            }
        }
        let mut tri_dual_pos = vec![usize::MAX; tris.len()];
        let mut dual_areas = vec![0.0; self.n_verts()];
        for j in 0..self.n_verts() {
            for (m, t) in self.dual_wheel_tris(j, &edge_tris).into_iter().enumerate() {
                if tris[t].vert != j {
                    return Err(Error::Geometry {
                        edge: tris[t].edge,
                        reason: format!("triangle {t} claimed by dual cell {j} belongs to vertex {}", tris[t].vert),
                    });
                }
                tri_dual_pos[t] = m;
                dual_areas[j] += tris[t].area;
            }
        }
        self.tris = tris;
        self.edge_tris = edge_tris;
        self.tri_dual_pos = tri_dual_pos;
        self.cell_areas = cell_areas;
        self.dual_areas = dual_areas;
        Ok(())
    }

    fn dual_wheel_tris(&self, j: usize, edge_tris: &[[[usize; 2]; 2]]) -> Vec<usize> {
        let (cells, edges) = self.dual_cell(j);
        let m = cells.len();
        let mut out = Vec::with_capacity(2 * m);
        for k in 0..m {
            let e = edges[k];
            let side_v = usize::from(self.edge_verts[e][0] != j);
            for c in [cells[k], cells[(k + 1) % m]] {
                let side_c = usize::from(self.edge_cells[e][0] != c);
                out.push(edge_tris[e][side_c][side_v]);
            }
        }
        out
    }

    pub fn n_verts(&self) -> usize {
        self.verts.len()
    }

    pub fn n_cells(&self) -> usize {
        self.centers.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_cells.len()
    }

    pub fn n_tris(&self) -> usize {
        self.tris.len()
    }

    /// Primal vertex positions (also the dual cell centers).
    pub fn verts(&self) -> &[Vec3] {
        &self.verts
    }

    /// Dual vertex positions, one per primal cell.
    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn crossings(&self) -> &[Vec3] {
        &self.crossings
    }

    /// Counterclockwise vertex and edge cycles of primal cell `i`.
    pub fn cell(&self, i: usize) -> (&[usize], &[usize]) {
        let r = self.cell_offsets[i]..self.cell_offsets[i + 1];
        (&self.cell_verts[r.clone()], &self.cell_edges[r])
    }

    pub fn cell_offset(&self, i: usize) -> usize {
        self.cell_offsets[i]
    }

    /// Counterclockwise cycles of cells and edges around primal vertex `j`.
    pub fn dual_cell(&self, j: usize) -> (&[usize], &[usize]) {
        let r = self.vert_offsets[j]..self.vert_offsets[j + 1];
        (&self.vert_cells[r.clone()], &self.vert_edges[r])
    }

    pub fn edge_cells(&self, e: usize) -> [usize; 2] {
        self.edge_cells[e]
    }

    pub fn edge_verts(&self, e: usize) -> [usize; 2] {
        self.edge_verts[e]
    }

    /// `n_{e i}`: +1 if the normal of `e` points out of cell `i`, -1 if in,
    /// 0 if `e` is not an edge of `i`.
    pub fn n_ei(&self, e: usize, i: usize) -> f64 {
        let [c0, c1] = self.edge_cells[e];
        if i == c0 {
            1.0
        } else if i == c1 {
            -1.0
        } else {
            0.0
        }
    }

    /// `t_{e j}`: +1 if the tangent of `e` points towards vertex `j`.
    pub fn t_ej(&self, e: usize, j: usize) -> f64 {
        let [v0, v1] = self.edge_verts[e];
        if j == v1 {
            1.0
        } else if j == v0 {
            -1.0
        } else {
            0.0
        }
    }

    pub fn tris(&self) -> &[SuperTri] {
        &self.tris
    }

    /// Supermesh triangle belonging to cell side `a` and vertex side `b` of
    /// edge `e`.
    pub fn edge_tri(&self, e: usize, cell_side: usize, vert_side: usize) -> usize {
        self.edge_tris[e][cell_side][vert_side]
    }

    /// Position of triangle `t` within the 2n-triangle wheel of its primal
    /// cell.
    pub fn tri_primal_pos(&self, t: usize) -> usize {
        t - 2 * self.cell_offsets[self.tris[t].cell]
    }

    /// Position of triangle `t` within the 2m-triangle wheel of its dual
    /// cell.
    pub fn tri_dual_pos(&self, t: usize) -> usize {
        self.tri_dual_pos[t]
    }

    /// Supermesh triangles of primal cell `i`, in wheel order.
    pub fn cell_tris(&self, i: usize) -> std::ops::Range<usize> {
        2 * self.cell_offsets[i]..2 * self.cell_offsets[i + 1]
    }

    /// Supermesh triangles of dual cell `j`, in wheel order.
    pub fn dual_cell_tris(&self, j: usize) -> Vec<usize> {
        self.dual_wheel_tris(j, &self.edge_tris)
    }

    /// Corner positions of triangle `t` as (dual vertex, primal vertex,
    /// crossing).
    pub fn tri_corners(&self, t: usize) -> [Vec3; 3] {
        let tr = &self.tris[t];
        [self.centers[tr.cell], self.verts[tr.vert], self.crossings[tr.edge]]
    }

    /// Planar facet area of each primal cell.
    pub fn cell_areas(&self) -> &[f64] {
        &self.cell_areas
    }

    /// Planar facet area of each dual cell.
    pub fn dual_areas(&self) -> &[f64] {
        &self.dual_areas
    }

    /// Total length of primal edge `e` along its two supermesh half-edges.
    pub fn primal_edge_length(&self, e: usize) -> f64 {
        let [v0, v1] = self.edge_verts[e];
        let x = self.crossings[e];
        (x - self.verts[v0]).norm() + (self.verts[v1] - x).norm()
    }

    /// Total length of dual edge `e` along its two supermesh half-edges.
    pub fn dual_edge_length(&self, e: usize) -> f64 {
        let [c0, c1] = self.edge_cells[e];
        let x = self.crossings[e];
        (x - self.centers[c0]).norm() + (self.centers[c1] - x).norm()
    }

    /// Signed incidence matrices `(D1, D2)`: `D1[e][j] = t_{e j}` maps V0 to
    /// V1 and `D2[i][e] = n_{e i}` maps V1 to V2.
    pub fn incidence(&self) -> (SparseOp, SparseOp) {
        let ne = self.n_edges();
        let mut d1 = Vec::with_capacity(2 * ne);
        let mut d2 = Vec::with_capacity(2 * ne);
        for e in 0..ne {
            let [v0, v1] = self.edge_verts[e];
            d1.push((e, v0, -1.0));
            d1.push((e, v1, 1.0));
            let [c0, c1] = self.edge_cells[e];
            d2.push((c0, e, 1.0));
            d2.push((c1, e, -1.0));
        }
        (
            SparseOp::from_triplets(Space::V0, Space::V1, ne, self.n_verts(), &d1),
            SparseOp::from_triplets(Space::V1, Space::V2, self.n_cells(), ne, &d2),
        )
    }

    /// Incidence in the dual spaces: `(Dbar1, Dbar2) = (-D2^T, D1^T)`.
    pub fn dual_incidence(&self) -> (SparseOp, SparseOp) {
        let (d1, d2) = self.incidence();
        let mut db1 = d2.transpose().scaled(-1.0);
        db1.source = Space::DualV0;
        db1.target = Space::DualV1;
        let mut db2 = d1.transpose();
        db2.source = Space::DualV1;
        db2.target = Space::DualV2;
        (db1, db2)
    }

    /// Unit normal to primal edge `e` at its crossing point, tangent to the
    /// sphere and pointing from `c0` to `c1`.
    pub fn edge_normal(&self, e: usize) -> Vec3 {
        let [v0, v1] = self.edge_verts[e];
        let x = self.crossings[e];
        (self.verts[v1] - self.verts[v0]).cross(&x).normalize()
    }

    /// Unit tangent of dual edge `e` at its crossing point, pointing from
    /// `c0` to `c1`.
    pub fn dual_edge_tangent(&self, e: usize) -> Vec3 {
        let [c0, c1] = self.edge_cells[e];
        let x = self.crossings[e];
        let d = self.centers[c1] - self.centers[c0];
        (d - x * x.dot(&d)).normalize()
    }
}

/// Intersection of the great circles through `v0, v1` (primal edge) and
/// `c0, c1` (dual edge); must lie inside both arcs.
fn edge_crossing(e: usize, v0: Vec3, v1: Vec3, c0: Vec3, c1: Vec3) -> Result<Vec3> {
    let pn = v0.cross(&v1);
    let dn = c0.cross(&c1);
    let mut p = pn.cross(&dn);
    let len = p.norm();
    if len < 1e-15 {
        return Err(Error::Geometry {
            edge: e,
            reason: "primal and dual great circles coincide".into(),
        });
    }
    p /= len;
    if p.dot(&(v0 + v1)) < 0.0 {
        p = -p;
    }
    let inside = |a: Vec3, b: Vec3, n: Vec3| a.cross(&p).dot(&n) > 0.0 && p.cross(&b).dot(&n) > 0.0;
    if !inside(v0, v1, pn) || !inside(c0, c1, dn) {
        return Err(Error::Geometry {
            edge: e,
            reason: "primal and dual edges do not cross within both segments".into(),
        });
    }
    Ok(p)
}
