//! Compound basis functions on the supermesh.
//!
//! Every compound function restricted to one supermesh triangle is a
//! standard lowest-order function there: constant (V2, V^2), RT0 (V1),
//! rotated RT0 (V^1) or P1 (V0, V^0). They are stored in closed form per
//! triangle, relative to the triangle centroid `g`:
//!
//! * vector fields `u(x) = a + b (x - g) + c k x (x - g)`
//! * scalar fields `s(x) = s0 + grad . (x - g)`
//!
//! Interior coefficients are fixed by discrete harmonic extension on the
//! wheel of 2n triangles around each cell center (see [`Wheel`]).

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::mesh::{PolyMesh, Vec3};
use crate::space::Space;

/// Planar facet geometry of one supermesh triangle.
#[derive(Clone, Debug)]
pub struct TriGeom {
    pub centroid: Vec3,
    pub normal: Vec3,
    pub area: f64,
    /// `int (x - g)(x - g)^T dA` over the facet.
    pub second_moment: Matrix3<f64>,
}

impl TriGeom {
    pub fn new(p: [Vec3; 3]) -> Self {
        let raw = (p[1] - p[0]).cross(&(p[2] - p[0]));
        let area = 0.5 * raw.norm();
        let centroid = (p[0] + p[1] + p[2]) / 3.0;
        let mut normal = raw / (2.0 * area);
        if normal.dot(&centroid) < 0.0 {
            normal = -normal;
        }
        let second_moment = p
            .iter()
            .map(|q| {
                let d = q - centroid;
                d * d.transpose()
            })
            .sum::<Matrix3<f64>>()
            * (area / 12.0);
        TriGeom {
            centroid,
            normal,
            area,
            second_moment,
        }
    }

    /// `int |x - g|^2 dA`.
    pub fn polar_moment(&self) -> f64 {
        self.second_moment.trace()
    }
}

/// Affine tangent vector field on a facet.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AffineVec {
    pub a: Vec3,
    pub b: f64,
    pub c: f64,
}

impl AffineVec {
    pub fn eval(&self, geom: &TriGeom, x: Vec3) -> Vec3 {
        let r = x - geom.centroid;
        self.a + r * self.b + geom.normal.cross(&r) * self.c
    }

    /// `k x u`.
    pub fn perp(&self, geom: &TriGeom) -> AffineVec {
        AffineVec {
            a: geom.normal.cross(&self.a),
            b: -self.c,
            c: self.b,
        }
    }

    pub fn divergence(&self) -> f64 {
        2.0 * self.b
    }

    /// `k . curl u`.
    pub fn curl(&self) -> f64 {
        2.0 * self.c
    }

    /// `int u . v dA`.
    pub fn inner(&self, other: &AffineVec, geom: &TriGeom) -> f64 {
        geom.area * self.a.dot(&other.a) + (self.b * other.b + self.c * other.c) * geom.polar_moment()
    }

    /// `int k . (u x v) dA`.
    pub fn cross_inner(&self, other: &AffineVec, geom: &TriGeom) -> f64 {
        geom.area * geom.normal.dot(&self.a.cross(&other.a))
            + (self.b * other.c - self.c * other.b) * geom.polar_moment()
    }

    pub fn scaled(&self, s: f64) -> AffineVec {
        AffineVec {
            a: self.a * s,
            b: self.b * s,
            c: self.c * s,
        }
    }

    pub fn add(&self, o: &AffineVec) -> AffineVec {
        AffineVec {
            a: self.a + o.a,
            b: self.b + o.b,
            c: self.c + o.c,
        }
    }
}

/// Affine scalar field on a facet.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct P1 {
    pub mean: f64,
    pub grad: Vec3,
}

impl P1 {
    pub fn eval(&self, geom: &TriGeom, x: Vec3) -> f64 {
        self.mean + self.grad.dot(&(x - geom.centroid))
    }

    /// `int s t dA`.
    pub fn inner(&self, other: &P1, geom: &TriGeom) -> f64 {
        geom.area * self.mean * other.mean + (geom.second_moment * other.grad).dot(&self.grad)
    }

    /// `int s dA`.
    pub fn integral(&self, geom: &TriGeom) -> f64 {
        geom.area * self.mean
    }
}

/// A polygon split into 2n triangles `(center, ring[m], ring[m + 1])`
/// around its center node; ring nodes alternate corner, crossing, corner...
#[derive(Clone, Debug)]
pub struct Wheel {
    pub center: Vec3,
    pub ring: Vec<Vec3>,
    /// Global supermesh triangle ids in wheel order.
    pub tris: Vec<usize>,
    pub geoms: Vec<TriGeom>,
    /// Owning polygon, for error reports.
    pub owner: usize,
}

impl Wheel {
    fn new(owner: usize, center: Vec3, ring: Vec<Vec3>, tris: Vec<usize>) -> Result<Self> {
        let n = ring.len();
        let mut geoms = Vec::with_capacity(n);
        for m in 0..n {
            let p = [center, ring[m], ring[(m + 1) % n]];
            let raw = (p[1] - p[0]).cross(&(p[2] - p[0]));
            if raw.dot(&(p[0] + p[1] + p[2])) <= 0.0 {
                return Err(Error::ElementConstruction {
                    cell: owner,
                    reason: format!("subelement {m} is degenerate or inverted"),
                });
            }
            geoms.push(TriGeom::new(p));
        }
        Ok(Wheel {
            center,
            ring,
            tris,
            geoms,
            owner,
        })
    }

    /// Wheel of primal cell `i`: ring `v_0, x_0, v_1, x_1, ...`.
    pub fn primal(mesh: &PolyMesh, i: usize) -> Result<Self> {
        let (vs, es) = mesh.cell(i);
        let ring = vs
            .iter()
            .zip(es)
            .flat_map(|(&v, &e)| [mesh.verts()[v], mesh.crossings()[e]])
            .collect();
        Self::new(i, mesh.centers()[i], ring, mesh.cell_tris(i).collect())
    }

    /// Wheel of dual cell `j`: ring `c_0, x_0, c_1, x_1, ...`.
    pub fn dual(mesh: &PolyMesh, j: usize) -> Result<Self> {
        let (cs, es) = mesh.dual_cell(j);
        let ring = cs
            .iter()
            .zip(es)
            .flat_map(|(&c, &e)| [mesh.centers()[c], mesh.crossings()[e]])
            .collect();
        Self::new(j, mesh.verts()[j], ring, mesh.dual_cell_tris(j))
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.geoms.iter().map(|g| g.area).sum()
    }

    fn node(&self, m: usize) -> Vec3 {
        self.ring[m % self.ring.len()]
    }

    /// Lengths of the two boundary sub-edges of polygon side `k`.
    pub fn side_lengths(&self, k: usize) -> (f64, f64) {
        let (p, x, q) = (self.node(2 * k), self.node(2 * k + 1), self.node(2 * k + 2));
        ((x - p).norm(), (q - x).norm())
    }

    /// Flux through every spoke `center -> ring[m]`, counted from triangle
    /// `m - 1` into triangle `m`, for prescribed outward boundary fluxes
    /// `outer[m]` through `ring[m] -> ring[m + 1]`. The divergence is the
    /// same constant on all subelements and the weak curl against the
    /// center hat function vanishes.
    pub fn solve_spokes(&self, outer: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        let total: f64 = outer.iter().sum();
        let area = self.area();
        let mut f = vec![0.0; n];
        for m in 0..n - 1 {
            f[m + 1] = f[m] + total * self.geoms[m].area / area - outer[m];
        }
        // constant circulation s: each triangle gains s e_m / (2 A_m)
        let (mut num, mut den) = (0.0, 0.0);
        for m in 0..n {
            let e = self.node(m + 1) - self.node(m);
            let a = self.rt_const(m, outer[m], f[m], f[(m + 1) % n]);
            num += a.dot(&e);
            den += e.norm_squared() / (2.0 * self.geoms[m].area);
        }
        if !(den > 0.0) || !num.is_finite() {
            return Err(Error::ElementConstruction {
                cell: self.owner,
                reason: "singular weak-curl condition".into(),
            });
        }
        let s = -num / den;
        Ok(f.into_iter().map(|x| x + s).collect())
    }

    fn rt_const(&self, m: usize, outer: f64, f_in: f64, f_out: f64) -> Vec3 {
        let g = &self.geoms[m];
        let (c, r0, r1) = (self.center, self.node(m), self.node(m + 1));
        let gc = g.centroid;
        ((gc - c) * outer + (gc - r0) * f_out - (gc - r1) * f_in) / (2.0 * g.area)
    }

    /// RT0 field on each subelement for the given boundary and spoke fluxes.
    pub fn rt_fields(&self, outer: &[f64], spokes: &[f64]) -> Vec<AffineVec> {
        let n = self.len();
        (0..n)
            .map(|m| {
                let (f_in, f_out) = (spokes[m], spokes[(m + 1) % n]);
                AffineVec {
                    a: self.rt_const(m, outer[m], f_in, f_out),
                    b: (outer[m] + f_out - f_in) / (2.0 * self.geoms[m].area),
                    c: 0.0,
                }
            })
            .collect()
    }

    /// Center value of the P1 function with the given ring values that is
    /// discretely harmonic at the center node.
    pub fn harmonic_center(&self, ring_vals: &[f64]) -> Result<f64> {
        let n = self.len();
        let (mut rhs, mut diag) = (0.0, 0.0);
        for m in 0..n {
            let (c, r0, r1) = (self.center, self.node(m), self.node(m + 1));
            let q = 4.0 * self.geoms[m].area;
            let e = r1 - r0;
            diag += e.norm_squared() / q;
            rhs += e.dot(&(c - r1)) / q * ring_vals[m] + e.dot(&(r0 - c)) / q * ring_vals[(m + 1) % n];
        }
        if !(diag > 0.0) {
            return Err(Error::ElementConstruction {
                cell: self.owner,
                reason: "zero pivot in the interior Laplace solve".into(),
            });
        }
        Ok(-rhs / diag)
    }

    /// P1 fields on each subelement from ring values and center value.
    pub fn p1_fields(&self, ring_vals: &[f64], center_val: f64) -> Vec<P1> {
        let n = self.len();
        (0..n)
            .map(|m| {
                let g = &self.geoms[m];
                let (c, r0, r1) = (self.center, self.node(m), self.node(m + 1));
                let (v0, v1) = (ring_vals[m], ring_vals[(m + 1) % n]);
                let k = g.normal;
                let grad = (k.cross(&(r1 - r0)) * center_val + k.cross(&(c - r1)) * v0 + k.cross(&(r0 - c)) * v1)
                    / (2.0 * g.area);
                P1 {
                    mean: (center_val + v0 + v1) / 3.0,
                    grad,
                }
            })
            .collect()
    }

    /// Outward boundary fluxes carrying total flux `sign` through side `k`,
    /// split in proportion to the two sub-edge lengths.
    pub fn side_flux(&self, k: usize, sign: f64) -> Vec<f64> {
        let mut outer = vec![0.0; self.len()];
        let (la, lb) = self.side_lengths(k);
        outer[2 * k] = sign * la / (la + lb);
        outer[2 * k + 1] = sign * lb / (la + lb);
        outer
    }

    /// Ring values of the nodal function equal to 1 at polygon corner `k`,
    /// linear in arc length along the two adjacent sides.
    pub fn corner_ring_values(&self, k: usize) -> Vec<f64> {
        let n = self.len();
        let sides = n / 2;
        let mut vals = vec![0.0; n];
        vals[2 * k] = 1.0;
        let (la, lb) = self.side_lengths(k);
        vals[2 * k + 1] = lb / (la + lb);
        let prev = (k + sides - 1) % sides;
        let (la, lb) = self.side_lengths(prev);
        vals[2 * prev + 1] += la / (la + lb);
        vals
    }
}

/// Restrictions of all compound basis functions to each supermesh triangle.
/// `v1[t]` lists `(edge, field)` for every V1 function supported on `t`,
/// and likewise for the other spaces. V2 and V^2 functions are the constants
/// `1 / A_i` and `1 / A_j` and are not stored.
#[derive(Clone, Debug)]
pub struct Elements {
    pub geom: Vec<TriGeom>,
    pub v1: Vec<Vec<(usize, AffineVec)>>,
    pub v0: Vec<Vec<(usize, P1)>>,
    pub dual_v1: Vec<Vec<(usize, AffineVec)>>,
    pub dual_v0: Vec<Vec<(usize, P1)>>,
    /// Facet area of each primal cell.
    pub cell_areas: Vec<f64>,
    /// Facet area of each dual cell.
    pub dual_areas: Vec<f64>,
}

impl Elements {
    pub fn build(mesh: &PolyMesh) -> Result<Self> {
        let nt = mesh.n_tris();
        let mut geom: Vec<Option<TriGeom>> = vec![None; nt];
        let mut v1 = vec![Vec::new(); nt];
        let mut v0 = vec![Vec::new(); nt];
        let mut dual_v1 = vec![Vec::new(); nt];
        let mut dual_v0 = vec![Vec::new(); nt];
        let mut cell_areas = vec![0.0; mesh.n_cells()];
        let mut dual_areas = vec![0.0; mesh.n_verts()];

        for i in 0..mesh.n_cells() {
            let w = Wheel::primal(mesh, i)?;
            cell_areas[i] = w.area();
            let (vs, es) = mesh.cell(i);
            for (k, &e) in es.iter().enumerate() {
                let outer = w.side_flux(k, mesh.n_ei(e, i));
                let spokes = w.solve_spokes(&outer)?;
                for (m, u) in w.rt_fields(&outer, &spokes).into_iter().enumerate() {
                    v1[w.tris[m]].push((e, u));
                }
            }
            for (k, &v) in vs.iter().enumerate() {
                let ring = w.corner_ring_values(k);
                let center = w.harmonic_center(&ring)?;
                for (m, p) in w.p1_fields(&ring, center).into_iter().enumerate() {
                    v0[w.tris[m]].push((v, p));
                }
            }
            for (m, g) in w.geoms.into_iter().enumerate() {
                geom[w.tris[m]] = Some(g);
            }
        }

        for j in 0..mesh.n_verts() {
            let w = Wheel::dual(mesh, j)?;
            dual_areas[j] = w.area();
            let (cs, es) = mesh.dual_cell(j);
            for (k, &e) in es.iter().enumerate() {
                let outer = w.side_flux(k, mesh.t_ej(e, j));
                let spokes = w.solve_spokes(&outer)?;
                for (m, u) in w.rt_fields(&outer, &spokes).into_iter().enumerate() {
                    dual_v1[w.tris[m]].push((e, u.perp(&w.geoms[m])));
                }
            }
            for (k, &c) in cs.iter().enumerate() {
                let ring = w.corner_ring_values(k);
                let center = w.harmonic_center(&ring)?;
                for (m, p) in w.p1_fields(&ring, center).into_iter().enumerate() {
                    dual_v0[w.tris[m]].push((c, p));
                }
            }
        }

        let geom = geom
            .into_iter()
            .enumerate()
            .map(|(t, g)| {
                g.ok_or(Error::ElementConstruction {
                    cell: mesh.tris()[t].cell,
                    reason: format!("triangle {t} not covered by its cell"),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Elements {
            geom,
            v1,
            v0,
            dual_v1,
            dual_v0,
            cell_areas,
            dual_areas,
        })
    }

    /// Value of the V2 (or V^2) basis function of the owning cell on
    /// triangle `t`.
    pub fn v2_value(&self, mesh: &PolyMesh, t: usize) -> f64 {
        1.0 / self.cell_areas[mesh.tris()[t].cell]
    }

    pub fn dual_v2_value(&self, mesh: &PolyMesh, t: usize) -> f64 {
        1.0 / self.dual_areas[mesh.tris()[t].vert]
    }

    /// Expansion of every compound basis function of `space` in
    /// subelement basis functions.
    pub fn basis(&self, mesh: &PolyMesh, space: Space) -> CompoundBasis {
        let nt = mesh.n_tris();
        let mut dofs = vec![Vec::new(); space.dim(mesh)];
        for t in 0..nt {
            let p = mesh.tri_corners(t);
            let g = &self.geom[t];
            // corner order (dual vertex, primal vertex, crossing) is clockwise on odd triangles
            let orient = (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&g.normal).signum();
            match space {
                Space::V2 => dofs[mesh.tris()[t].cell].push((t, self.v2_value(mesh, t))),
                Space::DualV2 => dofs[mesh.tris()[t].vert].push((t, self.dual_v2_value(mesh, t))),
                Space::V1 | Space::DualV1 => {
                    let list = if space == Space::V1 { &self.v1[t] } else { &self.dual_v1[t] };
                    for (dof, u) in list {
                        for k in 0..3 {
                            let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
                            let mid = u.eval(g, (a + b) / 2.0);
                            let coef = if space == Space::V1 {
                                mid.dot(&(b - a).cross(&g.normal))
                            } else {
                                mid.dot(&(b - a))
                            };
                            dofs[*dof].push((3 * t + k, orient * coef));
                        }
                    }
                }
                Space::V0 | Space::DualV0 => {
                    let list = if space == Space::V0 { &self.v0[t] } else { &self.dual_v0[t] };
                    for (dof, s) in list {
                        for (k, &q) in p.iter().enumerate() {
                            dofs[*dof].push((3 * t + k, s.eval(g, q)));
                        }
                    }
                }
            }
        }
        CompoundBasis { space, dofs }
    }
}

/// Compound basis functions of one space as combinations of subelement
/// basis functions. Subelement ids: `t` for the constant on triangle `t`;
/// `3t + k` for the RT0 (outward flux) or rotated RT0 (counterclockwise
/// circulation) function of the side opposite corner `k`, or the P1 hat of
/// corner `k`. Corners are ordered (dual vertex, primal vertex, crossing).
#[derive(Clone, Debug)]
pub struct CompoundBasis {
    pub space: Space,
    pub dofs: Vec<Vec<(usize, f64)>>,
}

impl CompoundBasis {
    pub fn write_text(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "# space {}", self.space)?;
        writeln!(w, "# dof subelement coefficient")?;
        for (d, list) in self.dofs.iter().enumerate() {
            for (s, c) in list {
                writeln!(w, "{d} {s} {c:.17e}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_cubed_sphere, gen_hex_icos};

    #[test]
    fn regular_hexagon_center_value_is_one_sixth() {
        // planar regular hexagon lifted to z = 1 so normals point outwards
        let z = Vec3::new(0.0, 0.0, 1.0);
        let corner = |k: usize| {
            let a = std::f64::consts::PI / 3.0 * k as f64;
            z + Vec3::new(a.cos(), a.sin(), 0.0) * 0.1
        };
        let mut ring = Vec::new();
        for k in 0..6 {
            ring.push(corner(k));
            ring.push((corner(k) + corner(k + 1)) / 2.0);
        }
        let w = Wheel::new(0, z, ring, (0..12).collect()).unwrap();
        let vals = w.corner_ring_values(2);
        let c = w.harmonic_center(&vals).unwrap();
        assert!((c - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn v1_functions_have_unit_edge_flux_and_constant_divergence() {
        let mesh = gen_hex_icos(2).unwrap();
        let el = Elements::build(&mesh).unwrap();
        let basis = el.basis(&mesh, Space::V1);
        for e in 0..mesh.n_edges() {
            // flux of v_e out of c0 through the two sub-edges of each edge
            let mut flux = std::collections::HashMap::<usize, f64>::new();
            for &(sub, c) in &basis.dofs[e] {
                let t = sub / 3;
                if sub % 3 == 0 {
                    let tri = &mesh.tris()[t];
                    let out = if mesh.edge_cells(tri.edge)[0] == tri.cell { c } else { -c };
                    *flux.entry(tri.edge).or_default() += out;
                }
            }
            for (&e2, &f) in &flux {
                let want = if e2 == e { 2.0 } else { 0.0 };
                // counted once from each side
                assert!((f - want).abs() < 1e-13, "edge {e} flux through {e2} = {f}");
            }
        }
        for t in 0..mesh.n_tris() {
            let i = mesh.tris()[t].cell;
            for (e, u) in &el.v1[t] {
                let want = mesh.n_ei(*e, i) / el.cell_areas[i];
                assert!((u.divergence() - want).abs() < 1e-11 * want.abs());
            }
        }
    }

    #[test]
    fn v0_partition_of_unity() {
        for mesh in [gen_hex_icos(2).unwrap(), gen_cubed_sphere(4).unwrap()] {
            let el = Elements::build(&mesh).unwrap();
            for t in 0..mesh.n_tris() {
                let s: f64 = el.v0[t].iter().map(|(_, p)| p.mean).sum();
                let g: Vec3 = el.v0[t].iter().map(|(_, p)| p.grad).sum();
                assert!((s - 1.0).abs() < 1e-13 && g.norm() < 1e-10);
                let s: f64 = el.dual_v0[t].iter().map(|(_, p)| p.mean).sum();
                assert!((s - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rotated_gradient_of_v0_is_minus_d1() {
        let mesh = gen_cubed_sphere(3).unwrap();
        let el = Elements::build(&mesh).unwrap();
        for t in 0..mesh.n_tris() {
            let g = &el.geom[t];
            for (j, p) in &el.v0[t] {
                let rot = g.normal.cross(&p.grad);
                let mut sum = AffineVec::default();
                for (e, u) in &el.v1[t] {
                    sum = sum.add(&u.scaled(-mesh.t_ej(*e, *j)));
                }
                assert!((sum.a - rot).norm() < 1e-10 * (1.0 + rot.norm()), "tri {t}");
                assert!(sum.b.abs() < 1e-9 && sum.c.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dual_v1_circulation_is_kronecker() {
        let mesh = gen_hex_icos(1).unwrap();
        let el = Elements::build(&mesh).unwrap();
        let mut circ = vec![std::collections::HashMap::<usize, f64>::new(); mesh.n_edges()];
        for t in 0..mesh.n_tris() {
            let tri = &mesh.tris()[t];
            let c = mesh.centers()[tri.cell];
            let x = mesh.crossings()[tri.edge];
            let sign = mesh.n_ei(tri.edge, tri.cell);
            for (e, w) in &el.dual_v1[t] {
                let along = w.eval(&el.geom[t], (c + x) / 2.0).dot(&(x - c)) * sign;
                *circ[*e].entry(tri.edge).or_default() += along;
            }
        }
        for (e, map) in circ.iter().enumerate() {
            for (&e2, &c) in map {
                // each half-edge is seen from both adjacent dual cells
                let want = if e2 == e { 2.0 } else { 0.0 };
                assert!((c - want).abs() < 1e-13, "edge {e} circulation on {e2} = {c}");
            }
        }
    }
}
