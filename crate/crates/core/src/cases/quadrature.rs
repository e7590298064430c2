//! Symmetric quadrature on planar triangles and projections of analytic
//! fields into the discrete spaces.

use crate::mesh::{PolyMesh, Vec3};

/// Degree-4 symmetric rule: barycentric points and weights (summing to 1).
pub const DEG4: [([f64; 3], f64); 6] = [
    ([0.108103018168070, 0.445948490915965, 0.445948490915965], 0.223381589678011),
    ([0.445948490915965, 0.108103018168070, 0.445948490915965], 0.223381589678011),
    ([0.445948490915965, 0.445948490915965, 0.108103018168070], 0.223381589678011),
    ([0.816847572980459, 0.091576213509771, 0.091576213509771], 0.109951743655322),
    ([0.091576213509771, 0.816847572980459, 0.091576213509771], 0.109951743655322),
    ([0.091576213509771, 0.091576213509771, 0.816847572980459], 0.109951743655322),
];

/// Integral over the planar triangle `p` of `f` evaluated at the quadrature
/// points projected radially onto the unit sphere.
pub fn integrate_tri(p: [Vec3; 3], f: &impl Fn(Vec3) -> f64) -> f64 {
    let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
    DEG4.iter()
        .map(|(b, w)| w * f((p[0] * b[0] + p[1] * b[1] + p[2] * b[2]).normalize()))
        .sum::<f64>()
        * area
}

/// V2 coefficients (cell integrals over the unit-sphere facets) of `f`.
pub fn project_v2(mesh: &PolyMesh, f: impl Fn(Vec3) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_cells()];
    for (t, tri) in mesh.tris().iter().enumerate() {
        out[tri.cell] += integrate_tri(mesh.tri_corners(t), &f);
    }
    out
}

/// V^2 coefficients (dual cell integrals) of `f`.
pub fn project_dual_v2(mesh: &PolyMesh, f: impl Fn(Vec3) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_verts()];
    for (t, tri) in mesh.tris().iter().enumerate() {
        out[tri.vert] += integrate_tri(mesh.tri_corners(t), &f);
    }
    out
}

/// V0 coefficients: nodal values at primal vertices.
pub fn sample_v0(mesh: &PolyMesh, f: impl Fn(Vec3) -> f64) -> Vec<f64> {
    mesh.verts().iter().map(|&v| f(v)).collect()
}

/// V^0 coefficients: nodal values at dual vertices.
pub fn sample_dual_v0(mesh: &PolyMesh, f: impl Fn(Vec3) -> f64) -> Vec<f64> {
    mesh.centers().iter().map(|&c| f(c)).collect()
}

/// Latitude and longitude of a point on the unit sphere.
pub fn lat_lon(x: Vec3) -> (f64, f64) {
    (x.z.clamp(-1.0, 1.0).asin(), x.y.atan2(x.x))
}

/// Local east and north unit vectors at `x`.
pub fn east_north(x: Vec3) -> (Vec3, Vec3) {
    let east = Vec3::new(-x.y, x.x, 0.0);
    let en = east.norm();
    let east = if en > 1e-14 { east / en } else { Vec3::new(0.0, 1.0, 0.0) };
    (east, x.cross(&east))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_hex_icos;

    #[test]
    fn weights_sum_to_one_and_integrate_quartics() {
        let s: f64 = DEG4.iter().map(|(_, w)| w).sum();
        assert!((s - 1.0).abs() < 1e-14);
        // int over the reference triangle of x^4 is 1/30 (area 1/2)
        let v: f64 = DEG4.iter().map(|(b, w)| w * b[1].powi(4)).sum::<f64>() * 0.5;
        assert!((v - 1.0 / 30.0).abs() < 1e-13);
    }

    #[test]
    fn constant_projection_gives_areas() {
        let mesh = gen_hex_icos(2).unwrap();
        let p = project_v2(&mesh, |_| 1.0);
        for (a, b) in p.iter().zip(mesh.cell_areas()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
