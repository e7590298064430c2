use std::collections::HashMap;
use std::f64::consts::FRAC_PI_4;

use super::{MeshFamily, PolyMesh, Vec3};
use crate::error::{Error, Result};

/// Largest accepted hexagonal refinement level (2.6M cells).
pub const MAX_HEX_LEVEL: u32 = 9;
/// Largest accepted cubed-sphere panel resolution (6.3M cells).
pub const MAX_CUBE_PANEL: usize = 1024;

fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ];
    let verts = raw.iter().map(|r| Vec3::new(r[0], r[1], r[2]).normalize()).collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (verts, faces)
}

/// Geodesic triangulation from `level` recursive bisections of the
/// icosahedron; `10 * 4^level + 2` nodes.
pub fn icosahedral_triangulation(level: u32) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let (mut verts, mut faces) = icosahedron();
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(4 * faces.len());
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push((verts[a] + verts[b]).normalize());
                verts.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    (verts, faces)
}

/// Hexagonal-icosahedral mesh: Voronoi-like cells around the nodes of the
/// geodesic triangulation, with primal vertices at the triangle
/// circumcenters. Produces `10 * 4^level + 2` cells, 12 of them pentagons.
pub fn gen_hex_icos(level: u32) -> Result<PolyMesh> {
    if level > MAX_HEX_LEVEL {
        return Err(Error::Resource(format!(
            "hexagonal level {level} exceeds the limit {MAX_HEX_LEVEL} ({} cells)",
            10 * 4u64.pow(level) + 2
        )));
    }
    let (gens, faces) = icosahedral_triangulation(level);
    let verts: Vec<Vec3> = faces
        .iter()
        .map(|&[a, b, c]| {
            let n = (gens[b] - gens[a]).cross(&(gens[c] - gens[a])).normalize();
            if n.dot(&gens[a]) < 0.0 {
                -n
            } else {
                n
            }
        })
        .collect();
    let mut rings: Vec<Vec<usize>> = vec![Vec::new(); gens.len()];
    for (f, tri) in faces.iter().enumerate() {
        for &g in tri {
            rings[g].push(f);
        }
    }
    for (g, ring) in rings.iter_mut().enumerate() {
        let z = gens[g];
        let x = (verts[ring[0]] - z * z.dot(&verts[ring[0]])).normalize();
        let y = z.cross(&x);
        let angle = |v: usize| {
            let d = verts[v] - z;
            d.dot(&y).atan2(d.dot(&x))
        };
        ring.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)));
    }
    PolyMesh::from_polygons(MeshFamily::Hex, level, verts, rings)
}

/// Equiangular gnomonic cubed sphere with `n_panel x n_panel` cells per
/// face.
pub fn gen_cubed_sphere(n_panel: usize) -> Result<PolyMesh> {
    if n_panel == 0 {
        return Err(Error::Config("cubed-sphere panel resolution must be at least 1".into()));
    }
    if n_panel > MAX_CUBE_PANEL {
        return Err(Error::Resource(format!(
            "cubed-sphere panel resolution {n_panel} exceeds the limit {MAX_CUBE_PANEL}"
        )));
    }
    let n = n_panel;
    let coord = |c: usize| -> f64 {
        if c == 0 {
            -1.0
        } else if c == n {
            1.0
        } else {
            (FRAC_PI_4 * (2.0 * c as f64 / n as f64 - 1.0)).tan()
        }
    };
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut verts = Vec::new();
    let mut cells = Vec::with_capacity(6 * n * n);
    let mut lattice = |p: [usize; 3], verts: &mut Vec<Vec3>| {
        *index.entry(p).or_insert_with(|| {
            verts.push(Vec3::new(coord(p[0]), coord(p[1]), coord(p[2])).normalize());
            verts.len() - 1
        })
    };
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n] {
            for i in 0..n {
                for j in 0..n {
                    let corner = |di: usize, dj: usize| {
                        let mut p = [0; 3];
                        p[axis] = side;
                        p[u] = i + di;
                        p[v] = j + dj;
                        p
                    };
                    let quad = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
                    cells.push(quad.iter().map(|&p| lattice(p, &mut verts)).collect());
                }
            }
        }
    }
    let level = (0..=MAX_HEX_LEVEL).find(|&l| 3usize << l == n).unwrap_or(0);
    PolyMesh::from_polygons(MeshFamily::Cube, level, verts, cells)
}

/// Panel resolution for cubed-sphere refinement level `level`
/// (54, 216, 864, ... cells).
pub fn cube_panel_for_level(level: u32) -> Result<usize> {
    let n = 3usize
        .checked_shl(level)
        .filter(|&n| n <= MAX_CUBE_PANEL)
        .ok_or_else(|| Error::Resource(format!("cubed-sphere level {level} too large")))?;
    Ok(n)
}

/// Generates the mesh of `family` at refinement `level`: hexagonal meshes
/// have `10 * 4^level + 2` cells, cubed spheres `6 * (3 * 2^level)^2`.
pub fn generate(family: MeshFamily, level: u32) -> Result<PolyMesh> {
    match family {
        MeshFamily::Hex => gen_hex_icos(level),
        MeshFamily::Cube => gen_cubed_sphere(cube_panel_for_level(level)?),
        MeshFamily::Custom => Err(Error::Config("custom meshes are loaded from file, not generated".into())),
    }
}
