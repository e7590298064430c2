//! Convergence of the scalar Laplacian and of the Coriolis operator for
//! the field `cos(lat) sin(lon)` on the unit sphere.

use super::norms::{error_norms, Norms};
use super::quadrature::{lat_lon, project_v2, sample_dual_v0, sample_v0};
use crate::error::Result;
use crate::mesh::{generate, MeshFamily, PolyMesh, Vec3};
use crate::operators::calculus::Calculus;
use crate::operators::OperatorSet;

/// `cos(lat) sin(lon)`, i.e. the Cartesian `y` coordinate; its surface
/// Laplacian on the unit sphere is `-2` times itself.
pub fn test_field(x: Vec3) -> f64 {
    let (lat, lon) = lat_lon(x);
    lat.cos() * lon.sin()
}

/// Errors of `D2 M^-1 Dbar1 L Phi` against the cell means of the exact
/// Laplacian, for `Phi` the V2 projection of [`test_field`].
pub fn laplacian_error(mesh: &PolyMesh, ops: &OperatorSet) -> Result<Norms> {
    laplacian_error_of(mesh, ops, test_field, -2.0)
}

/// As [`laplacian_error`] for an eigenfunction `f` with eigenvalue `lambda`.
pub fn laplacian_error_of(mesh: &PolyMesh, ops: &OperatorSet, f: impl Fn(Vec3) -> f64, lambda: f64) -> Result<Norms> {
    let calc = Calculus::new(ops);
    let phi = project_v2(mesh, f);
    let lap = calc.laplacian_v2(&phi)?;
    let areas = &ops.cell_areas;
    let model: Vec<f64> = lap.iter().zip(areas).map(|(l, a)| l / a).collect();
    let exact: Vec<f64> = phi.iter().zip(areas).map(|(p, a)| lambda * p / a).collect();
    Ok(error_norms(&model, &exact, areas))
}

/// Difference between the two discrete estimates of the rotated gradient
/// of the stream function, `W D1 Psi + H Dbar1 Psi_hat`, divided by the
/// primal edge length `l_e` and weighted by `l_e d_e`.
pub fn coriolis_error(mesh: &PolyMesh, ops: &OperatorSet) -> Norms {
    coriolis_error_of(mesh, ops, test_field)
}

pub fn coriolis_error_of(mesh: &PolyMesh, ops: &OperatorSet, f: impl Fn(Vec3) -> f64 + Copy) -> Norms {
    let psi = sample_v0(mesh, f);
    let psi_hat = sample_dual_v0(mesh, f);
    let a = ops.w.apply(&ops.d1.apply(&psi));
    let b = ops.h.apply(&ops.db1.apply(&psi_hat));
    let ne = mesh.n_edges();
    let mut err = Vec::with_capacity(ne);
    let mut weights = Vec::with_capacity(ne);
    for e in 0..ne {
        let l = mesh.primal_edge_length(e);
        err.push((a[e] + b[e]) / l);
        weights.push(l * mesh.dual_edge_length(e));
    }
    error_norms(&err, &vec![0.0; ne], &weights)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub linf: f64,
    pub l2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvergenceTest {
    Laplacian,
    Coriolis,
}

/// Runs `test` over refinement levels `levels` of `family`.
pub fn convergence_table(
    test: ConvergenceTest,
    family: MeshFamily,
    levels: std::ops::RangeInclusive<u32>,
) -> Result<Vec<ConvergenceRow>> {
    levels
        .map(|l| {
            let mesh = generate(family, l)?;
            let ops = OperatorSet::build(&mesh)?;
            let n = match test {
                ConvergenceTest::Laplacian => laplacian_error(&mesh, &ops)?,
                ConvergenceTest::Coriolis => coriolis_error(&mesh, &ops),
            };
            Ok(ConvergenceRow {
                cells: mesh.n_cells(),
                linf: n.linf,
                l2: n.l2,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_hex_icos;

    #[test]
    fn constant_fields_give_zero_error() {
        let mesh = gen_hex_icos(1).unwrap();
        let ops = OperatorSet::build(&mesh).unwrap();
        let n = laplacian_error_of(&mesh, &ops, |_| 1.0, 0.0).unwrap();
        assert!(n.linf < 1e-12 && n.l2 < 1e-12);
        let n = coriolis_error_of(&mesh, &ops, |_| 1.0);
        assert_eq!((n.linf, n.l2), (0.0, 0.0));
    }
}
