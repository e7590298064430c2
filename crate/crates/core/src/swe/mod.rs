//! Shallow-water models on the compound-element spaces: the linear
//! constant-coefficient model and the nonlinear semi-implicit model.
//!
//! Prognostic fields are `Phi` (V2, cell integrals of the geopotential)
//! and `U` (V1, edge-integrated normal fluxes). All operators are expected
//! at the planet radius (see [`OperatorSet::scaled`]).

pub mod budget;
pub mod linear;
pub mod nonlinear;

use crate::error::{Error, Result};
use crate::linsolve::{jacobi_solve, DiagApprox};
use crate::mesh::{PolyMesh, Vec3};
use crate::operators::calculus::Calculus;
use crate::operators::OperatorSet;

pub use budget::{step_budget, BudgetResiduals, Consistency, TracerBudget};
pub use linear::LinearModel;
pub use nonlinear::{ShallowWater, SolverConfig, StepReport};

pub const EARTH_RADIUS: f64 = 6.37122e6;
pub const EARTH_OMEGA: f64 = 7.292e-5;
pub const EARTH_GRAVITY: f64 = 9.80616;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Planet {
    pub radius: f64,
    pub omega: f64,
    pub gravity: f64,
}

impl Default for Planet {
    fn default() -> Self {
        Planet {
            radius: EARTH_RADIUS,
            omega: EARTH_OMEGA,
            gravity: EARTH_GRAVITY,
        }
    }
}

impl Planet {
    /// `f = 2 Omega sin(lat)` at a unit vector.
    pub fn coriolis_at(&self, x: Vec3) -> f64 {
        2.0 * self.omega * x.z
    }

    /// V^2 coefficients of `f`: value at the dual-cell centroid times the
    /// physical dual-cell area.
    pub fn dual_coriolis(&self, mesh: &PolyMesh) -> Vec<f64> {
        let a2 = self.radius * self.radius;
        dual_centroids(mesh)
            .iter()
            .zip(mesh.dual_areas())
            .map(|(c, area)| self.coriolis_at(*c) * area * a2)
            .collect()
    }
}

/// Unit vectors through the area-weighted centroids of the dual cells.
pub fn dual_centroids(mesh: &PolyMesh) -> Vec<Vec3> {
    let mut acc = vec![Vec3::zeros(); mesh.n_verts()];
    for t in mesh.tris() {
        acc[t.vert] += t.centroid * t.area;
    }
    acc.into_iter().map(|c| c.normalize()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    pub phi: Vec<f64>,
    pub u: Vec<f64>,
    /// Surface geopotential, V2 coefficients; zero for flat orography.
    pub phi_orog: Vec<f64>,
    /// Model time in seconds.
    pub time: f64,
}

impl ModelState {
    pub fn new(phi: Vec<f64>, u: Vec<f64>) -> Self {
        let n = phi.len();
        ModelState {
            phi,
            u,
            phi_orog: vec![0.0; n],
            time: 0.0,
        }
    }

    /// `Phi + Phi_orog`.
    pub fn phi_total(&self) -> Vec<f64> {
        self.phi.iter().zip(&self.phi_orog).map(|(a, b)| a + b).collect()
    }

    /// Neumaier-compensated `sum_i Phi_i`.
    pub fn mass(&self) -> f64 {
        compensated_sum(&self.phi)
    }

    pub fn is_finite(&self) -> bool {
        self.phi.iter().chain(&self.u).all(|x| x.is_finite())
    }
}

pub fn compensated_sum(x: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &v in x {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

/// Kinetic energy V2 coefficients `k_i = 1/2 sum T_iee' u_e u_e'`.
pub fn compute_k(mesh: &PolyMesh, ops: &OperatorSet, u: &[f64]) -> Vec<f64> {
    ops.kinetic(mesh, u)
}

/// How to apply `J^-1` when diagnosing dual fields.
#[derive(Clone, Copy, Debug)]
pub enum DualInverse<'a> {
    /// Relaxed Jacobi with the given number of iterations.
    Jacobi(&'a DiagApprox, usize),
    /// Krylov solve to the given relative tolerance.
    Tight(f64),
}

impl DualInverse<'_> {
    fn apply(&self, ops: &OperatorSet, b: &[f64]) -> Result<Vec<f64>> {
        match *self {
            DualInverse::Jacobi(jstar, iters) => jacobi_solve(&ops.j, jstar, b, None, iters),
            DualInverse::Tight(tol) => Calculus::with_tol(ops, tol).j_inv(b),
        }
    }
}

/// Dual-mesh fields derived from `(Phi, U)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualFields {
    /// Relative vorticity, V^2 coefficients: `J Xi_hat = Dbar2 M U`.
    pub xi_hat: Vec<f64>,
    /// Dual mass: `J Phi_bar = R Phi`.
    pub phi_bar: Vec<f64>,
    /// PV mixing ratio `(f + xi_hat) / phi_bar`.
    pub pi: Vec<f64>,
}

/// PV and the fields it is built from. `f_hat` are the V^2 coefficients of
/// the Coriolis parameter.
pub fn compute_pv(ops: &OperatorSet, f_hat: &[f64], phi: &[f64], u: &[f64], inv: DualInverse) -> Result<DualFields> {
    let xi_hat = inv.apply(ops, &ops.db2.apply(&ops.m.apply(u)))?;
    let phi_bar = inv.apply(ops, &ops.r.apply(phi))?;
    if let Some(j) = phi_bar.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::StateValidity(format!(
            "non-positive dual mass {} at dual cell {j}",
            phi_bar[j]
        )));
    }
    let pi = f_hat
        .iter()
        .zip(&xi_hat)
        .zip(&phi_bar)
        .map(|((f, x), p)| (f + x) / p)
        .collect();
    Ok(DualFields { xi_hat, phi_bar, pi })
}

/// Energy split of a nonlinear state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Energy {
    pub kinetic: f64,
    /// Available potential energy relative to a flat free surface at rest.
    pub available_potential: f64,
}

impl Energy {
    pub fn available(&self) -> f64 {
        self.kinetic + self.available_potential
    }
}

/// `KE = sum phi_i k_i` and `APE = 1/2 int (phi + phi_s)^2 - 1/2 int c^2`
/// with `c` the mass-conserving flat surface geopotential.
pub fn energy(mesh: &PolyMesh, ops: &OperatorSet, state: &ModelState) -> Energy {
    let k = compute_k(mesh, ops, &state.u);
    let kinetic = compensated_sum(
        &state
            .phi
            .iter()
            .zip(&k)
            .zip(&ops.cell_areas)
            .map(|((p, k), a)| p / a * k)
            .collect::<Vec<_>>(),
    );
    let total_area: f64 = compensated_sum(&ops.cell_areas);
    let surf = state.phi_total();
    let c = compensated_sum(&surf) / total_area;
    let pot = compensated_sum(
        &surf
            .iter()
            .zip(&ops.cell_areas)
            .map(|(s, a)| 0.5 * (s - c * a).powi(2) / a)
            .collect::<Vec<_>>(),
    );
    Energy {
        kinetic,
        available_potential: pot,
    }
}

/// `1/2 sum_j Phi_bar_j pi_j^2`.
pub fn potential_enstrophy(dual: &DualFields) -> f64 {
    compensated_sum(&dual.phi_bar.iter().zip(&dual.pi).map(|(p, q)| 0.5 * p * q * q).collect::<Vec<_>>())
}
