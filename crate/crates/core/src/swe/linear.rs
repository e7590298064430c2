//! Linear shallow-water model about a resting state with constant `phi0`
//! and constant `f`:
//!
//! `Phi' + phi0 D2 U = 0`, `M U' - f W U + Dbar1 L Phi = 0`.
//!
//! Crank-Nicolson in time. `Phi^{n+1}` is eliminated, which leaves a
//! sparse system for `U^{n+1}`:
//!
//! `(M - dt f/2 W + G) U^{n+1} = (M + dt f/2 W - G) U^n - dt Dbar1 L Phi^n`,
//! `G = dt^2 phi0 / 4 D2^T L D2`.

use crate::error::Result;
use crate::linsolve::{gmres, norm, SolveInfo};
use crate::operators::OperatorSet;
use crate::sparse::SparseOp;

use super::compensated_sum;

pub struct LinearModel<'a> {
    pub ops: &'a OperatorSet,
    pub phi0: f64,
    pub f: f64,
    pub dt: f64,
    pub tol: f64,
    lhs: SparseOp,
    rhs_op: SparseOp,
    pdiag: Vec<f64>,
}

impl<'a> LinearModel<'a> {
    pub fn new(ops: &'a OperatorSet, phi0: f64, f: f64, dt: f64, tol: f64) -> Self {
        let g = ops
            .d2
            .transpose()
            .compose(&ops.l)
            .compose(&ops.d2)
            .scaled(dt * dt * phi0 / 4.0);
        let cw = ops.w.scaled(0.5 * dt * f);
        let lhs = ops.m.add_scaled(-1.0, &cw).add_scaled(1.0, &g);
        let rhs_op = ops.m.add_scaled(1.0, &cw).add_scaled(-1.0, &g);
        let pdiag = lhs.diag();
        LinearModel {
            ops,
            phi0,
            f,
            dt,
            tol,
            lhs,
            rhs_op,
            pdiag,
        }
    }

    /// One Crank-Nicolson step of `(Phi, U)`.
    pub fn step(&self, phi: &[f64], u: &[f64]) -> Result<(Vec<f64>, Vec<f64>, SolveInfo)> {
        let ops = self.ops;
        let mut b = self.rhs_op.apply(u);
        let grad = ops.db1.apply(&ops.l.apply(phi));
        for (bi, gi) in b.iter_mut().zip(&grad) {
            *bi -= self.dt * gi;
        }
        let mut u_new = u.to_vec();
        let info = if norm(&b) == 0.0 {
            u_new.iter_mut().for_each(|x| *x = 0.0);
            SolveInfo {
                iterations: 0,
                residual: 0.0,
            }
        } else {
            gmres(&self.lhs, &b, &mut u_new, &self.pdiag, self.tol, 80, 20 * u.len() + 200)?
        };
        let sum: Vec<f64> = u_new.iter().zip(u).map(|(a, b)| a + b).collect();
        let div = ops.d2.apply(&sum);
        let c = 0.5 * self.dt * self.phi0;
        let phi_new = phi.iter().zip(&div).map(|(p, d)| p - c * d).collect();
        Ok((phi_new, u_new, info))
    }

    /// `E = 1/2 Phi^T L Phi + 1/2 phi0 U^T M U`.
    pub fn energy(&self, phi: &[f64], u: &[f64]) -> f64 {
        let lp = self.ops.l.apply(phi);
        let mu = self.ops.m.apply(u);
        let terms: Vec<f64> = lp
            .iter()
            .zip(phi)
            .map(|(a, b)| 0.5 * a * b)
            .chain(mu.iter().zip(u).map(|(a, b)| 0.5 * self.phi0 * a * b))
            .collect();
        compensated_sum(&terms)
    }

    /// Geostrophically balanced state `Phi = f L^-1 R^T Psi`, `U = -D1 Psi`.
    pub fn geostrophic_state(&self, psi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ops = self.ops;
        let rt = ops.r.apply_transpose(psi);
        let phi = rt.iter().zip(&ops.cell_areas).map(|(x, a)| self.f * x * a).collect();
        let u = ops.d1.apply(psi).into_iter().map(|x| -x).collect();
        (phi, u)
    }

    /// Right-hand sides of the linear vorticity and dual-mass budgets,
    /// `N Xi' = f Dbar2 W U` and `N Phi_tilde' = R Phi' = -phi0 R D2 U`.
    /// By the TRiSK identity they differ only by the factor `f / phi0`.
    pub fn pv_tendencies(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ops = self.ops;
        // N Xi' = Dbar2 M U' = f Dbar2 W U - Dbar2 Dbar1 L Phi
        let dwu = ops.db2.apply(&ops.w.apply(u));
        let xi_rate = dwu.iter().map(|x| self.f * x).collect();
        // N Phi_tilde' = R Phi' = -phi0 R D2 U
        let phi_rate = ops.r.apply(&ops.d2.apply(u)).into_iter().map(|x| -self.phi0 * x).collect();
        (xi_rate, phi_rate)
    }
}
