//! Nonlinear semi-implicit shallow-water model.
//!
//! Solves the (off-centred) Crank-Nicolson system
//!
//! `Phi^{n+1} - Phi^n + D2 F = 0`,
//! `M U^{n+1} - M U^n + H Q + dt Dbar1 L (alpha (Phi_T + K)^{n+1} + beta (Phi_T + K)^n) = 0`
//!
//! with `F = Adv1(dt (alpha U^{n+1} + beta U^n), Phi^n)`, `H F_perp = -W F`
//! and `Q = Adv2(F_perp, Pi^n)` by a fixed number of approximate-Newton
//! iterations. Each iteration solves a Helmholtz problem for the
//! geopotential increment and back-substitutes for the flux increment.

use crate::advection::{adv1, adv2, AdvectionConfig, AdvectionContext, Side};
use crate::error::{Error, Result};
use crate::linsolve::{jacobi_solve, norm, sparse_m_inverse, DiagApprox, Helmholtz, Relaxation};
use crate::mesh::{MeshFamily, PolyMesh};
use crate::operators::OperatorSet;
use crate::sparse::SparseOp;

use super::{compute_k, compute_pv, DualFields, DualInverse, ModelState, Planet};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub newton_iters: usize,
    /// Off-centring weight of the new time level.
    pub alpha: f64,
    pub helmholtz_tol: f64,
    /// Jacobi iterations for the once-per-step inverses of J.
    pub jacobi_outer: usize,
    /// Warm-started Jacobi iterations for H per Newton iteration.
    pub jacobi_inner: usize,
    pub relaxation: Relaxation,
    /// Use the one-Jacobi sparse inverse of M in the Helmholtz operator
    /// (otherwise the diagonal one).
    pub sparse_m_inverse: bool,
    pub advection: AdvectionConfig,
    /// Evaluate the residual once more after the last update.
    pub final_residual: bool,
}

impl SolverConfig {
    pub fn for_family(family: MeshFamily) -> Self {
        SolverConfig {
            newton_iters: 4,
            alpha: 0.5,
            helmholtz_tol: 1e-8,
            jacobi_outer: 10,
            jacobi_inner: 2,
            relaxation: Relaxation::for_family(family),
            sparse_m_inverse: true,
            advection: AdvectionConfig::default(),
            final_residual: false,
        }
    }

    /// Settings with near-exact inner solves.
    pub fn tight(mut self) -> Self {
        self.helmholtz_tol = 1e-12;
        self.jacobi_outer = 40;
        self.jacobi_inner = 10;
        self
    }
}

/// What one nonlinear step did.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    /// Combined relative residual at the start of every Newton iteration
    /// (plus after the last update if requested).
    pub residuals: Vec<f64>,
    pub helmholtz_iterations: Vec<usize>,
    /// Dual fields of the old time level as used by the step.
    pub dual: DualFields,
    /// Time-integrated fluxes of the last residual evaluation.
    pub f_tilde: Vec<f64>,
    pub f_perp_hat: Vec<f64>,
    /// Time-integrated velocity across dual edges, `H U_perp_hat = -W U_t`.
    pub u_perp_hat: Vec<f64>,
    pub q_perp_hat: Vec<f64>,
    /// Largest advective Courant numbers (outflow over cell content) of
    /// the last evaluation on the primal and dual meshes.
    pub courant: [f64; 2],
}

pub struct ShallowWater<'a> {
    pub mesh: &'a PolyMesh,
    pub ops: &'a OperatorSet,
    pub planet: Planet,
    pub config: SolverConfig,
    /// V^2 coefficients of the Coriolis parameter.
    pub f_hat: Vec<f64>,
    jstar: DiagApprox,
    hstar: DiagApprox,
    minv: SparseOp,
    adv_primal: AdvectionContext,
    adv_dual: AdvectionContext,
    primal_len: Vec<f64>,
    dual_len: Vec<f64>,
}

impl<'a> ShallowWater<'a> {
    pub fn new(mesh: &'a PolyMesh, ops: &'a OperatorSet, planet: Planet, config: SolverConfig) -> Result<Self> {
        if (ops.radius - planet.radius).abs() > 1e-9 * planet.radius {
            return Err(Error::Config(format!(
                "operators built for radius {} but planet radius is {}",
                ops.radius, planet.radius
            )));
        }
        if !(config.alpha > 0.0 && config.alpha <= 1.0) {
            return Err(Error::Config(format!("off-centring alpha {} outside (0, 1]", config.alpha)));
        }
        let rel = config.relaxation;
        let jstar = DiagApprox::j_star(ops, rel.j)?;
        let hstar = DiagApprox::h_star(mesh, ops, rel.h)?;
        let mstar = DiagApprox::m_star(mesh, ops, rel.m)?;
        let minv = sparse_m_inverse(&ops.m, &mstar, config.sparse_m_inverse);
        let adv_primal = AdvectionContext::new(mesh, Side::Primal, planet.radius, config.advection);
        let adv_dual = AdvectionContext::new(mesh, Side::Dual, planet.radius, config.advection);
        let primal_len = adv_primal.edge_lengths();
        let dual_len = adv_dual.edge_lengths();
        Ok(ShallowWater {
            mesh,
            ops,
            planet,
            config,
            f_hat: planet.dual_coriolis(mesh),
            jstar,
            hstar,
            minv,
            adv_primal,
            adv_dual,
            primal_len,
            dual_len,
        })
    }

    /// Dual fields with the model's own (Jacobi) inverse of J.
    pub fn dual_fields(&self, state: &ModelState) -> Result<DualFields> {
        compute_pv(
            self.ops,
            &self.f_hat,
            &state.phi,
            &state.u,
            DualInverse::Jacobi(&self.jstar, self.config.jacobi_outer),
        )
    }

    /// `phi^n` interpolated to edges as the mean of the two adjacent cells.
    fn phi_star(&self, phi: &[f64]) -> Vec<f64> {
        let dens: Vec<f64> = phi.iter().zip(&self.ops.cell_areas).map(|(p, a)| p / a).collect();
        (0..self.mesh.n_edges())
            .map(|e| {
                let [c0, c1] = self.mesh.edge_cells(e);
                0.5 * (dens[c0] + dens[c1])
            })
            .collect()
    }

    fn gradient_term(&self, phi: &[f64], phi_orog: &[f64], u: &[f64]) -> Vec<f64> {
        let k = compute_k(self.mesh, self.ops, u);
        let b: Vec<f64> = phi.iter().zip(phi_orog).zip(&k).map(|((p, o), k)| p + o + k).collect();
        self.ops.db1.apply(&self.ops.l.apply(&b))
    }

    pub fn step(&self, state: &ModelState, dt: f64) -> Result<(ModelState, StepReport)> {
        self.step_from(state, dt, None)
    }

    /// A step whose H solves start from the dual fluxes of `previous` (the
    /// report of the preceding step) instead of the diagonal first guess.
    pub fn step_from(
        &self,
        state: &ModelState,
        dt: f64,
        previous: Option<&StepReport>,
    ) -> Result<(ModelState, StepReport)> {
        let ops = self.ops;
        let cfg = &self.config;
        let (alpha, beta) = (cfg.alpha, 1.0 - cfg.alpha);
        let (phi_n, u_n) = (&state.phi, &state.u);
        let dual = self.dual_fields(state)?;
        let grad_n = self.gradient_term(phi_n, &state.phi_orog, u_n);
        let phi_star = self.phi_star(phi_n);
        let helm = Helmholtz::new(ops, &self.minv, &phi_star, (alpha * dt).powi(2), cfg.helmholtz_tol);

        let mu_n = ops.m.apply(u_n);
        let grad_total: Vec<f64> = {
            let pt = state.phi_total();
            ops.db1.apply(&ops.l.apply(&pt))
        };
        let phi_scale = norm(phi_n).max(f64::MIN_POSITIVE);
        let u_scale = {
            let s = norm(&mu_n) + dt * norm(&grad_total) + 1e-6 * dt * norm(&ops.l.apply(&state.phi_total()));
            if s > 0.0 {
                s
            } else {
                1.0
            }
        };

        let mut phi = phi_n.clone();
        let mut u = u_n.clone();
        let mut f_perp: Option<Vec<f64>> = previous.map(|r| r.f_perp_hat.clone());
        let mut u_perp: Option<Vec<f64>> = previous.map(|r| r.u_perp_hat.clone());
        let mut residuals = Vec::with_capacity(cfg.newton_iters + 1);
        let mut helm_iters = Vec::with_capacity(cfg.newton_iters);
        let mut fluxes = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let evaluations = cfg.newton_iters + usize::from(cfg.final_residual);
        for l in 0..evaluations.max(1) {
            let ubar: Vec<f64> = u.iter().zip(u_n).map(|(a, b)| dt * (alpha * a + beta * b)).collect();
            // fluid displacement along each primal edge (from the perp
            // velocity) and along each dual edge (the primal normal flux)
            let wu: Vec<f64> = ops.w.apply(&ubar).into_iter().map(|x| -x).collect();
            let up = jacobi_solve(&ops.h, &self.hstar, &wu, u_perp.as_deref(), cfg.jacobi_inner)?;
            let shift_primal: Vec<f64> = up.iter().zip(&self.dual_len).map(|(x, l)| -x / l).collect();
            let shift_dual: Vec<f64> = ubar.iter().zip(&self.primal_len).map(|(x, l)| x / l).collect();
            u_perp = Some(up.clone());
            let f_tilde = adv1(&self.adv_primal, &ubar, phi_n, Some(&shift_primal))?;
            let wf: Vec<f64> = ops.w.apply(&f_tilde).into_iter().map(|x| -x).collect();
            let fp = jacobi_solve(&ops.h, &self.hstar, &wf, f_perp.as_deref(), cfg.jacobi_inner)?;
            let q = adv2(&self.adv_dual, &fp, &dual.pi, &dual.phi_bar, Some(&shift_dual))?;

            let div = ops.d2.apply(&f_tilde);
            let r_phi: Vec<f64> = phi.iter().zip(phi_n).zip(&div).map(|((a, b), d)| a - b + d).collect();
            let grad_l = self.gradient_term(&phi, &state.phi_orog, &u);
            let mu = ops.m.apply(&u);
            let hq = ops.h.apply(&q);
            let r_u: Vec<f64> = (0..u.len())
                .map(|e| mu[e] - mu_n[e] + hq[e] + dt * (alpha * grad_l[e] + beta * grad_n[e]))
                .collect();
            let res = ((norm(&r_phi) / phi_scale).powi(2) + (norm(&r_u) / u_scale).powi(2)).sqrt();
            if !res.is_finite() {
                residuals.push(res);
                return Err(Error::Newton { trace: residuals });
            }
            if let Some(&prev) = residuals.last() {
                let floor = 1e-12 + cfg.helmholtz_tol * residuals[0];
                if res > prev && res > floor {
                    residuals.push(res);
                    return Err(Error::Newton { trace: residuals });
                }
            }
            residuals.push(res);
            f_perp = Some(fp.clone());
            fluxes = (f_tilde, fp, q, ubar, up);
            if l >= cfg.newton_iters {
                break;
            }

            // Phi' + alpha dt D2 phi* Minv (Dbar1 L Phi') ... eliminated:
            // rhs = R_Phi - alpha dt D2 phi* Minv R_U
            let minv_ru = self.minv.apply(&r_u);
            let flux_corr: Vec<f64> = minv_ru.iter().zip(&phi_star).map(|(a, p)| a * p).collect();
            let d = ops.d2.apply(&flux_corr);
            let rhs: Vec<f64> = r_phi.iter().zip(&d).map(|(r, d)| r - alpha * dt * d).collect();
            let (mut dphi, info) = helm.solve(&rhs)?;
            helm_iters.push(info.iterations);
            // the exact increment changes the mass by -sum R_Phi
            let defect = -r_phi.iter().sum::<f64>() - dphi.iter().sum::<f64>();
            let total_area: f64 = ops.cell_areas.iter().sum();
            for (x, a) in dphi.iter_mut().zip(&ops.cell_areas) {
                *x += defect * a / total_area;
            }
            // U' = -Minv (R_U + alpha dt Dbar1 L Phi')
            let g = ops.db1.apply(&ops.l.apply(&dphi));
            let b: Vec<f64> = r_u.iter().zip(&g).map(|(r, g)| r + alpha * dt * g).collect();
            let du = self.minv.apply(&b);
            for (p, d) in phi.iter_mut().zip(&dphi) {
                *p += d;
            }
            for (x, d) in u.iter_mut().zip(&du) {
                *x -= d;
            }
        }

        let next = ModelState {
            phi,
            u,
            phi_orog: state.phi_orog.clone(),
            time: state.time + dt,
        };
        if !next.is_finite() {
            return Err(Error::StateValidity(format!("non-finite state at t = {}", next.time)));
        }
        let (f_tilde, f_perp_hat, q_perp_hat, ubar, u_perp_hat) = fluxes;
        let courant = [
            self.adv_primal.max_courant(&ubar, &self.adv_primal.areas())?.1,
            self.adv_dual.max_courant(&f_perp_hat, &dual.phi_bar)?.1,
        ];
        Ok((
            next,
            StepReport {
                residuals,
                helmholtz_iterations: helm_iters,
                dual,
                f_tilde,
                f_perp_hat,
                u_perp_hat,
                q_perp_hat,
                courant,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_hex_icos;

    #[test]
    fn resting_state_over_flat_orography_is_steady() {
        let mesh = gen_hex_icos(2).unwrap();
        let planet = Planet::default();
        let ops = OperatorSet::build(&mesh).unwrap().scaled(planet.radius);
        let model = ShallowWater::new(&mesh, &ops, planet, SolverConfig::for_family(MeshFamily::Hex)).unwrap();
        let phi: Vec<f64> = ops.cell_areas.iter().map(|a| 5e4 * a).collect();
        let state = ModelState::new(phi, vec![0.0; mesh.n_edges()]);
        let (next, rep) = model.step(&state, 900.0).unwrap();
        // roundoff in L Phi against the 1e-6 dt |L Phi| velocity-scale floor
        assert!(rep.residuals[0] < 1e-8, "{:?}", rep.residuals);
        for (a, b) in next.phi.iter().zip(&state.phi) {
            assert!((a - b).abs() <= 1e-13 * b);
        }
        assert!(norm(&next.u) <= 1e-13 * norm(&state.phi));
    }
}
