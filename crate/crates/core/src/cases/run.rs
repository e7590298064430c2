//! Model-run drivers with diagnostics time series.

use std::path::{Path, PathBuf};

use log::info;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::mesh::PolyMesh;
use crate::operators::OperatorSet;
use crate::swe::{
    compute_pv, energy, potential_enstrophy, DualFields, DualInverse, LinearModel, ModelState, ShallowWater,
    StepReport, TracerBudget,
};

use super::init::{init_case, CaseId, CaseSpec};
use super::norms::{error_norms, Norms};
use super::output::{write_csv, write_field_vtk, VtkField};
use super::quadrature::project_v2;

/// Tolerance of the J solves used for diagnostics.
pub const DIAGNOSTIC_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub dt: f64,
    pub steps: usize,
    pub config: RunConfig,
    pub out_dir: Option<PathBuf>,
}

impl RunOptions {
    pub fn for_days(dt: f64, days: f64, config: RunConfig) -> Self {
        RunOptions {
            dt,
            steps: (days * 86400.0 / dt).round() as usize,
            config,
            out_dir: None,
        }
    }
}

pub const DIAGNOSTIC_COLUMNS: [&str; 12] = [
    "step",
    "time_days",
    "mass",
    "mass_drift",
    "kinetic",
    "available_potential",
    "available_energy",
    "potential_enstrophy",
    "dual_mass_consistency",
    "pv_consistency",
    "newton_first_residual",
    "newton_last_residual",
];

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub time_days: f64,
    pub mass: f64,
    /// `(mass - mass_0) / mass_0`.
    pub mass_drift: f64,
    pub kinetic: f64,
    pub available_potential: f64,
    pub available_energy: f64,
    pub potential_enstrophy: f64,
    pub dual_mass_consistency: f64,
    pub pv_consistency: f64,
    pub newton_first_residual: f64,
    pub newton_last_residual: f64,
}

impl DiagnosticsRow {
    pub fn values(&self) -> Vec<f64> {
        vec![
            self.step as f64,
            self.time_days,
            self.mass,
            self.mass_drift,
            self.kinetic,
            self.available_potential,
            self.available_energy,
            self.potential_enstrophy,
            self.dual_mass_consistency,
            self.pv_consistency,
            self.newton_first_residual,
            self.newton_last_residual,
        ]
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub initial: ModelState,
    pub state: ModelState,
    pub rows: Vec<DiagnosticsRow>,
    pub max_mass_drift: f64,
    pub max_dual_mass_consistency: f64,
    pub max_pv_consistency: f64,
    /// Largest ratio `r_last / r_first` of Newton residuals over all steps
    /// (only meaningful with `solver.final_residual`).
    pub worst_newton_reduction: f64,
    /// Whether available energy never increased by more than `1e-6` of
    /// its initial value between diagnostics rows.
    pub energy_nonincreasing: bool,
}

/// Integrates a nonlinear case, writing `diagnostics.csv` (and VTK
/// snapshots if enabled) to `opts.out_dir`.
pub fn run_nonlinear(
    mesh: &PolyMesh,
    ops: &OperatorSet,
    spec: &CaseSpec,
    opts: &RunOptions,
    mut observer: impl FnMut(&ModelState, &StepReport),
) -> Result<RunSummary> {
    if spec.id == CaseId::Linear {
        return Err(Error::Config("the linear case runs with `run_linear`".into()));
    }
    let model = ShallowWater::new(mesh, ops, spec.planet, opts.config.solver)?;
    let initial = init_case(spec, mesh, ops)?;
    let diag_dual = |s: &ModelState| -> Result<DualFields> {
        compute_pv(ops, &model.f_hat, &s.phi, &s.u, DualInverse::Tight(DIAGNOSTIC_TOL))
    };
    let dual0 = diag_dual(&initial)?;
    let mut tracers = TracerBudget::new(&dual0);
    let mass0 = initial.mass();
    let every = opts.config.output_every.max(1);
    let mut rows = Vec::new();
    let mut state = initial.clone();
    let mut last_res = (f64::NAN, f64::NAN);
    let mut worst = 0.0f64;
    let mut previous: Option<StepReport> = None;
    let row = |step: usize, s: &ModelState, dual: &DualFields, tracers: &TracerBudget, res: (f64, f64)| {
        let e = energy(mesh, ops, s);
        let c = tracers.consistency(dual);
        let mass = s.mass();
        DiagnosticsRow {
            step,
            time_days: s.time / 86400.0,
            mass,
            mass_drift: (mass - mass0) / mass0,
            kinetic: e.kinetic,
            available_potential: e.available_potential,
            available_energy: e.available(),
            potential_enstrophy: potential_enstrophy(dual),
            dual_mass_consistency: c.dual_mass,
            pv_consistency: c.pv,
            newton_first_residual: res.0,
            newton_last_residual: res.1,
        }
    };
    rows.push(row(0, &state, &dual0, &tracers, last_res));
    snapshot(mesh, ops, opts, &state, &dual0, 0)?;
    for step in 1..=opts.steps {
        let (next, rep) = model.step_from(&state, opts.dt, previous.as_ref())?;
        tracers.advance(ops, &rep);
        let first = rep.residuals[0];
        let last = *rep.residuals.last().unwrap();
        if first > 0.0 {
            worst = worst.max(last / first);
        }
        last_res = (first, last);
        observer(&next, &rep);
        previous = Some(rep);
        state = next;
        if step % every == 0 || step == opts.steps {
            let dual = diag_dual(&state)?;
            let r = row(step, &state, &dual, &tracers, last_res);
            info!(
                "step {step} day {:.3}: mass drift {:.2e}, dual-mass {:.2e}, pv {:.2e}, newton {:.2e} -> {:.2e}",
                r.time_days, r.mass_drift, r.dual_mass_consistency, r.pv_consistency, first, last
            );
            rows.push(r);
            snapshot(mesh, ops, opts, &state, &dual, step)?;
        }
    }
    if let Some(dir) = &opts.out_dir {
        let data: Vec<Vec<f64>> = rows.iter().map(DiagnosticsRow::values).collect();
        write_csv(&dir.join("diagnostics.csv"), &DIAGNOSTIC_COLUMNS, &data)?;
    }
    let fold = |f: fn(&DiagnosticsRow) -> f64| rows.iter().map(f).fold(0.0f64, |m, x| m.max(x.abs()));
    let e0 = rows[0].available_energy.abs();
    let energy_nonincreasing = rows
        .windows(2)
        .all(|w| w[1].available_energy <= w[0].available_energy + 1e-6 * e0);
    Ok(RunSummary {
        initial,
        max_mass_drift: fold(|r| r.mass_drift),
        max_dual_mass_consistency: fold(|r| r.dual_mass_consistency),
        max_pv_consistency: fold(|r| r.pv_consistency),
        worst_newton_reduction: worst,
        energy_nonincreasing,
        state,
        rows,
    })
}

fn snapshot(
    mesh: &PolyMesh,
    ops: &OperatorSet,
    opts: &RunOptions,
    s: &ModelState,
    dual: &DualFields,
    step: usize,
) -> Result<()> {
    let Some(dir) = opts.out_dir.as_ref().filter(|_| opts.config.output_vtk) else {
        return Ok(());
    };
    let phi: Vec<f64> = s.phi.iter().zip(&ops.cell_areas).map(|(p, a)| p / a).collect();
    let vort: Vec<f64> = dual.xi_hat.iter().zip(&ops.dual_areas).map(|(x, a)| x / a).collect();
    write_field_vtk(
        mesh,
        &dir.join(format!("state_{step:06}.vtk")),
        &format!("t = {} s", s.time),
        &[VtkField { name: "phi", values: &phi }],
        &[
            VtkField {
                name: "vorticity",
                values: &vort,
            },
            VtkField {
                name: "pv",
                values: &dual.pi,
            },
        ],
    )
}

/// Geopotential and normal-velocity error norms against reference fields
/// (cell-mean geopotential, area weights; mean edge-normal velocity
/// `U_e / l_e`, weights `l_e d_e`).
pub fn state_errors(mesh: &PolyMesh, ops: &OperatorSet, model: &ModelState, reference: &ModelState) -> (Norms, Norms) {
    let dens = |s: &ModelState| -> Vec<f64> { s.phi.iter().zip(&ops.cell_areas).map(|(p, a)| p / a).collect() };
    let phi = error_norms(&dens(model), &dens(reference), &ops.cell_areas);
    let a = ops.radius;
    let len: Vec<f64> = (0..mesh.n_edges()).map(|e| a * mesh.primal_edge_length(e)).collect();
    let w: Vec<f64> = (0..mesh.n_edges()).map(|e| len[e] * a * mesh.dual_edge_length(e)).collect();
    let vel = |s: &ModelState| -> Vec<f64> { s.u.iter().zip(&len).map(|(u, l)| u / l).collect() };
    (phi, error_norms(&vel(model), &vel(reference), &w))
}

/// Errors of a steady case (TC2) after a run: the initial state is the
/// exact discrete reference.
pub fn steady_errors(mesh: &PolyMesh, ops: &OperatorSet, summary: &RunSummary) -> (Norms, Norms) {
    state_errors(mesh, ops, &summary.state, &summary.initial)
}

/// Linear-model run of the linear case: returns the initial and final
/// states and the relative energy drift.
pub fn run_linear(
    ops: &OperatorSet,
    spec: &CaseSpec,
    mesh: &PolyMesh,
    dt: f64,
    steps: usize,
    tol: f64,
) -> Result<(ModelState, ModelState, f64)> {
    let (phi0, f) = spec.linear_parameters()?;
    let model = LinearModel::new(ops, phi0, f, dt, tol);
    let fields = spec.fields()?;
    let psi = super::quadrature::sample_v0(mesh, &fields.psi);
    let (phi, u) = model.geostrophic_state(&psi);
    let initial = ModelState::new(phi, u);
    let e0 = model.energy(&initial.phi, &initial.u);
    let mut s = initial.clone();
    for _ in 0..steps {
        let (p, u, _) = model.step(&s.phi, &s.u)?;
        s = ModelState {
            phi: p,
            u,
            phi_orog: s.phi_orog,
            time: s.time + dt,
        };
    }
    let drift = (model.energy(&s.phi, &s.u) - e0) / e0;
    Ok((initial, s, drift))
}

/// Cell-mean values of an analytic field on the unit-sphere mesh.
pub fn cell_means(mesh: &PolyMesh, f: impl Fn(crate::mesh::Vec3) -> f64) -> Vec<f64> {
    project_v2(mesh, f)
        .into_iter()
        .zip(mesh.cell_areas())
        .map(|(x, a)| x / a)
        .collect()
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}
