//! wasm-bindgen wrapper used by `www/index.html`: mesh generation with the
//! identity check, operator convergence tables, and a TC5/TC2 run drawn
//! on a rotating globe.

use std::fmt::Write;

use polymim::cases::convergence::{convergence_table, ConvergenceTest};
use polymim::cases::norms::orders;
use polymim::cases::{init_case, CaseId, CaseSpec};
use polymim::mesh::generate;
use polymim::operators::OperatorSet;
use polymim::swe::{energy, ModelState, ShallowWater, SolverConfig, StepReport};
use polymim::{MeshFamily, PolyMesh};
use wasm_bindgen::prelude::*;

/// Largest level the page offers; hex 4 is 2562 cells, cube 4 is 13824.
pub const MAX_LEVEL: u32 = 4;

fn family(name: &str) -> Result<MeshFamily, String> {
    name.parse().map_err(|e: polymim::Error| e.to_string())
}

fn checked_level(level: u32) -> Result<u32, String> {
    if level > MAX_LEVEL {
        return Err(format!("level {level} is above the demo limit {MAX_LEVEL}"));
    }
    Ok(level)
}

/// Mesh statistics and the identity residuals of its operators.
pub fn mesh_report_text(family_name: &str, level: u32) -> Result<String, String> {
    let mesh = generate(family(family_name)?, checked_level(level)?).map_err(|e| e.to_string())?;
    let ops = OperatorSet::build(&mesh).map_err(|e| e.to_string())?;
    let areas = mesh.cell_areas();
    let (lo, hi) = areas.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &a| (l.min(a), h.max(a)));
    let mut s = String::new();
    writeln!(s, "{} level {level}", mesh.family.code()).unwrap();
    writeln!(s, "cells {}  vertices {}  edges {}", mesh.n_cells(), mesh.n_verts(), mesh.n_edges()).unwrap();
    writeln!(s, "cell area ratio max/min {:.3}", hi / lo).unwrap();
    writeln!(s).unwrap();
    let rep = ops.verify();
    for (name, value, tol) in rep.lines() {
        let verdict = if value <= tol { "ok  " } else { "FAIL" };
        writeln!(s, "{verdict} {name:<20} {value:.2e}").unwrap();
    }
    Ok(s)
}

/// Error table with observed orders.
pub fn convergence_text(test: &str, family_name: &str, max_level: u32) -> Result<String, String> {
    let kind = match test {
        "laplacian" => ConvergenceTest::Laplacian,
        "coriolis" => ConvergenceTest::Coriolis,
        other => return Err(format!("unknown test `{other}`")),
    };
    let fam = family(family_name)?;
    let first = if fam == MeshFamily::Hex { 1 } else { 0 };
    let rows = convergence_table(kind, fam, first..=checked_level(max_level)?.max(first)).map_err(|e| e.to_string())?;
    let o_inf = orders(&rows.iter().map(|r| r.linf).collect::<Vec<_>>());
    let o_2 = orders(&rows.iter().map(|r| r.l2).collect::<Vec<_>>());
    let mut s = format!("{:>7} {:>10} {:>6} {:>10} {:>6}\n", "cells", "Linf", "order", "L2", "order");
    for (k, r) in rows.iter().enumerate() {
        let o = |v: &[f64]| if k == 0 { String::new() } else { format!("{:.2}", v[k - 1]) };
        writeln!(s, "{:>7} {:>10.3e} {:>6} {:>10.3e} {:>6}", r.cells, r.linf, o(&o_inf), r.l2, o(&o_2)).unwrap();
    }
    Ok(s)
}

/// A nonlinear run advanced in chunks from the page.
pub struct Run {
    spec: CaseSpec,
    mesh: PolyMesh,
    ops: OperatorSet,
    state: ModelState,
    previous: Option<StepReport>,
    mass0: f64,
    energy0: f64,
    dt: f64,
    steps: usize,
}

impl Run {
    pub fn new(case: &str, level: u32, dt: f64) -> Result<Run, String> {
        let id: CaseId = case.parse().map_err(|e: polymim::Error| e.to_string())?;
        if id == CaseId::Linear {
            return Err("the demo runs the nonlinear cases".into());
        }
        if !(dt > 0.0 && dt <= 7200.0) {
            return Err(format!("time step {dt} s outside (0, 7200]"));
        }
        let spec = CaseSpec::builtin(id);
        let mesh = generate(MeshFamily::Hex, checked_level(level)?).map_err(|e| e.to_string())?;
        let ops = OperatorSet::build(&mesh).map_err(|e| e.to_string())?.scaled(spec.planet.radius);
        let state = init_case(&spec, &mesh, &ops).map_err(|e| e.to_string())?;
        let energy0 = energy(&mesh, &ops, &state).available();
        Ok(Run {
            mass0: state.mass(),
            energy0,
            spec,
            mesh,
            ops,
            state,
            previous: None,
            dt,
            steps: 0,
        })
    }

    /// Takes `n` steps; a failed step leaves the state at the last good one.
    pub fn advance(&mut self, n: usize) -> Result<(), String> {
        let config = SolverConfig::for_family(self.mesh.family);
        let model = ShallowWater::new(&self.mesh, &self.ops, self.spec.planet, config).map_err(|e| e.to_string())?;
        for _ in 0..n {
            let (next, rep) = model.step_from(&self.state, self.dt, self.previous.as_ref()).map_err(|e| e.to_string())?;
            self.state = next;
            self.previous = Some(rep);
            self.steps += 1;
        }
        Ok(())
    }

    pub fn days(&self) -> f64 {
        self.state.time / 86400.0
    }

    pub fn mass_drift(&self) -> f64 {
        (self.state.mass() - self.mass0) / self.mass0
    }

    pub fn energy_change(&self) -> f64 {
        (energy(&self.mesh, &self.ops, &self.state).available() - self.energy0) / self.energy0
    }

    /// Free-surface height in metres, cell means.
    pub fn surface_height(&self) -> Vec<f64> {
        let g = self.spec.planet.gravity;
        self.state
            .phi
            .iter()
            .zip(&self.state.phi_orog)
            .zip(&self.ops.cell_areas)
            .map(|((p, s), a)| (p + s) / (a * g))
            .collect()
    }

    pub fn mesh(&self) -> &PolyMesh {
        &self.mesh
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

/// Unit-sphere vertex coordinates, flattened `x, y, z`.
pub fn vertex_xyz(mesh: &PolyMesh) -> Vec<f64> {
    mesh.verts().iter().flat_map(|v| [v.x, v.y, v.z]).collect()
}

/// Cell vertex lists as `n, v_0 .. v_{n-1}` records.
pub fn cell_rings(mesh: &PolyMesh) -> Vec<u32> {
    let mut out = Vec::new();
    for c in 0..mesh.n_cells() {
        let ring = mesh.cell(c).0;
        out.push(ring.len() as u32);
        out.extend(ring.iter().map(|&v| v as u32));
    }
    out
}

#[wasm_bindgen]
pub fn mesh_report(family: &str, level: u32) -> Result<String, JsError> {
    mesh_report_text(family, level).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn convergence(test: &str, family: &str, max_level: u32) -> Result<String, JsError> {
    convergence_text(test, family, max_level).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub struct Simulation(Run);

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(case: &str, level: u32, dt: f64) -> Result<Simulation, JsError> {
        Run::new(case, level, dt).map(Simulation).map_err(|e| JsError::new(&e))
    }

    pub fn advance(&mut self, steps: usize) -> Result<(), JsError> {
        self.0.advance(steps).map_err(|e| JsError::new(&e))
    }

    pub fn days(&self) -> f64 {
        self.0.days()
    }

    pub fn steps(&self) -> usize {
        self.0.steps()
    }

    pub fn mass_drift(&self) -> f64 {
        self.0.mass_drift()
    }

    pub fn energy_change(&self) -> f64 {
        self.0.energy_change()
    }

    pub fn surface_height(&self) -> Vec<f64> {
        self.0.surface_height()
    }

    pub fn vertices(&self) -> Vec<f64> {
        vertex_xyz(self.0.mesh())
    }

    pub fn cells(&self) -> Vec<u32> {
        cell_rings(self.0.mesh())
    }
}
