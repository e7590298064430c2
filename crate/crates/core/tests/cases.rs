use std::collections::HashMap;
use std::path::Path;

use polymim::cases::convergence::{convergence_table, ConvergenceTest};
use polymim::cases::norms::orders;
use polymim::cases::output::{write_csv, write_field_vtk, VtkField};
use polymim::cases::run::{run_linear, run_nonlinear, state_errors, RunOptions, DIAGNOSTIC_COLUMNS};
use polymim::cases::{error_norms, init_case, CaseId, CaseSpec};
use polymim::config::{KeyValues, RunConfig};
use polymim::mesh::{gen_hex_icos, MeshFamily};
use polymim::operators::OperatorSet;
use proptest::prelude::*;

/// What a minimal legacy-VTK polydata reader sees in a file.
#[derive(Debug, Default)]
struct VtkFile {
    points: Vec<[f64; 3]>,
    polygons: Vec<Vec<usize>>,
    cell_data: HashMap<String, Vec<f64>>,
    point_data: HashMap<String, Vec<f64>>,
}

fn read_vtk(path: &Path) -> VtkFile {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# vtk DataFile"));
    lines.next().unwrap();
    assert_eq!(lines.next().unwrap(), "ASCII");
    assert_eq!(lines.next().unwrap(), "DATASET POLYDATA");
    let mut out = VtkFile::default();
    let mut section = "";
    while let Some(line) = lines.next() {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["POINTS", n, _] => {
                for _ in 0..n.parse().unwrap() {
                    let v: Vec<f64> = lines.next().unwrap().split_whitespace().map(|x| x.parse().unwrap()).collect();
                    out.points.push([v[0], v[1], v[2]]);
                }
            }
            ["POLYGONS", n, size] => {
                let mut total = 0;
                for _ in 0..n.parse().unwrap() {
                    let v: Vec<usize> = lines.next().unwrap().split_whitespace().map(|x| x.parse().unwrap()).collect();
                    assert_eq!(v[0], v.len() - 1);
                    total += v.len();
                    out.polygons.push(v[1..].to_vec());
                }
                assert_eq!(total, size.parse::<usize>().unwrap());
            }
            ["CELL_DATA", _] => section = "cell",
            ["POINT_DATA", _] => section = "point",
            ["SCALARS", name, "double", "1"] => {
                assert_eq!(lines.next().unwrap(), "LOOKUP_TABLE default");
                let n = if section == "cell" { out.polygons.len() } else { out.points.len() };
                let vals: Vec<f64> = (0..n).map(|_| lines.next().unwrap().trim().parse().unwrap()).collect();
                let map = if section == "cell" { &mut out.cell_data } else { &mut out.point_data };
                map.insert(name.to_string(), vals);
            }
            [] => {}
            other => panic!("unexpected VTK line {other:?}"),
        }
    }
    out
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn run_writes_diagnostics_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CaseSpec::builtin(CaseId::Tc5);
    let mesh = gen_hex_icos(2).unwrap();
    let ops = OperatorSet::build(&mesh).unwrap().scaled(spec.planet.radius);
    let mut cfg = RunConfig::defaults(MeshFamily::Hex);
    cfg.output_every = 3;
    cfg.output_vtk = true;
    let opts = RunOptions {
        dt: 1800.0,
        steps: 7,
        config: cfg,
        out_dir: Some(dir.path().to_path_buf()),
    };
    let s = run_nonlinear(&mesh, &ops, &spec, &opts, |_, _| {}).unwrap();

    let (header, rows) = read_csv(&dir.path().join("diagnostics.csv"));
    assert_eq!(header, DIAGNOSTIC_COLUMNS);
    let steps: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(steps, [0.0, 3.0, 6.0, 7.0]);
    // 13 significant digits in the file
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
    let mass0 = rows[0][2];
    assert!(close(mass0, s.initial.mass()));
    assert_eq!((rows[0][3], rows[0][8], rows[0][9]), (0.0, 0.0, 0.0));
    assert!(rows[0][10].is_nan());
    for r in &rows {
        assert!(((r[2] - mass0) / mass0).abs() <= 1e-13);
    }
    for (r, d) in rows.iter().zip(&s.rows) {
        assert!(r.iter().zip(d.values()).all(|(a, b)| (a.is_nan() && b.is_nan()) || close(*a, b)));
    }

    for step in [0, 3, 6, 7] {
        let vtk = read_vtk(&dir.path().join(format!("state_{step:06}.vtk")));
        assert_eq!(vtk.points.len(), mesh.n_verts());
        assert_eq!(vtk.polygons.len(), mesh.n_cells());
        for (p, v) in vtk.points.iter().zip(mesh.verts()) {
            assert!((p[0] - v.x).abs() + (p[1] - v.y).abs() + (p[2] - v.z).abs() < 1e-14);
        }
        for (c, poly) in vtk.polygons.iter().enumerate() {
            assert_eq!(poly.as_slice(), mesh.cell(c).0);
        }
        assert!(vtk.point_data.contains_key("vorticity") && vtk.point_data.contains_key("pv"));
        if step == 7 {
            for ((v, p), a) in vtk.cell_data["phi"].iter().zip(&s.state.phi).zip(&ops.cell_areas) {
                assert!((v - p / a).abs() <= 1e-14 * (p / a).abs());
            }
        }
    }
}

#[test]
fn vtk_of_a_constant_field_has_one_value() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = gen_hex_icos(1).unwrap();
    let path = dir.path().join("c.vtk");
    let ones = vec![4.25; mesh.n_cells()];
    write_field_vtk(&mesh, &path, "constant\nfield", &[VtkField { name: "c", values: &ones }], &[]).unwrap();
    let vtk = read_vtk(&path);
    assert!(vtk.cell_data["c"].iter().all(|&v| v == 4.25));
    assert!(vtk.point_data.is_empty());
    let short = vec![1.0; 3];
    assert!(write_field_vtk(&mesh, &path, "x", &[VtkField { name: "c", values: &short }], &[]).is_err());
    assert!(write_csv(&dir.path().join("t.csv"), &["a", "b"], &[vec![1.0]]).is_err());
}

#[test]
fn case_files_load_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/cases/tc2.case")).unwrap();
    let path = dir.path().join("fast.case");
    std::fs::write(&path, text.replace("u0.period_days = 12", "u0.period_days = 6")).unwrap();
    let spec = CaseSpec::load(&path).unwrap();
    assert_eq!(spec.id, CaseId::Tc2);
    assert_eq!(spec.params.get::<f64>("u0.period_days").unwrap(), Some(6.0));
    assert!(CaseSpec::parse("version = 2\ncase = tc2\n").is_err());
    assert!(CaseSpec::parse("version = 1\ncase = tc9\nplanet.radius = 1\nplanet.omega = 0\nplanet.gravity = 1\n").is_err());

    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(&cfg_path, "solver.alpha = 0.55\nadvection.limiter = on\noutput.every = 5\n").unwrap();
    let cfg = RunConfig::from_kv(&KeyValues::load(&cfg_path).unwrap(), MeshFamily::Cube).unwrap();
    assert_eq!(cfg.solver.alpha, 0.55);
    assert!(cfg.solver.advection.limiter);
    assert_eq!(cfg.output_every, 5);
    assert_eq!(cfg.solver.relaxation.m, 0.9);
    let bad = KeyValues::parse("advection.order = 3\n").unwrap();
    assert!(RunConfig::from_kv(&bad, MeshFamily::Hex).is_err());
}

#[test]
fn initial_states_satisfy_their_constraints() {
    let mesh = gen_hex_icos(3).unwrap();
    for id in [CaseId::Tc2, CaseId::Tc5, CaseId::Galewsky] {
        let spec = CaseSpec::builtin(id);
        let ops = OperatorSet::build(&mesh).unwrap().scaled(spec.planet.radius);
        let s = init_case(&spec, &mesh, &ops).unwrap();
        assert!(s.is_finite() && s.phi.iter().all(|&p| p > 0.0), "{id}");
        let div = ops.d2.apply(&s.u);
        let scale = s.u.iter().fold(0.0f64, |m, u| m.max(u.abs()));
        assert!(div.iter().all(|d| d.abs() <= 1e-12 * scale), "{id}: initial divergence");
        if id == CaseId::Tc5 {
            let g = spec.planet.gravity;
            let top = s.phi_orog.iter().zip(&ops.cell_areas).map(|(p, a)| p / a).fold(0.0, f64::max);
            assert!(top > 0.0 && top <= 2000.0 * g);
        }
        // the same case on operators of the wrong radius is refused
        let unit = OperatorSet::build(&mesh).unwrap();
        assert!(init_case(&spec, &mesh, &unit).is_err());
    }
}

#[test]
fn linear_case_driver_reports_energy_drift() {
    let spec = CaseSpec::builtin(CaseId::Linear);
    let mesh = gen_hex_icos(2).unwrap();
    let ops = OperatorSet::build(&mesh).unwrap().scaled(spec.planet.radius);
    let (initial, last, drift) = run_linear(&ops, &spec, &mesh, 3600.0, 10, 1e-14).unwrap();
    assert!(drift.abs() < 1e-10);
    assert!((last.time - 36000.0).abs() < 1e-9);
    let (phi, u) = state_errors(&mesh, &ops, &last, &initial);
    assert!(phi.linf < 1e-9 * 1e5 && u.linf < 1e-9 * 10.0, "{phi:?} {u:?}");
    let ns = CaseSpec::builtin(CaseId::Tc2);
    assert!(run_nonlinear(&mesh, &ops, &spec, &RunOptions::for_days(900.0, 0.1, RunConfig::defaults(MeshFamily::Hex)), |_, _| {}).is_err());
    assert_eq!(ns.id.to_string(), "tc2");
}

#[test]
fn small_convergence_tables_shrink() {
    for test in [ConvergenceTest::Laplacian, ConvergenceTest::Coriolis] {
        let rows = convergence_table(test, MeshFamily::Hex, 1..=3).unwrap();
        assert_eq!(rows.iter().map(|r| r.cells).collect::<Vec<_>>(), [42, 162, 642]);
        let l2: Vec<f64> = rows.iter().map(|r| r.l2).collect();
        assert!(orders(&l2).iter().all(|&o| o > 1.0), "{test:?}: {l2:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn norms_scale_and_order(vals in prop::collection::vec((-10.0f64..10.0, 0.1f64..5.0), 1..40), c in -4.0f64..4.0) {
        let (e, w): (Vec<f64>, Vec<f64>) = vals.into_iter().unzip();
        let zero = vec![0.0; e.len()];
        let n = error_norms(&e, &zero, &w);
        let scaled: Vec<f64> = e.iter().map(|x| c * x).collect();
        let m = error_norms(&scaled, &zero, &w);
        prop_assert!((m.l2 - c.abs() * n.l2).abs() <= 1e-12 * n.l2.max(1e-300));
        prop_assert!((m.l1 - c.abs() * n.l1).abs() <= 1e-12 * n.l1.max(1e-300));
        prop_assert!(n.l1 <= n.l2 * (1.0 + 1e-12) && n.l2 <= n.linf * (1.0 + 1e-12));
        let z = error_norms(&zero, &zero, &w);
        prop_assert_eq!((z.l1, z.l2, z.linf), (0.0, 0.0, 0.0));
    }
}
