use polymim_demo::{cell_rings, convergence_text, mesh_report_text, vertex_xyz, Run};

#[test]
fn mesh_report_lists_every_identity() {
    let text = mesh_report_text("cube", 1).unwrap();
    assert!(text.contains("cells 216"));
    assert_eq!(text.lines().filter(|l| l.starts_with("ok")).count(), 8);
    assert!(!text.contains("FAIL"));
    assert!(mesh_report_text("tri", 1).is_err());
    assert!(mesh_report_text("hex", 9).is_err());
}

#[test]
fn convergence_text_has_one_row_per_level() {
    let text = convergence_text("laplacian", "hex", 3).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].trim_start().starts_with("42"));
    assert!(convergence_text("gradient", "hex", 2).is_err());
}

#[test]
fn run_advances_and_exposes_the_globe() {
    let mut run = Run::new("tc5", 2, 1800.0).unwrap();
    let h0 = run.surface_height();
    run.advance(4).unwrap();
    assert_eq!(run.steps(), 4);
    assert!((run.days() - 4.0 * 1800.0 / 86400.0).abs() < 1e-12);
    assert!(run.mass_drift().abs() < 1e-13);
    let h = run.surface_height();
    assert_eq!(h.len(), h0.len());
    // TC5 starts at 5960 m less the wind-balanced depression
    assert!(h.iter().all(|&x| (4000.0..6000.0).contains(&x)));

    let mesh = run.mesh();
    assert_eq!(vertex_xyz(mesh).len(), 3 * mesh.n_verts());
    let rings = cell_rings(mesh);
    let (mut k, mut cells) = (0, 0);
    while k < rings.len() {
        let n = rings[k] as usize;
        assert!(rings[k + 1..k + 1 + n].iter().all(|&v| (v as usize) < mesh.n_verts()));
        k += n + 1;
        cells += 1;
    }
    assert_eq!(cells, mesh.n_cells());

    assert!(Run::new("linear", 1, 600.0).is_err());
    assert!(Run::new("tc2", 1, -1.0).is_err());
}
