use std::path::Path;
use std::process::Command;

fn polymim(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_polymim"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn mesh_ops_and_run_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = polymim(&["mesh", "gen", "--family", "cube", "--level", "0", "--out", "c.pmesh"], d);
    assert!(o.status.success());
    assert!(stdout(&o).contains("54 cells"));
    let o = polymim(&["ops", "build", "--mesh", "c.pmesh", "--out", "c.pmops", "--verify"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 8);

    let o = polymim(&["ops", "dump-basis", "--mesh", "c.pmesh", "--space", "dual-v2", "--out", "b.txt"], d);
    assert!(o.status.success());
    let text = std::fs::read_to_string(d.join("b.txt")).unwrap();
    // one line per subtriangle (four per edge), each in exactly one dual cell
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 108 * 4);

    std::fs::write(d.join("run.cfg"), "output.every = 4\n").unwrap();
    let args = [
        "run", "--case", "tc5", "--mesh", "c.pmesh", "--ops", "c.pmops", "--dt", "3600", "--days", "0.5", "--config",
        "run.cfg", "--out", "out", "--verify",
    ];
    let o = polymim(&args, d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.join("out/diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
}

#[test]
fn failures_give_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(!polymim(&["mesh", "gen", "--family", "tri", "--level", "1", "--out", "x"], d).status.success());
    assert!(!polymim(&["ops", "build", "--mesh", "missing.pmesh", "--out", "x"], d).status.success());
    std::fs::write(d.join("bad.pmesh"), "not a mesh\n").unwrap();
    assert!(!polymim(&["ops", "build", "--mesh", "bad.pmesh", "--out", "x"], d).status.success());
    assert!(!polymim(&["test", "laplacian", "--family", "hex", "--levels", "2"], d).status.success());

    polymim(&["mesh", "gen", "--family", "hex", "--level", "1", "--out", "h.pmesh"], d);
    std::fs::write(d.join("bad.cfg"), "solver.unknown = 1\n").unwrap();
    let o = polymim(
        &["run", "--case", "tc2", "--mesh", "h.pmesh", "--dt", "600", "--days", "0.1", "--config", "bad.cfg", "--out", "o"],
        d,
    );
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key"));
}

#[test]
fn convergence_table_with_verify() {
    let dir = tempfile::tempdir().unwrap();
    let o = polymim(&["test", "coriolis", "--family", "hex", "--levels", "1..3", "--verify", "--out", "t.csv"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("PASS"));
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("cells,linf,l2"));
    assert_eq!(csv.lines().count(), 4);
}
