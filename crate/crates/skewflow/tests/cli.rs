#![allow(clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn skewflow(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.cfg");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_skewflow"))
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

/// Data lines of an emitted file: the header checked, comments and the column line dropped.
fn data_lines(text: &str, columns: bool) -> Vec<String> {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# skewflow "), "missing header");
    lines.filter(|l| !l.starts_with('#')).skip(usize::from(columns)).map(str::to_string).collect()
}

#[test]
fn verify_all_on_zero_passes() {
    let dir = TempDir::new().unwrap();
    let o =
        skewflow(dir.path(), "builtin: zero\nresolution: 16\nbase_resolution: 8\nsamples: 10\n", &["verify", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let pass: Vec<&str> = out.lines().filter(|l| l.starts_with("THEOREM ") && l.contains(" PASS ")).collect();
    assert_eq!(pass.len(), 5, "{out}");
    assert!(pass.iter().all(|l| l.ends_with("seed=42")));
    let report = read(dir.path(), "verify.txt");
    assert!(report.contains("verdict: PASS") && !report.contains("verdict: FAIL"));
}

#[test]
fn failing_verification_exits_3() {
    let dir = TempDir::new().unwrap();
    let o = skewflow(dir.path(), "builtin: hyperbolic\nsamples: 10\n", &["verify", "cor-bijection"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("THEOREM cor-bijection FAIL"));
}

#[test]
fn monodromy_multipliers_of_hyperbolic() {
    let dir = TempDir::new().unwrap();
    let o = skewflow(dir.path(), "builtin: hyperbolic, lambda: 1\n", &["monodromy"]);
    assert_eq!(o.status.code(), Some(0));
    let text = read(dir.path(), "monodromy.txt");
    let lines: Vec<&str> = text.lines().collect();
    let at = lines.iter().position(|l| l.starts_with("multipliers:")).unwrap();
    let moduli: Vec<f64> = lines[at + 1..at + 3]
        .iter()
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|t| t.trim().parse().unwrap()).collect();
            assert_eq!(v[1], 0.0);
            v[0]
        })
        .collect();
    let e = std::f64::consts::E;
    assert!((moduli[0] - e).abs() < 1e-8 && (moduli[1] - 1.0 / e).abs() < 1e-8, "{moduli:?}");
}

/// Nontrivial strongly connected classes of an edge list, by transitive closure.
fn closure_classes(n: usize, edges: &[(usize, usize)]) -> BTreeSet<BTreeSet<usize>> {
    let mut reach = vec![vec![false; n]; n];
    for &(a, b) in edges {
        reach[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    (0..n).filter(|&i| reach[i][i]).map(|i| (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect()).collect()
}

#[test]
fn chain_graph_of_projective_hyperbolic() {
    let dir = TempDir::new().unwrap();
    let o = skewflow(dir.path(), "builtin: hyperbolic\nfiber: projective\n", &["chain-graph"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let boxes = data_lines(&read(dir.path(), "boxes.csv"), true);
    assert_eq!(boxes.len(), 64);
    let edges: Vec<(usize, usize)> = data_lines(&read(dir.path(), "edges.txt"), false)
        .iter()
        .map(|l| {
            let mut it = l.split_whitespace().map(|t| t.parse().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    let mut listed: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for l in data_lines(&read(dir.path(), "components.csv"), true) {
        let v: Vec<usize> = l.split(',').map(|t| t.trim().parse().unwrap()).collect();
        listed.entry(v[1]).or_default().insert(v[0]);
    }
    assert_eq!(listed.len(), 2);
    let oracle = closure_classes(boxes.len() + 1, &edges);
    assert_eq!(oracle, listed.into_values().collect());
}

#[test]
fn outputs_are_byte_identical() {
    let config = "builtin: mathieu(1, 0.2)\nfiber: sphere\nresolution: 32\nseed: 5\n";
    for args in [&["chain-graph"][..], &["integrate"], &["lift-demo"], &["project-demo"]] {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        let (oa, ob) = (skewflow(a.path(), config, args), skewflow(b.path(), config, args));
        assert_eq!(oa.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&oa.stderr));
        assert_eq!(oa.stdout, ob.stdout);
        let names: BTreeSet<_> = fs::read_dir(a.path().join("out")).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert!(!names.is_empty());
        for name in names {
            let fa = fs::read(a.path().join("out").join(&name)).unwrap();
            let fb = fs::read(b.path().join("out").join(&name)).unwrap();
            assert_eq!(fa, fb, "{name:?}");
            assert!(String::from_utf8(fa).unwrap().starts_with("# skewflow 0.1.0 config="));
        }
    }
}

#[test]
fn seed_and_config_change_the_header() {
    let dir = TempDir::new().unwrap();
    skewflow(dir.path(), "builtin: zero\nseed: 1\n", &["monodromy"]);
    let first = read(dir.path(), "monodromy.txt").lines().next().unwrap().to_string();
    skewflow(dir.path(), "builtin: zero\nseed: 2\n", &["monodromy"]);
    let second = read(dir.path(), "monodromy.txt").lines().next().unwrap().to_string();
    assert!(first.ends_with("seed=1") && second.ends_with("seed=2"));
    assert_ne!(first.split_whitespace().nth(3), second.split_whitespace().nth(3));
}

#[test]
fn bad_matrix_row_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = skewflow(dir.path(), "kind: constant\ndimension: 2\nA0: [[1, 0], [0, 1, 4]]\n", &["monodromy"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("`A0`") && err.contains("row 1"), "{err}");
}

#[test]
fn numerical_failure_exits_2() {
    let dir = TempDir::new().unwrap();
    let o = skewflow(dir.path(), "kind: constant\nA0: [[800, 0], [0, 1]]\n", &["monodromy"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn system_files_resolve_relative_to_the_config() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("diag.sys"), "kind: constant\ndimension: 2\nA0: [[1, 0],\n     [0, -1]]\n").unwrap();
    let o = skewflow(dir.path(), "system: diag.sys\nsteps: 1024\n", &["monodromy"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(dir.path(), "monodromy.txt").contains("2.71828182845"));
}

#[test]
fn trajectory_matches_the_closed_form() {
    let dir = TempDir::new().unwrap();
    let o = skewflow(dir.path(), "builtin: rotation\nt_end: 2\nrate: 8\nx0: [1, 0]\n", &["integrate"]);
    assert_eq!(o.status.code(), Some(0));
    let text = read(dir.path(), "trajectory.csv");
    assert_eq!(text.lines().nth(1), Some("t, x1, x2"));
    let rows = data_lines(&text, true);
    assert_eq!(rows.len(), 17);
    for row in rows {
        let v: Vec<f64> = row.split(',').map(|t| t.trim().parse().unwrap()).collect();
        let (c, s) = ((std::f64::consts::TAU * v[0]).cos(), (std::f64::consts::TAU * v[0]).sin());
        assert!((v[1] - c).abs() < 1e-8 && (v[2] - s).abs() < 1e-8, "{v:?}");
    }
}

#[test]
fn missing_command_and_system_are_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(skewflow(dir.path(), "builtin: zero\n", &[]).status.code(), Some(1));
    assert_eq!(skewflow(dir.path(), "seed: 3\n", &["monodromy"]).status.code(), Some(1));
    assert_eq!(skewflow(dir.path(), "builtin: zero\n", &["verify", "thm-x"]).status.code(), Some(1));
}
