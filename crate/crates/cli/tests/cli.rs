use std::path::Path;
use std::process::{Command, Output};

fn lutlin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lutlin"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = lutlin(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_rows(path: &Path) -> usize {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .count()
        - 1
}

const SMALL: [&str; 6] = ["-L", "1024", "-M", "3", "--n-sweep", "2,4"];

#[test]
fn generate_design_apply_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (x, v, lin, y) = (
        d.join("x.csv"),
        d.join("v.csv"),
        d.join("lin.toml"),
        d.join("y.csv"),
    );
    ok(&[
        "generate",
        "-L",
        "2048",
        "--index",
        "0",
        "--reference",
        s(&x),
        "--distorted",
        s(&v),
    ]);
    assert_eq!(data_rows(&x), 2048);
    let report = ok(&[
        "design",
        "--reference",
        s(&x),
        "--distorted",
        s(&v),
        "-N",
        "16",
        "--output",
        s(&lin),
    ]);
    assert!(report.contains("method = proposed-onebit"));
    assert!(report.contains("solves = 1"));
    ok(&[
        "apply",
        "--linearizer",
        s(&lin),
        "--input",
        s(&v),
        "--output",
        s(&y),
        "--lut",
    ]);
    let before = ok(&["sndr", "--reference", s(&x), "--input", s(&v)]);
    let after = ok(&["sndr", "--reference", s(&x), "--input", s(&y)]);
    let db = |t: &str| {
        t.split('\t')
            .next()
            .unwrap()
            .trim_start_matches("sndr_db=")
            .parse::<f64>()
            .unwrap()
    };
    assert!(db(&after) > db(&before) + 5.0, "{before} -> {after}");

    let branch_y = d.join("yb.csv");
    ok(&[
        "apply",
        "--linearizer",
        s(&lin),
        "--input",
        s(&v),
        "--output",
        s(&branch_y),
    ]);
    let strip = |p: &Path| {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .skip(1)
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&y), strip(&branch_y));

    let spec = d.join("spec.csv");
    ok(&["spectrum", "--input", s(&y), "--output", s(&spec)]);
    assert_eq!(data_rows(&spec), 1025);

    let relu = d.join("relu.toml");
    let report = ok(&[
        "design",
        "--reference",
        s(&x),
        "--distorted",
        s(&v),
        "-N",
        "4",
        "--method",
        "relu",
        "--bmax-grid",
        "0.5,0.7",
        "--output",
        s(&relu),
    ]);
    assert_eq!(report.matches("sweep bmax=").count(), 2);
}

#[test]
fn verify_lut_reports_zero_discrepancy() {
    let out = ok(&["verify-lut", "-L", "1024", "--n-sweep", "2,4,32"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    for l in lines {
        assert!(l.ends_with("levels=256\tmax_discrepancy=0e0"), "{l}");
    }
}

#[test]
fn examples_are_deterministic_and_chain() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let mut args = vec!["example1", "--output-dir", s(dir), "--highlight-n", "4"];
        args.extend(SMALL);
        let out = ok(&args);
        assert!(out.contains("proposed-onebit\tN=4"));
    }
    let ex1 = |d: &Path| d.join("example1");
    let mut csvs: Vec<_> = std::fs::read_dir(ex1(a.path()))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".csv"))
        .collect();
    csvs.sort();
    assert!(csvs.len() >= 10);
    for name in &csvs {
        assert_eq!(
            std::fs::read(ex1(a.path()).join(name)).unwrap(),
            std::fs::read(ex1(b.path()).join(name)).unwrap(),
            "{name:?}"
        );
    }
    assert_eq!(data_rows(&ex1(a.path()).join("sndr_vs_N.csv")), 8);
    assert_eq!(data_rows(&ex1(a.path()).join("sndr_proposed-onebit_N2.csv")), 3);

    let mut args = vec!["example2", "--output-dir", s(a.path()), "--highlight-n", "4"];
    args.extend(SMALL);
    let out = ok(&args);
    assert!(out.contains("nullsub\t"));
    assert_eq!(data_rows(&a.path().join("example2/robustness.csv")), 3);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "eval_signals = 4\nsignal_len = 1024\nn_sweep = [2]\noutput_dir = {:?}\n",
            s(dir.path())
        ),
    )
    .unwrap();
    ok(&["example1", "--config", s(&cfg), "-M", "2"]);
    assert_eq!(data_rows(&dir.path().join("example1/sndr_uncorrected.csv")), 2);
    let manifest = std::fs::read_to_string(dir.path().join("example1/manifest.toml")).unwrap();
    assert!(manifest.contains("eval_signals = 2"));
}

#[test]
fn failures_emit_machine_readable_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = lutlin(&[
        "spectrum",
        "--input",
        s(&missing),
        "--output",
        s(&dir.path().join("o.csv")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error\tio\t"), "{err}");

    let out = lutlin(&["example1", "-L", "1000"]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error\tnot_power_of_two\t"));

    let out = lutlin(&["example2", "--output-dir", s(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error\tinvalid_parameter\t"));

    let out = lutlin(&["design", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error\tusage\t"));
}
