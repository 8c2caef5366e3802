use std::path::PathBuf;
use std::process::Command;

use greenldp::cli::run_with;

fn model(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "examples", "models", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("greenldp").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn phi_at_zero_is_one() {
    let m = model("walk1d.toml");
    let (code, out, _) = run(&["phi", "--model", &m, "--a", "0"]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "phi"), 1.0);
}

#[test]
fn qpot_both_methods() {
    let m = model("walk1d.toml");
    let (code, out, _) = run(&["qpot", "--model", &m, "--q", "0", "--q-prime", "-1"]);
    assert_eq!(code, 0);
    assert!((field(&out, "value") - (7.0f64 / 3.0).ln()).abs() < 1e-9);
    assert!((field(&out, "t_star") - 2.5).abs() < 1e-6);
    let (code, out, _) = run(&["qpot", "--model", &m, "--q", "0", "--q-prime", "-1", "--method", "both"]);
    assert_eq!(code, 0);
    assert!(field(&out, "difference") < 1e-9);
}

#[test]
fn rate_and_green() {
    let m = model("walk1d.toml");
    let (code, out, _) = run(&["rate", "--model", &m, "--T", "1", "--q", "0", "--q-prime", "0"]);
    assert_eq!(code, 0);
    assert!((field(&out, "value") + (2.0 * 0.21f64.sqrt()).ln()).abs() < 1e-10);

    let (code, out, _) = run(&["green", "--model", &m, "--q-prime", "-5", "--n", "1"]);
    assert_eq!(code, 0);
    let exact = 2.5 * (3.0f64 / 7.0).powi(5);
    assert!((field(&out, "value") - exact).abs() < 1e-6 * exact);
}

#[test]
fn scan_writes_csv_to_a_file() {
    let m = model("walk1d.toml");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let p = path.to_string_lossy().into_owned();
    let args = [
        "scan", "--model", &m, "--q", "0", "--q-prime", "-1", "--delta", "0.25", "--n-grid", "10,20", "--output", &p,
    ];
    let (code, out, err) = run(&args);
    assert_eq!(code, 0, "{err}");
    assert!(out.is_empty());
    let csv = std::fs::read_to_string(&path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,R,delta,log_measure,predicted,backend,std_error"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 7);
    assert_eq!(row[0], "10");
    assert_eq!(row[5], "exact");
    assert_eq!(row[6], "");
    assert!(csv.ends_with('\n') && !csv.contains('\r'));
}

#[test]
fn mc_scan_is_identical_across_thread_counts() {
    let m = model("walk2d.toml");
    let base = [
        "scan", "--model", &m, "--q", "0,0", "--q-prime", "-1,0", "--delta", "0.25", "--n-grid", "6,8", "--backend",
        "mc", "--paths", "4000", "--seed", "17",
    ];
    let outputs: Vec<String> = ["1", "2", "4", "1"]
        .iter()
        .map(|t| {
            let mut args = vec!["--threads", t];
            args.extend_from_slice(&base);
            let (code, out, err) = run(&args);
            assert_eq!(code, 0, "{err}");
            out
        })
        .collect();
    assert!(outputs.iter().all(|o| o == &outputs[0]));
    assert!(outputs[0].contains(",mc,"));
}

#[test]
fn verify_passes_on_the_examples() {
    let (code, out, err) = run(&["verify", "--model", &model("walk1d.toml"), "--samples", "1000", "--seed", "7"]);
    assert_eq!(code, 0, "{out}{err}");
    assert!(out.lines().all(|l| l.starts_with("PASS")));
    assert!(out.contains("identity:triangle"));
    let (code, out, _) = run(&["verify", "--model", &model("halfplane.toml"), "--samples", "10"]);
    assert_eq!(code, 0);
    assert!(out.contains("SKIP"));
}

#[test]
fn exit_codes() {
    let m = model("walk1d.toml");
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["phi", "--model", &m, "--a", "0", "--bogus"]).0, 1);
    assert_eq!(run(&["phi", "--model", "/nonexistent.toml", "--a", "0"]).0, 1);
    assert_eq!(run(&["phi", "--model", &m, "--a", "zero"]).0, 1);
    // dimension mismatch
    assert_eq!(run(&["qpot", "--model", &m, "--q", "0,0", "--q-prime", "1"]).0, 1);
    // the truncated Green's function needs the target inside the ball
    assert_eq!(run(&["green", "--model", &m, "--q-prime", "40", "--R", "10"]).0, 1);
    // recurrent walk: no Green's function
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.toml");
    std::fs::write(&flat, "dim = 1\nstate_space = \"full\"\n[interior]\nsupport = [[1], [-1]]\nprobs = [0.5, 0.5]\n").unwrap();
    let (code, _, err) = run(&["green", "--model", &flat.to_string_lossy(), "--q-prime", "3"]);
    assert_eq!(code, 1);
    assert!(err.contains("hypothesis"), "{err}");
    let (code, _, err) = run(&["green", "--model", &m, "--q-prime", "-3", "--cell-cap", "10"]);
    assert_eq!(code, 2, "{err}");
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn binary_output_is_reproducible() {
    let exe = env!("CARGO_BIN_EXE_greenldp");
    let m = model("walk1d.toml");
    let go = |threads: &str| {
        Command::new(exe)
            .args(["--threads", threads, "mc", "--model", &m, "--q-prime", "-1", "--n", "4", "--paths", "3000", "--seed", "4"])
            .output()
            .unwrap()
    };
    let a = go("1");
    let b = go("3");
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let bad = Command::new(exe).arg("nope").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(!bad.stderr.is_empty());
}
