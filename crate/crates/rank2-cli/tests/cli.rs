use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rank2_cli::report::Report;

const BIN: &str = env!("CARGO_BIN_EXE_rank2");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn report(out: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn check<'a>(r: &'a Report, name: &str) -> &'a rank2_cli::report::Check {
    r.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("no check {name}"))
}

const GENERATED: &str = r#"
seed = 11
[lattice]
omega1 = [1.0, 0.0]
omega2 = [0.3, 1.1]
[commute]
seeds = 2
"#;

#[test]
fn square_lattice_elliptic_check_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(&["elliptic-check"], &configs().join("square.toml"), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out);
    assert!(check(&r, "elliptic.g3_expected").pass);
    assert!(r.checks.iter().all(|c| c.pass));
    assert_eq!(r.tables, ["elliptic.csv"]);
}

#[test]
fn commute_scan_on_generated_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", GENERATED);
    let out = tmp.path().join("out");
    let o = run(&["commute-scan"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(check(&r, "commute.basis_dim_min").value, Some(3.0));
    assert_eq!(check(&r, "commute.basis_dim_max").value, Some(3.0));
    assert!(check(&r, "curve.residual").value.unwrap() < 1e-6);
    assert_eq!(check(&r, "commute.control_nullity").value, Some(7.0));
    let csv = std::fs::read_to_string(out.join("commute.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("11,3,"));
}

#[test]
fn missing_seed_with_generator_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", &GENERATED.replace("seed = 11", ""));
    let out = tmp.path().join("out");
    let o = run(&["commute-scan"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`seed`"));
    assert!(!out.exists(), "no partial outputs");
    // The flag supplies it.
    let o = run(&["build-operators", "--seed", "4"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&out).seed, Some(4));
}

#[test]
fn config_errors_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cases = [
        (GENERATED.replace("[commute]", "[commute]\nbogus = 1"), "bogus"),
        (GENERATED.replace("omega2 = [0.3, 1.1]", "omega2 = [2.0, 0.0]"), "lattice.omega2"),
        (GENERATED.replace("omega2 = [0.3, 1.1]", ""), "lattice.omega2"),
        (GENERATED.to_string() + "[tolerances]\nnot_a_tolerance = 1.0\n", "tolerances.not_a_tolerance"),
        (GENERATED.to_string() + "[flow]\ndt = -1.0\n", "flow.dt"),
        (GENERATED.to_string() + "[data]\nc_sum = [0.5, 0.0]\n", "data.c_sum"),
        (GENERATED.to_string() + "[data]\ngamma = [[0.1, 0.2]]\n", "data.v"),
        (GENERATED.to_string() + "[flow]\nkappa = \"table\"\n", "flow.kappa_table"),
    ];
    for (text, key) in cases {
        let cfg = write(tmp.path(), "c.toml", &text);
        let o = run(&["full-suite"], &cfg, &out);
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(2), "{key}: {err}");
        assert!(err.contains(key), "expected `{key}` in: {err}");
        assert!(!out.exists());
    }
    let cfg = write(tmp.path(), "c.toml", GENERATED);
    for (flag, key) in [("elliptic.ode", "--tol"), ("nope=1", "--tol nope"), ("elliptic.ode=x", "--tol elliptic.ode")] {
        let o = run(&["elliptic-check", "--tol", flag], &cfg, &out);
        assert_eq!(o.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&o.stderr).contains(key));
    }
    let o = run(&["elliptic-check"], &tmp.path().join("absent.toml"), &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn failing_check_exits_one_and_still_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", GENERATED);
    let out = tmp.path().join("out");
    let o = run(&["elliptic-check", "--tol", "elliptic.ode=0"], &cfg, &out);
    assert_eq!(o.status.code(), Some(1));
    let r = report(&out);
    let c = check(&r, "elliptic.ode");
    assert!(!c.pass && c.tolerance == 0.0);
    assert_eq!(r.config["tolerances"]["elliptic.ode"], 0.0);
}

#[test]
fn explicit_data_needs_no_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(&["build-operators"], &configs().join("explicit.toml"), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r.seed, None);
    assert!(check(&r, "operators.transfer_identity").pass);
    let csv = std::fs::read_to_string(out.join("coefficients.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn printed_set_builds_and_satisfies_its_sum_rule() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", &(GENERATED.to_string() + "[data]\nformula_set = \"printed\"\n"));
    let out = tmp.path().join("out");
    assert_eq!(run(&["build-operators"], &cfg, &out).status.code(), Some(0));
    assert!(check(&report(&out), "operators.printed_sum_rule").pass);
}

#[test]
fn config_echo_is_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", GENERATED);
    let out = tmp.path().join("out");
    run(&["flow-run", "--tol", "flow.monodromy=2e-8"], &cfg, &out);
    let r = report(&out);
    let tols = r.config["tolerances"].as_object().unwrap();
    for (k, v) in rank2_cli::config::default_tolerances() {
        let want = if k == "flow.monodromy" { 2e-8 } else { v };
        assert_eq!(tols[&k].as_f64(), Some(want), "{k}");
    }
    for key in ["seed", "lattice", "data", "elliptic", "commute", "ba", "flow"] {
        assert!(r.config.get(key).is_some(), "{key}");
    }
    assert_eq!(r.config["flow"]["period"], 16);
    assert_eq!(r.config["data"]["generator"], serde_json::Value::Null);
    assert_eq!(r.versions.rank2, rank2::VERSION);
    assert!(r.timings.contains_key("total"));
}

#[test]
fn flow_with_a_kappa_table() {
    let tmp = tempfile::tempdir().unwrap();
    let table: Vec<String> = (0..16).map(|n| format!("[{}, 0.0]", 0.1 * (n % 3) as f64)).collect();
    let text = format!("{GENERATED}[flow]\nkappa = \"table\"\nkappa_table = [{}]\nt_end = 1.0\n", table.join(", "));
    let cfg = write(tmp.path(), "c.toml", &text);
    let out = tmp.path().join("out");
    let o = run(&["flow-run"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out);
    // Σv_n still telescopes; the Toda invariants are not claimed.
    assert!(check(&r, "flow.delta_i1").pass);
    assert!(r.checks.iter().all(|c| c.name != "flow.delta_i2"));
    let csv = std::fs::read_to_string(out.join("flow.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,I1,I2,monodromy_trace,max|c|,max|v|");
}
