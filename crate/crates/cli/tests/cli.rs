use serde_json::Value;
use std::f64::consts::{FRAC_PI_6, PI, SQRT_2};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_conegeo");

fn manifest(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(BIN).args(args).arg("--out").arg(out).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Parse `file` and validate it against `schemas/<schema>.schema.json`.
fn checked(file: &Path, schema: &str) -> Value {
    let doc = read_json(file);
    let s = read_json(&manifest(&format!("schemas/{schema}.schema.json")));
    let compiled = jsonschema::JSONSchema::compile(&s).expect("schema compiles");
    if let Err(errs) = compiled.validate(&doc) {
        let msgs: Vec<String> = errs.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{} violates {schema}: {msgs:?}", file.display());
    }
    doc
}

const SMALL: [&str; 10] = [
    "--set",
    "discretization.n_nodes=32",
    "--set",
    "discretization.n_polish=64",
    "--set",
    "discretization.rounds=2",
    "--set",
    "discretization.slices=4",
    "--set",
    "metric.family=\"profile\"",
];

fn small(extra: &[&'static str]) -> Vec<&'static str> {
    SMALL.iter().copied().chain(extra.iter().copied()).collect()
}

#[test]
fn geodesic_on_cone_has_the_antipodal_length() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "geodesic",
            "--set",
            "metric.family=\"cone\"",
            "--set",
            "experiment.r0=[1.0]",
            "--set",
            "discretization.n_nodes=512",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = checked(&dir.path().join("geodesic.json"), "geodesic");
    let l = doc["result"]["report"]["length"].as_f64().unwrap();
    assert!((l - SQRT_2).abs() <= 1e-3, "L = {l}");
    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert!(csv.starts_with("t,chart,r_or_u,phi_or_v\n"));
    assert_eq!(csv.lines().count(), 514);
    assert!(!csv.contains('\r'));
}

#[test]
fn flat_geodesic_between_points_three_apart() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "geodesic",
            "--set",
            "metric.family=\"flat\"",
            "--set",
            "experiment.endpoints=[[1.0, 1.0], [4.0, 1.0]]",
            "--set",
            "experiment.initial=\"arc\"",
            "--set",
            "discretization.n_nodes=64",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = checked(&dir.path().join("geodesic.json"), "geodesic");
    let rep = &doc["result"]["report"];
    assert!((rep["length"].as_f64().unwrap() - 3.0).abs() < 1e-6);
    assert_eq!(rep["index"], 0);
}

#[test]
fn profile_geodesic_report_is_schema_valid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["geodesic", "--set", "experiment.r0=[20.0]", "--set", "discretization.n_nodes=64"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = checked(&dir.path().join("geodesic.json"), "geodesic");
    assert!(doc["result"]["report"]["clairaut_residual"].is_number());
    let trace = std::fs::read_to_string(dir.path().join("flow_trace.csv")).unwrap();
    assert!(trace.lines().count() > 2);
}

#[test]
fn cone_minmax_ratio_is_near_four_and_snapshots_match_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = manifest("configs/cone_minmax.toml");
    let o = run(
        dir.path(),
        &[
            "minmax",
            "--config",
            cfg.to_str().unwrap(),
            "--snapshots",
            "--set",
            "discretization.n_nodes=64",
            "--set",
            "discretization.rounds=4",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = checked(&dir.path().join("minmax.json"), "minmax");
    let res = &doc["result"]["result"];
    let ratio = res["ratio"].as_f64().unwrap();
    assert!((3.6..=4.2).contains(&ratio), "ratio {ratio}");
    assert_eq!(res["singular"], true);
    let rounds = doc["result"]["rounds"].as_array().unwrap().len();
    let snaps = std::fs::read_dir(dir.path().join("snapshots")).unwrap().count();
    assert_eq!(snaps, rounds);
    let trace = std::fs::read_to_string(dir.path().join("lambda_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), rounds + 1);
    assert!(trace.starts_with("round,lambda,best,argmax,slices,max_gap,max_identity_residual\n"));
}

#[test]
fn flat_minmax_exits_with_the_collapse_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &small(&["minmax", "--set", "metric.family=\"flat\"", "--set", "experiment.r0=[2.0]"]));
    assert_eq!(code(&o), 3);
    let err = checked(&dir.path().join("error.json"), "error");
    assert_eq!(err["error"], "collapse");
    let line: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(line["exit_code"], 3);
}

#[test]
fn starved_flow_exits_with_the_convergence_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["geodesic", "--set", "experiment.r0=[5.0]", "--set", "discretization.flow.tau_max=0.01"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(checked(&dir.path().join("error.json"), "error")["error"], "convergence");
}

#[test]
fn invalid_configs_exit_with_the_config_code() {
    let cases: [&[&str]; 6] = [
        &["geodesic", "--set", "experiment.r0=[3.0, 2.0]"],
        &["geodesic", "--set", "discretization.n_nodes=4"],
        &["minmax", "--set", "discretization.slices=2"],
        &["geodesic", "--set", "discretization.flow.tol_geo=-1.0"],
        &["geodesic", "--config", "/nonexistent/run.toml"],
        &["verify", "curvature"],
    ];
    for args in cases {
        let dir = tempfile::tempdir().unwrap();
        let o = run(dir.path(), args);
        assert_eq!(code(&o), 4, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let line: Value = serde_json::from_slice(&o.stderr).unwrap();
        assert_eq!(line["error"], "config");
    }
}

#[test]
fn toml_config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[metric]\nfamily = \"cone\"\nalpha = 0.7\n").unwrap();
    let o = run(dir.path(), &["verify", "mass", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let doc = checked(&dir.path().join("mass.json"), "mass");
    assert_eq!(doc["config"]["metric"]["alpha"], 0.7);
    assert_eq!(doc["result"]["mass"].as_f64().unwrap(), 2.0 * PI * (1.0 - 0.7f64.sin()));
}

#[test]
fn shipped_configs_validate() {
    for name in ["cone_minmax", "profile_sweep", "perturbed_distinctness"] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = manifest(&format!("configs/{name}.toml"));
        let o = run(dir.path(), &["verify", "mass", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn mass_row_matches_the_angle_defect() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "mass"]);
    assert_eq!(code(&o), 0);
    let doc = checked(&dir.path().join("mass.json"), "mass");
    assert_eq!(doc["result"]["mass"].as_f64().unwrap(), 2.0 * PI * (1.0 - FRAC_PI_6.sin()));
    assert_eq!(doc["result"]["exact"], true);
}

#[test]
fn gauss_bonnet_defects_are_small_at_three_radii() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "gauss-bonnet"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = checked(&dir.path().join("gauss_bonnet.json"), "gauss_bonnet");
    let rows = doc["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["defect"].as_f64().unwrap().abs() <= 1e-3));
    let csv = std::fs::read_to_string(dir.path().join("gauss_bonnet.csv")).unwrap();
    assert!(csv.starts_with("r0,int_k,int_kappa,defect,mass_estimate,refinement_change,resolution_warning\n"));
}

#[test]
fn no_drift_certificate_is_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &small(&["verify", "no-drift", "--set", "experiment.r0=[4.0, 6.0, 8.0]"]));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = checked(&dir.path().join("no_drift.json"), "no_drift");
    assert_eq!(doc["result"]["bounded"], true);
    assert_eq!(doc["result"]["candidate"]["runs"].as_array().unwrap().len(), 3);
}

#[test]
fn blow_down_and_sweep_outputs_are_schema_valid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &small(&["verify", "blow-down", "--set", "experiment.r0=[4.0, 8.0]"]));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = checked(&dir.path().join("blow_down.json"), "blow_down");
    assert_eq!(doc["result"]["rows"].as_array().unwrap().len(), 6);
    assert_eq!(doc["result"]["gamma3_window_vertex"], true);
    let o = run(dir.path(), &small(&["sweep-lambda", "--set", "experiment.r0=[4.0, 8.0]"]));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = checked(&dir.path().join("lambda_sweep.json"), "sweep_lambda");
    assert_eq!(doc["result"]["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn distinctness_output_is_schema_valid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &small(&[
            "verify",
            "distinctness",
            "--set",
            "metric.family=\"perturbed\"",
            "--set",
            "experiment.r0=[8.0]",
            "--set",
            "experiment.phi0=[0.0, 0.7853981633974483]",
        ]),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = checked(&dir.path().join("distinctness.json"), "distinctness");
    assert_eq!(doc["result"]["pairs"].as_array().unwrap().len(), 1);
}

const QUICK_SELFTEST: [&str; 4] = ["--set", "experiment.selftest_curves=8", "--set", "experiment.selftest_nodes=16"];

#[test]
fn selftest_passes_and_is_byte_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args: Vec<&str> = ["selftest", "--seed", "11"].iter().copied().chain(QUICK_SELFTEST).collect();
    let oa = run(a.path(), &args);
    let ob = run(b.path(), &args);
    assert_eq!(code(&oa), 0, "{}", String::from_utf8_lossy(&oa.stdout));
    assert_eq!(oa.stdout, ob.stdout);
    for f in ["selftest.json", "selftest.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
    let doc = checked(&a.path().join("selftest.json"), "selftest");
    assert_eq!(doc["config"]["seed"], 11);
}

#[test]
fn corrupted_gradient_fails_the_gradient_suite() {
    let dir = tempfile::tempdir().unwrap();
    let args: Vec<&str> = ["selftest", "--fault-gradient"].iter().copied().chain(QUICK_SELFTEST).collect();
    let o = run(dir.path(), &args);
    assert_eq!(code(&o), 1);
    let doc = checked(&dir.path().join("selftest.json"), "selftest");
    let suites = doc["result"]["suites"].as_array().unwrap();
    let grad = suites.iter().find(|s| s["name"] == "gradient-fd").unwrap();
    assert_eq!(grad["pass"], false);
    assert_eq!(doc["result"]["pass"], false);
}

#[test]
fn outputs_do_not_depend_on_the_worker_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let base = small(&["minmax", "--set", "experiment.r0=[6.0]", "--snapshots"]);
    let with = |w: &'static str| -> Vec<&str> { base.iter().copied().chain(["--workers", w]).collect() };
    assert_eq!(code(&run(a.path(), &with("1"))), 0);
    assert_eq!(code(&run(b.path(), &with("3"))), 0);
    for f in [
        "minmax.json",
        "lambda_trace.csv",
        "gamma1.csv",
        "gamma2.csv",
        "gamma3.csv",
        "snapshots/round_000.csv",
        "snapshots/round_002.csv",
    ] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}
