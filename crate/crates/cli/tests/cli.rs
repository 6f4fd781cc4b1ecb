//! End-to-end runs of the `convex` binary and the library runner.

use std::path::Path;
use std::process::{Command as Process, Output};

use convex_cli::bundle::{Records, ReportBundle};
use convex_cli::{emit_plot_data, run, BodySource, CliError, Command, ExperimentConfig};
use convex_core::inequalities::Relation;
use convex_core::{InequalityRecord, ModelFamily, ModelSpec};

fn convex(dir: &Path, args: &[&str]) -> Output {
    Process::new(env!("CARGO_BIN_EXE_convex")).current_dir(dir).args(args).env_remove("CONVEX_OUT_DIR").output().unwrap()
}

#[test]
fn gen_check_report_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(convex(d, &["gen", "--family", "simplex", "--n", "3", "--out", "s.json"]).status.code(), Some(0));
    assert!(d.join("out/bodies/simplex-n3.json").exists());
    let out = convex(d, &["check", "--inequality", "rogers_shephard,sym_hull", "--body", "s.json", "--seed", "2", "--out", "r.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(d.join("r.csv")).unwrap();
    assert!(csv.starts_with("inequality,body_id,n,l,"));
    assert!(csv.contains("rogers_shephard,s,3,,,,") && csv.contains(",1.00000000000e0,at-most,true,"));
    let again = convex(d, &["report", "--bundle", "out/bundle.json", "--view", "inequalities", "--out", "again.csv"]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(d.join("again.csv")).unwrap(), csv);
}

#[test]
fn validation_errors_exit_3_and_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = convex(tmp.path(), &["scan", "--family", "cube", "--n", "3", "--l", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`seed`"));
    let out = convex(tmp.path(), &["cover", "--pair", "missing.json", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let out = convex(tmp.path(), &["check", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn env_var_sets_default_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let status = Process::new(env!("CARGO_BIN_EXE_convex"))
        .current_dir(tmp.path())
        .args(["gen", "--family", "cube", "--n", "2"])
        .env("CONVEX_OUT_DIR", "elsewhere")
        .status()
        .unwrap();
    assert!(status.success());
    assert!(tmp.path().join("elsewhere/bundle.json").exists());
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn config_file_runs_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"command": "cover", "seed": 5, "samples": 4000, "tgrid": [0.5, 1, 2],
                  "bodies": [{"family": "cross-polytope", "n": 3}], "views": ["regularity"]}"#;
    std::fs::write(tmp.path().join("cfg.json"), cfg).unwrap();
    for dir in ["a", "b"] {
        let out = convex(tmp.path(), &["run", "--config", "cfg.json", "--out-dir", dir]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(tmp.path().join("a/regularity.csv")).unwrap();
    assert_eq!(a, std::fs::read(tmp.path().join("b/regularity.csv")).unwrap());
    let a = std::fs::read(tmp.path().join("a/bundle.json")).unwrap();
    assert_eq!(a, std::fs::read(tmp.path().join("b/bundle.json")).unwrap());
}

#[test]
fn same_config_gives_same_bundle() {
    let mut c = ExperimentConfig::new(Command::Check);
    c.bodies.push(BodySource::Model(ModelSpec { seed: 3, m: Some(7), ..ModelSpec::new(ModelFamily::RandomVertexPolytope, 3) }));
    c.inequality = Some("constant-free".into());
    c.subspaces = 2;
    c.seed = Some(11);
    let a = run(&c).unwrap();
    assert_eq!(a, run(&c).unwrap());
    assert_eq!(a.exit_code(), 0);
    assert!(a.records.inequalities.iter().all(|r| r.seed.is_some() && !r.method.is_empty()));
    c.seed = Some(12);
    assert_ne!(a.metadata.config_hash, run(&c).unwrap().metadata.config_hash);
}

#[test]
fn violations_take_exit_code_2() {
    let c = ExperimentConfig::new(Command::Check);
    let bad = InequalityRecord {
        inequality: "sym_hull".into(),
        body_id: "k".into(),
        n: 2,
        l: None,
        subspace_id: None,
        direction: None,
        lambda: None,
        lhs: 2.0,
        rhs: 1.0,
        ratio: 2.0,
        relation: Relation::AtMost,
        pass: Some(false),
        implied_constant: None,
        position: None,
        method: "exact".into(),
        seed: None,
    };
    let records = Records { inequalities: vec![bad], ..Records::default() };
    let b = ReportBundle::new(&c, records.clone(), vec!["k2: degenerate".into()], vec![]);
    assert_eq!(b.exit_code(), 2);
    let b = ReportBundle::new(&c, Records::default(), vec!["k2: degenerate".into()], vec![]);
    assert_eq!(b.exit_code(), 3);
    assert!(b.summary.partial);
}

#[test]
fn views_reject_unknown_and_empty() {
    let mut c = ExperimentConfig::new(Command::Gen);
    c.bodies.push(BodySource::Model(ModelSpec::new(ModelFamily::Cube, 2)));
    let b = run(&c).unwrap();
    assert!(matches!(emit_plot_data(&b, "histogram"), Err(CliError::UnknownView(_))));
    assert!(matches!(emit_plot_data(&b, "scan"), Err(CliError::EmptyView(_))));
    let csv = emit_plot_data(&b, "bodies").unwrap();
    assert_eq!(csv, "id,kind,n,volume,method\ncube-n2,H,2,4.00000000000e0,exact\n");
}
