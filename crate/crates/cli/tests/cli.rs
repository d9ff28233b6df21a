use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use qkt_cli::config::{Geometry, Suite, SuiteRun};
use qkt_cli::{expand, replay, run, run_instance, CliError, ExperimentConfig, InstanceFile, Report};
use qkt_core::metric::rat;
use qkt_core::SpaceSpec;

fn qkt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkt")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn single(suite: Suite, samples: usize, eps: f64, geometry: Geometry, seed: u64) -> ExperimentConfig {
    let mut run = SuiteRun::new(suite);
    run.samples = Some(samples);
    run.eps = Some(vec![eps]);
    run.geometries = Some(vec![geometry]);
    ExperimentConfig::new(seed, vec![run])
}

#[test]
fn witness_suite_example() {
    let cfg = single(Suite::Witness, 200, 0.05, Geometry::plain(SpaceSpec::Cycle { n: 8 }, rat(1)), 42);
    let report = run(&cfg).unwrap();
    assert!(report.pass);
    let s = report.suite(Suite::Witness).unwrap();
    assert_eq!(s.instances.len(), 200);
    for inst in &s.instances {
        assert!(inst.extra["gap_over_eps"] < 3.0);
    }
}

#[test]
fn cover_suite_example() {
    let g = Geometry {
        space: SpaceSpec::Path { n: 10 },
        big_r: Some(rat(3)),
        r: rat(3),
        s: None,
    };
    let report = run(&single(Suite::Cover, 1, 0.1, g, 0)).unwrap();
    assert!(report.pass);
    let inst = &report.suites[0].instances[0];
    assert_eq!(inst.extra["min_gap_1"], 3.0);
    assert_eq!(inst.extra["min_gap_2"], 3.0);
}

#[test]
fn boundary_of_identity_example() {
    let mut cfg = single(Suite::Boundary, 1, 0.02, Suite::Boundary.default_geometry(), 0);
    cfg.suites[0].rotations = Some(0);
    let report = run(&cfg).unwrap();
    assert!(report.pass);
    assert_eq!(report.suites[0].instances[0].extra["rank_class"], 0.0);
}

#[test]
fn invalid_configs_are_rejected() {
    let bad_pair = single(Suite::Factor, 1, 0.02, Geometry::pair(SpaceSpec::Cycle { n: 32 }, rat(12), rat(2), rat(10)), 0);
    assert!(matches!(run(&bad_pair), Err(CliError::Config(_))));
    let bad_eps = single(Suite::Witness, 1, 0.25, Suite::Witness.default_geometry(), 0);
    assert!(matches!(run(&bad_eps), Err(CliError::Config(_))));
    let none = ExperimentConfig::new(0, vec![]);
    assert!(matches!(run(&none), Err(CliError::Config(_))));
}

#[test]
fn config_round_trips_and_names_bad_fields() {
    let cfg = single(Suite::Cia, 3, 0.02, Suite::Cia.default_geometry(), 7);
    let text = serde_json::to_string(&cfg).unwrap();
    let back: ExperimentConfig = qkt_cli::parse_json(&text).unwrap();
    assert_eq!(back, cfg);
    assert!(text.contains("\"s\":\"11/2\""));

    let broken = text.replace("\"seed\":7", "\"seed\":\"seven\"");
    match qkt_cli::parse_json::<ExperimentConfig>(&broken) {
        Err(CliError::Schema(msg)) => assert!(msg.starts_with("seed"), "{msg}"),
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn instances_cycle_through_geometries_and_eps() {
    let mut cfg = single(Suite::Witness, 7, 0.01, Suite::Witness.default_geometry(), 3);
    cfg.suites[0].eps = Some(vec![0.01, 0.05]);
    cfg.suites[0].geometries = Some(vec![
        Geometry::plain(SpaceSpec::Cycle { n: 8 }, rat(1)),
        Geometry::plain(SpaceSpec::Cycle { n: 9 }, rat(1)),
        Geometry::plain(SpaceSpec::Cycle { n: 10 }, rat(1)),
    ]);
    let specs = expand(cfg.seed, &cfg.resolve()[0]);
    let eps: Vec<f64> = specs.iter().map(|s| s.eps).collect();
    assert_eq!(eps, [0.01, 0.01, 0.01, 0.05, 0.05, 0.05, 0.01]);
    assert_eq!(specs[4].geometry.space, SpaceSpec::Cycle { n: 9 });
}

#[test]
fn csv_has_one_row_per_check() {
    let report = run(&single(Suite::Kappa, 4, 0.1, Suite::Kappa.default_geometry(), 1)).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "suite,index,space,eps,check,value,ceiling,ratio,pass");
    assert_eq!(lines.len(), 1 + 4 * 2);
    assert!(lines[1].starts_with("kappa,0,cycle(10),0.1,kappa0_distance,"));
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn witness_instance_file() -> InstanceFile {
    let cfg = single(Suite::Witness, 5, 0.05, Geometry::plain(SpaceSpec::Cycle { n: 12 }, rat(1)), 11);
    let spec = expand(cfg.seed, &cfg.resolve()[0])[3].clone();
    let result = run_instance(&spec);
    assert!(result.pass);
    InstanceFile::new(spec, Some(result))
}

#[test]
fn replay_reproduces_a_passing_instance() {
    let file = witness_instance_file();
    let report = replay(&file);
    assert_eq!(&report.suites[0].instances[0], file.result.as_ref().unwrap());

    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "instance.json", &serde_json::to_string_pretty(&file).unwrap());
    let out = qkt(&["replay", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("matches the recorded result"));
}

#[test]
fn replay_recomputes_after_eps_edit() {
    let mut file = witness_instance_file();
    let before = file.result.clone().unwrap();
    file.instance.eps = 0.01;
    let report = replay(&file);
    let after = &report.suites[0].instances[0];
    assert_eq!(after.eps, 0.01);
    assert_eq!(after.checks[0].ceiling, 0.03);
    assert_ne!(after.checks[0].value, before.checks[0].value);
    assert_eq!(after.pass, after.checks[0].value < 0.03);
}

#[test]
fn replay_of_corrupted_file_names_the_field() {
    let file = witness_instance_file();
    let text = serde_json::to_string_pretty(&file).unwrap().replacen("\"eps\": 0.05", "\"eps\": \"small\"", 1);
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "instance.json", &text);
    match InstanceFile::load(&path) {
        Err(CliError::Schema(msg)) => assert!(msg.starts_with("instance.eps"), "{msg}"),
        other => panic!("expected a schema error, got {other:?}"),
    }
    let out = qkt(&["replay", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("instance.eps"));
}

#[test]
fn failing_run_aborts_with_a_replayable_instance() {
    // Covers at radius R + 1 fail: adjacent pieces of a family sit R apart.
    let g = Geometry {
        space: SpaceSpec::Path { n: 20 },
        big_r: Some(rat(3)),
        r: rat(4),
        s: None,
    };
    let mut cfg = single(Suite::Cover, 2, 0.1, g, 5);
    cfg.suites.push(SuiteRun::new(Suite::Witness));
    let report = run(&cfg).unwrap();
    assert!(!report.pass);
    assert_eq!(report.suites.len(), 1);
    let file = report.aborted.clone().unwrap();
    assert_eq!(file.instance.index, 0);
    assert_eq!(replay(&file).suites[0].instances[0], file.result.unwrap());

    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write(dir.path(), "config.json", &serde_json::to_string(&cfg).unwrap());
    let out_dir = dir.path().join("out");
    let out = qkt(&["run", cfg_path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let saved = InstanceFile::load(&out_dir.join("failing-instance.json")).unwrap();
    assert_eq!(saved.instance.suite, Suite::Cover);
    let out = qkt(&["replay", out_dir.join("failing-instance.json").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&qkt(&["cover", "verify", "--space", "path:10", "--big-r", "3"])), 0);
    assert_eq!(code(&qkt(&["cover", "verify", "--space", "path:10", "--big-r", "3", "--r", "4"])), 1);
    assert_eq!(code(&qkt(&["verify", "factor", "--r", "3", "--samples", "1"])), 2);
    assert_eq!(code(&qkt(&["verify", "witness", "--eps", "0.3"])), 2);
    assert_eq!(code(&qkt(&["space", "gen", "--space", "blob:3"])), 2);
    assert_eq!(code(&qkt(&["run", "/nonexistent/config.json"])), 2);
    let ok = qkt(&["verify", "witness", "--space", "cycle:8", "--eps", "0.05", "--samples", "20", "--seed", "42"]);
    assert_eq!(code(&ok), 0);
}

#[test]
fn space_gen_prints_the_distance_matrix() {
    let out = qkt(&["space", "gen", "--space", "cycle:6"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let text = v.to_string();
    assert!(text.contains("cycle(6)"), "{text}");
}

#[test]
fn verify_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    let out = qkt(&["verify", "cia", "--samples", "5", "--seed", "3", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let report: Report = serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.schema, "qkt-report/1");
    assert!(report.timestamp.is_some());
    assert_eq!(report.suites[0].instances.len(), 5);
    assert!(out_dir.join("residuals.csv").exists());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn same_seed_gives_identical_reports(seed in any::<u64>()) {
        let cfg = ExperimentConfig::new(seed, vec![
            SuiteRun::new(Suite::Witness),
            SuiteRun::new(Suite::Kappa),
            SuiteRun::new(Suite::Cia),
        ]);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        prop_assert_eq!(a.canonical_json(), b.canonical_json());
        prop_assert!(!a.canonical_json().contains("timestamp"));
    }
}
