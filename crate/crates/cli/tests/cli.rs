use std::path::Path;
use std::process::Command;

use ifpinn::ansatz::AnsatzKind;
use ifpinn::nn::InitScheme;
use ifpinn::problems::ProblemId;
use ifpinn_cli::config::{expand_values, ExperimentConfig, SweepAxis};
use ifpinn_cli::{presets, run, sweep, verify, CliError};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ifpinn"))
}

/// A preset with a short budget writing into `dir`.
fn quick(name: &str, dir: &Path, iterations: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::parse(presets::get(name).unwrap()).unwrap();
    c.train.iterations = iterations;
    c.output = Some(dir.join(name).to_string_lossy().into_owned());
    c
}

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

#[test]
fn every_preset_parses_and_round_trips() {
    let mut n = 0;
    for name in presets::names() {
        let c = ExperimentConfig::parse(presets::get(name).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = ExperimentConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(c, again, "{name}");
        assert_eq!(c.hash(), again.hash());
        let file = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("presets/{name}.toml"));
        assert!(file.exists(), "{name}");
        n += 1;
    }
    // four problems x four kinds, the full-hard layout and the sweeps
    assert!(n >= 17 + 1 + 4);
    for p in ["p1", "p2", "p3", "p4"] {
        for k in ["window", "buffer", "soft_phi", "soft_multinet"] {
            assert!(presets::get(&format!("{p}_{k}")).is_some(), "{p}_{k}");
        }
    }
}

fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
    (
        prop::sample::select(vec![ProblemId::P1, ProblemId::P2, ProblemId::P3]),
        prop::sample::select(vec![
            AnsatzKind::Window,
            AnsatzKind::Buffer,
            AnsatzKind::SoftPhi,
            AnsatzKind::SoftMultinet,
        ]),
        prop::collection::vec(1usize..20, 1..4),
        1.0f64..2.0,
        0..=i64::MAX as u64,
        1e-5f64..1e-1,
        prop::sample::select(vec![
            InitScheme::Glorot,
            InitScheme::GlorotScaled { scale: 0.3 },
            InitScheme::Normal { sigma: 0.1 },
        ]),
        1usize..4,
    )
        .prop_map(|(problem, kind, hidden, beta, seed, lr, init, k)| {
            let mut c = ExperimentConfig::parse(presets::get("p1_window").unwrap()).unwrap();
            c.problem = problem;
            c.name = format!("{problem}_{kind}");
            c.ansatz.kind = kind;
            c.ansatz.hidden = hidden;
            c.ansatz.window_1d.beta = beta;
            c.ansatz.window_1d.interface_orders = [k, k];
            c.train.seed = seed;
            c.train.learning_rate = lr;
            c.train.init = init;
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialized_configs_parse_back_identically(c in arb_config()) {
        let text = c.to_toml();
        let back = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_toml(), text);
    }
}

#[test]
fn malformed_key_exits_with_code_two_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let text = presets::get("p1_buffer")
        .unwrap()
        .replace("learning_rate", "learnig_rate");
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    let out = bin().arg("run").arg(&path).env("IFPINN_OUT", dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("learnig_rate"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn invalid_values_are_config_errors() {
    let base = presets::get("p1_buffer").unwrap();
    for (from, to) in [
        ("kind = \"buffer\"", "kind = \"wedge\""),
        ("learning_rate = 5e-3", "learning_rate = -1.0"),
        ("problem = \"p1\"", "problem = \"p9\""),
        ("seed = 0", "seed = -1"),
    ] {
        let t = base.replace(from, to);
        assert!(matches!(ExperimentConfig::parse(&t), Err(CliError::Config(_))), "{to}");
    }
}

#[test]
fn buffer_preset_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let c = quick("p1_buffer", dir.path(), 20);
    let out = run(&c).unwrap();
    for f in [
        "report.json",
        "history.csv",
        "profile.csv",
        "constraints.json",
        "constraints.csv",
        "checkpoint.json",
        "solution.svg",
        "lhs_vs_source.svg",
        "constraints.svg",
    ] {
        let text = std::fs::read_to_string(out.dir.join(f)).unwrap_or_else(|_| panic!("{f}"));
        assert!(text.contains(&c.hash()), "{f} lacks the config hash");
        assert!(text.contains("seed"), "{f} lacks the seed");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.dir.join("report.json")).unwrap()).unwrap();
    assert!(report["final_relative_l2"].as_f64().unwrap().is_finite());
    let profile = data_lines(&out.dir.join("profile.csv"));
    assert_eq!(profile[0], "x,u_pred,u_ref,abs_err");
    assert_eq!(profile.len(), 1002);
    // header, one row per step, and the final metric row
    assert_eq!(data_lines(&out.dir.join("history.csv")).len(), 22);
}

#[test]
fn window_preset_constraint_file_shows_exact_interface() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&quick("p1_window_beta2_k1", dir.path(), 30)).unwrap();
    let s = &out.report.constraints;
    assert!(s.interface_value.unwrap() <= 1e-12);
    assert!(s.interface_flux.unwrap() <= 1e-11);
    let csv = data_lines(&out.dir.join("constraints.csv"));
    let row = csv.iter().find(|l| l.contains("interface_value")).unwrap();
    let max: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!(max <= 1e-12);
}

#[test]
fn reruns_reproduce_csv_content() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run(&quick("p3_window", a.path(), 40)).unwrap();
    let rb = run(&quick("p3_window", b.path(), 40)).unwrap();
    for f in ["history.csv", "profile.csv", "constraints.csv"] {
        assert_eq!(data_lines(&ra.dir.join(f)), data_lines(&rb.dir.join(f)), "{f}");
    }
    assert_eq!(ra.theta, rb.theta);
}

#[test]
fn beta_sweep_gives_three_finite_rows() {
    let dir = tempfile::tempdir().unwrap();
    let c = quick("sweep_beta", dir.path(), 30);
    let s = c.sweep.clone().unwrap();
    let (path, rows) = sweep(&c, s.axis, &s.values, 2).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.final_relative_l2.is_finite()));
    let lines = data_lines(&path);
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("axis,value,final_relative_l2,wall_seconds,seed"));
}

#[test]
fn window_order_sweep_pairs_edge_and_interior_orders() {
    let v: Vec<String> = ["1", "2", "3"].iter().map(|s| s.to_string()).collect();
    let combos = expand_values(SweepAxis::WindowK, &v);
    assert_eq!(combos.len(), 9);
    let dir = tempfile::tempdir().unwrap();
    let c = quick("sweep_window_k", dir.path(), 5);
    let (_, rows) = sweep(&c, SweepAxis::WindowK, &v, 1).unwrap();
    assert_eq!(rows.len(), 9);
    let c2 = c.with_axis_value(SweepAxis::WindowK, "3/2").unwrap();
    assert_eq!(c2.ansatz.window_1d.boundary_orders, [3, 3]);
    assert_eq!(c2.ansatz.window_1d.interface_orders, [3, 3]);
    assert_eq!(c2.ansatz.window_1d.interior_order, 2);
}

#[test]
fn seed_sweep_records_each_seed() {
    let dir = tempfile::tempdir().unwrap();
    let c = quick("sweep_seed", dir.path(), 10);
    let v: Vec<String> = ["0", "1", "2"].iter().map(|s| s.to_string()).collect();
    let (_, rows) = sweep(&c, SweepAxis::Seed, &v, 1).unwrap();
    assert_eq!(rows.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![0, 1, 2]);
}

#[test]
fn buffer_training_is_robust_to_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::parse(presets::get("sweep_seed").unwrap()).unwrap();
    c.output = Some(dir.path().join("seeds").to_string_lossy().into_owned());
    let v: Vec<String> = ["0", "1"].iter().map(|s| s.to_string()).collect();
    let (_, rows) = sweep(&c, SweepAxis::Seed, &v, 1).unwrap();
    for r in &rows {
        assert!(r.final_relative_l2 <= 1e-3, "seed {}: {}", r.seed, r.final_relative_l2);
    }
    let curves: Vec<Vec<String>> = rows
        .iter()
        .map(|r| data_lines(&dir.path().join("seeds/sweep_seed").join(&r.value).join("history.csv")))
        .collect();
    assert_ne!(curves[0], curves[1]);
}

#[test]
fn axis_must_match_ansatz() {
    let c = ExperimentConfig::parse(presets::get("p1_buffer").unwrap()).unwrap();
    assert!(matches!(c.with_axis_value(SweepAxis::Beta, "1.5"), Err(CliError::Config(_))));
    assert!(matches!(c.with_axis_value(SweepAxis::WindowK, "2"), Err(CliError::Config(_))));
    assert!(c.with_axis_value(SweepAxis::InitScheme, "normal:0.1").is_ok());
    assert!(c.with_axis_value(SweepAxis::InitScheme, "uniform").is_err());
}

#[test]
fn verify_needs_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let c = quick("p1_window", dir.path(), 0);
    assert!(matches!(verify(&c), Err(CliError::MissingCheckpoint(_))));
    let out = bin()
        .args(["verify", "p1_window"])
        .env("IFPINN_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verified_window_checkpoint_has_exact_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let c = quick("p2_window", dir.path(), 20);
    run(&c).unwrap();
    let v = verify(&c).unwrap();
    for e in &v.report.dense {
        assert!(e.max <= 1e-11, "{} {}: {}", e.condition, e.location, e.max);
    }
    assert!(v.dir.join("verify.csv").exists());
}

#[test]
fn untrained_rectangle_buffer_holds_at_its_samples() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = quick("p4_buffer", dir.path(), 0);
    c.reference.nx = 64;
    c.reference.ny = 32;
    c.verify.dense = 50;
    run(&c).unwrap();
    let v = verify(&c).unwrap();
    assert!(v.summary.at_samples.unwrap() <= 1e-9, "{:?}", v.summary.at_samples);
    assert!(v.summary.interface_max().unwrap().is_finite());
}

#[test]
fn diverging_run_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = presets::get("p1_soft_phi")
        .unwrap()
        .replace("learning_rate = 5e-3", "learning_rate = 1e300")
        .replace("iterations = 30000", "iterations = 200");
    let path = dir.path().join("nan.toml");
    std::fs::write(&path, text).unwrap();
    let out = bin().arg("run").arg(&path).env("IFPINN_OUT", dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oracle_and_window_commands_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("p3.csv");
    let st = bin().args(["oracle", "p3", "--out"]).arg(&o).status().unwrap();
    assert!(st.success());
    let lines = data_lines(&o);
    assert_eq!(lines[0], "x,u,du,d2u");
    assert_eq!(lines.len(), 1002);

    let out = bin()
        .args(["window", "--kind", "interior", "--order", "1", "--samples", "5"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "tau,w,dw,d2w");
    // 1 - 3t^2 + 2t^3 at t = 0.5
    let mid: Vec<f64> = rows[3].split(',').map(|v| v.parse().unwrap()).collect();
    assert!((mid[1] - 0.5).abs() < 1e-15 && (mid[2] + 1.5).abs() < 1e-15);
}

#[test]
fn help_documents_every_command() {
    let out = bin().arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for c in ["run", "sweep", "verify", "oracle", "window", "presets", "IFPINN_OUT"] {
        assert!(text.contains(c), "{c}");
    }
}
