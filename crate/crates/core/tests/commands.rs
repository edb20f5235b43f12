use std::path::Path;

use reachverify::commands::{
    cmd_evaluate, cmd_generate, cmd_simulate, cmd_train, cmd_verify, Engine, Status, BRAKE,
};
use reachverify::config::{BackgroundVehicle, RunConfig};
use reachverify::datagen::{read_dataset, LaneDecision, VariableRange};
use reachverify::surrogate::OperatorConfig;
use reachverify::Error;

fn config_in(dir: &Path) -> RunConfig {
    RunConfig {
        out_dir: dir.to_path_buf(),
        ..RunConfig::default()
    }
}

fn shipped(name: &str, dir: &Path) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let mut cfg = RunConfig::load(&path).unwrap();
    cfg.out_dir = dir.to_path_buf();
    cfg
}

fn tiny_training(cfg: &mut RunConfig, experiments: usize, epochs: usize) {
    cfg.generate.experiments = experiments;
    cfg.surrogate = OperatorConfig {
        epochs,
        batch_size: 64,
        ..OperatorConfig::tiny()
    };
}

#[test]
fn generate_tiny_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path());
    cfg.generate.experiments = 2;
    let (report, status) = cmd_generate(&cfg).unwrap();
    assert_eq!(status, Status::Success);
    assert_eq!(report.summary.samples, 10);
    assert_eq!(report.summary.skipped, 0);
    assert_eq!(read_dataset(&cfg.dataset_path()).unwrap().len(), 10);
    let text = std::fs::read_to_string(cfg.dataset_path()).unwrap();
    assert_eq!(text.lines().count(), 11);
    let summary = std::fs::read_to_string(dir.path().join("generate_report.json")).unwrap();
    assert!(summary.contains("\"config_hash\""));
    assert!(summary.contains("\"skip_reasons\""));
}

#[test]
fn generate_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [a.path(), b.path()] {
        let mut cfg = config_in(d);
        cfg.generate.experiments = 5;
        cmd_generate(&cfg).unwrap();
    }
    for f in ["dataset.csv", "generate_report.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn generate_rejects_invalid_spec() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path());
    cfg.scenario.v = VariableRange::new([8.0, 4.0], [0.25, 0.5]);
    let err = cmd_generate(&cfg).unwrap_err();
    assert!(matches!(err, Error::ConfigInvalid(_)));
    assert!(err.to_string().contains("scenario.v.center"), "{err}");
}

#[test]
fn train_smoke_run_reports_three_splits() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path());
    tiny_training(&mut cfg, 200, 20);
    cmd_generate(&cfg).unwrap();
    let (report, _) = cmd_train(&cfg).unwrap();
    assert!(cfg.model_path().exists());
    assert_eq!(report.epochs, 20);
    assert!(report.final_loss < report.initial_loss);
    assert_eq!(report.train.samples + report.test.samples + report.validation.samples, 1000);
    for split in [&report.train, &report.test, &report.validation] {
        assert!(split.samples > 0);
        assert!(split.loss.is_finite());
        assert!((0.0..=1.0).contains(&split.recall_pos.mean));
        assert!((0.0..=1.0).contains(&split.precision_pos.mean));
    }
    let history = std::fs::read_to_string(dir.path().join("loss_history.csv")).unwrap();
    assert_eq!(history.lines().count(), 21);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("train_report.json")).unwrap()).unwrap();
    for split in ["train", "test", "validation"] {
        for key in ["loss", "recall_pos", "precision_pos"] {
            assert!(!json[split][key].is_null(), "{split}.{key}");
        }
    }
}

#[test]
fn train_without_dataset_fails_clearly() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_train(&config_in(dir.path())).unwrap_err();
    assert!(err.to_string().contains("dataset.csv"), "{err}");
    assert!(err.to_string().contains("generate"), "{err}");
}

#[test]
fn verify_centered_is_safe() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shipped("verify_centered.toml", dir.path());
    let (report, status) = cmd_verify(&cfg, Engine::Oracle, false).unwrap();
    assert_eq!(status, Status::Success);
    assert_eq!(status.exit_code(), 0);
    assert!(report.safe());
    assert_eq!(report.runs[0].steps.len(), cfg.scenario.horizon);
    assert!(report.runs[0].steps.iter().all(|s| s.safe));
}

#[test]
fn verify_near_bound_is_unsafe() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shipped("verify_near_bound.toml", dir.path());
    let (report, status) = cmd_verify(&cfg, Engine::Oracle, false).unwrap();
    assert_eq!(status, Status::Unsafe);
    assert_eq!(status.exit_code(), 2);
    assert_eq!(report.flag, "unsafe");
    let first = report.runs[0].first_unsafe_step.unwrap();
    assert!(!report.runs[0].steps[first - 1].vehicles[0].s1);
    // flag is consistent with the per-step verdicts
    assert!(report.runs[0].steps.iter().any(|s| !s.safe));
}

#[test]
fn verify_svg_has_one_octagon_per_vehicle_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path());
    cfg.scenario.vehicles = 2;
    cfg.scenario.lanes = 2;
    cmd_verify(&cfg, Engine::Oracle, true).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("verify.svg")).unwrap();
    assert_eq!(svg.matches("class=\"occupancy\"").count(), 2 * cfg.scenario.horizon);
    for step in 1..=cfg.scenario.horizon {
        assert_eq!(svg.matches(&format!("data-step=\"{step}\"")).count(), 2);
    }
}

#[test]
fn verify_surrogate_requires_model() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_verify(&config_in(dir.path()), Engine::Surrogate, false).unwrap_err();
    assert!(err.to_string().contains("model.bin"), "{err}");
}

#[test]
fn verify_both_engines_compares_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path());
    tiny_training(&mut cfg, 40, 2);
    cmd_generate(&cfg).unwrap();
    cmd_train(&cfg).unwrap();
    let (report, status) = cmd_verify(&cfg, Engine::Both, false).unwrap();
    assert_eq!(report.runs.len(), 2);
    let cmp = report.comparison.as_ref().unwrap();
    assert_eq!(cmp.steps.len(), cfg.scenario.horizon);
    assert_eq!(cmp.flags_agree, report.runs[0].safe == report.runs[1].safe);
    // unsafe if either engine finds a violation
    assert_eq!(status == Status::Success, report.runs.iter().all(|r| r.safe));
}

#[test]
fn simulate_changes_lane_behind_slow_vehicle() {
    let dir = tempfile::tempdir().unwrap();
    let (report, _) = cmd_simulate(&config_in(dir.path()), Engine::Oracle, true).unwrap();
    assert!(report.frames.iter().any(|f| f.lane_decision != LaneDecision::Keep));
    assert!(report.lane_changes >= 1);
    let last = report.frames.last().unwrap();
    assert_ne!(last.ego_lane, RunConfig::default().simulate.ego_lane);
    // the ego ends up ahead of the slow vehicle
    assert!(report.final_states[0][0] > report.final_states[1][0]);
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * report.frames.len());
    assert!(dir.path().join("frames/frame_0000.svg").exists());
}

#[test]
fn simulate_brakes_when_unsafe() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path());
    cfg.simulate.lanes = 1;
    cfg.simulate.ego_lane = 0;
    cfg.simulate.duration = 1.0;
    cfg.simulate.background = vec![BackgroundVehicle { x: 7.0, lane: 0, v: 4.5 }];
    let (report, _) = cmd_simulate(&cfg, Engine::Oracle, false).unwrap();
    let f = &report.frames[0];
    assert_ne!(f.verdict, "safe");
    assert!(f.braked);
    assert_eq!(f.applied, BRAKE);
    for f in &report.frames {
        assert_eq!(f.braked, f.verdict != "safe");
    }
}

#[test]
fn simulate_zero_duration() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path());
    cfg.simulate.duration = 0.0;
    let (report, status) = cmd_simulate(&cfg, Engine::Oracle, false).unwrap();
    assert_eq!(status, Status::Success);
    assert!(report.frames.is_empty());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("simulate_report.json")).unwrap()).unwrap();
    assert_eq!(json["frames"].as_array().unwrap().len(), 0);
}

#[test]
fn evaluate_rejects_zero_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path());
    cfg.evaluate.experiments = 0;
    assert!(matches!(cmd_evaluate(&cfg, false), Err(Error::ConfigInvalid(_))));
}

#[test]
fn evaluate_reports_every_step() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path());
    tiny_training(&mut cfg, 40, 2);
    cmd_generate(&cfg).unwrap();
    cmd_train(&cfg).unwrap();
    cfg.evaluate.experiments = 10;
    cfg.evaluate.timing_repeats = 3;
    let (report, _) = cmd_evaluate(&cfg, true).unwrap();
    assert_eq!(report.steps.len(), 5);
    assert_eq!(report.completed, 10);
    assert_eq!(report.agreement_count + report.disagreements.len(), 10);
    assert!((report.agreement_fraction - report.agreement_count as f64 / 10.0).abs() < 1e-12);
    let json = std::fs::read_to_string(dir.path().join("evaluate_report.json")).unwrap();
    assert!(json.contains("\"agreement_count\""));
    assert!(json.contains("\"agreement_fraction\""));
    assert!(dir.path().join("evaluate_timings.json").exists());
    assert!(dir.path().join("evaluate.svg").exists());
}

#[test]
fn config_hash_ignores_output_directory() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ha = reachverify::commands::config_hash(&config_in(a.path())).unwrap();
    let hb = reachverify::commands::config_hash(&config_in(b.path())).unwrap();
    assert_eq!(ha, hb);
}

#[test]
fn shipped_defaults_file_matches_built_in_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/defaults.toml");
    assert_eq!(RunConfig::load(&path).unwrap(), RunConfig::default());
}
