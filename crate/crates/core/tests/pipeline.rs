use std::path::Path;

use ssdr_core::kle::Mode;
use ssdr_core::pipeline::{ConfigRequest, Profile, SpaceKind, StageStatus, Study};
use ssdr_core::Error;

const TINY: &str = r#"{
  "profile": "desk",
  "seed": 3,
  "sampling": { "psi": 48 },
  "validity": { "samples": 1000, "runs": 2, "kappas": [3] },
  "reduction": { "stored_modes": 12, "mode_exports": 2 },
  "optimizer": {
    "full": { "population": 8, "generations": 2 },
    "ssdr": { "population": null, "generations": 2 },
    "kle": { "population": 8, "generations": 2 }
  }
}"#;

fn request(dir: &Path) -> ConfigRequest {
    let path = dir.join("tiny.json");
    std::fs::write(&path, TINY).unwrap();
    ConfigRequest { file: Some(path), ..Default::default() }
}

fn run_all(dir: &Path) -> Study {
    let req = request(dir.parent().unwrap());
    let mut s = Study::open(dir, &req, false).unwrap();
    s.sample().unwrap();
    s.reduce(Mode::Ssdr).unwrap();
    s.reduce(Mode::Kle).unwrap();
    s.validity().unwrap();
    s.moments().unwrap();
    s.optimize(SpaceKind::Ssdr).unwrap();
    s.optimize(SpaceKind::Full).unwrap();
    s.reconstruct(SpaceKind::Ssdr, None).unwrap();
    s.export_mesh().unwrap();
    s.report().unwrap();
    s
}

#[test]
fn stages_are_deterministic_and_resumable() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_all(&tmp.path().join("a"));
    let b = run_all(&tmp.path().join("b"));
    for (stage, rec) in &a.manifest().stages {
        if stage == "report" {
            continue;
        }
        assert_eq!(rec.artifacts, b.manifest().stages[stage].artifacts, "{stage}");
    }
    let ssdr = &a.manifest().stages["reduce-ssdr"].summary;
    assert_eq!(ssdr["snapshot_dim"], 3988);
    assert_eq!(a.manifest().stages["reduce-kle"].summary["snapshot_dim"], 3978);
    let m = ssdr["m"].as_u64().unwrap() as usize;
    // population rule applies when the population is left unset
    assert_eq!(a.manifest().stages["optimize-ssdr"].summary["population"], 30 * m);
    assert_eq!(a.manifest().stages["optimize-full"].summary["evaluations"], 8 * 3);
    for f in [
        "report.md",
        "validity/validity.csv",
        "ssdr/quality.csv",
        "ssdr/modes/mode1_plus.obj",
        "optimize/ssdr/front.csv",
    ] {
        assert!(a.dir().join(f).exists(), "{f}");
    }

    // reopening resumes without recomputation
    let mut again = Study::open(tmp.path().join("a"), &ConfigRequest::default(), false).unwrap();
    assert_eq!(again.sample().unwrap().status, StageStatus::UpToDate);
    assert_eq!(again.reduce(Mode::Ssdr).unwrap().status, StageStatus::UpToDate);
}

#[test]
fn missing_stage_overwrite_and_tamper_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let req = request(tmp.path());
    let mut s = Study::open(&dir, &req, false).unwrap();
    match s.optimize(SpaceKind::Kle) {
        Err(Error::MissingStage { stage, .. }) => assert_eq!(stage, "reduce-kle"),
        other => panic!("{:?}", other.map(|o| o.stage)),
    }
    assert!(matches!(s.reduce(Mode::Kle), Err(Error::MissingStage { .. })));
    s.sample().unwrap();

    let changed = ConfigRequest { seed: Some(99), ..Default::default() };
    assert!(matches!(Study::open(&dir, &changed, false), Err(Error::WouldOverwrite(_))));

    std::fs::write(dir.join("samples/train.json"), "{}").unwrap();
    let mut s = Study::open(&dir, &ConfigRequest::default(), false).unwrap();
    assert!(matches!(s.sample(), Err(Error::HashMismatch { .. })));
    assert!(matches!(s.reduce(Mode::Ssdr), Err(Error::HashMismatch { .. })));
    let mut forced = Study::open(&dir, &ConfigRequest::default(), true).unwrap();
    assert_eq!(forced.sample().unwrap().status, StageStatus::Ran);

    let mut fresh = Study::open(&dir, &changed, true).unwrap();
    assert!(fresh.manifest().stages.is_empty());
    assert_eq!(fresh.config().seed, 99);
    assert_eq!(fresh.sample().unwrap().status, StageStatus::Ran);
}

#[test]
fn paper_profile_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let s = Study::open(tmp.path().join("p"), &ConfigRequest::default(), false).unwrap();
    assert_eq!(s.config().profile, Profile::Paper);
    assert_eq!(s.config().sampling.psi, 10_000);
    let stored: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("p/config.json")).unwrap()).unwrap();
    assert_eq!(stored["optimizer"]["ssdr"]["population"], 150);
}
