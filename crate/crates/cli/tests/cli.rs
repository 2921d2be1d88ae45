use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sonolearn_core::eventlog::to_jsonl_line;
use sonolearn_core::sim::pitch_dominant_priors;
use sonolearn_core::study::{Feedback, StudyConfig, StudySession};
use sonolearn_core::synth::{generate_library, BaseSample, LevelMapping, LibraryManifest, RenderConfig};
use sonolearn_core::StateSet;

fn sonolearn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sonolearn"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fails(out: &Output) -> String {
    assert!(!out.status.success(), "expected failure: {}", String::from_utf8_lossy(&out.stdout));
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn gen_sounds_default_and_custom_grid() {
    let dir = tempfile::tempdir().unwrap();
    ok(&sonolearn(dir.path(), &["gen-sounds", "--out", "lib"]));
    let wavs = std::fs::read_dir(dir.path().join("lib"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "wav"))
        .count();
    assert_eq!(wavs, 27);
    let manifest = LibraryManifest::load(&dir.path().join("lib")).unwrap();
    assert_eq!(manifest.id, "A");

    ok(&sonolearn(dir.path(), &["gen-sounds", "--grid", "2,2,2", "--id", "small", "--out", "small"]));
    let small = LibraryManifest::load(&dir.path().join("small")).unwrap();
    assert_eq!((small.id.as_str(), small.sounds.len()), ("small", 8));

    let err = fails(&sonolearn(dir.path(), &["gen-sounds", "--base", "missing.wav", "--out", "x"]));
    assert!(err.contains("missing.wav"), "{err}");
    assert!(!dir.path().join("x").exists());
    fails(&sonolearn(dir.path(), &["gen-sounds", "--grid", "3,3", "--out", "y"]));
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&sonolearn(dir.path(), &["simulate", "--print-config", "--seed", "9", "--cohort-size", "4"]));
    std::fs::write(dir.path().join("sim.toml"), &text).unwrap();
    let again = ok(&sonolearn(dir.path(), &["simulate", "--config", "sim.toml", "--print-config"]));
    assert_eq!(text, again);
    assert!(text.contains("seed = 9") && text.contains("cohort_size = 4"), "{text}");

    std::fs::write(dir.path().join("bad.toml"), "cohort_size = 3\nunknown_key = 1\n").unwrap();
    let err = fails(&sonolearn(dir.path(), &["simulate", "--config", "bad.toml"]));
    assert!(err.contains("unknown_key"), "{err}");

    let serve = ok(&sonolearn(dir.path(), &["serve", "--print-config", "--port", "9999"]));
    assert!(serve.contains("port = 9999"), "{serve}");
    let gen = ok(&sonolearn(dir.path(), &["gen-sounds", "--print-config", "--grid", "2,3,2"]));
    assert!(gen.contains("base = \"builtin\""), "{gen}");
}

#[test]
fn simulate_is_deterministic_and_analyzable() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        ok(&sonolearn(dir.path(), &["simulate", "--seed", "5", "--cohort-size", "6", "--out", out]));
    }
    for file in ["cohort.json", "summary.json", "heatmap.json", "trials.csv", "runs/user-003-informed.jsonl"] {
        assert_eq!(read(&dir.path().join("a").join(file)), read(&dir.path().join("b").join(file)), "{file}");
    }
    let summary: Value = serde_json::from_slice(&read(&dir.path().join("a/summary.json"))).unwrap();
    assert_eq!(summary["runs"], 12);
    assert_eq!(summary["participants"], 6);

    ok(&sonolearn(dir.path(), &["simulate", "--seed", "6", "--cohort-size", "6", "--out", "c"]));
    let printed = ok(&sonolearn(dir.path(), &["analyze", "a", "c", "--out", "merged"]));
    assert!(printed.contains("runs: 24"), "{printed}");
    let merged: Value = serde_json::from_slice(&read(&dir.path().join("merged/summary.json"))).unwrap();
    assert_eq!(merged["runs"], 24);
    let csv = String::from_utf8(read(&dir.path().join("merged/trials.csv"))).unwrap();
    assert!(csv.starts_with("run_id,participant,condition,init_mode,t,state,action,bpm,bpl,pitch,"));

    std::fs::create_dir(dir.path().join("empty")).unwrap();
    let err = fails(&sonolearn(dir.path(), &["analyze", "empty"]));
    assert!(err.contains("empty"), "{err}");
    fails(&sonolearn(dir.path(), &["analyze"]));
}

#[test]
fn replay_learner_logs() {
    let dir = tempfile::tempdir().unwrap();
    ok(&sonolearn(dir.path(), &["simulate", "--seed", "2", "--cohort-size", "2", "--out", "c"]));
    let log = dir.path().join("c/runs/user-000-uninformed.jsonl");
    let full: Value = serde_json::from_str(&ok(&sonolearn(dir.path(), &["replay", log.to_str().unwrap()]))).unwrap();
    let cohort: Value = serde_json::from_slice(&read(&dir.path().join("c/cohort.json"))).unwrap();
    let run = cohort["runs"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["run_id"] == "user-000-uninformed")
        .unwrap();
    assert_eq!(full["mapping"], run["mapping"]);
    assert_eq!(full["steps"], run["steps"]);
    assert_eq!(full["tables"].as_array().unwrap().len(), 3);

    // cut the last record in half: partial state, notice on stderr, exit 0
    let text = String::from_utf8(read(&log)).unwrap();
    let cut = text.trim_end().rfind('\n').unwrap() + 20;
    std::fs::write(dir.path().join("torn.jsonl"), &text[..cut]).unwrap();
    let out = sonolearn(dir.path(), &["replay", "torn.jsonl"]);
    let partial: Value = serde_json::from_str(&ok(&out)).unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("truncated"));
    assert_eq!(partial["t"].as_u64().unwrap() + 1, full["t"].as_u64().unwrap());

    let mut lines: Vec<&str> = text.lines().collect();
    lines[3] = "{\"kind\": \"feedback\", \"oops\": 1}";
    std::fs::write(dir.path().join("bad.jsonl"), lines.join("\n") + "\n").unwrap();
    let err = fails(&sonolearn(dir.path(), &["replay", "bad.jsonl"]));
    assert!(err.contains("record 4"), "{err}");

    std::fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let err = fails(&sonolearn(dir.path(), &["replay", "empty.jsonl"]));
    assert!(err.contains("empty"), "{err}");
}

fn pitch_answer(manifest: &LibraryManifest, url: &str) -> Feedback {
    let key = url.rsplit('/').next().unwrap().trim_end_matches(".wav");
    let levels = &manifest.by_hash(key).unwrap().levels;
    let s = ["Stuck", "Progressing", "Accomplished"][levels[2]];
    Feedback {
        s_infer: s.into(),
        confidence: 9.0,
        replay_count: 0,
    }
}

/// Writes service-style session logs, `done` of them finished.
fn write_study_logs(data: &Path, lib: &Path, sessions: u64, done: u64) -> LibraryManifest {
    let levels = LevelMapping::default();
    let manifest = generate_library("A", &BaseSample::builtin(44_100), &levels, &RenderConfig::default(), lib).unwrap();
    let priors = pitch_dominant_priors(&manifest.grid, &levels, &StateSet::default()).unwrap();
    std::fs::create_dir_all(data.join("sessions")).unwrap();
    for i in 0..sessions {
        let mut config = StudyConfig::new("A", priors.clone());
        config.seed = i;
        config.participant = format!("p{i}");
        let mut session = StudySession::new(format!("s{i}"), config, &[&manifest]).unwrap();
        let limit = if i < done { usize::MAX } else { 10 };
        for _ in 0..limit {
            let Ok(view) = session.next_trial() else { break };
            let fb = pitch_answer(&manifest, &view.audio_url);
            session.submit(view.trial_id, fb).unwrap();
        }
        let text: String = session.records().iter().map(|r| to_jsonl_line(r).unwrap()).collect();
        std::fs::write(data.join(format!("sessions/s{i}.jsonl")), text).unwrap();
    }
    manifest
}

#[test]
fn analyze_and_replay_service_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_study_logs(&data, &dir.path().join("lib"), 3, 2);

    let printed = ok(&sonolearn(dir.path(), &["analyze", "data", "--out", "report"]));
    assert!(printed.contains("runs: 4 (2 participants)"), "{printed}");
    let summary: Value = serde_json::from_slice(&read(&dir.path().join("report/summary.json"))).unwrap();
    assert_eq!(summary["runs"], 4);

    let report: Value =
        serde_json::from_str(&ok(&sonolearn(dir.path(), &["replay", "data/sessions/s0.jsonl"]))).unwrap();
    assert_eq!(report["participant"], "p0");
    assert_eq!(report["subtasks"].as_array().unwrap().len(), 2);
    let status: Value =
        serde_json::from_str(&ok(&sonolearn(dir.path(), &["replay", "data/sessions/s2.jsonl"]))).unwrap();
    assert_eq!(status["trials"], 10);
    assert_ne!(status["phase"], "done");
}

#[test]
fn priors_match_library_grid() {
    let dir = tempfile::tempdir().unwrap();
    ok(&sonolearn(dir.path(), &["priors", "--out", "p.json"]));
    let priors: Value = serde_json::from_slice(&read(&dir.path().join("p.json"))).unwrap();
    for state in ["Stuck", "Accomplished", "Progressing"] {
        assert_eq!(priors[state].as_array().unwrap().len(), 27);
    }
    let small: Value = serde_json::from_str(&ok(&sonolearn(dir.path(), &["priors", "--grid", "2,2,2"]))).unwrap();
    assert_eq!(small["Stuck"].as_array().unwrap().len(), 8);
}
