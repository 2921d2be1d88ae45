use std::collections::BTreeMap;

use serde_json::Value;
use sonolearn_core::bandit::{InitMode, Status};
use sonolearn_core::sim::pitch_dominant_priors;
use sonolearn_core::study::{
    replay_study, Condition, ConditionChoice, Feedback, Phase, PriorsSpec, StudyConfig, StudyReport, StudySession,
};
use sonolearn_core::synth::{AcousticParams, LevelMapping, LibraryManifest, RenderConfig, SoundEntry};
use sonolearn_core::{Error, StateSet};

fn manifest(id: &str) -> LibraryManifest {
    let levels = LevelMapping::default();
    let grid = levels.grid().unwrap();
    let sounds = grid
        .actions()
        .map(|a| SoundEntry {
            action: a,
            levels: grid.levels(a),
            params: AcousticParams { bpm: 100.0, bpl: 1, pitch_bend: 0.0 },
            file: format!("{id}-{}.wav", a.index()),
            sha256: format!("{id}{:062x}", a.index()),
        })
        .collect();
    LibraryManifest {
        id: id.into(),
        grid,
        levels,
        render: RenderConfig::default(),
        sounds,
    }
}

fn config(condition: ConditionChoice, seed: u64) -> StudyConfig {
    let levels = LevelMapping::default();
    let priors = pitch_dominant_priors(&levels.grid().unwrap(), &levels, &StateSet::default()).unwrap();
    let mut c = StudyConfig::new("A", priors);
    c.condition = condition;
    c.seed = seed;
    c
}

/// Answers with the sound's pitch-plane state, full confidence. The study
/// exposes no state, so the responder looks the action up by audio key.
fn pitch_answer(lib: &LibraryManifest, url: &str) -> Feedback {
    let key = url.rsplit('/').next().unwrap().trim_end_matches(".wav");
    let entry = lib.by_hash(key).expect("audio key in manifest");
    let state = match entry.levels[2] {
        0 => "Stuck",
        1 => "Progressing",
        _ => "Accomplished",
    };
    Feedback {
        s_infer: state.into(),
        confidence: 10.0,
        replay_count: 1,
    }
}

fn run_to_done(session: &mut StudySession, lib: &LibraryManifest) -> Vec<Phase> {
    let mut phases = Vec::new();
    while session.phase() != Phase::Done {
        let view = session.next_trial().unwrap();
        phases.push(view.phase);
        let fb = pitch_answer(lib, &view.audio_url);
        session.submit(view.trial_id, fb).unwrap();
    }
    phases
}

#[test]
fn full_protocol_phases_and_report() {
    let lib = manifest("A");
    let mut s = StudySession::new("s1", config(ConditionChoice::UI, 5), &[&lib]).unwrap();
    assert_eq!(s.condition(), Condition::UI);
    let phases = run_to_done(&mut s, &lib);
    assert!(phases.windows(2).all(|w| w[0] <= w[1]), "phases only move forward");
    assert_eq!(phases.iter().filter(|p| **p == Phase::BaselineAssess).count(), 6);
    assert_eq!(phases.iter().filter(|p| **p == Phase::PostAssess).count(), 6);

    let report = s.report().unwrap();
    assert_eq!(report.subtasks.len(), 2);
    assert_eq!(report.subtasks[0].init_mode, InitMode::Uninformed);
    assert_eq!(report.post_mapping_from, InitMode::Informed);
    // consistent responder: learned sounds are on the right pitch plane
    assert_eq!(report.post.correct, 6);
    assert_eq!(report.improvement, report.post.correct as i64 - report.baseline.correct as i64);
    assert_eq!(report.trials.len(), s.trials().len());
    let json = serde_json::to_string(&report).unwrap();
    let back: StudyReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
}

#[test]
fn assessment_script_length_and_determinism() {
    let lib = manifest("A");
    let mut c = config(ConditionChoice::IU, 9);
    c.assessment_repeats = 3;
    let order = |c: StudyConfig| {
        let mut s = StudySession::new("x", c, &[&lib]).unwrap();
        let mut urls = Vec::new();
        while s.phase() == Phase::BaselineAssess {
            let v = s.next_trial().unwrap();
            urls.push(v.audio_url.clone());
            s.submit(v.trial_id, pitch_answer(&lib, &v.audio_url)).unwrap();
        }
        assert_eq!(s.phase(), Phase::Learning);
        urls
    };
    let a = order(c.clone());
    assert_eq!(a.len(), 9);
    assert_eq!(a, order(c.clone()));
    c.seed = 10;
    assert_ne!(a, order(c));
}

#[test]
fn transfer_library_doubles_assessments() {
    let a = manifest("A");
    let b = manifest("B");
    let mut c = config(ConditionChoice::UI, 1);
    c.transfer_library = Some("B".into());
    let mut s = StudySession::new("t", c, &[&a, &b]).unwrap();
    let mut libs = BTreeMap::new();
    while s.phase() == Phase::BaselineAssess {
        let v = s.next_trial().unwrap();
        let lib = if v.audio_url.starts_with("/libraries/A/") { &a } else { &b };
        *libs.entry(lib.id.clone()).or_insert(0) += 1;
        s.submit(v.trial_id, pitch_answer(lib, &v.audio_url)).unwrap();
    }
    assert_eq!(libs["A"], 6);
    assert_eq!(libs["B"], 6);
}

#[test]
fn random_condition_is_seeded() {
    let lib = manifest("A");
    let pick = |seed| StudySession::new("r", config(ConditionChoice::Random, seed), &[&lib]).unwrap().condition();
    assert_eq!(pick(3), pick(3));
    let seen: Vec<Condition> = (0..16).map(pick).collect();
    assert!(seen.contains(&Condition::UI) && seen.contains(&Condition::IU));
}

#[test]
fn conflicts_and_validation() {
    let lib = manifest("A");
    let mut s = StudySession::new("c", config(ConditionChoice::UI, 2), &[&lib]).unwrap();
    let v = s.next_trial().unwrap();
    assert!(matches!(s.next_trial(), Err(Error::TrialPending)));
    let fb = pitch_answer(&lib, &v.audio_url);
    assert!(matches!(
        s.submit(v.trial_id + 1, fb.clone()),
        Err(Error::StaleTrial { expected: Some(_), .. })
    ));
    let bad = Feedback { confidence: 11.0, ..fb.clone() };
    assert!(matches!(s.submit(v.trial_id, bad), Err(Error::InvalidConfidence(_))));
    let unknown = Feedback { s_infer: "Sleeping".into(), ..fb.clone() };
    assert!(matches!(s.submit(v.trial_id, unknown), Err(Error::UnknownState(_))));
    s.submit(v.trial_id, fb.clone()).unwrap();
    let before = s.clone();
    assert!(matches!(s.submit(v.trial_id, fb), Err(Error::StaleTrial { expected: None, .. })));
    assert_eq!(s, before, "duplicate leaves state unchanged");
    assert!(matches!(s.report(), Err(Error::NotFinished(_))));
}

#[test]
fn creation_errors() {
    let lib = manifest("A");
    let mut c = config(ConditionChoice::UI, 0);
    c.library = "nope".into();
    assert!(matches!(StudySession::new("e", c, &[&lib]), Err(Error::UnknownLibrary(_))));
    let mut c = config(ConditionChoice::UI, 0);
    c.priors = None;
    assert!(matches!(StudySession::new("e", c, &[&lib]), Err(Error::InvalidPriors(_))));
    let mut c = config(ConditionChoice::UI, 0);
    c.priors = Some(PriorsSpec::File("missing.json".into()));
    let dir = tempfile::tempdir().unwrap();
    assert!(c.resolve_priors(dir.path()).is_err());
    c.priors = Some(PriorsSpec::File("../escape.json".into()));
    assert!(c.resolve_priors(dir.path()).is_err());
}

#[test]
fn views_are_blind() {
    let lib = manifest("A");
    let mut s = StudySession::new("b", config(ConditionChoice::IU, 4), &[&lib]).unwrap();
    while s.phase() != Phase::Done {
        let v = s.next_trial().unwrap();
        let json: Value = serde_json::to_value(&v).unwrap();
        let obj = json.as_object().unwrap();
        for forbidden in ["s_real", "state", "action", "levels", "params", "file"] {
            assert!(!obj.contains_key(forbidden), "view exposes `{forbidden}`");
        }
        let entry = lib.by_hash(v.audio_url.rsplit('/').next().unwrap().trim_end_matches(".wav")).unwrap();
        assert!(!v.audio_url.contains(&entry.file));
        s.submit(v.trial_id, pitch_answer(&lib, &v.audio_url)).unwrap();
    }
}

#[test]
fn replay_reproduces_session() {
    let lib = manifest("A");
    let mut s = StudySession::new("p", config(ConditionChoice::Random, 12), &[&lib]).unwrap();
    run_to_done(&mut s, &lib);
    let records: Vec<_> = s.records().into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect();
    let replayed = replay_study(&records).unwrap();
    assert_eq!(replayed, s);
    assert_eq!(replayed.report().unwrap(), s.report().unwrap());

    // partial log: replay stops mid-session with the same state
    let mut half = StudySession::new("p", config(ConditionChoice::Random, 12), &[&lib]).unwrap();
    for _ in 0..20 {
        let v = half.next_trial().unwrap();
        half.submit(v.trial_id, pitch_answer(&lib, &v.audio_url)).unwrap();
    }
    let partial = replay_study(&records[..21]).unwrap();
    assert_eq!(partial, half);
}

#[test]
fn tampered_log_diverges() {
    let lib = manifest("A");
    let mut s = StudySession::new("p", config(ConditionChoice::UI, 1), &[&lib]).unwrap();
    run_to_done(&mut s, &lib);
    let mut records: Vec<_> = s.records().into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect();
    if let sonolearn_core::study::StudyRecord::Trial(t) = &mut records[8].1 {
        t.s_real = if t.s_real == "Stuck" { "Accomplished".into() } else { "Stuck".into() };
    }
    assert!(matches!(replay_study(&records), Err(Error::ReplayDivergence { line: 9, .. })));
}

#[test]
fn budget_exhaustion_is_flagged() {
    let lib = manifest("A");
    let mut c = config(ConditionChoice::UI, 3);
    c.hyperparameters.budget = 5;
    let mut s = StudySession::new("x", c, &[&lib]).unwrap();
    run_to_done(&mut s, &lib);
    let r = s.report().unwrap();
    assert!(r.subtasks.iter().all(|t| t.status == Status::BudgetExhausted && t.argmax_fallback));
    assert!(r.subtasks.iter().all(|t| t.steps == 5));
    let runs = s.run_records().unwrap();
    assert_eq!(runs.len(), 2);
    assert_eq!(runs[0].participant, "x");
}
