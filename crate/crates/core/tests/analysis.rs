use sonolearn_core::analysis::{
    heatmap, read_trials_csv, steps_summary, summarize, trial_rows, write_reports, write_trials_csv, CohortResult,
    Condition, StepsSummary, TRIALS_FILE,
};
use sonolearn_core::bandit::{InitMode, Status};
use sonolearn_core::simulate::{run_cohort, SimulationConfig};
use sonolearn_core::synth::PITCH;
use sonolearn_core::Error;

fn small(cohort_size: usize, seed: u64) -> SimulationConfig {
    SimulationConfig {
        cohort_size,
        seed,
        ..Default::default()
    }
}

#[test]
fn summary_arithmetic() {
    let s = StepsSummary::of(&[10.0, 20.0], 2).unwrap();
    assert_eq!((s.mean, s.median, s.min, s.max), (15.0, 15.0, 10.0, 20.0));
    let one = StepsSummary::of(&[7.0], 1).unwrap();
    assert_eq!((one.mean, one.median), (7.0, 7.0));
    assert!(matches!(StepsSummary::of(&[], 0), Err(Error::EmptyCohort)));
    let empty = CohortResult::new(
        sonolearn_core::synth::LevelMapping::default().grid().unwrap(),
        Default::default(),
        None,
    );
    assert!(matches!(steps_summary(&empty), Err(Error::EmptyCohort)));
}

#[test]
fn heatmap_conserves_runs() {
    let cohort = run_cohort(&small(10, 4)).unwrap();
    let h = heatmap(&cohort);
    assert_eq!(h.axes, ["bpm", "bpl", "pitch"]);
    assert_eq!(h.shape, [3, 3, 3]);
    assert_eq!(h.slices.len(), 6);
    for s in &h.slices {
        assert_eq!(s.total(), 10);
    }
    let pitch = cohort.grid.parameter_index(PITCH).unwrap();
    let stuck = h.slice("Stuck", InitMode::Informed).unwrap();
    assert!(stuck.fraction_where(&cohort.grid, pitch, |l| l == 0) >= 0.7);
}

#[test]
fn trials_csv_round_trip() {
    let mut config = small(1, 2);
    config.modes = vec![InitMode::Uninformed, InitMode::Informed];
    // never converges: every run uses the whole budget
    config.hyperparameters.f_conv = 1000;
    let cohort = run_cohort(&config).unwrap();
    assert!(cohort.runs.iter().all(|r| r.status == Status::BudgetExhausted && r.steps == 60));
    let rows = trial_rows(&cohort).unwrap();
    assert_eq!(rows.len(), 120);
    let mut buf = Vec::new();
    write_trials_csv(&mut buf, &cohort.grid, &rows).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().count(), 121);
    assert!(text.starts_with(
        "run_id,participant,condition,init_mode,t,state,action,bpm,bpl,pitch,s_infer,confidence,reward,correct,replay_count\n"
    ));
    let back = read_trials_csv(buf.as_slice(), &cohort.grid).unwrap();
    assert_eq!(back, rows);
}

#[test]
fn cohort_save_load_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut cohort = run_cohort(&small(4, 8)).unwrap();
    cohort.save(dir.path()).unwrap();
    let loaded = CohortResult::load(dir.path()).unwrap();
    assert_eq!(loaded, cohort);
    let summary = write_reports(dir.path(), &loaded).unwrap();
    assert_eq!(summary.runs, 8);
    assert_eq!(summary.participants, 4);
    assert_eq!(summary.comparisons[0].subset, "all");
    assert!(dir.path().join(TRIALS_FILE).exists());

    let mut other = run_cohort(&small(2, 9)).unwrap();
    other.runs.iter_mut().for_each(|r| r.participant.push('b'));
    cohort.merge(other).unwrap();
    assert_eq!(summarize(&cohort).unwrap().participants, 6);

    let mut mismatched = small(1, 1);
    mismatched.levels = sonolearn_core::synth::LevelMapping::with_counts([2, 3, 3]).unwrap();
    let bad = run_cohort(&mismatched).unwrap();
    assert!(matches!(cohort.merge(bad), Err(Error::MixedGrids)));
}

#[test]
fn tampered_cohort_log_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cohort = run_cohort(&small(1, 3)).unwrap();
    cohort.save(dir.path()).unwrap();
    let path = dir.path().join(cohort.runs[0].log.as_ref().unwrap());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.truncate(lines.len() - 1);
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    assert!(CohortResult::load(dir.path()).is_err());
}

#[test]
fn conditions_alternate() {
    let cohort = run_cohort(&small(4, 0)).unwrap();
    let ui = cohort.runs.iter().filter(|r| r.condition == Condition::UI).count();
    assert_eq!(ui, 4);
    let s = summarize(&cohort).unwrap();
    assert_eq!(s.comparisons.len(), 3);
}
