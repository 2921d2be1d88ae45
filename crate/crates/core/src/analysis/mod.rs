//! Cohort records, step-count summaries, the cross-pair ranked statistic,
//! final-assignment heatmaps and per-trial CSV export.

mod cohort;
mod heatmap;
mod stats;
mod trials;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use cohort::{steps_summary, CohortResult, Condition, RunRecord, StepsSummary, COHORT_FILE, RUNS_DIR};
pub use heatmap::{heatmap, Heatmap, HeatmapSlice};
pub use stats::{exact_p_value, ranked_pair_statistic, RankedPair};
pub use trials::{read_trials_csv, trial_rows, write_trials_csv, TrialRow};

use crate::bandit::InitMode;
use crate::error::{Error, Result};
use crate::fsio::{write_atomic, write_json_atomic};

pub const SUMMARY_FILE: &str = "summary.json";
pub const HEATMAP_FILE: &str = "heatmap.json";
pub const TRIALS_FILE: &str = "trials.csv";

/// Informed steps (reference) against uninformed steps (compared) for one
/// slice of the cohort.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    /// `all`, or a condition name.
    pub subset: String,
    pub reference: InitMode,
    pub reference_mean: f64,
    pub compared: InitMode,
    pub compared_mean: f64,
    pub difference: f64,
    pub ranked: RankedPair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_p_value: Option<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Comparisons over the whole cohort and per condition. Subsets missing
/// either mode are skipped.
pub fn compare_modes(cohort: &CohortResult) -> Result<Vec<ModeComparison>> {
    let subsets = [
        ("all".to_string(), None),
        (Condition::UI.as_str().to_string(), Some(Condition::UI)),
        (Condition::IU.as_str().to_string(), Some(Condition::IU)),
    ];
    let mut out = Vec::new();
    for (name, cond) in subsets {
        let reference = cohort.steps(InitMode::Informed, cond);
        let compared = cohort.steps(InitMode::Uninformed, cond);
        if reference.is_empty() || compared.is_empty() {
            continue;
        }
        let (rm, cm) = (mean(&reference), mean(&compared));
        out.push(ModeComparison {
            subset: name,
            reference: InitMode::Informed,
            reference_mean: rm,
            compared: InitMode::Uninformed,
            compared_mean: cm,
            difference: cm - rm,
            ranked: ranked_pair_statistic(&reference, &compared)?,
            exact_p_value: exact_p_value(&reference, &compared)?,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub runs: usize,
    pub participants: usize,
    pub steps: BTreeMap<InitMode, StepsSummary>,
    pub comparisons: Vec<ModeComparison>,
}

pub fn summarize(cohort: &CohortResult) -> Result<CohortSummary> {
    if cohort.runs.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let mut participants: Vec<&str> = cohort.runs.iter().map(|r| r.participant.as_str()).collect();
    participants.sort();
    participants.dedup();
    Ok(CohortSummary {
        runs: cohort.runs.len(),
        participants: participants.len(),
        steps: steps_summary(cohort)?,
        comparisons: compare_modes(cohort)?,
    })
}

/// Writes `summary.json`, `heatmap.json` and `trials.csv` into `dir`.
pub fn write_reports(dir: &Path, cohort: &CohortResult) -> Result<CohortSummary> {
    let summary = summarize(cohort)?;
    write_json_atomic(&dir.join(SUMMARY_FILE), &summary)?;
    write_json_atomic(&dir.join(HEATMAP_FILE), &heatmap(cohort))?;
    let mut csv = Vec::new();
    write_trials_csv(&mut csv, &cohort.grid, &trial_rows(cohort)?)?;
    write_atomic(&dir.join(TRIALS_FILE), &csv)?;
    Ok(summary)
}
