//! Flat per-trial export, one CSV row per answered trial.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::cohort::{CohortResult, Condition};
use crate::bandit::{compute_reward, InitMode};
use crate::error::{Error, Result};
use crate::grid::ParameterGrid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub run_id: String,
    pub participant: String,
    pub condition: Condition,
    pub init_mode: InitMode,
    pub t: u32,
    pub state: String,
    pub action: usize,
    /// Level index per grid parameter.
    pub levels: Vec<usize>,
    pub s_infer: String,
    pub confidence: f64,
    pub reward: f64,
    pub correct: bool,
    pub replay_count: u32,
}

pub fn trial_rows(cohort: &CohortResult) -> Result<Vec<TrialRow>> {
    let mut rows = Vec::new();
    for run in &cohort.runs {
        for ev in run.events() {
            let reward = compute_reward(&ev.s_real, &ev.s_infer, ev.confidence)?;
            rows.push(TrialRow {
                run_id: run.run_id.clone(),
                participant: run.participant.clone(),
                condition: run.condition,
                init_mode: run.init_mode,
                t: ev.iteration,
                state: ev.s_real.clone(),
                action: ev.action.index(),
                levels: cohort.grid.levels(ev.action),
                s_infer: ev.s_infer.clone(),
                confidence: ev.confidence,
                reward: reward.reward,
                correct: reward.s_check > 0,
                replay_count: ev.replay_count,
            });
        }
    }
    Ok(rows)
}

const LEADING: [&str; 7] = ["run_id", "participant", "condition", "init_mode", "t", "state", "action"];
const TRAILING: [&str; 5] = ["s_infer", "confidence", "reward", "correct", "replay_count"];

fn header(grid: &ParameterGrid) -> Vec<String> {
    LEADING
        .iter()
        .map(|s| s.to_string())
        .chain(grid.parameters().iter().map(|p| p.name.clone()))
        .chain(TRAILING.iter().map(|s| s.to_string()))
        .collect()
}

pub fn write_trials_csv<W: Write>(out: W, grid: &ParameterGrid, rows: &[TrialRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(grid))?;
    for r in rows {
        let mut rec = vec![
            r.run_id.clone(),
            r.participant.clone(),
            r.condition.as_str().to_string(),
            r.init_mode.as_str().to_string(),
            r.t.to_string(),
            r.state.clone(),
            r.action.to_string(),
        ];
        rec.extend(r.levels.iter().map(|l| l.to_string()));
        rec.extend([
            r.s_infer.clone(),
            r.confidence.to_string(),
            r.reward.to_string(),
            r.correct.to_string(),
            r.replay_count.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("writing trials csv", e))?;
    Ok(())
}

pub fn read_trials_csv<R: Read>(input: R, grid: &ParameterGrid) -> Result<Vec<TrialRow>> {
    let mut r = csv::Reader::from_reader(input);
    let expected = header(grid);
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got != expected {
        return Err(Error::BadRecord {
            line: 1,
            message: format!("expected columns {expected:?}, found {got:?}"),
        });
    }
    let p = grid.parameters().len();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |field: &str| Error::BadRecord {
            line,
            message: format!("bad `{field}`"),
        };
        let num = |k: usize, field: &str| rec[k].parse::<f64>().map_err(|_| bad(field));
        let init_mode = match &rec[3] {
            "uninformed" => InitMode::Uninformed,
            "informed" => InitMode::Informed,
            _ => return Err(bad("init_mode")),
        };
        let levels = (0..p)
            .map(|k| rec[7 + k].parse::<usize>().map_err(|_| bad(&grid.parameters()[k].name)))
            .collect::<Result<Vec<_>>>()?;
        let o = 7 + p;
        rows.push(TrialRow {
            run_id: rec[0].to_string(),
            participant: rec[1].to_string(),
            condition: Condition::parse(&rec[2]).map_err(|_| bad("condition"))?,
            init_mode,
            t: rec[4].parse().map_err(|_| bad("t"))?,
            state: rec[5].to_string(),
            action: rec[6].parse().map_err(|_| bad("action"))?,
            levels,
            s_infer: rec[o].to_string(),
            confidence: num(o + 1, "confidence")?,
            reward: num(o + 2, "reward")?,
            correct: rec[o + 3].parse().map_err(|_| bad("correct"))?,
            replay_count: rec[o + 4].parse().map_err(|_| bad("replay_count"))?,
        });
    }
    Ok(rows)
}
