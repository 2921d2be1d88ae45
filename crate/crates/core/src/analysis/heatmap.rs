use serde::{Deserialize, Serialize};

use super::cohort::CohortResult;
use crate::bandit::InitMode;
use crate::grid::ParameterGrid;

/// Final-assignment counts over the action grid, one slice per
/// (state, init mode).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub axes: Vec<String>,
    pub labels: Vec<Vec<String>>,
    pub shape: Vec<usize>,
    pub slices: Vec<HeatmapSlice>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSlice {
    pub state: String,
    pub init_mode: InitMode,
    /// Runs assigned to each action, flat-index order (first axis slowest).
    pub counts: Vec<u32>,
}

impl HeatmapSlice {
    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Share of the mass whose level on `parameter` satisfies `keep`.
    pub fn fraction_where(&self, grid: &ParameterGrid, parameter: usize, keep: impl Fn(usize) -> bool) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let hit: u32 = grid
            .actions()
            .filter(|a| keep(grid.levels(*a)[parameter]))
            .map(|a| self.counts[a.index()])
            .sum();
        f64::from(hit) / f64::from(total)
    }
}

impl Heatmap {
    pub fn slice(&self, state: &str, mode: InitMode) -> Option<&HeatmapSlice> {
        self.slices.iter().find(|s| s.state == state && s.init_mode == mode)
    }
}

pub fn heatmap(cohort: &CohortResult) -> Heatmap {
    let grid = &cohort.grid;
    let mut slices = Vec::new();
    for mode in cohort.modes() {
        for state in cohort.states.names() {
            let mut counts = vec![0; grid.action_count()];
            for run in cohort.runs.iter().filter(|r| r.init_mode == mode) {
                if let Some(sa) = run.mapping.iter().find(|sa| &sa.state == state) {
                    counts[sa.action.index()] += 1;
                }
            }
            slices.push(HeatmapSlice {
                state: state.clone(),
                init_mode: mode,
                counts,
            });
        }
    }
    Heatmap {
        axes: grid.parameters().iter().map(|p| p.name.clone()).collect(),
        labels: grid.parameters().iter().map(|p| p.levels.clone()).collect(),
        shape: grid.radices(),
        slices,
    }
}
