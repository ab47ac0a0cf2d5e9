//! Parameter grid search.

use std::fmt;
use std::str::FromStr;

use blockwords::metrics::iou;
use blockwords::planner::SearchStrategy;
use blockwords::proposal::ProposalStrategy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ModelParams, WordModels};
use crate::human::HumanResponseSet;
use crate::runner::{run_experiment, MethodSpec, RunRecord};
use crate::scenario::Scenario;
use crate::stats::{mean, mean_distribution};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("objective iou_vs_humans needs human data")]
    MissingHumanData,
    #[error("no human responses match any scenario in the grid search")]
    NoOverlap,
    #[error("grid axis `{0}` is empty")]
    EmptyAxis(&'static str),
    #[error("{0} runs failed, first error: {1}")]
    RunFailures(usize, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    IouVsHumans,
    Accuracy,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::IouVsHumans => "iou_vs_humans",
            Objective::Accuracy => "accuracy",
        })
    }
}

impl FromStr for Objective {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "iou_vs_humans" | "iou" => Ok(Objective::IouVsHumans),
            "accuracy" => Ok(Objective::Accuracy),
            other => Err(format!("unknown objective {other:?} (expected iou_vs_humans or accuracy)")),
        }
    }
}

/// Axes of the grid. Missing axes in a grid file default to the single
/// default value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub beta: Vec<f64>,
    pub budget: Vec<usize>,
    pub cadence: Vec<usize>,
    pub search: Vec<SearchStrategy>,
    pub proposal: Vec<ProposalStrategy>,
    pub tw: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub methods: Vec<MethodSpec>,
    /// Trials per stochastic method; defaults to max(10, 200/N).
    pub trials: Option<usize>,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        let d = ModelParams::default();
        Self {
            beta: vec![d.beta],
            budget: vec![d.budget],
            cadence: vec![d.cadence],
            search: vec![d.search],
            proposal: vec![d.proposal],
            tw: vec![d.tw],
            epsilon: vec![d.epsilon],
            methods: vec![MethodSpec::exact()],
            trials: None,
            seed: 0,
        }
    }
}

impl GridSpec {
    /// The planner ranges searched when fitting to human data.
    pub fn planner_ranges() -> Self {
        Self {
            beta: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            budget: vec![5, 10, 20, 50, 100, 200, 500],
            cadence: vec![1, 2],
            search: vec![SearchStrategy::Bfs, SearchStrategy::AStar],
            ..Self::default()
        }
    }

    pub fn points(&self) -> Result<Vec<ModelParams>, FitError> {
        for (name, empty) in [
            ("beta", self.beta.is_empty()),
            ("budget", self.budget.is_empty()),
            ("cadence", self.cadence.is_empty()),
            ("search", self.search.is_empty()),
            ("proposal", self.proposal.is_empty()),
            ("tw", self.tw.is_empty()),
            ("epsilon", self.epsilon.is_empty()),
            ("methods", self.methods.is_empty()),
        ] {
            if empty {
                return Err(FitError::EmptyAxis(name));
            }
        }
        let base = ModelParams::default();
        let mut out = Vec::new();
        for &beta in &self.beta {
            for &budget in &self.budget {
                for &cadence in &self.cadence {
                    for &search in &self.search {
                        for &proposal in &self.proposal {
                            for &tw in &self.tw {
                                for &epsilon in &self.epsilon {
                                    out.push(ModelParams {
                                        beta,
                                        budget,
                                        cadence,
                                        search,
                                        proposal,
                                        tw,
                                        epsilon,
                                        ..base
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub rank: usize,
    pub method: MethodSpec,
    pub params: ModelParams,
    pub objective: Objective,
    pub value: f64,
    pub accuracy: f64,
    pub iou: Option<f64>,
}

/// Mean over scenarios of (mean over trials and judgment points of the true
/// goal's probability).
pub fn accuracy_objective(records: &[RunRecord], scenarios: &[Scenario]) -> f64 {
    let per_scenario: Vec<f64> = scenarios
        .iter()
        .filter_map(|s| {
            let accs: Vec<f64> = records
                .iter()
                .filter(|r| r.scenario == s.id() && r.error.is_none())
                .map(|r| r.mean_accuracy())
                .collect();
            (!accs.is_empty()).then(|| mean(&accs))
        })
        .collect();
    mean(&per_scenario)
}

/// Mean IoU between the trial-averaged model distribution and the mean
/// human distribution, over every scenario and judgment point with data on
/// both sides. `None` when no point qualifies.
pub fn iou_objective(records: &[RunRecord], scenarios: &[Scenario], humans: &HumanResponseSet) -> Option<f64> {
    let mut values = Vec::new();
    for s in scenarios {
        let runs: Vec<&RunRecord> = records
            .iter()
            .filter(|r| r.scenario == s.id() && r.error.is_none())
            .collect();
        if runs.is_empty() {
            continue;
        }
        let k = s.trajectory.judgments().len();
        let human = humans.mean_distributions(s.id(), k);
        for (j, h) in human.iter().enumerate() {
            let model = mean_distribution(runs.iter().filter_map(|r| r.snapshots.get(j)));
            if let Ok(v) = iou(&model, h) {
                values.push(v);
            }
        }
    }
    (!values.is_empty()).then(|| mean(&values))
}

/// Evaluates every grid point and method, best first.
pub fn grid_search(
    models: &WordModels,
    scenarios: &[Scenario],
    grid: &GridSpec,
    objective: Objective,
    humans: Option<&HumanResponseSet>,
) -> Result<Vec<FitRow>, FitError> {
    if objective == Objective::IouVsHumans {
        let h = humans.ok_or(FitError::MissingHumanData)?;
        if !scenarios.iter().any(|s| h.scenarios().contains(s.id())) {
            return Err(FitError::NoOverlap);
        }
    }
    let mut rows = Vec::new();
    for params in grid.points()? {
        for spec in &grid.methods {
            let records = run_experiment(models, scenarios, &[*spec], &params, grid.seed, grid.trials);
            let failures: Vec<&RunRecord> = records.iter().filter(|r| r.error.is_some()).collect();
            if let Some(first) = failures.first() {
                return Err(FitError::RunFailures(
                    failures.len(),
                    first.error.clone().unwrap_or_default(),
                ));
            }
            let acc = accuracy_objective(&records, scenarios);
            let iou_value = humans.and_then(|h| iou_objective(&records, scenarios, h));
            let value = match objective {
                Objective::Accuracy => acc,
                Objective::IouVsHumans => iou_value.unwrap_or(f64::NAN),
            };
            rows.push(FitRow {
                rank: 0,
                method: *spec,
                params,
                objective,
                value,
                accuracy: acc,
                iou: iou_value,
            });
        }
    }
    rows.sort_by(|a, b| b.value.total_cmp(&a.value));
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(rows)
}
