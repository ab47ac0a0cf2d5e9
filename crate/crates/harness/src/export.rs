//! Tables and plot data derived from run records.
//!
//! Every file is CSV with a header row. Files:
//!
//! * `accuracy.csv`: mean accuracy per condition and method with 95%
//!   bootstrap intervals.
//! * `iou.csv`: IoU with mean human guesses per condition and method, with
//!   bootstrap intervals (only with human data).
//! * `storyboard.csv`: the five most probable goals at each judgment point,
//!   per scenario and method (and humans, when present).
//! * `variance.csv`: across-run variance of goal probabilities per
//!   judgment point, and accuracy standard deviation.
//! * `efficiency.csv`: evaluations and tracked hypotheses per judgment
//!   point, with 10th to 90th percentile ribbons.
//! * `net_reward.csv`: net reward over a grid of cost ratios, with 10th to
//!   90th percentile ribbons.
//! * `runtime.csv`: seconds per action, accuracy and its spread per method.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use blockwords::metrics::{iou, net_reward, run_variance, GoalDistribution};
use serde::Serialize;
use thiserror::Error;

use crate::fsutil::write_atomic;
use crate::human::HumanResponseSet;
use crate::runner::RunRecord;
use crate::scenario::Scenario;
use crate::stats::{bootstrap_ci, mean, mean_distribution, quantile, std_dev, BOOTSTRAP_RESAMPLES};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("unknown figure {0:?}")]
    UnknownFigure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Figure {
    Accuracy,
    Iou,
    Storyboard,
    Variance,
    Efficiency,
    NetReward,
    Runtime,
}

impl Figure {
    pub const ALL: [Figure; 7] = [
        Figure::Accuracy,
        Figure::Iou,
        Figure::Storyboard,
        Figure::Variance,
        Figure::Efficiency,
        Figure::NetReward,
        Figure::Runtime,
    ];

    pub fn file_name(&self) -> &'static str {
        match self {
            Figure::Accuracy => "accuracy.csv",
            Figure::Iou => "iou.csv",
            Figure::Storyboard => "storyboard.csv",
            Figure::Variance => "variance.csv",
            Figure::Efficiency => "efficiency.csv",
            Figure::NetReward => "net_reward.csv",
            Figure::Runtime => "runtime.csv",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_name().trim_end_matches(".csv"))
    }
}

impl FromStr for Figure {
    type Err = ExportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Figure::ALL
            .into_iter()
            .find(|f| f.to_string() == s.replace('-', "_"))
            .ok_or_else(|| ExportError::UnknownFigure(s.to_string()))
    }
}

/// Cost ratios at which net reward is tabulated.
pub fn cost_grid() -> Vec<f64> {
    let mut out = vec![0.0];
    for exp in -6..=0 {
        for m in [1.0, 2.0, 5.0] {
            out.push(m * 10f64.powi(exp));
        }
    }
    out
}

/// Saves records as JSON lines.
pub fn save_records(records: &[RunRecord], path: &Path) -> Result<(), ExportError> {
    let mut buf = String::new();
    for r in records {
        buf.push_str(&serde_json::to_string(r).expect("record serializes"));
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes()).map_err(|source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads records from a JSON-lines file, or every `*.jsonl` file in a
/// directory.
pub fn load_records(path: &Path) -> Result<Vec<RunRecord>, ExportError> {
    let io = |source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    };
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    let mut out = Vec::new();
    for f in files {
        let text = std::fs::read_to_string(&f).map_err(|source| ExportError::Io {
            path: f.clone(),
            source,
        })?;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            out.push(serde_json::from_str(line).map_err(|e| ExportError::Format {
                path: f.clone(),
                message: format!("line {}: {e}", i + 1),
            })?);
        }
    }
    Ok(out)
}

fn write_csv<R: Serialize>(dir: &Path, name: &str, rows: &[R]) -> Result<PathBuf, ExportError> {
    let path = dir.join(name);
    let fmt = |message: String| ExportError::Format {
        path: path.clone(),
        message,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| fmt(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| fmt(e.to_string()))?;
    write_atomic(&path, &bytes).map_err(|source| ExportError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

type GroupKey = (String, String);

/// Records grouped by (scenario, method), in a stable order.
fn by_scenario_method(records: &[RunRecord]) -> BTreeMap<GroupKey, Vec<&RunRecord>> {
    let mut m: BTreeMap<GroupKey, Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.error.is_none()) {
        m.entry((r.scenario.clone(), r.method.to_string())).or_default().push(r);
    }
    m
}

#[derive(Debug, Serialize)]
pub struct AccuracyRow {
    pub condition: String,
    pub method: String,
    pub runs: usize,
    pub accuracy: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn accuracy_rows(records: &[RunRecord]) -> Vec<AccuracyRow> {
    let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.error.is_none()) {
        for cond in [r.condition.clone(), "all".to_string()] {
            groups
                .entry((cond, r.method.to_string()))
                .or_default()
                .push(r.mean_accuracy());
        }
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(i, ((condition, method), xs))| {
            let (lo, hi) = bootstrap_ci(&xs, BOOTSTRAP_RESAMPLES, 0.95, i as u64);
            AccuracyRow {
                condition,
                method,
                runs: xs.len(),
                accuracy: mean(&xs),
                ci_low: lo,
                ci_high: hi,
            }
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct IouRow {
    pub condition: String,
    pub method: String,
    pub points: usize,
    pub iou: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Model distributions averaged over trials, per (scenario, method).
fn mean_model_distributions(records: &[RunRecord]) -> BTreeMap<GroupKey, Vec<GoalDistribution>> {
    by_scenario_method(records)
        .into_iter()
        .map(|(k, runs)| {
            let steps = runs.iter().map(|r| r.snapshots.len()).max().unwrap_or(0);
            let dists = (0..steps)
                .map(|j| mean_distribution(runs.iter().filter_map(|r| r.snapshots.get(j))))
                .collect();
            (k, dists)
        })
        .collect()
}

pub fn iou_rows(records: &[RunRecord], humans: &HumanResponseSet) -> Vec<IouRow> {
    let condition_of: BTreeMap<&str, &str> = records
        .iter()
        .map(|r| (r.scenario.as_str(), r.condition.as_str()))
        .collect();
    let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for ((scenario, method), dists) in mean_model_distributions(records) {
        let human = humans.mean_distributions(&scenario, dists.len());
        let cond = condition_of.get(scenario.as_str()).copied().unwrap_or("unknown");
        for (m, h) in dists.iter().zip(&human) {
            if let Ok(v) = iou(m, h) {
                for c in [cond, "all"] {
                    groups.entry((c.to_string(), method.clone())).or_default().push(v);
                }
            }
        }
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(i, ((condition, method), xs))| {
            let (lo, hi) = bootstrap_ci(&xs, BOOTSTRAP_RESAMPLES, 0.95, i as u64);
            IouRow {
                condition,
                method,
                points: xs.len(),
                iou: mean(&xs),
                ci_low: lo,
                ci_high: hi,
            }
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct StoryboardRow {
    pub scenario: String,
    pub source: String,
    pub judgment: usize,
    pub step: usize,
    pub action: String,
    pub rank: usize,
    pub word: String,
    pub probability: f64,
}

pub const STORYBOARD_TOP: usize = 5;

fn top_rows(
    scenario: &str,
    source: &str,
    judgment: usize,
    step: usize,
    action: &str,
    dist: &GoalDistribution,
) -> Vec<StoryboardRow> {
    let mut items: Vec<(String, f64)> = dist.iter().map(|(w, p)| (w.to_string(), p)).collect();
    items.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    items
        .into_iter()
        .take(STORYBOARD_TOP)
        .enumerate()
        .map(|(rank, (word, probability))| StoryboardRow {
            scenario: scenario.to_string(),
            source: source.to_string(),
            judgment,
            step,
            action: action.to_string(),
            rank: rank + 1,
            word,
            probability,
        })
        .collect()
}

pub fn storyboard_rows(
    records: &[RunRecord],
    scenarios: &[Scenario],
    humans: Option<&HumanResponseSet>,
) -> Vec<StoryboardRow> {
    let mut rows = Vec::new();
    let dists = mean_model_distributions(records);
    for s in scenarios {
        let judgments = s.trajectory.judgments();
        let action_at = |t: usize| {
            if t == 0 {
                "start".to_string()
            } else {
                s.render_action(&s.trajectory.actions()[t - 1])
            }
        };
        for ((scenario, method), ds) in dists.iter().filter(|((sc, _), _)| sc == s.id()) {
            for (j, d) in ds.iter().enumerate() {
                let t = judgments.get(j).copied().unwrap_or(0);
                rows.extend(top_rows(scenario, method, j, t, &action_at(t), d));
            }
        }
        if let Some(h) = humans {
            for (j, d) in h.mean_distributions(s.id(), judgments.len()).iter().enumerate() {
                let t = judgments[j];
                rows.extend(top_rows(s.id(), "humans", j, t, &action_at(t), d));
            }
        }
    }
    rows
}

#[derive(Debug, Serialize)]
pub struct VarianceRow {
    pub scenario: String,
    pub method: String,
    pub judgment: usize,
    pub total_variance: f64,
    pub accuracy_std: f64,
}

pub fn variance_rows(records: &[RunRecord]) -> Vec<VarianceRow> {
    let mut rows = Vec::new();
    for ((scenario, method), runs) in by_scenario_method(records) {
        let series: Vec<_> = runs.iter().map(|r| r.snapshots.clone()).collect();
        let Ok(truth) = runs[0].true_word.parse() else { continue };
        let Ok(v) = run_variance(&series, &truth) else { continue };
        for (j, tv) in v.per_step.iter().enumerate() {
            rows.push(VarianceRow {
                scenario: scenario.clone(),
                method: method.clone(),
                judgment: j,
                total_variance: *tv,
                accuracy_std: v.accuracy_std,
            });
        }
    }
    rows
}

#[derive(Debug, Serialize)]
pub struct EfficiencyRow {
    pub scenario: String,
    pub method: String,
    pub judgment: usize,
    pub evaluations: f64,
    pub evaluations_q10: f64,
    pub evaluations_q90: f64,
    pub tracked: f64,
    pub tracked_q10: f64,
    pub tracked_q90: f64,
}

pub fn efficiency_rows(records: &[RunRecord]) -> Vec<EfficiencyRow> {
    let mut rows = Vec::new();
    for ((scenario, method), runs) in by_scenario_method(records) {
        let steps = runs.iter().map(|r| r.ledger.evaluations.len()).min().unwrap_or(0);
        for j in 0..steps {
            let ev: Vec<f64> = runs.iter().map(|r| r.ledger.evaluations[j] as f64).collect();
            let tr: Vec<f64> = runs.iter().map(|r| r.ledger.tracked[j] as f64).collect();
            rows.push(EfficiencyRow {
                scenario: scenario.clone(),
                method: method.clone(),
                judgment: j,
                evaluations: mean(&ev),
                evaluations_q10: quantile(&ev, 0.1),
                evaluations_q90: quantile(&ev, 0.9),
                tracked: mean(&tr),
                tracked_q10: quantile(&tr, 0.1),
                tracked_q90: quantile(&tr, 0.9),
            });
        }
    }
    rows
}

#[derive(Debug, Serialize)]
pub struct NetRewardRow {
    pub method: String,
    pub cost_ratio: f64,
    pub net_reward: f64,
    pub q10: f64,
    pub q90: f64,
}

/// Net reward per run (one scenario, one trial), summarized across runs
/// for each method and cost ratio.
pub fn net_reward_rows(records: &[RunRecord]) -> Vec<NetRewardRow> {
    let mut by_method: BTreeMap<String, Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.error.is_none()) {
        by_method.entry(r.method.to_string()).or_default().push(r);
    }
    let mut rows = Vec::new();
    for (method, runs) in by_method {
        for c in cost_grid() {
            let xs: Vec<f64> = runs
                .iter()
                .map(|r| net_reward(&r.accuracy, &r.ledger, c).expect("non-negative cost"))
                .collect();
            rows.push(NetRewardRow {
                method: method.clone(),
                cost_ratio: c,
                net_reward: mean(&xs),
                q10: quantile(&xs, 0.1),
                q90: quantile(&xs, 0.9),
            });
        }
    }
    rows
}

#[derive(Debug, Serialize)]
pub struct RuntimeRow {
    pub method: String,
    pub runs: usize,
    pub seconds_per_action: f64,
    pub accuracy: f64,
    pub accuracy_std: f64,
}

/// Table of runtime and accuracy per method. The accuracy spread is the
/// across-trial standard deviation of each trial's accuracy averaged over
/// scenarios.
pub fn runtime_rows(records: &[RunRecord]) -> Vec<RuntimeRow> {
    let mut by_method: BTreeMap<String, Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.error.is_none()) {
        by_method.entry(r.method.to_string()).or_default().push(r);
    }
    by_method
        .into_iter()
        .map(|(method, runs)| {
            let mut per_trial: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            for r in &runs {
                per_trial.entry(r.trial).or_default().push(r.mean_accuracy());
            }
            let trial_means: Vec<f64> = per_trial.values().map(|v| mean(v)).collect();
            RuntimeRow {
                method,
                runs: runs.len(),
                seconds_per_action: mean(&runs.iter().map(|r| r.seconds_per_action).collect::<Vec<_>>()),
                accuracy: mean(&trial_means),
                accuracy_std: std_dev(&trial_means),
            }
        })
        .collect()
}

/// Writes the requested figure files into `out_dir`, returning their
/// paths. The IoU file is skipped without human data.
pub fn export_results(
    records: &[RunRecord],
    scenarios: &[Scenario],
    humans: Option<&HumanResponseSet>,
    figures: &[Figure],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ExportError> {
    let mut written = Vec::new();
    for fig in figures {
        let name = fig.file_name();
        let path = match fig {
            Figure::Accuracy => write_csv(out_dir, name, &accuracy_rows(records))?,
            Figure::Iou => match humans {
                Some(h) => write_csv(out_dir, name, &iou_rows(records, h))?,
                None => continue,
            },
            Figure::Storyboard => write_csv(out_dir, name, &storyboard_rows(records, scenarios, humans))?,
            Figure::Variance => write_csv(out_dir, name, &variance_rows(records))?,
            Figure::Efficiency => write_csv(out_dir, name, &efficiency_rows(records))?,
            Figure::NetReward => write_csv(out_dir, name, &net_reward_rows(records))?,
            Figure::Runtime => write_csv(out_dir, name, &runtime_rows(records))?,
        };
        written.push(path);
    }
    Ok(written)
}
