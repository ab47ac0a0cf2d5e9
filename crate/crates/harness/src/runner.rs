//! Experiment runner: every (scenario, method, trial) combination.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use blockwords::inference::{
    ExactInference, InferenceError, Method, ParticleCollection, PosteriorSnapshot, ProposalDensity, ProposalOnly,
    ProposalOnlyWeighting, SipsConfig,
};
use blockwords::metrics::{accuracy, CostLedger};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ModelParams, WordModels};
use crate::scenario::Scenario;

/// An inference method with its sample-size and weighting settings.
/// Written as `exact`, `sips:N[:density]` or `proposal_only:N[:weighting]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MethodSpec {
    pub method: Method,
    /// Particles (SIPS) or proposal draws (proposal-only); unused by exact.
    pub n: usize,
    pub density: ProposalDensity,
    pub weighting: ProposalOnlyWeighting,
}

impl TryFrom<String> for MethodSpec {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<MethodSpec> for String {
    fn from(m: MethodSpec) -> Self {
        m.to_string()
    }
}

impl MethodSpec {
    pub fn exact() -> Self {
        Self {
            method: Method::Exact,
            n: 0,
            density: ProposalDensity::default(),
            weighting: ProposalOnlyWeighting::default(),
        }
    }

    pub fn sips(n: usize) -> Self {
        Self {
            method: Method::Sips,
            n,
            ..Self::exact()
        }
    }

    pub fn proposal_only(n: usize) -> Self {
        Self {
            method: Method::ProposalOnly,
            n,
            ..Self::exact()
        }
    }

    pub fn is_stochastic(&self) -> bool {
        self.method != Method::Exact
    }

    /// Repeated trials for a stochastic method: max(10, 200/N).
    pub fn default_trials(&self) -> usize {
        if self.is_stochastic() {
            (200 / self.n.max(1)).max(10)
        } else {
            1
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.method {
            Method::Exact => write!(f, "exact"),
            Method::Sips if self.density != ProposalDensity::default() => {
                write!(f, "sips:{}:{}", self.n, self.density)
            }
            Method::ProposalOnly if self.weighting != ProposalOnlyWeighting::default() => {
                write!(f, "proposal_only:{}:{}", self.n, self.weighting)
            }
            m => write!(f, "{m}:{}", self.n),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split(':');
        let method: Method = parts.next().unwrap_or_default().parse()?;
        let n = parts
            .next()
            .map(|n| n.parse::<usize>().map_err(|e| format!("{s:?}: {e}")))
            .transpose()?;
        let option = parts.next();
        if parts.next().is_some() {
            return Err(format!("{s:?}: too many `:` separated fields"));
        }
        let mut spec = Self {
            method,
            n: n.unwrap_or(DEFAULT_SAMPLES),
            ..Self::exact()
        };
        match (method, n, option) {
            (Method::Exact, None, None) => return Ok(Self::exact()),
            (Method::Exact, _, _) => return Err("exact takes no sample count".into()),
            (_, Some(0), _) => return Err(format!("{s:?}: sample count must be at least 1")),
            (Method::Sips, _, Some(o)) => spec.density = o.parse()?,
            (Method::ProposalOnly, _, Some(o)) => spec.weighting = o.parse()?,
            _ => {}
        }
        Ok(spec)
    }
}

pub const DEFAULT_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub condition: String,
    pub method: MethodSpec,
    pub params: ModelParams,
    pub seed: u64,
    pub trial: usize,
    pub true_word: String,
    /// One snapshot per judgment point.
    pub snapshots: Vec<PosteriorSnapshot>,
    pub accuracy: Vec<f64>,
    pub ledger: CostLedger,
    /// Wall-clock seconds of inference per observed primitive action.
    pub seconds_per_action: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn mean_accuracy(&self) -> f64 {
        if self.accuracy.is_empty() {
            0.0
        } else {
            self.accuracy.iter().sum::<f64>() / self.accuracy.len() as f64
        }
    }
}

/// Snapshots at the judgment points and the average inference time per
/// action.
pub struct MethodOutput {
    pub snapshots: Vec<PosteriorSnapshot>,
    pub seconds_per_action: f64,
}

/// Runs one method over one scenario.
pub fn run_method(
    models: &WordModels,
    scenario: &Scenario,
    spec: &MethodSpec,
    params: &ModelParams,
    seed: u64,
) -> Result<MethodOutput, InferenceError> {
    let model = models.model(&scenario.initial, params)?;
    let traj = &scenario.trajectory;
    let judgments = traj.judgments();
    let mut snapshots = Vec::with_capacity(judgments.len());
    let start = Instant::now();
    match spec.method {
        Method::Exact => {
            let mut inf = ExactInference::new(&model, traj.initial())?;
            let states = traj.packed_states();
            for t in 0..=traj.len() {
                if t > 0 {
                    inf.observe(&states[t - 1], &traj.actions()[t - 1])?;
                }
                if judgments.contains(&t) {
                    snapshots.push(inf.snapshot());
                }
            }
        }
        Method::Sips => {
            let config = SipsConfig {
                weight: spec.density,
                ..SipsConfig::new(spec.n, seed)
            };
            let mut pc = ParticleCollection::new(&model, traj.initial(), config)?;
            for t in 0..=traj.len() {
                if t > 0 {
                    pc.observe(&traj.actions()[t - 1])?;
                }
                if judgments.contains(&t) {
                    snapshots.push(pc.snapshot());
                }
            }
        }
        Method::ProposalOnly => {
            // Guesses are made at every step so the per-action time is
            // comparable with the filtering methods.
            let po = ProposalOnly::new(&model, spec.n, seed)?.with_weighting(spec.weighting);
            for t in 0..=traj.len() {
                let action = t.checked_sub(1).map(|i| &traj.actions()[i]);
                let snap = po.judge(t, traj.state(t), action);
                if judgments.contains(&t) {
                    snapshots.push(snap);
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok(MethodOutput {
        snapshots,
        seconds_per_action: elapsed / traj.len().max(1) as f64,
    })
}

/// Runs one trial and packages it as a record; failures are captured in
/// the record rather than returned.
pub fn run_one(
    models: &WordModels,
    scenario: &Scenario,
    spec: &MethodSpec,
    params: &ModelParams,
    seed: u64,
    trial: usize,
) -> RunRecord {
    let mut record = RunRecord {
        scenario: scenario.id().to_string(),
        condition: scenario.condition().to_string(),
        method: *spec,
        params: *params,
        seed,
        trial,
        true_word: scenario.true_word.to_string(),
        snapshots: Vec::new(),
        accuracy: Vec::new(),
        ledger: CostLedger::default(),
        seconds_per_action: 0.0,
        error: None,
    };
    match run_method(models, scenario, spec, params, seed) {
        Ok(out) => {
            record.accuracy = out.snapshots.iter().map(|s| accuracy(s, &scenario.true_word)).collect();
            record.ledger = CostLedger::from_snapshots(&out.snapshots);
            record.snapshots = out.snapshots;
            record.seconds_per_action = out.seconds_per_action;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Seed of trial `trial` given the base seed.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    base.wrapping_add(trial as u64)
}

/// Executes the full cartesian product of scenarios × methods × trials.
/// `trials` overrides the default repeated-trial count of stochastic
/// methods.
pub fn run_experiment(
    models: &WordModels,
    scenarios: &[Scenario],
    specs: &[MethodSpec],
    params: &ModelParams,
    base_seed: u64,
    trials: Option<usize>,
) -> Vec<RunRecord> {
    let mut jobs = Vec::new();
    for (si, _) in scenarios.iter().enumerate() {
        for spec in specs {
            let m = if spec.is_stochastic() {
                trials.unwrap_or_else(|| spec.default_trials())
            } else {
                1
            };
            for trial in 0..m {
                jobs.push((si, *spec, trial));
            }
        }
    }
    jobs.par_iter()
        .map(|&(si, spec, trial)| {
            run_one(models, &scenarios[si], &spec, params, trial_seed(base_seed, trial), trial)
        })
        .collect()
}
