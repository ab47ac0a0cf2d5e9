//! Goal guesses made from the bottom-up proposal alone.
//!
//! At each judgment point the proposal is sampled `N` times at the current
//! state and last action, with no memory of earlier steps and no planner.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{InferenceError, InferenceModel, PosteriorSnapshot};
use crate::trajectory::Trajectory;
use crate::world::{Action, Word, WorldState};

/// How proposed words are turned into a distribution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalOnlyWeighting {
    /// Fraction of draws that produced each word.
    #[default]
    Counts,
    /// Each distinct proposed word weighted by its prior probability.
    Prior,
    /// Each draw weighted by prior / proposal probability.
    Importance,
}

impl fmt::Display for ProposalOnlyWeighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Counts => "counts",
            Self::Prior => "prior",
            Self::Importance => "importance",
        })
    }
}

impl FromStr for ProposalOnlyWeighting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "counts" => Ok(Self::Counts),
            "prior" => Ok(Self::Prior),
            "importance" => Ok(Self::Importance),
            other => Err(format!("unknown weighting {other:?} (expected counts, prior or importance)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProposalOnly {
    model: InferenceModel,
    pub n_samples: usize,
    pub seed: u64,
    pub weighting: ProposalOnlyWeighting,
}

impl ProposalOnly {
    pub fn new(model: &InferenceModel, n_samples: usize, seed: u64) -> Result<Self, InferenceError> {
        if n_samples == 0 {
            return Err(InferenceError::NoParticles);
        }
        Ok(Self {
            model: model.clone(),
            n_samples,
            seed,
            weighting: ProposalOnlyWeighting::default(),
        })
    }

    pub fn with_weighting(mut self, weighting: ProposalOnlyWeighting) -> Self {
        self.weighting = weighting;
        self
    }

    /// Samples a guess distribution at `state`, reached by `action` after
    /// `step` observed actions.
    pub fn judge(&self, step: usize, state: &WorldState, action: Option<&Action>) -> PosteriorSnapshot {
        let plan = self.model.proposal.plan(state, action);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(step as u64);
        let mut acc: Vec<(Word, f64)> = Vec::new();
        for _ in 0..self.n_samples {
            let Ok(sample) = plan.sample(&mut rng) else { continue };
            let add = match self.weighting {
                ProposalOnlyWeighting::Counts => 1.0,
                ProposalOnlyWeighting::Prior => 0.0,
                ProposalOnlyWeighting::Importance => self.model.prior.prob(&sample.word) / sample.weight,
            };
            match acc.iter_mut().find(|e| e.0 == sample.word) {
                Some(e) => e.1 += add,
                None => acc.push((sample.word, add)),
            }
        }
        if self.weighting == ProposalOnlyWeighting::Prior {
            for e in &mut acc {
                e.1 = self.model.prior.prob(&e.0);
            }
        }
        let unique = acc.len();
        PosteriorSnapshot::from_probs(step, acc, unique, 0)
    }

    /// The distribution the sampler converges to as `N` grows.
    pub fn analytic(&self, step: usize, state: &WorldState, action: Option<&Action>) -> PosteriorSnapshot {
        let marginal = self.model.proposal.plan(state, action).marginal();
        let unique = marginal.len();
        PosteriorSnapshot::from_probs(step, marginal, unique, 0)
    }
}

/// Proposal-only guesses at each judgment point of `trajectory`.
pub fn proposal_only_run(
    model: &InferenceModel,
    trajectory: &Trajectory,
    n_samples: usize,
    seed: u64,
    weighting: ProposalOnlyWeighting,
) -> Result<Vec<PosteriorSnapshot>, InferenceError> {
    model.check_state(trajectory.initial())?;
    let po = ProposalOnly::new(model, n_samples, seed)?.with_weighting(weighting);
    Ok(trajectory
        .judgments()
        .iter()
        .map(|&t| {
            let action = t.checked_sub(1).map(|i| &trajectory.actions()[i]);
            po.judge(t, trajectory.state(t), action)
        })
        .collect())
}
