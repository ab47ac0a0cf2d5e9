//! Goal inference from observed actions.
//!
//! Three methods share one [`InferenceModel`] (goal prior, proposal, and
//! planner parameters):
//!
//! * [`exact`]: tracks the likelihood of every word in the prior's support.
//! * [`sips`]: sequential Monte Carlo over goals, rejuvenated with bottom-up
//!   proposals at every step.
//! * [`proposal_only`]: guesses from the proposal alone, without memory.

pub mod exact;
pub mod proposal_only;
pub mod resample;
pub mod sips;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{CharNGram, GoalPrior, Lexicon, LexiconError, SuffixTrie};
use crate::planner::{PlannerError, PlannerParams};
use crate::proposal::{ProposalConfig, ProposalStrategy};
use crate::world::{Word, WorldState};

pub use exact::{exact_infer, ExactInference};
pub use proposal_only::{proposal_only_run, ProposalOnly, ProposalOnlyWeighting};
pub use resample::systematic_resample;
pub use sips::{sips_run, EvaluationLedger, Particle, ParticleCollection, ProposalDensity, SipsConfig};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error("particle count must be at least 1")]
    NoParticles,
    #[error("trajectory uses {found} blocks but the model was built for {expected}")]
    BlockMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Sips,
    ProposalOnly,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Sips => "sips",
            Method::ProposalOnly => "proposal_only",
        })
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "exact" => Ok(Method::Exact),
            "sips" | "smc" => Ok(Method::Sips),
            "proposal_only" | "proposal" => Ok(Method::ProposalOnly),
            other => Err(format!(
                "unknown method {other:?} (expected exact, sips or proposal_only)"
            )),
        }
    }
}

/// Everything about a scenario's goal space that inference needs.
#[derive(Debug, Clone)]
pub struct InferenceModel {
    pub prior: Arc<GoalPrior>,
    pub proposal: ProposalConfig,
    pub planner: PlannerParams,
    letters: String,
}

impl InferenceModel {
    /// Builds the prior and the suffix trie for the blocks of `initial`.
    pub fn new(
        lexicon: &Lexicon,
        ngram: Arc<CharNGram>,
        initial: &WorldState,
        word_temperature: f64,
        strategy: ProposalStrategy,
        planner: PlannerParams,
    ) -> Result<Self, InferenceError> {
        planner.validate()?;
        let prior = GoalPrior::new(lexicon, &initial.letter_counts(), word_temperature)?;
        let trie = SuffixTrie::new(prior.words());
        Ok(Self {
            prior: Arc::new(prior),
            proposal: ProposalConfig::new(strategy, ngram, Arc::new(trie)),
            planner,
            letters: sorted_letters(initial),
        })
    }

    pub fn with_planner(&self, planner: PlannerParams) -> Self {
        Self {
            planner,
            ..self.clone()
        }
    }

    pub fn with_strategy(&self, strategy: ProposalStrategy) -> Self {
        Self {
            proposal: self.proposal.with_strategy(strategy),
            ..self.clone()
        }
    }

    pub(crate) fn check_state(&self, state: &WorldState) -> Result<(), InferenceError> {
        let found = sorted_letters(state);
        if found != self.letters {
            return Err(InferenceError::BlockMismatch {
                expected: self.letters.clone(),
                found,
            });
        }
        Ok(())
    }
}

fn sorted_letters(state: &WorldState) -> String {
    let mut l: Vec<char> = state.blocks().iter().map(|b| b.letter).collect();
    l.sort_unstable();
    l.into_iter().collect()
}

/// A posterior over goals at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSnapshot {
    /// Number of primitive actions observed.
    pub step: usize,
    /// Words with positive probability, most probable first.
    pub probs: Vec<(Word, f64)>,
    /// Set when no hypothesis has positive weight.
    pub degenerate: bool,
    /// Distinct hypotheses currently tracked.
    pub unique_hypotheses: usize,
    /// Cumulative per-goal likelihood evaluations.
    pub evaluations: u64,
}

impl PosteriorSnapshot {
    /// Normalizes log weights into a snapshot. Non-finite or all `-inf`
    /// weights yield a degenerate (empty) snapshot.
    pub fn from_log_weights(
        step: usize,
        weights: impl IntoIterator<Item = (Word, f64)>,
        unique_hypotheses: usize,
        evaluations: u64,
    ) -> Self {
        let weights: Vec<(Word, f64)> = weights.into_iter().collect();
        let lse = log_sum_exp(weights.iter().map(|w| w.1));
        if !lse.is_finite() {
            return Self {
                step,
                probs: Vec::new(),
                degenerate: true,
                unique_hypotheses,
                evaluations,
            };
        }
        let probs = weights
            .into_iter()
            .map(|(w, lw)| (w, (lw - lse).exp()))
            .filter(|(_, p)| *p > 0.0)
            .collect();
        Self::from_probs(step, probs, unique_hypotheses, evaluations)
    }

    /// Wraps already-normalized (or unnormalized non-negative) probabilities.
    pub fn from_probs(step: usize, probs: Vec<(Word, f64)>, unique_hypotheses: usize, evaluations: u64) -> Self {
        let total: f64 = probs.iter().map(|p| p.1).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Self {
                step,
                probs: Vec::new(),
                degenerate: true,
                unique_hypotheses,
                evaluations,
            };
        }
        let mut probs: Vec<(Word, f64)> = probs
            .into_iter()
            .filter(|p| p.1 > 0.0)
            .map(|(w, p)| (w, p / total))
            .collect();
        sort_desc(&mut probs);
        Self {
            step,
            probs,
            degenerate: false,
            unique_hypotheses,
            evaluations,
        }
    }

    pub fn prob(&self, word: &Word) -> f64 {
        self.probs
            .iter()
            .find(|p| p.0 == *word)
            .map_or(0.0, |p| p.1)
    }

    pub fn prob_str(&self, word: &str) -> f64 {
        Word::new(word).map_or(0.0, |w| self.prob(&w))
    }

    pub fn top(&self, k: usize) -> &[(Word, f64)] {
        &self.probs[..k.min(self.probs.len())]
    }

    /// Rank (0 = most probable) of `word`, if present.
    pub fn rank(&self, word: &str) -> Option<usize> {
        self.probs.iter().position(|p| p.0.as_str() == word)
    }
}

/// Most probable first; ties broken alphabetically.
pub(crate) fn sort_desc(probs: &mut [(Word, f64)]) {
    probs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
}

pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_normalizes_and_sorts() {
        let w = |s| Word::new(s).unwrap();
        let s = PosteriorSnapshot::from_log_weights(3, [(w("ink"), 0.0), (w("pink"), (3.0f64).ln())], 2, 7);
        assert!((s.prob(&w("pink")) - 0.75).abs() < 1e-12);
        assert_eq!(s.rank("pink"), Some(0));
        assert!(!s.degenerate);
        let d = PosteriorSnapshot::from_log_weights(0, [(w("ink"), f64::NEG_INFINITY)], 1, 0);
        assert!(d.degenerate && d.probs.is_empty());
    }

    #[test]
    fn log_sum_exp_basics() {
        assert!((log_sum_exp([0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_add_exp(-1000.0, -1000.0) - (-1000.0 + 2f64.ln())).abs() < 1e-9);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 1.5), 1.5);
    }

    #[test]
    fn method_names() {
        for m in [Method::Exact, Method::Sips, Method::ProposalOnly] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
    }
}
