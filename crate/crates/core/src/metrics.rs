//! Similarity, accuracy and cost measures over goal distributions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::PosteriorSnapshot;
use crate::world::{LetterCounts, Word, MAX_WORD_LEN, MIN_WORD_LEN};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("{metric} is undefined: {reason}")]
    Undefined { metric: &'static str, reason: &'static str },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("need at least two runs, got {0}")]
    TooFewRuns(usize),
    #[error("runs have different numbers of judgment points")]
    RaggedRuns,
    #[error("cost ratio must be non-negative, got {0}")]
    NegativeCost(f64),
    #[error("invalid guess {guess:?}: {reason}")]
    InvalidGuess { guess: String, reason: &'static str },
}

/// A probability distribution over words. May be empty (for example, a
/// participant who gave no guesses), in which case most metrics are
/// undefined.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GoalDistribution {
    probs: BTreeMap<Word, f64>,
}

impl GoalDistribution {
    /// Validates that probabilities are non-negative and sum to one.
    pub fn new(probs: impl IntoIterator<Item = (Word, f64)>) -> Result<Self, MetricError> {
        let mut map = BTreeMap::new();
        for (w, p) in probs {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(MetricError::InvalidDistribution(format!("{w} has probability {p}")));
            }
            if p > 0.0 {
                *map.entry(w).or_insert(0.0) += p;
            }
        }
        let total: f64 = map.values().sum();
        if !map.is_empty() && (total - 1.0).abs() > 1e-9 {
            return Err(MetricError::InvalidDistribution(format!("sums to {total}")));
        }
        Ok(Self { probs: map })
    }

    /// Scales non-negative weights to sum to one.
    pub fn normalized(weights: impl IntoIterator<Item = (Word, f64)>) -> Result<Self, MetricError> {
        let weights: Vec<(Word, f64)> = weights.into_iter().collect();
        let total: f64 = weights.iter().map(|w| w.1).sum();
        if weights.is_empty() || total == 0.0 {
            return Ok(Self::default());
        }
        Self::new(weights.into_iter().map(|(w, p)| (w, p / total)))
    }

    pub fn from_snapshot(snapshot: &PosteriorSnapshot) -> Self {
        Self {
            probs: snapshot.probs.iter().copied().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, w: &Word) -> f64 {
        self.probs.get(w).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, f64)> {
        self.probs.iter().map(|(w, p)| (w, *p))
    }

    fn union<'a>(&'a self, other: &'a Self) -> impl Iterator<Item = (f64, f64)> + 'a {
        let mut words: Vec<&Word> = self.probs.keys().chain(other.probs.keys()).collect();
        words.sort();
        words.dedup();
        words.into_iter().map(|w| (self.prob(w), other.prob(w)))
    }
}

fn both_nonempty(metric: &'static str, p: &GoalDistribution, q: &GoalDistribution) -> Result<(), MetricError> {
    if p.is_empty() || q.is_empty() {
        return Err(MetricError::Undefined {
            metric,
            reason: "empty distribution",
        });
    }
    Ok(())
}

/// Intersection over union (Jaccard index) of two distributions.
pub fn iou(p: &GoalDistribution, q: &GoalDistribution) -> Result<f64, MetricError> {
    both_nonempty("iou", p, q)?;
    let (min, max) = p
        .union(q)
        .fold((0.0, 0.0), |(lo, hi), (a, b)| (lo + a.min(b), hi + a.max(b)));
    Ok(min / max)
}

pub fn overlap(p: &GoalDistribution, q: &GoalDistribution) -> Result<f64, MetricError> {
    both_nonempty("overlap", p, q)?;
    Ok(p.union(q).map(|(a, b)| a.min(b)).sum())
}

pub fn tvd(p: &GoalDistribution, q: &GoalDistribution) -> Result<f64, MetricError> {
    both_nonempty("tvd", p, q)?;
    Ok(0.5 * p.union(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Which words enter the probability vectors compared by [`pearson`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PearsonSupport {
    /// Words with positive probability under either distribution.
    #[default]
    Union,
    /// A fixed word list (for example, the whole prior support), with
    /// zeros filled in.
    Full,
}

/// Correlation of the two probability vectors over the union support.
pub fn pearson(p: &GoalDistribution, q: &GoalDistribution) -> Result<f64, MetricError> {
    both_nonempty("pearson", p, q)?;
    let (x, y): (Vec<f64>, Vec<f64>) = p.union(q).unzip();
    correlation(&x, &y)
}

/// Correlation over a fixed word list.
pub fn pearson_over(p: &GoalDistribution, q: &GoalDistribution, support: &[Word]) -> Result<f64, MetricError> {
    let x: Vec<f64> = support.iter().map(|w| p.prob(w)).collect();
    let y: Vec<f64> = support.iter().map(|w| q.prob(w)).collect();
    correlation(&x, &y)
}

fn correlation(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if x.len() < 2 || sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::Undefined {
            metric: "pearson",
            reason: "constant probability vector",
        });
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Probability assigned to the true goal.
pub fn accuracy(snapshot: &PosteriorSnapshot, true_word: &Word) -> f64 {
    snapshot.prob(true_word)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunVariance {
    /// At each judgment point, the across-run variance of every goal's
    /// probability, summed over goals.
    pub per_step: Vec<f64>,
    /// Mean of `per_step`.
    pub total: f64,
    /// Standard deviation across runs of each run's mean accuracy.
    pub accuracy_std: f64,
}

/// Sample (n−1) variance.
fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// Spread of repeated runs of a stochastic method. Each run is the list of
/// snapshots at the scenario's judgment points.
pub fn run_variance(runs: &[Vec<PosteriorSnapshot>], true_word: &Word) -> Result<RunVariance, MetricError> {
    if runs.len() < 2 {
        return Err(MetricError::TooFewRuns(runs.len()));
    }
    let steps = runs[0].len();
    if runs.iter().any(|r| r.len() != steps) {
        return Err(MetricError::RaggedRuns);
    }
    let per_step: Vec<f64> = (0..steps)
        .map(|t| {
            let mut words: Vec<Word> = runs.iter().flat_map(|r| r[t].probs.iter().map(|p| p.0)).collect();
            words.sort();
            words.dedup();
            words
                .iter()
                .map(|w| variance(&runs.iter().map(|r| r[t].prob(w)).collect::<Vec<_>>()))
                .sum()
        })
        .collect();
    let total = if steps == 0 { 0.0 } else { per_step.iter().sum::<f64>() / steps as f64 };
    let mean_acc: Vec<f64> = runs
        .iter()
        .map(|r| {
            if r.is_empty() {
                0.0
            } else {
                r.iter().map(|s| accuracy(s, true_word)).sum::<f64>() / r.len() as f64
            }
        })
        .collect();
    Ok(RunVariance {
        per_step,
        total,
        accuracy_std: variance(&mean_acc).sqrt(),
    })
}

/// Cost of one inference run, one entry per judgment point.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    /// Cumulative per-goal likelihood evaluations.
    pub evaluations: Vec<u64>,
    /// Distinct hypotheses tracked.
    pub tracked: Vec<usize>,
}

impl CostLedger {
    pub fn from_snapshots(snapshots: &[PosteriorSnapshot]) -> Self {
        Self {
            evaluations: snapshots.iter().map(|s| s.evaluations).collect(),
            tracked: snapshots.iter().map(|s| s.unique_hypotheses).collect(),
        }
    }

    pub fn total_evaluations(&self) -> u64 {
        self.evaluations.last().copied().unwrap_or(0)
    }

    pub fn is_consistent(&self) -> bool {
        self.evaluations.windows(2).all(|w| w[0] <= w[1]) && self.evaluations.len() == self.tracked.len()
    }
}

/// Cumulative accuracy minus `cost_ratio` per evaluation, with the reward
/// of a correct inference fixed to 1.
pub fn net_reward(accuracies: &[f64], ledger: &CostLedger, cost_ratio: f64) -> Result<f64, MetricError> {
    if !(cost_ratio >= 0.0) {
        return Err(MetricError::NegativeCost(cost_ratio));
    }
    Ok(accuracies.iter().sum::<f64>() - cost_ratio * ledger.total_evaluations() as f64)
}

/// Checks a guess against the length rule and the available letters.
pub fn validate_guess(guess: &str, available: &LetterCounts) -> Result<Word, MetricError> {
    let bad = |reason| MetricError::InvalidGuess {
        guess: guess.to_string(),
        reason,
    };
    let len = guess.chars().count();
    if !(MIN_WORD_LEN..=MAX_WORD_LEN).contains(&len) {
        return Err(bad("guesses must have 3 to 8 letters"));
    }
    let word = Word::new(&guess.to_ascii_lowercase()).map_err(|_| bad("guesses may only use the letters a-z"))?;
    if !available.contains(&LetterCounts::from_bytes(word.as_bytes())) {
        return Err(bad("uses letters that are not on the table"));
    }
    Ok(word)
}

/// Uniform distribution over distinct guesses.
pub fn human_distribution(guesses: &[Word]) -> GoalDistribution {
    let mut distinct: Vec<Word> = guesses.to_vec();
    distinct.sort();
    distinct.dedup();
    let p = 1.0 / distinct.len() as f64;
    GoalDistribution {
        probs: distinct.into_iter().map(|w| (w, p)).collect(),
    }
}

/// Payment for one judgment: 0.1 split over the guesses, paid if the true
/// word is among them.
pub fn bonus(guesses: &[Word], true_word: &Word) -> f64 {
    if guesses.contains(true_word) {
        0.1 / guesses.len() as f64
    } else {
        0.0
    }
}
