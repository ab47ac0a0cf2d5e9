//! Bottom-up goal proposals.
//!
//! A proposal picks a partial word (an existing tower, or a tower the agent
//! seems to be digging towards) and completes it with the n-gram. Tower
//! selection is auxiliary randomness: the returned weight is the completion
//! probability of the word given the chosen tower, which is an unbiased
//! stand-in for the intractable marginal proposal density.
//!
//! For a given state and action every branch probability can be written
//! down, so proposals are organized as a [`ProposalPlan`]: a finite mixture
//! of (branch, tower) choices, each paired with its completion sampler. The
//! plan is computed once per observed step and then sampled many times.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{CharNGram, Completion, SuffixTrie};
use crate::world::{Action, LetterCounts, Word, WorldState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProposalError {
    #[error("no tower has a feasible dictionary completion")]
    NoFeasibleProposal,
    #[error("unknown proposal strategy {0:?}")]
    UnknownStrategy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProposalStrategy {
    AnyTower,
    LastTower,
    NextTower,
    #[default]
    LastAndNext,
}

impl fmt::Display for ProposalStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProposalStrategy::AnyTower => "any_tower",
            ProposalStrategy::LastTower => "last_tower",
            ProposalStrategy::NextTower => "next_tower",
            ProposalStrategy::LastAndNext => "last_and_next",
        })
    }
}

impl FromStr for ProposalStrategy {
    type Err = ProposalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "any_tower" => Ok(Self::AnyTower),
            "last_tower" => Ok(Self::LastTower),
            "next_tower" => Ok(Self::NextTower),
            "last_and_next" => Ok(Self::LastAndNext),
            _ => Err(ProposalError::UnknownStrategy(s.to_string())),
        }
    }
}

/// Which selection rule produced the partial word that was completed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    AnyTower,
    LastTower,
    NextTower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchTrace {
    /// Branches tried, in order; the last one produced the word.
    pub route: Vec<Branch>,
    /// Reading of the (possibly hypothetical) tower that was completed.
    pub reading: String,
}

impl BranchTrace {
    pub fn branch(&self) -> Branch {
        *self.route.last().expect("route is never empty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProposalSample {
    pub word: Word,
    /// Completion probability of `word` given the chosen tower.
    pub weight: f64,
    pub trace: BranchTrace,
}

/// Shared, immutable proposal machinery for one scenario.
#[derive(Debug, Clone)]
pub struct ProposalConfig {
    pub strategy: ProposalStrategy,
    pub ngram: Arc<CharNGram>,
    /// Trie over the scenario-spellable dictionary.
    pub trie: Arc<SuffixTrie>,
}

impl ProposalConfig {
    pub fn new(strategy: ProposalStrategy, ngram: Arc<CharNGram>, trie: Arc<SuffixTrie>) -> Self {
        Self {
            strategy,
            ngram,
            trie,
        }
    }

    pub fn with_strategy(&self, strategy: ProposalStrategy) -> Self {
        Self {
            strategy,
            ..self.clone()
        }
    }

    pub fn plan<'a>(&'a self, state: &WorldState, action: Option<&Action>) -> ProposalPlan<'a> {
        Planner { config: self, state }.plan(action)
    }
}

struct Entry<'a> {
    prob: f64,
    route: Vec<Branch>,
    reading: String,
    completion: Completion<'a>,
}

/// All (branch, tower) choices for one state and action, with their
/// selection probabilities. Probabilities sum to at most one; the rest is
/// the chance that no branch finds a completable tower.
pub struct ProposalPlan<'a> {
    entries: Vec<Entry<'a>>,
}

impl<'a> ProposalPlan<'a> {
    /// Probability that a draw yields no proposal.
    pub fn failure_prob(&self) -> f64 {
        (1.0 - self.entries.iter().map(|e| e.prob).sum::<f64>()).max(0.0)
    }

    /// (route, reading, probability) of each choice.
    pub fn choices(&self) -> impl Iterator<Item = (&[Branch], &str, f64)> {
        self.entries
            .iter()
            .map(|e| (e.route.as_slice(), e.reading.as_str(), e.prob))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ProposalSample, ProposalError> {
        let mut u: f64 = rng.random::<f64>();
        for e in &self.entries {
            if u < e.prob {
                let (word, weight) = e.completion.sample(rng);
                return Ok(ProposalSample {
                    word,
                    weight,
                    trace: BranchTrace {
                        route: e.route.clone(),
                        reading: e.reading.clone(),
                    },
                });
            }
            u -= e.prob;
        }
        Err(ProposalError::NoFeasibleProposal)
    }

    /// Marginal probability of each word, summed over branches and towers.
    /// Sums to `1 - failure_prob()`.
    pub fn marginal(&self) -> Vec<(Word, f64)> {
        let mut acc: std::collections::BTreeMap<Word, f64> = Default::default();
        for e in &self.entries {
            for (w, q) in e.completion.distribution() {
                *acc.entry(w).or_insert(0.0) += e.prob * q;
            }
        }
        acc.into_iter().collect()
    }
}

struct Planner<'c, 's> {
    config: &'c ProposalConfig,
    state: &'s WorldState,
}

impl<'c, 's> Planner<'c, 's> {
    fn plan(&self, action: Option<&Action>) -> ProposalPlan<'c> {
        let mut entries = Vec::new();
        let route = Vec::new();
        match self.config.strategy {
            ProposalStrategy::AnyTower => self.any_tower(1.0, route, &mut entries),
            ProposalStrategy::LastTower => self.last_tower(action, false, 1.0, route, &mut entries),
            ProposalStrategy::NextTower => self.next_tower(action, 1.0, route, &mut entries),
            ProposalStrategy::LastAndNext => self.last_tower(action, true, 1.0, route, &mut entries),
        }
        entries.retain(|e| e.prob > 0.0);
        ProposalPlan { entries }
    }

    fn available_without(&self, readings: &[&str]) -> LetterCounts {
        let mut avail = self.state.letter_counts();
        for r in readings {
            for &c in r.as_bytes() {
                avail.take(c);
            }
        }
        avail
    }

    fn completion(&self, reading: &str, avail: &LetterCounts) -> Option<Completion<'c>> {
        self.config
            .trie
            .completion(&self.config.ngram, reading, avail)
            .ok()
    }

    /// Probability of an equally tall tower of uniformly random block letters.
    fn random_tower_prob(&self, height: usize) -> f64 {
        let distinct = self.state.letter_counts().distinct().max(1);
        (1.0 / distinct as f64).powi(height as i32)
    }

    fn any_tower(&self, mass: f64, mut route: Vec<Branch>, out: &mut Vec<Entry<'c>>) {
        route.push(Branch::AnyTower);
        let mut found = Vec::new();
        for i in 0..self.state.towers().len() {
            let reading = self.state.tower_reading(i).expect("index in range");
            let avail = self.available_without(&[&reading]);
            if let Some(c) = self.completion(&reading, &avail) {
                let score = self.config.ngram.sequence_prob(&reading);
                found.push((score, reading, c));
            }
        }
        let total: f64 = found.iter().map(|f| f.0).sum();
        if total <= 0.0 {
            return;
        }
        for (score, reading, completion) in found {
            out.push(Entry {
                prob: mass * score / total,
                route: route.clone(),
                reading,
                completion,
            });
        }
    }

    fn last_tower(
        &self,
        action: Option<&Action>,
        then_next: bool,
        mass: f64,
        mut route: Vec<Branch>,
        out: &mut Vec<Entry<'c>>,
    ) {
        route.push(Branch::LastTower);
        let mut fail = mass;
        if let Some(&Action::Stack { subject, .. }) = action {
            if let Some(t) = self.state.tower_of(subject) {
                let reading = self.state.tower_reading(t).expect("index in range");
                let avail = self.available_without(&[&reading]);
                if let Some(completion) = self.completion(&reading, &avail) {
                    let p_last = self.config.ngram.sequence_prob(&reading);
                    let p_rand = self.random_tower_prob(reading.len());
                    let gate = p_last / (p_last + p_rand);
                    out.push(Entry {
                        prob: mass * gate,
                        route: route.clone(),
                        reading,
                        completion,
                    });
                    fail = mass * (1.0 - gate);
                }
            }
        }
        if then_next {
            self.next_tower(action, fail, route, out);
        } else {
            self.any_tower(fail, route, out);
        }
    }

    fn next_tower(
        &self,
        action: Option<&Action>,
        mass: f64,
        mut route: Vec<Branch>,
        out: &mut Vec<Entry<'c>>,
    ) {
        route.push(Branch::NextTower);
        let mut fail = mass;
        if let Some(&Action::Unstack { target, .. }) = action {
            let candidates = self.next_tower_candidates(target);
            let total: f64 = candidates.iter().map(|c| c.0).sum();
            if total > 0.0 {
                fail = 0.0;
                for (score, reading, completion) in candidates {
                    let pick = mass * score / total;
                    let gate = score / (score + self.random_tower_prob(reading.len()));
                    out.push(Entry {
                        prob: pick * gate,
                        route: route.clone(),
                        reading,
                        completion,
                    });
                    fail += pick * (1.0 - gate);
                }
            }
        }
        self.any_tower(fail, route, out);
    }

    /// Hypothetical towers formed by putting a block from the tower just
    /// dug into (or the block now held) on top of another tower.
    fn next_tower_candidates(&self, dug_into: u8) -> Vec<(f64, String, Completion<'c>)> {
        let state = self.state;
        let Some(source) = state.tower_of(dug_into) else {
            return Vec::new();
        };
        let mut movable: Vec<(u8, Option<usize>)> = state.towers()[source]
            .iter()
            .map(|&b| (b, Some(source)))
            .collect();
        if let Some(h) = state.held() {
            movable.push((h, None));
        }
        let mut out = Vec::new();
        for (block, from) in movable {
            for dest in 0..state.towers().len() {
                if Some(dest) == from {
                    continue;
                }
                let base = state.tower_reading(dest).expect("index in range");
                let reading = format!("{}{}", state.letter(block), base);
                let avail = self.available_without(&[&reading]);
                if let Some(c) = self.completion(&reading, &avail) {
                    out.push((self.config.ngram.sequence_prob(&reading), reading, c));
                }
            }
        }
        out
    }
}

/// Draws one proposal for the state reached by `action`.
pub fn propose<R: Rng + ?Sized>(
    state: &WorldState,
    action: Option<&Action>,
    config: &ProposalConfig,
    rng: &mut R,
) -> Result<ProposalSample, ProposalError> {
    config.plan(state, action).sample(rng)
}
