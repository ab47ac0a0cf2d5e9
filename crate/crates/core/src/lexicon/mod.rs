//! The goal space: dictionary, tempered word-frequency prior, and the
//! reversed character n-gram used for word-likeness and completion.

mod ngram;
mod trie;

pub use ngram::{CharNGram, NGramTable, END, NUM_SYMBOLS};
pub use trie::{Completion, SuffixTrie};

use std::path::Path;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::world::{spellable, LetterCounts, Word};

pub const DEFAULT_WORD_TEMPERATURE: f64 = 4.0;
pub const DEFAULT_TERMINATION_BIAS: f64 = 0.05;
pub const DEFAULT_NGRAM_ORDER: usize = 5;

const BUNDLED_WORDS: &str = include_str!("../../data/words.tsv");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("non-positive frequency {freq} for {word:?}")]
    NonPositiveFrequency { word: String, freq: f64 },
    #[error("word temperature must be >= 1, got {0}")]
    Temperature(f64),
    #[error("no dictionary word is spellable from the available blocks")]
    EmptySupport,
    #[error("empty lexicon")]
    Empty,
    #[error("n-gram order must be >= 1 and termination bias in [0, 1); got n={order}, eps={eps}")]
    NGramParams { order: usize, eps: f64 },
    #[error("no dictionary completion of {0:?} is spellable from the available letters")]
    InfeasibleSuffix(String),
    #[error("reading dictionary: {0}")]
    Io(#[from] std::io::Error),
}

/// A dictionary of goal words with raw corpus frequencies, sorted by word.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: Vec<(Word, f64)>,
}

impl Lexicon {
    pub fn new(entries: impl IntoIterator<Item = (Word, f64)>) -> Result<Self, LexiconError> {
        let mut merged: FxHashMap<Word, f64> = FxHashMap::default();
        for (w, f) in entries {
            if !(f > 0.0 && f.is_finite()) {
                return Err(LexiconError::NonPositiveFrequency {
                    word: w.to_string(),
                    freq: f,
                });
            }
            *merged.entry(w).or_insert(0.0) += f;
        }
        if merged.is_empty() {
            return Err(LexiconError::Empty);
        }
        let mut entries: Vec<_> = merged.into_iter().collect();
        entries.sort_by_key(|a| a.0);
        Ok(Self { entries })
    }

    /// Parses `word<TAB>frequency` lines, or bare words with frequency 1.
    /// Blank lines and lines starting with `#` are skipped; repeated words
    /// have their frequencies summed.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| LexiconError::Parse { line: i + 1, reason };
            let mut fields = line.split('\t');
            let word = fields.next().unwrap_or_default().trim();
            let freq = match fields.next() {
                Some(f) => f
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| err(format!("bad frequency {f:?}: {e}")))?,
                None => 1.0,
            };
            if fields.next().is_some() {
                return Err(err("expected at most two tab-separated fields".into()));
            }
            let word = Word::new(word).map_err(|e| err(e.to_string()))?;
            entries.push((word, freq));
        }
        Self::new(entries)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The word list shipped with the crate (English, 3-8 letters).
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_WORDS).expect("bundled word list is valid")
    }

    pub fn entries(&self) -> &[(Word, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn frequency(&self, word: &Word) -> Option<f64> {
        self.entries
            .binary_search_by(|(w, _)| w.cmp(word))
            .ok()
            .map(|i| self.entries[i].1)
    }

    /// Tempered weights over the whole lexicon, aligned with `entries()`.
    pub fn tempered_weights(&self, temperature: f64) -> Result<Vec<f64>, LexiconError> {
        let freqs: Vec<f64> = self.entries.iter().map(|e| e.1).collect();
        temper(&freqs, temperature)
    }
}

/// Normalized power-tempered weights, `w_i ∝ f_i^(1/T)`, computed in log
/// space so tiny frequencies don't underflow at high temperature.
pub fn temper(freqs: &[f64], temperature: f64) -> Result<Vec<f64>, LexiconError> {
    if !(temperature >= 1.0) {
        return Err(LexiconError::Temperature(temperature));
    }
    if let Some(&f) = freqs.iter().find(|&&f| !(f > 0.0 && f.is_finite())) {
        return Err(LexiconError::NonPositiveFrequency {
            word: String::new(),
            freq: f,
        });
    }
    let logs: Vec<f64> = freqs.iter().map(|f| f.ln() / temperature).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    Ok(unnorm.into_iter().map(|w| w / total).collect())
}

/// Goal prior restricted to the words spellable from a scenario's blocks.
#[derive(Debug, Clone)]
pub struct GoalPrior {
    words: Vec<Word>,
    probs: Vec<f64>,
    index: FxHashMap<Word, usize>,
    temperature: f64,
}

impl GoalPrior {
    pub fn new(
        lexicon: &Lexicon,
        blocks: &LetterCounts,
        temperature: f64,
    ) -> Result<Self, LexiconError> {
        let (words, freqs): (Vec<Word>, Vec<f64>) = lexicon
            .entries()
            .iter()
            .filter(|(w, _)| spellable(w, blocks))
            .copied()
            .unzip();
        if words.is_empty() {
            return Err(LexiconError::EmptySupport);
        }
        let probs = temper(&freqs, temperature)?;
        let index = words.iter().enumerate().map(|(i, w)| (*w, i)).collect();
        Ok(Self {
            words,
            probs,
            index,
            temperature,
        })
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn index_of(&self, word: &Word) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Prior probability of `word` (0 outside the support).
    pub fn prob(&self, word: &Word) -> f64 {
        self.index_of(word).map_or(0.0, |i| self.probs[i])
    }

    pub fn log_prob(&self, word: &Word) -> f64 {
        self.prob(word).ln()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Word, f64)> + '_ {
        self.words.iter().copied().zip(self.probs.iter().copied())
    }
}

/// Goal prior for a scenario: tempered frequencies over spellable words.
pub fn goal_prior(
    lexicon: &Lexicon,
    blocks: &LetterCounts,
    temperature: f64,
) -> Result<GoalPrior, LexiconError> {
    GoalPrior::new(lexicon, blocks, temperature)
}

/// Trains the reversed character n-gram on tempered lexicon frequencies.
pub fn train_ngram(
    lexicon: &Lexicon,
    order: usize,
    temperature: f64,
    termination_bias: f64,
) -> Result<CharNGram, LexiconError> {
    let weights = lexicon.tempered_weights(temperature)?;
    CharNGram::train(
        lexicon
            .entries()
            .iter()
            .zip(weights)
            .map(|((w, _), wt)| (w.as_str(), wt)),
        order,
        termination_bias,
    )
}
