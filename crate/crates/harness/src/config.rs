//! Model parameters and the shared word-model cache.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use blockwords::inference::{InferenceError, InferenceModel};
use blockwords::lexicon::{
    train_ngram, CharNGram, Lexicon, LexiconError, DEFAULT_NGRAM_ORDER, DEFAULT_TERMINATION_BIAS,
    DEFAULT_WORD_TEMPERATURE,
};
use blockwords::planner::{PlannerParams, SearchStrategy};
use blockwords::proposal::ProposalStrategy;
use blockwords::WorldState;
use serde::{Deserialize, Serialize};

/// Generative-model and proposal parameters shared by every method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub budget: usize,
    pub cadence: usize,
    pub search: SearchStrategy,
    pub proposal: ProposalStrategy,
    /// Word-frequency temperature for the prior and the n-gram.
    pub tw: f64,
    /// Termination bias of the n-gram completion.
    pub epsilon: f64,
    pub ngram_order: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        let p = PlannerParams::default();
        Self {
            beta: p.beta,
            budget: p.budget,
            cadence: p.cadence,
            search: p.strategy,
            proposal: ProposalStrategy::default(),
            tw: DEFAULT_WORD_TEMPERATURE,
            epsilon: DEFAULT_TERMINATION_BIAS,
            ngram_order: DEFAULT_NGRAM_ORDER,
        }
    }
}

impl ModelParams {
    pub fn planner(&self) -> PlannerParams {
        PlannerParams {
            beta: self.beta,
            budget: self.budget,
            cadence: self.cadence,
            strategy: self.search,
        }
    }

    /// Short human-readable label, e.g. `beta=1 B=100 dt=2 bfs`.
    pub fn label(&self) -> String {
        format!(
            "beta={} B={} dt={} {} {} tw={} eps={}",
            self.beta, self.budget, self.cadence, self.search, self.proposal, self.tw, self.epsilon
        )
    }
}

type NGramKey = (u64, u64, usize);

/// A dictionary plus n-grams trained on it, cached by training parameters.
#[derive(Debug)]
pub struct WordModels {
    lexicon: Arc<Lexicon>,
    ngrams: Mutex<HashMap<NGramKey, Arc<CharNGram>>>,
}

impl WordModels {
    pub fn new(lexicon: Lexicon) -> Self {
        Self {
            lexicon: Arc::new(lexicon),
            ngrams: Mutex::new(HashMap::new()),
        }
    }

    pub fn bundled() -> Self {
        Self::new(Lexicon::bundled())
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// Uses a previously trained n-gram for `params` instead of training one.
    pub fn insert_ngram(&self, params: &ModelParams, ngram: CharNGram) {
        let key = (params.tw.to_bits(), params.epsilon.to_bits(), params.ngram_order);
        self.ngrams.lock().expect("cache lock").insert(key, Arc::new(ngram));
    }

    pub fn ngram(&self, params: &ModelParams) -> Result<Arc<CharNGram>, LexiconError> {
        let key = (params.tw.to_bits(), params.epsilon.to_bits(), params.ngram_order);
        if let Some(ng) = self.ngrams.lock().expect("cache lock").get(&key) {
            return Ok(ng.clone());
        }
        let ng = Arc::new(train_ngram(&self.lexicon, params.ngram_order, params.tw, params.epsilon)?);
        self.ngrams.lock().expect("cache lock").insert(key, ng.clone());
        Ok(ng)
    }

    /// Inference model for a scenario's blocks.
    pub fn model(&self, initial: &WorldState, params: &ModelParams) -> Result<InferenceModel, InferenceError> {
        let ngram = self.ngram(params)?;
        InferenceModel::new(&self.lexicon, ngram, initial, params.tw, params.proposal, params.planner())
    }
}
