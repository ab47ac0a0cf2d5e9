//! Wire types. Every message carries the schema version in `v`.

use blockwords::inference::{Method, PosteriorSnapshot};
use blockwords::planner::SearchStrategy;
use blockwords::proposal::ProposalStrategy;
use blockwords::{Action, BlockId};
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

/// Body of `POST /sessions`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default)]
    pub v: Option<u32>,
    /// One lowercase letter per block; block ids are positions in this
    /// string.
    pub blocks: String,
    /// Initial towers as block ids, top to bottom. Defaults to every block
    /// on the table.
    #[serde(default)]
    pub towers: Option<Vec<Vec<BlockId>>>,
    #[serde(default)]
    pub held: Option<BlockId>,
    #[serde(default)]
    pub method: Option<Method>,
    #[serde(default)]
    pub n_particles: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub top_k: Option<usize>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default)]
    pub cadence: Option<usize>,
    #[serde(default)]
    pub search: Option<SearchStrategy>,
    #[serde(default)]
    pub proposal: Option<ProposalStrategy>,
}

/// Body of `POST /sessions/{id}/actions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostAction {
    #[serde(default)]
    pub v: Option<u32>,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordProb {
    pub word: String,
    pub prob: f64,
}

/// The most probable goals plus the mass of everything else, so the
/// listed probabilities and `other` always sum to one unless the
/// distribution is flagged degenerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorView {
    pub step: usize,
    pub top: Vec<WordProb>,
    pub other: f64,
    pub degenerate: bool,
    pub unique_hypotheses: usize,
}

impl PosteriorView {
    pub fn from_snapshot(snapshot: &PosteriorSnapshot, k: usize) -> Self {
        let top: Vec<WordProb> = snapshot
            .top(k)
            .iter()
            .map(|(w, p)| WordProb {
                word: w.to_string(),
                prob: *p,
            })
            .collect();
        let listed: f64 = top.iter().map(|w| w.prob).sum();
        let other = if snapshot.degenerate {
            0.0
        } else {
            (1.0 - listed).max(0.0)
        };
        Self {
            step: snapshot.step,
            top,
            other,
            degenerate: snapshot.degenerate,
            unique_hypotheses: snapshot.unique_hypotheses,
        }
    }

    pub fn total(&self) -> f64 {
        self.top.iter().map(|w| w.prob).sum::<f64>() + self.other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSettings {
    pub method: Method,
    pub n_particles: usize,
    pub seed: u64,
    pub top_k: usize,
    pub beta: f64,
    pub budget: usize,
    pub cadence: usize,
    pub search: SearchStrategy,
    pub proposal: ProposalStrategy,
}

/// Full session state as returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub v: u32,
    pub id: String,
    pub blocks: String,
    /// Towers as block ids, top to bottom.
    pub towers: Vec<Vec<BlockId>>,
    /// Each tower's letters read top to bottom.
    pub readings: Vec<String>,
    pub held: Option<BlockId>,
    pub history: Vec<Action>,
    pub legal_actions: Vec<Action>,
    pub posterior: PosteriorView,
    pub settings: SessionSettings,
    /// Inference time spent on the last update.
    pub latency_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub v: u32,
    pub error: ErrorBody,
}
