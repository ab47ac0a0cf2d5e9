//! Per-session inference state. A session is driven by a single writer;
//! readers only ever see the immutable [`SessionView`] published after
//! each update.

use std::time::Instant;

use blockwords::inference::{
    ExactInference, InferenceError, InferenceModel, Method, ParticleCollection, PosteriorSnapshot, ProposalOnly,
    SipsConfig,
};
use blockwords::{Action, WorldError, WorldState};

use crate::protocol::{PosteriorView, SessionSettings, SessionView, PROTOCOL_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("illegal action: {0}")]
    IllegalAction(WorldError),
    #[error("nothing to undo")]
    EmptyHistory,
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

#[derive(Debug, Clone)]
enum Tracker {
    Exact(ExactInference),
    Sips(ParticleCollection),
    ProposalOnly(ProposalOnly, PosteriorSnapshot),
}

impl Tracker {
    fn start(model: &InferenceModel, initial: &WorldState, settings: &SessionSettings) -> Result<Self, InferenceError> {
        Ok(match settings.method {
            Method::Exact => Tracker::Exact(ExactInference::new(model, initial)?),
            Method::Sips => Tracker::Sips(ParticleCollection::new(
                model,
                initial,
                SipsConfig::new(settings.n_particles, settings.seed),
            )?),
            Method::ProposalOnly => {
                let po = ProposalOnly::new(model, settings.n_particles, settings.seed)?;
                let first = po.judge(0, initial, None);
                Tracker::ProposalOnly(po, first)
            }
        })
    }

    /// Folds in `action`, which took `prev` to `next` as the `step`-th
    /// action.
    fn observe(&mut self, prev: &WorldState, action: &Action, next: &WorldState, step: usize) -> Result<(), InferenceError> {
        match self {
            Tracker::Exact(e) => e.observe(&prev.pack(), action),
            Tracker::Sips(pc) => pc.observe(action),
            Tracker::ProposalOnly(po, snap) => {
                *snap = po.judge(step, next, Some(action));
                Ok(())
            }
        }
    }

    fn snapshot(&self) -> PosteriorSnapshot {
        match self {
            Tracker::Exact(e) => e.snapshot(),
            Tracker::Sips(pc) => pc.snapshot(),
            Tracker::ProposalOnly(_, snap) => snap.clone(),
        }
    }
}

/// The mutable core of a session.
#[derive(Debug, Clone)]
pub struct SessionCore {
    id: String,
    model: InferenceModel,
    initial: WorldState,
    settings: SessionSettings,
    state: WorldState,
    history: Vec<Action>,
    tracker: Tracker,
    latency: f64,
}

impl SessionCore {
    pub fn new(
        id: String,
        model: InferenceModel,
        initial: WorldState,
        settings: SessionSettings,
    ) -> Result<Self, SessionError> {
        let start = Instant::now();
        let tracker = Tracker::start(&model, &initial, &settings)?;
        Ok(Self {
            id,
            model,
            state: initial.clone(),
            initial,
            settings,
            history: Vec::new(),
            tracker,
            latency: start.elapsed().as_secs_f64(),
        })
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn history(&self) -> &[Action] {
        &self.history
    }

    /// Applies a legal action and updates the posterior. An illegal action
    /// leaves the session untouched, and so does a failed update.
    pub fn apply(&mut self, action: Action) -> Result<(), SessionError> {
        let next = self.state.apply(&action).map_err(SessionError::IllegalAction)?;
        let start = Instant::now();
        if let Err(e) = self.tracker.observe(&self.state, &action, &next, self.history.len() + 1) {
            let (tracker, _) = self.replay(&self.history)?;
            self.tracker = tracker;
            return Err(e.into());
        }
        self.state = next;
        self.history.push(action);
        self.latency = start.elapsed().as_secs_f64();
        Ok(())
    }

    /// Drops the last action and rebuilds the inference state by replaying
    /// the remaining history from the initial state with the session seed.
    pub fn undo(&mut self) -> Result<(), SessionError> {
        if self.history.is_empty() {
            return Err(SessionError::EmptyHistory);
        }
        let start = Instant::now();
        let kept = &self.history[..self.history.len() - 1];
        let (tracker, state) = self.replay(kept)?;
        self.tracker = tracker;
        self.state = state;
        self.history.pop();
        self.latency = start.elapsed().as_secs_f64();
        Ok(())
    }

    fn replay(&self, history: &[Action]) -> Result<(Tracker, WorldState), SessionError> {
        let mut tracker = Tracker::start(&self.model, &self.initial, &self.settings)?;
        let mut state = self.initial.clone();
        for (i, a) in history.iter().enumerate() {
            let next = state.apply(a).map_err(SessionError::IllegalAction)?;
            tracker.observe(&state, a, &next, i + 1)?;
            state = next;
        }
        Ok((tracker, state))
    }

    pub fn snapshot(&self) -> PosteriorSnapshot {
        self.tracker.snapshot()
    }

    pub fn view(&self) -> SessionView {
        let s = &self.state;
        let blocks: String = (0..s.num_blocks()).map(|b| s.letter(b as u8)).collect();
        SessionView {
            v: PROTOCOL_VERSION,
            id: self.id.clone(),
            blocks,
            towers: s.towers().to_vec(),
            readings: s.towers().iter().map(|t| s.reading_of(t)).collect(),
            held: s.held(),
            history: self.history.clone(),
            legal_actions: s.legal_actions(),
            posterior: PosteriorView::from_snapshot(&self.snapshot(), self.settings.top_k),
            settings: self.settings.clone(),
            latency_seconds: self.latency,
        }
    }
}
