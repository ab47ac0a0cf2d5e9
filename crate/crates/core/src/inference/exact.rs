//! Exhaustive Bayesian inverse planning over the whole goal prior.

use rayon::prelude::*;

use super::{InferenceError, InferenceModel, PosteriorSnapshot};
use crate::planner::{GoalTracker, Policy};
use crate::trajectory::Trajectory;
use crate::world::{Action, Packed, WorldState};

/// Incremental exact posterior: one likelihood tracker per support word.
#[derive(Debug, Clone)]
pub struct ExactInference {
    model: InferenceModel,
    trackers: Vec<GoalTracker>,
    step: usize,
    evaluations: u64,
}

impl ExactInference {
    pub fn new(model: &InferenceModel, initial: &WorldState) -> Result<Self, InferenceError> {
        model.check_state(initial)?;
        let trackers = model
            .prior
            .words()
            .iter()
            .map(|&g| Policy::for_state(g, initial, model.planner).map(GoalTracker::new))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            model: model.clone(),
            trackers,
            step: 0,
            evaluations: 0,
        })
    }

    /// Folds in `action`, taken from the packed state `prev`.
    pub fn observe(&mut self, prev: &Packed, action: &Action) -> Result<(), InferenceError> {
        self.trackers
            .par_iter_mut()
            .try_for_each(|t| t.advance(prev, action).map(|_| ()))?;
        self.step += 1;
        self.evaluations += self.trackers.len() as u64;
        Ok(())
    }

    pub fn snapshot(&self) -> PosteriorSnapshot {
        let weights = self
            .trackers
            .iter()
            .zip(self.model.prior.probs())
            .map(|(t, p)| (*t.goal(), p.ln() + t.loglik()));
        PosteriorSnapshot::from_log_weights(self.step, weights, self.trackers.len(), self.evaluations)
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }
}

/// Exact posterior at every judgment point of `trajectory`.
pub fn exact_infer(model: &InferenceModel, trajectory: &Trajectory) -> Result<Vec<PosteriorSnapshot>, InferenceError> {
    let mut inf = ExactInference::new(model, trajectory.initial())?;
    let states = trajectory.packed_states();
    let mut out = Vec::with_capacity(trajectory.judgments().len());
    let mut judgments = trajectory.judgments().iter().peekable();
    while judgments.next_if_eq(&&0).is_some() {
        out.push(inf.snapshot());
    }
    for (t, a) in trajectory.actions().iter().enumerate() {
        inf.observe(&states[t], a)?;
        while judgments.next_if_eq(&&(t + 1)).is_some() {
            out.push(inf.snapshot());
        }
    }
    Ok(out)
}
