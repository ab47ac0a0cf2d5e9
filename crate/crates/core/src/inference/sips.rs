//! Sequential Monte Carlo over goals with bottom-up rejuvenation.
//!
//! Each observed action: draw `N` proposals at the new state, bring every
//! tracked and newly proposed goal's likelihood up to date, weight new goals
//! by prior × likelihood / proposal weight, resample the merged set back to
//! `N` and coalesce duplicates.
//!
//! Weights are kept on an absolute (unnormalized) scale so that particles
//! carried over from earlier steps and freshly proposed ones are directly
//! comparable. The `N` proposals of a step form one importance-sampling
//! estimate, so each carries a `1/N` factor. A proposal of a goal that is
//! already tracked is dropped: the carried particle already estimates that
//! goal's mass, and adding the new estimate would count it twice.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::resample::systematic_resample;
use super::{log_add_exp, log_sum_exp, InferenceError, InferenceModel, PosteriorSnapshot};
use crate::planner::{GoalTracker, Policy};
use crate::trajectory::Trajectory;
use crate::world::{Action, Packed, Word, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SipsConfig {
    pub n_particles: usize,
    pub seed: u64,
    #[serde(default)]
    pub weight: ProposalDensity,
}

impl SipsConfig {
    pub fn new(n_particles: usize, seed: u64) -> Self {
        Self {
            n_particles,
            seed,
            weight: ProposalDensity::default(),
        }
    }
}

/// Which proposal density goes in the importance-weight denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalDensity {
    /// The completion probability given the tower that was chosen. Cheap,
    /// but only unbiased when every selectable tower can produce the goal.
    #[default]
    Completion,
    /// The exact marginal over all towers and branches, by enumeration.
    Marginal,
}

impl std::fmt::Display for ProposalDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Completion => "completion",
            Self::Marginal => "marginal",
        })
    }
}

impl std::str::FromStr for ProposalDensity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "completion" => Ok(Self::Completion),
            "marginal" => Ok(Self::Marginal),
            other => Err(format!("unknown proposal density {other:?} (expected completion or marginal)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub goal: Word,
    pub log_weight: f64,
}

/// Evaluation bookkeeping, split by cause.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationLedger {
    /// One per tracked particle per step.
    pub particle_updates: u64,
    /// Historical steps simulated to bring newly proposed goals up to date.
    pub catch_up_steps: u64,
}

impl EvaluationLedger {
    pub fn total(&self) -> u64 {
        self.particle_updates + self.catch_up_steps
    }
}

#[derive(Debug, Clone)]
pub struct ParticleCollection {
    model: InferenceModel,
    config: SipsConfig,
    particles: Vec<Particle>,
    /// Likelihood trackers for every goal seen so far, including goals that
    /// were resampled away (they resume from where they stopped).
    cache: FxHashMap<Word, GoalTracker>,
    world: WorldState,
    states: Vec<Packed>,
    actions: Vec<Action>,
    ledger: EvaluationLedger,
    degenerate: bool,
}

impl ParticleCollection {
    pub fn new(model: &InferenceModel, initial: &WorldState, config: SipsConfig) -> Result<Self, InferenceError> {
        if config.n_particles == 0 {
            return Err(InferenceError::NoParticles);
        }
        model.check_state(initial)?;
        Ok(Self {
            model: model.clone(),
            config,
            particles: Vec::new(),
            cache: FxHashMap::default(),
            world: initial.clone(),
            states: vec![initial.pack()],
            actions: Vec::new(),
            ledger: EvaluationLedger::default(),
            degenerate: false,
        })
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn step(&self) -> usize {
        self.actions.len()
    }

    pub fn state(&self) -> &WorldState {
        &self.world
    }

    pub fn ledger(&self) -> EvaluationLedger {
        self.ledger
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Particle weights normalized to sum to one.
    pub fn normalized(&self) -> Vec<(Word, f64)> {
        let lse = log_sum_exp(self.particles.iter().map(|p| p.log_weight));
        self.particles
            .iter()
            .map(|p| (p.goal, (p.log_weight - lse).exp()))
            .collect()
    }

    pub fn snapshot(&self) -> PosteriorSnapshot {
        PosteriorSnapshot::from_log_weights(
            self.step(),
            self.particles.iter().map(|p| (p.goal, p.log_weight)),
            self.particles.len(),
            self.ledger.total(),
        )
    }

    /// Observes one action: propose, reweight, resample, coalesce.
    pub fn observe(&mut self, action: &Action) -> Result<(), InferenceError> {
        let next = self.world.apply(action).map_err(crate::planner::PlannerError::from)?;
        let t = self.actions.len() + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(t as u64);

        let n = self.config.n_particles;
        let proposals: Vec<(Word, f64)> = {
            let plan = self.model.proposal.plan(&next, Some(action));
            let draws: Vec<(Word, f64)> = (0..n)
                .filter_map(|_| plan.sample(&mut rng).ok())
                .map(|p| (p.word, p.weight))
                .collect();
            match self.config.weight {
                ProposalDensity::Completion => draws,
                ProposalDensity::Marginal => {
                    let marginal: FxHashMap<Word, f64> = plan.marginal().into_iter().collect();
                    draws.into_iter().map(|(g, _)| (g, marginal[&g])).collect()
                }
            }
        };

        self.world = next;
        self.states.push(self.world.pack());
        self.actions.push(*action);

        // Bring every goal that matters this step up to step t.
        let mut goals: Vec<Word> = self.particles.iter().map(|p| p.goal).collect();
        for (w, _) in &proposals {
            if !goals.contains(w) {
                goals.push(*w);
            }
        }
        let mut work: Vec<(Word, GoalTracker, f64, usize)> = Vec::with_capacity(goals.len());
        for g in goals {
            let tracker = match self.cache.remove(&g) {
                Some(tr) => tr,
                None => GoalTracker::new(Policy::for_state(g, &self.world, self.model.planner)?),
            };
            let before = (tracker.loglik(), tracker.steps());
            work.push((g, tracker, before.0, before.1));
        }
        let states = &self.states;
        let actions = &self.actions;
        work.par_iter_mut().try_for_each(|(_, tracker, _, _)| {
            while tracker.steps() < t {
                let k = tracker.steps();
                tracker.advance(&states[k], &actions[k])?;
            }
            Ok::<_, crate::planner::PlannerError>(())
        })?;

        let mut step_loglik: FxHashMap<Word, f64> = FxHashMap::default();
        let mut total_loglik: FxHashMap<Word, f64> = FxHashMap::default();
        for (g, tracker, ll_before, steps_before) in work {
            let simulated = (t - steps_before) as u64;
            if self.particles.iter().any(|p| p.goal == g) {
                self.ledger.particle_updates += simulated;
            } else {
                self.ledger.catch_up_steps += simulated;
            }
            step_loglik.insert(g, tracker.loglik() - ll_before);
            total_loglik.insert(g, tracker.loglik());
            self.cache.insert(g, tracker);
        }

        for p in &mut self.particles {
            p.log_weight += step_loglik[&p.goal];
        }
        let log_n = (n as f64).ln();
        let carried = self.particles.len();
        for (g, w) in proposals {
            if self.particles[..carried].iter().any(|p| p.goal == g) {
                continue;
            }
            let lw = self.model.prior.log_prob(&g) + total_loglik[&g] - w.ln() - log_n;
            match self.particles[carried..].iter_mut().find(|p| p.goal == g) {
                Some(p) => p.log_weight = log_add_exp(p.log_weight, lw),
                None => self.particles.push(Particle { goal: g, log_weight: lw }),
            }
        }

        self.resample(&mut rng);
        Ok(())
    }

    fn resample(&mut self, rng: &mut ChaCha8Rng) {
        let n = self.config.n_particles;
        let log_weights: Vec<f64> = self.particles.iter().map(|p| p.log_weight).collect();
        let Some(indices) = systematic_resample(&log_weights, n, rng) else {
            self.degenerate = true;
            return;
        };
        self.degenerate = false;
        let total = log_sum_exp(log_weights);
        let mut counts: Vec<(Word, usize)> = Vec::new();
        for i in indices {
            let g = self.particles[i].goal;
            match counts.iter_mut().find(|c| c.0 == g) {
                Some(c) => c.1 += 1,
                None => counts.push((g, 1)),
            }
        }
        self.particles = coalesce_counts(&counts, total, n);
    }
}

/// Each of the `n` resampled copies carries `total / n`; identical goals are
/// merged by summing their copies.
fn coalesce_counts(counts: &[(Word, usize)], log_total: f64, n: usize) -> Vec<Particle> {
    counts
        .iter()
        .map(|&(goal, c)| Particle {
            goal,
            log_weight: log_total + (c as f64 / n as f64).ln(),
        })
        .collect()
}

/// Merges particles with identical goals by summing their weights.
pub fn coalesce(particles: &[Particle]) -> Vec<Particle> {
    let mut out: Vec<Particle> = Vec::new();
    for p in particles {
        match out.iter_mut().find(|q| q.goal == p.goal) {
            Some(q) => q.log_weight = log_add_exp(q.log_weight, p.log_weight),
            None => out.push(*p),
        }
    }
    out
}

/// Runs the filter over `trajectory`, returning a snapshot at each judgment
/// point.
pub fn sips_run(
    model: &InferenceModel,
    trajectory: &Trajectory,
    config: SipsConfig,
) -> Result<Vec<PosteriorSnapshot>, InferenceError> {
    let mut pc = ParticleCollection::new(model, trajectory.initial(), config)?;
    let mut out = Vec::with_capacity(trajectory.judgments().len());
    let mut judgments = trajectory.judgments().iter().peekable();
    while judgments.next_if_eq(&&0).is_some() {
        out.push(pc.snapshot());
    }
    for (t, a) in trajectory.actions().iter().enumerate() {
        pc.observe(a)?;
        while judgments.next_if_eq(&&(t + 1)).is_some() {
            out.push(pc.snapshot());
        }
    }
    Ok(out)
}
