//! Boundedly rational agent model.
//!
//! A [`Policy`] holds a per-goal table of cost-to-go estimates. Each update
//! runs a budgeted local search around the current state (breadth-first or
//! A*-style), then backs values up through the searched region. Actions are
//! scored with a Boltzmann distribution over `Q(s,a) = 1 + V(s')`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::packed_codes::{HELD, TABLE};
use crate::world::{spellable, Action, LetterCounts, Packed, Word, WorldError, WorldState, MAX_BLOCKS};

pub const DEFAULT_BETA: f64 = 1.0;
pub const DEFAULT_BUDGET: usize = 100;
pub const DEFAULT_CADENCE: usize = 2;

/// Safety cap on backup sweeps; integer-valued estimates converge long before.
const MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("goal {0:?} cannot be spelled from the available blocks")]
    Unspellable(String),
    #[error("no legal actions in this state")]
    NoLegalActions,
    #[error("action {0} is not legal in this state")]
    IllegalAction(Action),
    #[error("invalid planner parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum SearchStrategy {
    #[default]
    #[serde(rename = "bfs")]
    Bfs,
    #[serde(rename = "astar")]
    AStar,
}

impl fmt::Display for SearchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchStrategy::Bfs => "bfs",
            SearchStrategy::AStar => "astar",
        })
    }
}

impl FromStr for SearchStrategy {
    type Err = PlannerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bfs" => Ok(SearchStrategy::Bfs),
            "astar" | "a*" => Ok(SearchStrategy::AStar),
            other => Err(PlannerError::InvalidParams(format!(
                "unknown search strategy {other:?} (expected bfs or astar)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Boltzmann inverse temperature.
    pub beta: f64,
    /// State expansions per search.
    pub budget: usize,
    /// Replan every `cadence` observed actions.
    pub cadence: usize,
    pub strategy: SearchStrategy,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            beta: DEFAULT_BETA,
            budget: DEFAULT_BUDGET,
            cadence: DEFAULT_CADENCE,
            strategy: SearchStrategy::Bfs,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(PlannerError::InvalidParams(format!(
                "beta must be finite and >= 0, got {}",
                self.beta
            )));
        }
        if self.cadence == 0 {
            return Err(PlannerError::InvalidParams("cadence must be >= 1".into()));
        }
        Ok(())
    }
}

/// Goal letters bottom-up, as 0..26 codes.
#[derive(Debug, Clone, Copy)]
struct GoalSpec {
    bottom_up: [u8; 8],
    len: usize,
}

impl GoalSpec {
    fn new(goal: &Word) -> Self {
        let mut bottom_up = [0u8; 8];
        for (i, &c) in goal.as_bytes().iter().rev().enumerate() {
            bottom_up[i] = c - b'a';
        }
        Self {
            bottom_up,
            len: goal.len(),
        }
    }
}

const NO_BLOCK: u8 = u8::MAX;

/// Towers listed bottom-up as letter codes, in fixed-size buffers.
struct TowerView {
    letters: [[u8; MAX_BLOCKS]; MAX_BLOCKS],
    lens: [usize; MAX_BLOCKS],
    count: usize,
    held: Option<u8>,
}

impl TowerView {
    fn new(p: &Packed, letters: &[u8]) -> Self {
        let n = p.num_blocks();
        let below = p.below_raw();
        let mut above = [NO_BLOCK; MAX_BLOCKS];
        let mut held = None;
        for b in 0..n {
            match below[b] {
                HELD => held = Some(letters[b] - b'a'),
                TABLE => {}
                under => above[under as usize] = b as u8,
            }
        }
        let mut view = TowerView {
            letters: [[0; MAX_BLOCKS]; MAX_BLOCKS],
            lens: [0; MAX_BLOCKS],
            count: 0,
            held,
        };
        for b in 0..n {
            if below[b] != TABLE {
                continue;
            }
            let t = view.count;
            let mut cur = b as u8;
            loop {
                view.letters[t][view.lens[t]] = letters[cur as usize] - b'a';
                view.lens[t] += 1;
                cur = above[cur as usize];
                if cur == NO_BLOCK {
                    break;
                }
            }
            view.count += 1;
        }
        view
    }

    fn tower(&self, t: usize) -> &[u8] {
        &self.letters[t][..self.lens[t]]
    }
}

/// Lower bound on the number of actions needed to reach `goal`.
///
/// Twice the number of blocks that must still be picked up and placed, plus
/// one for a block already in hand. The count is minimized over the choice
/// of which correctly-spelled tower bottom (if any) the word is built on;
/// for a fixed base, every block above it must move, every needed letter
/// not supplied by those blocks must be brought from elsewhere, and where
/// all copies of a letter are needed, everything stacked on those copies
/// must move too. Returns infinity if the goal cannot be spelled.
fn lower_bound(p: &Packed, letters: &[u8], goal: &GoalSpec) -> f64 {
    let view = TowerView::new(p, letters);
    let mut all = [0u8; 26];
    for t in 0..view.count {
        for &c in view.tower(t) {
            all[c as usize] += 1;
        }
    }
    let mut best = u32::MAX;
    for t in 0..view.count {
        let tower = view.tower(t);
        let settled = tower
            .iter()
            .zip(&goal.bottom_up[..goal.len])
            .take_while(|(a, b)| a == b)
            .count();
        if settled > 0 {
            if let Some(moved) = moves_with_base(&view, &all, goal, Some((t, settled))) {
                best = best.min(moved);
            }
        }
    }
    if let Some(moved) = moves_with_base(&view, &all, goal, None) {
        best = best.min(moved);
    }
    if best == u32::MAX {
        return f64::INFINITY;
    }
    2.0 * best as f64 + if view.held.is_some() { 1.0 } else { 0.0 }
}

fn moves_with_base(
    view: &TowerView,
    all: &[u8; 26],
    goal: &GoalSpec,
    base: Option<(usize, usize)>,
) -> Option<u32> {
    let settled = base.map_or(0, |b| b.1);
    let mut need = [0u8; 26];
    for &c in &goal.bottom_up[settled..goal.len] {
        need[c as usize] += 1;
    }
    if let Some(h) = view.held {
        need[h as usize] = need[h as usize].saturating_sub(1);
    }
    let mut avail = *all;
    let mut moved = 0u32;
    if let Some((t, k)) = base {
        let tower = view.tower(t);
        for &c in tower {
            avail[c as usize] -= 1;
        }
        for &c in &tower[k..] {
            moved += 1;
            need[c as usize] = need[c as usize].saturating_sub(1);
        }
    }
    if (0..26).any(|c| need[c] > avail[c]) {
        return None;
    }
    let forced: [bool; 26] = std::array::from_fn(|c| need[c] > 0 && need[c] == avail[c]);
    let mut covered = [0u8; 26];
    for u in 0..view.count {
        if base.is_some_and(|b| b.0 == u) {
            continue;
        }
        let tower = view.tower(u);
        let depth = tower
            .iter()
            .enumerate()
            .filter(|(_, &c)| forced[c as usize])
            .map(|(pos, _)| tower.len() - pos)
            .max()
            .unwrap_or(0);
        moved += depth as u32;
        for &c in &tower[tower.len() - depth..] {
            covered[c as usize] += 1;
        }
    }
    for c in 0..26 {
        if !forced[c] {
            moved += need[c].saturating_sub(covered[c]) as u32;
        }
    }
    Some(moved)
}

/// Admissible estimate of the number of actions from `state` to `goal`.
pub fn heuristic(state: &WorldState, goal: &Word) -> Result<f64, PlannerError> {
    if !spellable(goal, &state.letter_counts()) {
        return Err(PlannerError::Unspellable(goal.to_string()));
    }
    let letters: Vec<u8> = state.blocks().iter().map(|b| b.letter as u8).collect();
    Ok(lower_bound(&state.pack(), &letters, &GoalSpec::new(goal)))
}

/// Boltzmann distribution `P(a) ∝ exp(-β·Q(a))`, computed with the maximum
/// logit subtracted.
pub fn boltzmann(q: &[f64], beta: f64) -> Vec<f64> {
    let logits: Vec<f64> = q.iter().map(|&x| -beta * x).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![1.0 / q.len() as f64; q.len()];
    }
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn boltzmann_log_prob(q: &[f64], beta: f64, index: usize) -> f64 {
    let logits: Vec<f64> = q.iter().map(|&x| -beta * x).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return -(q.len() as f64).ln();
    }
    let lse = logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    logits[index] - max - lse
}

/// Per-goal value table refined by real-time heuristic search.
#[derive(Debug, Clone)]
pub struct Policy {
    goal: Word,
    spec: GoalSpec,
    letters: Arc<[u8]>,
    params: PlannerParams,
    values: FxHashMap<Packed, f64>,
    last_update_step: Option<usize>,
    expansions: u64,
}

struct LocalSpace {
    nodes: Vec<Packed>,
    ids: FxHashMap<Packed, u32>,
    /// Successor ids, filled in for expanded nodes only.
    succ: Vec<Option<Vec<u32>>>,
    depth: Vec<u32>,
}

impl LocalSpace {
    fn new(root: Packed) -> Self {
        let mut ids = FxHashMap::default();
        ids.insert(root, 0);
        Self {
            nodes: vec![root],
            ids,
            succ: vec![None],
            depth: vec![0],
        }
    }

    /// Returns (id, newly added).
    fn intern(&mut self, p: Packed, depth: u32) -> (u32, bool) {
        if let Some(&id) = self.ids.get(&p) {
            return (id, false);
        }
        let id = self.nodes.len() as u32;
        self.ids.insert(p, id);
        self.nodes.push(p);
        self.succ.push(None);
        self.depth.push(depth);
        (id, true)
    }

    fn expand(&mut self, id: u32) -> Vec<u32> {
        let node = self.nodes[id as usize];
        let d = self.depth[id as usize] + 1;
        let mut out = Vec::with_capacity(8);
        node.for_each_successor(|_, next| out.push(next));
        let ids: Vec<u32> = out.into_iter().map(|n| self.intern(n, d).0).collect();
        self.succ[id as usize] = Some(ids.clone());
        ids
    }
}

#[derive(PartialEq)]
struct OpenEntry {
    f: f64,
    g: u32,
    seq: u64,
    id: u32,
}

impl Eq for OpenEntry {}

impl Ord for OpenEntry {
    // Min-heap on f, preferring deeper nodes, then first-in.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(self.g.cmp(&other.g))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Policy {
    pub fn new(goal: Word, letters: Arc<[u8]>, params: PlannerParams) -> Result<Self, PlannerError> {
        params.validate()?;
        if !spellable(&goal, &LetterCounts::from_bytes(&letters)) {
            return Err(PlannerError::Unspellable(goal.to_string()));
        }
        Ok(Self {
            goal,
            spec: GoalSpec::new(&goal),
            letters,
            params,
            values: FxHashMap::default(),
            last_update_step: None,
            expansions: 0,
        })
    }

    pub fn for_state(goal: Word, state: &WorldState, params: PlannerParams) -> Result<Self, PlannerError> {
        Self::new(goal, state.letter_bytes().clone(), params)
    }

    pub fn goal(&self) -> &Word {
        &self.goal
    }

    pub fn params(&self) -> &PlannerParams {
        &self.params
    }

    pub fn last_update_step(&self) -> Option<usize> {
        self.last_update_step
    }

    pub fn table_len(&self) -> usize {
        self.values.len()
    }

    /// Total states expanded by all searches so far.
    pub fn expansions(&self) -> u64 {
        self.expansions
    }

    pub fn is_goal(&self, s: &Packed) -> bool {
        s.goal_satisfied(&self.letters, &self.goal.as_bytes()[..self.spec.len])
    }

    pub fn heuristic(&self, s: &Packed) -> f64 {
        if self.is_goal(s) {
            return 0.0;
        }
        lower_bound(s, &self.letters, &self.spec)
    }

    /// Current cost-to-go estimate: the table entry, else the heuristic.
    pub fn value(&self, s: &Packed) -> f64 {
        match self.values.get(s) {
            Some(&v) => v,
            None => self.heuristic(s),
        }
    }

    pub fn value_of(&self, state: &WorldState) -> f64 {
        self.value(&state.pack())
    }

    /// Runs one budgeted search around `s` and backs values up through the
    /// searched region. Stored values never decrease.
    pub fn update(&mut self, s: &Packed) {
        if self.params.budget == 0 || self.is_goal(s) {
            return;
        }
        let mut space = LocalSpace::new(*s);
        let expanded = match self.params.strategy {
            SearchStrategy::Bfs => self.search_bfs(&mut space),
            SearchStrategy::AStar => self.search_astar(&mut space),
        };
        self.expansions += expanded as u64;
        self.backup(&space);
    }

    /// Update at step `step` of a trajectory, recording when it happened.
    pub fn update_at(&mut self, s: &Packed, step: usize) {
        self.update(s);
        self.last_update_step = Some(step);
    }

    fn search_bfs(&self, space: &mut LocalSpace) -> usize {
        let mut queue = VecDeque::from([0u32]);
        let mut expanded = 0;
        while expanded < self.params.budget {
            let Some(id) = queue.pop_front() else { break };
            if self.is_goal(&space.nodes[id as usize]) {
                continue;
            }
            let before = space.nodes.len() as u32;
            space.expand(id);
            expanded += 1;
            queue.extend(before..space.nodes.len() as u32);
        }
        expanded
    }

    fn search_astar(&self, space: &mut LocalSpace) -> usize {
        let mut g: Vec<u32> = vec![0];
        let mut h: Vec<f64> = vec![0.0];
        let mut open = BinaryHeap::new();
        let mut seq = 0u64;
        let mut expanded = 0;
        // The current state is always expanded; its neighbours seed the search.
        let mut to_expand = Some(0u32);
        while let Some(id) = to_expand.take() {
            let succ = space.expand(id);
            expanded += 1;
            g.resize(space.nodes.len(), u32::MAX);
            while h.len() < space.nodes.len() {
                let v = self.value(&space.nodes[h.len()]);
                h.push(v);
            }
            let ng = g[id as usize] + 1;
            for s in succ {
                if ng < g[s as usize] {
                    g[s as usize] = ng;
                    space.depth[s as usize] = ng;
                    seq += 1;
                    open.push(OpenEntry {
                        f: ng as f64 + h[s as usize],
                        g: ng,
                        seq,
                        id: s,
                    });
                }
            }
            if expanded >= self.params.budget {
                break;
            }
            while let Some(entry) = open.pop() {
                if entry.g != g[entry.id as usize] {
                    continue; // stale entry
                }
                if self.is_goal(&space.nodes[entry.id as usize]) {
                    return expanded;
                }
                to_expand = Some(entry.id);
                break;
            }
        }
        expanded
    }

    fn backup(&mut self, space: &LocalSpace) {
        let mut vals: Vec<f64> = space.nodes.iter().map(|n| self.value(n)).collect();
        let mut interior: Vec<u32> = (0..space.nodes.len() as u32)
            .filter(|&i| space.succ[i as usize].is_some())
            .collect();
        interior.sort_by(|a, b| space.depth[*b as usize].cmp(&space.depth[*a as usize]).then(a.cmp(b)));
        for _ in 0..MAX_SWEEPS {
            let mut changed = false;
            for &i in &interior {
                let succ = space.succ[i as usize].as_ref().expect("interior");
                let best = succ
                    .iter()
                    .map(|&j| 1.0 + vals[j as usize])
                    .fold(f64::INFINITY, f64::min);
                if best > vals[i as usize] {
                    vals[i as usize] = best;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for &i in &interior {
            self.values.insert(space.nodes[i as usize], vals[i as usize]);
        }
    }

    /// `Q(s,a) = 1 + V(apply(s,a))` for every legal action, in canonical order.
    pub fn q_values(&self, s: &Packed) -> Vec<(Action, f64)> {
        let mut out = Vec::with_capacity(8);
        s.for_each_successor(|a, next| out.push((a, 1.0 + self.value(&next))));
        out
    }

    pub fn action_dist(&self, s: &Packed, beta: f64) -> Result<Vec<(Action, f64)>, PlannerError> {
        let q = self.q_values(s);
        if q.is_empty() {
            return Err(PlannerError::NoLegalActions);
        }
        let qs: Vec<f64> = q.iter().map(|x| x.1).collect();
        Ok(q.into_iter().map(|x| x.0).zip(boltzmann(&qs, beta)).collect())
    }

    pub fn action_log_prob(&self, s: &Packed, action: &Action, beta: f64) -> Result<f64, PlannerError> {
        let q = self.q_values(s);
        let index = q
            .iter()
            .position(|x| x.0 == *action)
            .ok_or(PlannerError::IllegalAction(*action))?;
        let qs: Vec<f64> = q.iter().map(|x| x.1).collect();
        Ok(boltzmann_log_prob(&qs, beta, index))
    }
}

/// One budgeted search and backup around `state`.
pub fn rths_update(policy: &mut Policy, state: &WorldState) {
    policy.update(&state.pack());
}

pub fn action_dist(policy: &Policy, state: &WorldState, beta: f64) -> Result<Vec<(Action, f64)>, PlannerError> {
    policy.action_dist(&state.pack(), beta)
}

/// Incrementally accumulates the log-likelihood of a trajectory under one
/// goal, replanning on the configured cadence.
#[derive(Debug, Clone)]
pub struct GoalTracker {
    policy: Policy,
    loglik: f64,
    steps: usize,
}

impl GoalTracker {
    pub fn new(policy: Policy) -> Self {
        Self {
            policy,
            loglik: 0.0,
            steps: 0,
        }
    }

    /// Observes `action` taken from `prev`, returning its log probability.
    pub fn advance(&mut self, prev: &Packed, action: &Action) -> Result<f64, PlannerError> {
        if self.steps.is_multiple_of(self.policy.params.cadence) {
            self.policy.update_at(prev, self.steps);
        }
        let lp = self
            .policy
            .action_log_prob(prev, action, self.policy.params.beta)?;
        self.loglik += lp;
        self.steps += 1;
        Ok(lp)
    }

    pub fn loglik(&self) -> f64 {
        self.loglik
    }

    /// Number of actions observed so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn goal(&self) -> &Word {
        &self.policy.goal
    }

    pub fn into_policy(self) -> Policy {
        self.policy
    }
}

/// Log probability of an action sequence under `goal`, and the final policy.
pub fn trajectory_loglik(
    goal: Word,
    start: &WorldState,
    actions: &[Action],
    params: PlannerParams,
) -> Result<(f64, Policy), PlannerError> {
    let mut tracker = GoalTracker::new(Policy::for_state(goal, start, params)?);
    let mut state = start.clone();
    for a in actions {
        tracker.advance(&state.pack(), a)?;
        state = state.apply(a)?;
    }
    Ok((tracker.loglik, tracker.policy))
}
