//! The Block Words domain.
//!
//! A [`WorldState`] is a set of towers of lettered blocks plus an optional
//! held block. Towers are listed top-to-bottom and a tower spells its word
//! from the top block down, so stacking a block onto a tower prepends a
//! letter to its reading. Transitions are deterministic.
//!
//! Besides the presentation-friendly [`WorldState`], the module provides
//! [`Packed`], a fixed-size `Copy` encoding (one "what am I resting on" byte
//! per block) used as the key of planner value tables and for allocation-free
//! successor generation.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on the number of blocks in a world.
pub const MAX_BLOCKS: usize = 26;

pub const MIN_WORD_LEN: usize = 3;
pub const MAX_WORD_LEN: usize = 8;

pub type BlockId = u8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("illegal action {action}: {reason}")]
    IllegalAction { action: Action, reason: String },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid block letter {0:?}: expected a lowercase ASCII letter")]
    InvalidLetter(char),
    #[error("invalid word {word:?}: {reason}")]
    InvalidWord { word: String, reason: &'static str },
    #[error("tower index {index} out of range ({count} towers)")]
    TowerIndex { index: usize, count: usize },
}

/// A lettered block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub id: BlockId,
    pub letter: char,
}

impl Block {
    pub fn new(id: BlockId, letter: char) -> Result<Self, WorldError> {
        if !letter.is_ascii_lowercase() {
            return Err(WorldError::InvalidLetter(letter));
        }
        Ok(Self { id, letter })
    }
}

/// A goal word: 3 to 8 lowercase ASCII letters, stored inline.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    bytes: [u8; MAX_WORD_LEN],
    len: u8,
}

impl Word {
    pub fn new(s: &str) -> Result<Self, WorldError> {
        let invalid = |reason| WorldError::InvalidWord {
            word: s.to_string(),
            reason,
        };
        if !(MIN_WORD_LEN..=MAX_WORD_LEN).contains(&s.len()) {
            return Err(invalid("length must be between 3 and 8"));
        }
        if !s.bytes().all(|b| b.is_ascii_lowercase()) {
            return Err(invalid("only lowercase letters a-z are allowed"));
        }
        let mut bytes = [0u8; MAX_WORD_LEN];
        bytes[..s.len()].copy_from_slice(s.as_bytes());
        Ok(Self {
            bytes,
            len: s.len() as u8,
        })
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes[..self.len as usize]
    }

    pub fn as_str(&self) -> &str {
        // Constructed from validated ASCII.
        std::str::from_utf8(self.as_bytes()).expect("word bytes are ASCII")
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn letters(&self) -> LetterCounts {
        LetterCounts::from_bytes(self.as_bytes())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({:?})", self.as_str())
    }
}

impl FromStr for Word {
    type Err = WorldError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Word::new(s)
    }
}

impl TryFrom<String> for Word {
    type Error = WorldError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Word::new(&s)
    }
}

impl From<Word> for String {
    fn from(w: Word) -> String {
        w.as_str().to_string()
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Word::new(&s).map_err(serde::de::Error::custom)
    }
}

/// Multiset of letters a-z.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LetterCounts([u8; 26]);

impl LetterCounts {
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut c = [0u8; 26];
        for &b in bytes {
            debug_assert!(b.is_ascii_lowercase());
            c[(b - b'a') as usize] += 1;
        }
        Self(c)
    }

    pub fn get(&self, letter: u8) -> u8 {
        self.0[(letter - b'a') as usize]
    }

    pub fn add(&mut self, letter: u8) {
        self.0[(letter - b'a') as usize] += 1;
    }

    /// Removes one copy of `letter`; returns false if none was present.
    pub fn take(&mut self, letter: u8) -> bool {
        let slot = &mut self.0[(letter - b'a') as usize];
        if *slot == 0 {
            return false;
        }
        *slot -= 1;
        true
    }

    /// Multiset containment: every letter of `other` is available here.
    pub fn contains(&self, other: &LetterCounts) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a >= b)
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    /// Number of distinct letters present.
    pub fn distinct(&self) -> usize {
        self.0.iter().filter(|&&c| c > 0).count()
    }

    pub fn counts(&self) -> &[u8; 26] {
        &self.0
    }
}

impl fmt::Debug for LetterCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        for (i, &c) in self.0.iter().enumerate() {
            for _ in 0..c {
                s.push((b'a' + i as u8) as char);
            }
        }
        write!(f, "LetterCounts({s:?})")
    }
}

/// True iff the goal's letters are contained in the block-letter multiset.
pub fn spellable(goal: &Word, blocks: &LetterCounts) -> bool {
    blocks.contains(&goal.letters())
}

/// Block-moving actions. The derived ordering (kind, then subject, then
/// target) is the canonical action ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Action {
    PickUp { subject: BlockId },
    PutDown { subject: BlockId },
    Stack { subject: BlockId, target: BlockId },
    Unstack { subject: BlockId, target: BlockId },
}

impl Action {
    pub fn subject(&self) -> BlockId {
        match *self {
            Action::PickUp { subject }
            | Action::PutDown { subject }
            | Action::Stack { subject, .. }
            | Action::Unstack { subject, .. } => subject,
        }
    }

    pub fn target(&self) -> Option<BlockId> {
        match *self {
            Action::Stack { target, .. } | Action::Unstack { target, .. } => Some(target),
            _ => None,
        }
    }

    pub fn is_stack(&self) -> bool {
        matches!(self, Action::Stack { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Action::PickUp { .. } => "pick-up",
            Action::PutDown { .. } => "put-down",
            Action::Stack { .. } => "stack",
            Action::Unstack { .. } => "unstack",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.target() {
            Some(t) => write!(f, "{}({}, {})", self.kind_name(), self.subject(), t),
            None => write!(f, "{}({})", self.kind_name(), self.subject()),
        }
    }
}

/// A Block Words state.
///
/// Towers are stored top-to-bottom and kept in a canonical order (sorted by
/// the id of their bottom block), so two states with the same physical
/// configuration compare equal.
#[derive(Clone, Debug)]
pub struct WorldState {
    letters: Arc<[u8]>,
    towers: Vec<Vec<BlockId>>,
    held: Option<BlockId>,
}

impl PartialEq for WorldState {
    fn eq(&self, other: &Self) -> bool {
        self.held == other.held && self.towers == other.towers && self.letters == other.letters
    }
}

impl Eq for WorldState {}

impl Hash for WorldState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.towers.hash(state);
        self.held.hash(state);
    }
}

impl WorldState {
    /// Builds a state from blocks (ids must be `0..n` in order), towers
    /// listed top-to-bottom, and an optional held block.
    pub fn new(
        blocks: &[Block],
        towers: Vec<Vec<BlockId>>,
        held: Option<BlockId>,
    ) -> Result<Self, WorldError> {
        if blocks.len() > MAX_BLOCKS {
            return Err(WorldError::InvalidState(format!(
                "{} blocks exceeds the maximum of {MAX_BLOCKS}",
                blocks.len()
            )));
        }
        let mut letters = Vec::with_capacity(blocks.len());
        for (i, b) in blocks.iter().enumerate() {
            if b.id as usize != i {
                return Err(WorldError::InvalidState(format!(
                    "block ids must be 0..{} in order, found id {} at position {i}",
                    blocks.len(),
                    b.id
                )));
            }
            if !b.letter.is_ascii_lowercase() {
                return Err(WorldError::InvalidLetter(b.letter));
            }
            letters.push(b.letter as u8);
        }
        Self::from_parts(letters.into(), towers, held)
    }

    /// Every block alone on the table, ids assigned in letter order.
    pub fn on_table(letters: &str) -> Result<Self, WorldError> {
        let blocks = blocks_from_letters(letters)?;
        let towers = (0..blocks.len() as BlockId).map(|b| vec![b]).collect();
        Self::new(&blocks, towers, None)
    }

    pub(crate) fn from_parts(
        letters: Arc<[u8]>,
        mut towers: Vec<Vec<BlockId>>,
        held: Option<BlockId>,
    ) -> Result<Self, WorldError> {
        let n = letters.len();
        let mut seen = vec![false; n];
        let mut mark = |b: BlockId| -> Result<(), WorldError> {
            let slot = seen.get_mut(b as usize).ok_or_else(|| {
                WorldError::InvalidState(format!("unknown block id {b} (have {n} blocks)"))
            })?;
            if *slot {
                return Err(WorldError::InvalidState(format!(
                    "block {b} appears more than once"
                )));
            }
            *slot = true;
            Ok(())
        };
        for tower in &towers {
            if tower.is_empty() {
                return Err(WorldError::InvalidState("empty tower".into()));
            }
            for &b in tower {
                mark(b)?;
            }
        }
        if let Some(h) = held {
            mark(h)?;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(WorldError::InvalidState(format!(
                "block {missing} is neither in a tower nor held"
            )));
        }
        sort_towers(&mut towers);
        Ok(Self {
            letters,
            towers,
            held,
        })
    }

    pub fn towers(&self) -> &[Vec<BlockId>] {
        &self.towers
    }

    pub fn held(&self) -> Option<BlockId> {
        self.held
    }

    pub fn num_blocks(&self) -> usize {
        self.letters.len()
    }

    pub fn letter(&self, block: BlockId) -> char {
        self.letters[block as usize] as char
    }

    pub(crate) fn letter_bytes(&self) -> &Arc<[u8]> {
        &self.letters
    }

    pub fn blocks(&self) -> Vec<Block> {
        self.letters
            .iter()
            .enumerate()
            .map(|(i, &l)| Block {
                id: i as BlockId,
                letter: l as char,
            })
            .collect()
    }

    /// Multiset of all block letters, held block included.
    pub fn letter_counts(&self) -> LetterCounts {
        LetterCounts::from_bytes(&self.letters)
    }

    /// Index of the tower containing `block`, if it is not held.
    pub fn tower_of(&self, block: BlockId) -> Option<usize> {
        self.towers.iter().position(|t| t.contains(&block))
    }

    /// The block directly beneath `block`, if any.
    pub fn below(&self, block: BlockId) -> Option<BlockId> {
        let t = &self.towers[self.tower_of(block)?];
        let i = t.iter().position(|&b| b == block)?;
        t.get(i + 1).copied()
    }

    /// Letters of a tower read top-to-bottom.
    pub fn tower_reading(&self, index: usize) -> Result<String, WorldError> {
        let tower = self.towers.get(index).ok_or(WorldError::TowerIndex {
            index,
            count: self.towers.len(),
        })?;
        Ok(self.reading_of(tower))
    }

    pub fn reading_of(&self, tower: &[BlockId]) -> String {
        tower.iter().map(|&b| self.letter(b)).collect()
    }

    /// All legal actions, sorted by kind then block ids.
    pub fn legal_actions(&self) -> Vec<Action> {
        let mut out = Vec::new();
        match self.held {
            None => {
                for t in &self.towers {
                    let top = t[0];
                    if t.len() == 1 {
                        out.push(Action::PickUp { subject: top });
                    } else {
                        out.push(Action::Unstack {
                            subject: top,
                            target: t[1],
                        });
                    }
                }
            }
            Some(h) => {
                out.push(Action::PutDown { subject: h });
                for t in &self.towers {
                    out.push(Action::Stack {
                        subject: h,
                        target: t[0],
                    });
                }
            }
        }
        out.sort();
        out
    }

    /// Checks the preconditions of `action`.
    pub fn check(&self, action: &Action) -> Result<(), WorldError> {
        let illegal = |reason: String| WorldError::IllegalAction {
            action: *action,
            reason,
        };
        let n = self.num_blocks();
        let subject = action.subject();
        if subject as usize >= n || action.target().is_some_and(|t| t as usize >= n) {
            return Err(illegal("unknown block id".into()));
        }
        match *action {
            Action::PickUp { subject } | Action::Unstack { subject, .. } => {
                if let Some(h) = self.held {
                    return Err(illegal(format!("hand is not empty (holding {h})")));
                }
                let t = &self.towers[self.tower_of(subject).expect("block not held")];
                if t[0] != subject {
                    return Err(illegal(format!("block {subject} is not clear")));
                }
                match *action {
                    Action::PickUp { .. } if t.len() != 1 => Err(illegal(format!(
                        "block {subject} is not on the table (it rests on {})",
                        t[1]
                    ))),
                    Action::Unstack { target, .. } if t.get(1) != Some(&target) => {
                        Err(illegal(format!("block {subject} is not on block {target}")))
                    }
                    _ => Ok(()),
                }
            }
            Action::PutDown { subject } | Action::Stack { subject, .. } => {
                if self.held != Some(subject) {
                    return Err(illegal(format!("block {subject} is not held")));
                }
                if let Action::Stack { target, .. } = *action {
                    if target == subject {
                        return Err(illegal("cannot stack a block on itself".into()));
                    }
                    let clear = self.towers.iter().any(|t| t[0] == target);
                    if !clear {
                        return Err(illegal(format!("block {target} is not clear")));
                    }
                }
                Ok(())
            }
        }
    }

    /// Successor state after a legal action.
    pub fn apply(&self, action: &Action) -> Result<WorldState, WorldError> {
        self.check(action)?;
        let mut towers = self.towers.clone();
        let held = match *action {
            Action::PickUp { subject } | Action::Unstack { subject, .. } => {
                let i = towers
                    .iter()
                    .position(|t| t[0] == subject)
                    .expect("checked");
                towers[i].remove(0);
                if towers[i].is_empty() {
                    towers.remove(i);
                }
                Some(subject)
            }
            Action::PutDown { subject } => {
                towers.push(vec![subject]);
                sort_towers(&mut towers);
                None
            }
            Action::Stack { subject, target } => {
                let i = towers
                    .iter()
                    .position(|t| t[0] == target)
                    .expect("checked");
                towers[i].insert(0, subject);
                None
            }
        };
        Ok(WorldState {
            letters: Arc::clone(&self.letters),
            towers,
            held,
        })
    }

    /// True iff some tower reads exactly `goal` and nothing is held.
    pub fn goal_satisfied(&self, goal: &Word) -> bool {
        self.held.is_none()
            && self.towers.iter().any(|t| {
                t.len() == goal.len()
                    && t.iter()
                        .zip(goal.as_bytes())
                        .all(|(&b, &g)| self.letters[b as usize] == g)
            })
    }

    pub fn pack(&self) -> Packed {
        let mut below = [UNUSED; MAX_BLOCKS];
        for t in &self.towers {
            for w in t.windows(2) {
                below[w[0] as usize] = w[1];
            }
            below[*t.last().expect("non-empty") as usize] = TABLE;
        }
        if let Some(h) = self.held {
            below[h as usize] = HELD;
        }
        Packed {
            below,
            n: self.letters.len() as u8,
        }
    }

    /// Human-readable form, e.g. `[i n k] [p] hand: t`.
    pub fn describe(&self) -> String {
        let mut s = self
            .towers
            .iter()
            .map(|t| {
                let inner: Vec<String> = t.iter().map(|&b| self.letter(b).to_string()).collect();
                format!("[{}]", inner.join(" "))
            })
            .collect::<Vec<_>>()
            .join(" ");
        if let Some(h) = self.held {
            s.push_str(&format!(" hand: {}", self.letter(h)));
        }
        s
    }

    /// Renders an action with block letters, e.g. `stack(i, n)`.
    pub fn describe_action(&self, action: &Action) -> String {
        let l = |b: BlockId| {
            self.letters
                .get(b as usize)
                .map(|&c| c as char)
                .unwrap_or('?')
        };
        match action.target() {
            Some(t) => format!("{}({}, {})", action.kind_name(), l(action.subject()), l(t)),
            None => format!("{}({})", action.kind_name(), l(action.subject())),
        }
    }
}

/// Blocks with ids `0..n` assigned to the letters in order.
pub fn blocks_from_letters(letters: &str) -> Result<Vec<Block>, WorldError> {
    if letters.len() > MAX_BLOCKS {
        return Err(WorldError::InvalidState(format!(
            "{} blocks exceeds the maximum of {MAX_BLOCKS}",
            letters.len()
        )));
    }
    letters
        .chars()
        .enumerate()
        .map(|(i, c)| Block::new(i as BlockId, c))
        .collect()
}

fn sort_towers(towers: &mut [Vec<BlockId>]) {
    towers.sort_by_key(|t| *t.last().expect("non-empty tower"));
}

const TABLE: u8 = 0xFE;
const HELD: u8 = 0xFD;
const UNUSED: u8 = 0xFF;

/// Compact canonical encoding of a state: for each block, the block it rests
/// on (or table / hand). Equality and hashing are on this array only.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Packed {
    below: [u8; MAX_BLOCKS],
    n: u8,
}

impl fmt::Debug for Packed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.below[..self.n as usize].iter().map(|&b| match b {
                TABLE => "T".to_string(),
                HELD => "H".to_string(),
                x => x.to_string(),
            }))
            .finish()
    }
}

impl Packed {
    pub fn num_blocks(&self) -> usize {
        self.n as usize
    }

    pub fn held(&self) -> Option<BlockId> {
        (0..self.n).find(|&b| self.below[b as usize] == HELD)
    }

    /// For each block, the block resting on it (or `None`).
    fn above(&self) -> [u8; MAX_BLOCKS] {
        let mut above = [UNUSED; MAX_BLOCKS];
        for b in 0..self.n as usize {
            let under = self.below[b];
            if (under as usize) < MAX_BLOCKS {
                above[under as usize] = b as u8;
            }
        }
        above
    }

    /// Towers listed bottom-to-top, in order of bottom block id.
    pub fn towers_bottom_up(&self) -> Vec<Vec<BlockId>> {
        let above = self.above();
        let mut out = Vec::new();
        for b in 0..self.n {
            if self.below[b as usize] == TABLE {
                let mut t = vec![b];
                let mut cur = b;
                while above[cur as usize] != UNUSED {
                    cur = above[cur as usize];
                    t.push(cur);
                }
                out.push(t);
            }
        }
        out
    }

    /// Calls `f(action, successor)` for every legal action, in canonical
    /// action order.
    pub fn for_each_successor(&self, mut f: impl FnMut(Action, Packed)) {
        let n = self.n as usize;
        let mut covered = [false; MAX_BLOCKS];
        let mut held = None;
        for b in 0..n {
            let under = self.below[b];
            if under == HELD {
                held = Some(b as u8);
            } else if (under as usize) < MAX_BLOCKS {
                covered[under as usize] = true;
            }
        }
        let clear = |b: usize| !covered[b] && self.below[b] != HELD;
        match held {
            None => {
                for b in 0..n {
                    if clear(b) && self.below[b] == TABLE {
                        let mut next = *self;
                        next.below[b] = HELD;
                        f(Action::PickUp { subject: b as u8 }, next);
                    }
                }
                for b in 0..n {
                    if clear(b) && self.below[b] != TABLE {
                        let mut next = *self;
                        let target = self.below[b];
                        next.below[b] = HELD;
                        f(
                            Action::Unstack {
                                subject: b as u8,
                                target,
                            },
                            next,
                        );
                    }
                }
            }
            Some(h) => {
                let mut next = *self;
                next.below[h as usize] = TABLE;
                f(Action::PutDown { subject: h }, next);
                for t in 0..n {
                    if clear(t) {
                        let mut next = *self;
                        next.below[h as usize] = t as u8;
                        f(
                            Action::Stack {
                                subject: h,
                                target: t as u8,
                            },
                            next,
                        );
                    }
                }
            }
        }
    }

    /// Successor under a legal action (no precondition check).
    pub fn apply_unchecked(&self, action: &Action) -> Packed {
        let mut next = *self;
        match *action {
            Action::PickUp { subject } | Action::Unstack { subject, .. } => {
                next.below[subject as usize] = HELD
            }
            Action::PutDown { subject } => next.below[subject as usize] = TABLE,
            Action::Stack { subject, target } => next.below[subject as usize] = target,
        }
        next
    }

    /// Goal test against the letters of this world.
    pub fn goal_satisfied(&self, letters: &[u8], goal: &[u8]) -> bool {
        let n = self.n as usize;
        let l = goal.len();
        // Each candidate bottom block spelling the last goal letter.
        let above = self.above();
        if (0..n).any(|b| self.below[b] == HELD) {
            return false;
        }
        'towers: for b in 0..n {
            if self.below[b] != TABLE {
                continue;
            }
            let mut cur = b;
            for i in (0..l).rev() {
                if letters[cur] != goal[i] {
                    continue 'towers;
                }
                let up = above[cur];
                if i == 0 {
                    if up == UNUSED {
                        return true;
                    }
                    continue 'towers;
                }
                if up == UNUSED {
                    continue 'towers;
                }
                cur = up as usize;
            }
        }
        false
    }

    pub fn unpack(&self, letters: Arc<[u8]>) -> WorldState {
        debug_assert_eq!(letters.len(), self.n as usize);
        let towers = self
            .towers_bottom_up()
            .into_iter()
            .map(|mut t| {
                t.reverse();
                t
            })
            .collect();
        WorldState::from_parts(letters, towers, self.held()).expect("packed state is valid")
    }

    pub(crate) fn below_raw(&self) -> &[u8; MAX_BLOCKS] {
        &self.below
    }
}

pub(crate) mod packed_codes {
    pub const TABLE: u8 = super::TABLE;
    pub const HELD: u8 = super::HELD;
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    fn state(letters: &str, towers: &[&str], held: Option<char>) -> WorldState {
        // Towers given as letter strings top-to-bottom; letters must be unique.
        let blocks = blocks_from_letters(letters).unwrap();
        let id = |c: char| letters.find(c).unwrap() as BlockId;
        let towers = towers.iter().map(|t| t.chars().map(id).collect()).collect();
        WorldState::new(&blocks, towers, held.map(id)).unwrap()
    }

    #[test]
    fn legal_actions_all_on_table() {
        let s = WorldState::on_table("ink").unwrap();
        let acts = s.legal_actions();
        assert_eq!(
            acts,
            vec![
                Action::PickUp { subject: 0 },
                Action::PickUp { subject: 1 },
                Action::PickUp { subject: 2 },
            ]
        );
    }

    #[test]
    fn legal_actions_holding() {
        let s = state("ink", &["nk"], Some('i'));
        assert_eq!(
            s.legal_actions(),
            vec![
                Action::PutDown { subject: 0 },
                Action::Stack {
                    subject: 0,
                    target: 1
                },
            ]
        );
    }

    #[test]
    fn legal_actions_zero_blocks() {
        let s = WorldState::on_table("").unwrap();
        assert!(s.legal_actions().is_empty());
    }

    #[test]
    fn stack_prepends_letter() {
        let s = state("ink", &["nk"], Some('i'));
        let next = s
            .apply(&Action::Stack {
                subject: 0,
                target: 1,
            })
            .unwrap();
        assert_eq!(next.towers(), &[vec![0, 1, 2]]);
        assert_eq!(next.held(), None);
        assert_eq!(next.tower_reading(0).unwrap(), "ink");
    }

    #[test]
    fn unstack_inverts_stack() {
        let s = state("tp", &["tp"], None);
        let next = s
            .apply(&Action::Unstack {
                subject: 0,
                target: 1,
            })
            .unwrap();
        assert_eq!(next.towers(), &[vec![1]]);
        assert_eq!(next.held(), Some(0));
    }

    #[test]
    fn pick_up_buried_block_is_illegal() {
        let s = state("nk", &["nk"], None);
        let err = s.apply(&Action::PickUp { subject: 1 }).unwrap_err();
        match err {
            WorldError::IllegalAction { reason, .. } => assert!(reason.contains("not clear")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn readings_top_to_bottom() {
        let s = state("pinkz", &["pink", "z"], None);
        assert_eq!(s.tower_reading(0).unwrap(), "pink");
        assert_eq!(s.tower_reading(1).unwrap(), "z");
        assert!(matches!(
            s.tower_reading(2),
            Err(WorldError::TowerIndex { index: 2, count: 2 })
        ));
        let s = state("ink", &["ink"], None);
        assert_eq!(s.tower_reading(0).unwrap(), "ink");
    }

    #[test]
    fn goal_satisfaction_is_exact() {
        let pink = Word::new("pink").unwrap();
        assert!(state("pink", &["pink"], None).goal_satisfied(&pink));
        assert!(!state("tpink", &["tpink"], None).goal_satisfied(&pink));
        let ink = Word::new("ink").unwrap();
        let s = state("inkp", &["ink", "p"], None);
        assert!(s.goal_satisfied(&ink));
        assert!(s.pack().goal_satisfied(b"inkp", b"ink"));
        // Holding a block means the goal is not yet achieved.
        let s = state("inkp", &["ink"], Some('p'));
        assert!(!s.goal_satisfied(&ink));
    }

    #[test]
    fn spellability() {
        let blocks = LetterCounts::from_bytes(b"pinkt");
        assert!(spellable(&Word::new("pink").unwrap(), &blocks));
        assert!(!spellable(&Word::new("kink").unwrap(), &blocks));
        assert!(Word::new("").is_err());
        assert!(Word::new("q").is_err());
        assert!(Word::new("toolongword").is_err());
        assert!(Word::new("Pink").is_err());
    }

    #[test]
    fn invalid_states_rejected() {
        let blocks = blocks_from_letters("ab").unwrap();
        assert!(WorldState::new(&blocks, vec![vec![0]], None).is_err());
        assert!(WorldState::new(&blocks, vec![vec![0, 1], vec![]], None).is_err());
        assert!(WorldState::new(&blocks, vec![vec![0, 1]], Some(1)).is_err());
        assert!(WorldState::new(&blocks, vec![vec![0, 1]], None).is_ok());
        assert!(Block::new(0, '3').is_err());
    }

    /// Random valid state over `n` blocks.
    pub(crate) fn arb_state(max_blocks: usize) -> impl Strategy<Value = WorldState> {
        (1..=max_blocks)
            .prop_flat_map(|n| {
                (
                    proptest::collection::vec(0u8..4, n),
                    Just((0..n as u8).collect::<Vec<_>>()).prop_shuffle(),
                    proptest::collection::vec(any::<bool>(), n),
                    any::<bool>(),
                )
            })
            .prop_map(|(letter_idx, order, cuts, hold)| {
                let letters: String = letter_idx.iter().map(|&i| (b'a' + i) as char).collect();
                let blocks = blocks_from_letters(&letters).unwrap();
                let mut order = order;
                let held = if hold { order.pop() } else { None };
                let mut towers: Vec<Vec<BlockId>> = Vec::new();
                for (i, b) in order.into_iter().enumerate() {
                    if i == 0 || cuts[i] {
                        towers.push(vec![b]);
                    } else {
                        towers.last_mut().unwrap().push(b);
                    }
                }
                WorldState::new(&blocks, towers, held).unwrap()
            })
    }

    fn ids(s: &WorldState) -> Vec<BlockId> {
        let mut v: Vec<BlockId> = s.towers().iter().flatten().copied().collect();
        v.extend(s.held());
        v.sort();
        v
    }

    proptest! {
        #[test]
        fn apply_preserves_invariants(s in arb_state(6)) {
            let acts = s.legal_actions();
            let mut dedup = acts.clone();
            dedup.dedup();
            prop_assert_eq!(&dedup, &acts);
            let mut sorted = acts.clone();
            sorted.sort();
            prop_assert_eq!(&sorted, &acts);
            for a in &acts {
                let next = s.apply(a).unwrap();
                // Round-trip through the validating constructor.
                let rebuilt = WorldState::new(&next.blocks(), next.towers().to_vec(), next.held());
                prop_assert!(rebuilt.is_ok());
                prop_assert_eq!(ids(&next), ids(&s));
            }
        }

        #[test]
        fn pick_up_then_put_down_restores(s in arb_state(6)) {
            for a in s.legal_actions() {
                if let Action::PickUp { subject } = a {
                    let back = s.apply(&a).unwrap().apply(&Action::PutDown { subject }).unwrap();
                    prop_assert_eq!(&back, &s);
                }
            }
        }

        #[test]
        fn packed_matches_state(s in arb_state(7)) {
            let p = s.pack();
            prop_assert_eq!(p.unpack(s.letter_bytes().clone()), s.clone());
            let mut packed_succ = Vec::new();
            p.for_each_successor(|a, next| packed_succ.push((a, next)));
            let acts: Vec<Action> = packed_succ.iter().map(|(a, _)| *a).collect();
            prop_assert_eq!(acts, s.legal_actions());
            for (a, next) in packed_succ {
                prop_assert_eq!(next, s.apply(&a).unwrap().pack());
                prop_assert_eq!(next, p.apply_unchecked(&a));
            }
        }

        #[test]
        fn satisfied_goals_are_spellable(s in arb_state(6)) {
            for i in 0..s.towers().len() {
                let reading = s.tower_reading(i).unwrap();
                if let Ok(goal) = Word::new(&reading) {
                    let sat = s.goal_satisfied(&goal);
                    prop_assert_eq!(sat, s.held().is_none());
                    prop_assert!(spellable(&goal, &s.letter_counts()));
                    prop_assert_eq!(sat, s.pack().goal_satisfied(s.letter_bytes(), goal.as_bytes()));
                }
            }
        }
    }
}
