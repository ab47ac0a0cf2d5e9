//! Reversed-suffix trie and constrained completion.
//!
//! The trie is keyed on words read backwards, so the node reached by a
//! tower reading holds every dictionary word that ends with that reading.
//! Completion prepends letters one at a time, drawing each from the n-gram
//! conditional restricted to branches that still lead to a word spellable
//! from the available letters.

use rand::Rng;

use super::ngram::{CharNGram, END};
use super::LexiconError;
use crate::world::{LetterCounts, Word};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    children: [u32; 26],
    /// Index into `words` of the word ending exactly here.
    word: u32,
    /// Range of `words` in this subtree (words are stored in DFS order).
    lo: u32,
    hi: u32,
}

impl Node {
    fn empty() -> Self {
        Self {
            children: [NONE; 26],
            word: NONE,
            lo: 0,
            hi: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuffixTrie {
    nodes: Vec<Node>,
    words: Vec<Word>,
    letters: Vec<LetterCounts>,
}

impl SuffixTrie {
    pub fn new<'a>(words: impl IntoIterator<Item = &'a Word>) -> Self {
        let mut nodes = vec![Node::empty()];
        let mut ends: Vec<Option<Word>> = vec![None];
        for w in words {
            let mut cur = 0usize;
            for &c in w.as_bytes().iter().rev() {
                let slot = (c - b'a') as usize;
                if nodes[cur].children[slot] == NONE {
                    nodes[cur].children[slot] = nodes.len() as u32;
                    nodes.push(Node::empty());
                    ends.push(None);
                }
                cur = nodes[cur].children[slot] as usize;
            }
            ends[cur] = Some(*w);
        }
        // Number words in DFS order so each subtree is a contiguous range.
        let mut ordered = Vec::new();
        let mut stack = vec![(0usize, false)];
        while let Some((n, done)) = stack.pop() {
            if done {
                nodes[n].hi = ordered.len() as u32;
                continue;
            }
            nodes[n].lo = ordered.len() as u32;
            if let Some(w) = ends[n] {
                nodes[n].word = ordered.len() as u32;
                ordered.push(w);
            }
            stack.push((n, true));
            for &child in nodes[n].children.iter().rev() {
                if child != NONE {
                    stack.push((child as usize, false));
                }
            }
        }
        let letters = ordered.iter().map(|w| w.letters()).collect();
        Self {
            nodes,
            words: ordered,
            letters,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    fn find(&self, reading: &str) -> Option<usize> {
        let mut cur = 0usize;
        for &c in reading.as_bytes().iter().rev() {
            if !c.is_ascii_lowercase() {
                return None;
            }
            let next = self.nodes[cur].children[(c - b'a') as usize];
            if next == NONE {
                return None;
            }
            cur = next as usize;
        }
        Some(cur)
    }

    /// Words ending with `reading`.
    pub fn words_with_suffix(&self, reading: &str) -> &[Word] {
        match self.find(reading) {
            Some(n) => &self.words[self.nodes[n].lo as usize..self.nodes[n].hi as usize],
            None => &[],
        }
    }

    /// Sets up completion of `reading` using letters from `available`.
    ///
    /// Fails if no dictionary word ends with `reading` and can be finished
    /// from the available letters.
    pub fn completion<'a>(
        &'a self,
        ngram: &'a CharNGram,
        reading: &str,
        available: &LetterCounts,
    ) -> Result<Completion<'a>, LexiconError> {
        let infeasible = || LexiconError::InfeasibleSuffix(reading.to_string());
        let start = self.find(reading).ok_or_else(infeasible)?;
        let (lo, hi) = (self.nodes[start].lo as usize, self.nodes[start].hi as usize);
        let mut budget = *available;
        for &c in reading.as_bytes() {
            budget.add(c);
        }
        // Prefix counts of feasible words over the subtree range.
        let mut feasible_prefix = Vec::with_capacity(hi - lo + 1);
        feasible_prefix.push(0u32);
        let mut count = 0u32;
        for letters in &self.letters[lo..hi] {
            count += budget.contains(letters) as u32;
            feasible_prefix.push(count);
        }
        if count == 0 {
            return Err(infeasible());
        }
        Ok(Completion {
            trie: self,
            ngram,
            start,
            history: CharNGram::history_for(reading),
            base: lo,
            feasible_prefix,
        })
    }

    /// True iff `reading` has at least one feasible completion.
    pub fn is_completable(&self, reading: &str, available: &LetterCounts) -> bool {
        let Some(start) = self.find(reading) else {
            return false;
        };
        let mut budget = *available;
        for &c in reading.as_bytes() {
            budget.add(c);
        }
        let node = &self.nodes[start];
        self.letters[node.lo as usize..node.hi as usize]
            .iter()
            .any(|l| budget.contains(l))
    }
}

/// Completion of one tower reading under fixed letter availability.
#[derive(Debug, Clone)]
pub struct Completion<'a> {
    trie: &'a SuffixTrie,
    ngram: &'a CharNGram,
    start: usize,
    history: Vec<u8>,
    base: usize,
    feasible_prefix: Vec<u32>,
}

struct Step {
    end: f64,
    /// (letter, child node, probability)
    letters: Vec<(u8, usize, f64)>,
}

impl<'a> Completion<'a> {
    fn feasible_in(&self, node: usize) -> bool {
        let n = &self.trie.nodes[node];
        let lo = n.lo as usize - self.base;
        let hi = n.hi as usize - self.base;
        self.feasible_prefix[hi] > self.feasible_prefix[lo]
    }

    fn word_feasible(&self, node: usize) -> bool {
        let w = self.trie.nodes[node].word;
        w != NONE && {
            let i = w as usize - self.base;
            self.feasible_prefix[i + 1] > self.feasible_prefix[i]
        }
    }

    fn step(&self, node: usize, history: &[u8]) -> Step {
        let children: Vec<(u8, usize)> = self.trie.nodes[node]
            .children
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c != NONE && self.feasible_in(c as usize))
            .map(|(l, &c)| (l as u8, c as usize))
            .collect();
        let is_word = self.word_feasible(node);
        if children.is_empty() {
            debug_assert!(is_word, "walk reached a dead end");
            return Step {
                end: 1.0,
                letters: Vec::new(),
            };
        }
        let eps = self.ngram.termination_bias();
        let end = if is_word {
            eps + (1.0 - eps) * self.ngram.raw(history)[END]
        } else {
            0.0
        };
        // Use the longest context that gives the feasible letters any mass.
        let (dist, mass) = self
            .ngram
            .backoff_chain(history)
            .map(|d| (d, children.iter().map(|&(l, _)| d[l as usize]).sum::<f64>()))
            .find(|&(_, m)| m > 0.0)
            .expect("smoothed root gives every letter mass");
        let letters = children
            .into_iter()
            .map(|(l, c)| (l, c, (1.0 - end) * dist[l as usize] / mass))
            .collect();
        Step { end, letters }
    }

    fn word_at(&self, node: usize) -> Word {
        self.trie.words[self.trie.nodes[node].word as usize]
    }

    /// Draws a completed word and the probability `q` of the path taken.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Word, f64) {
        let mut node = self.start;
        let mut history = self.history.clone();
        let mut q = 1.0;
        loop {
            let step = self.step(node, &history);
            let mut u: f64 = rng.random::<f64>();
            if u < step.end || step.letters.is_empty() {
                return (self.word_at(node), q * step.end);
            }
            u -= step.end;
            let mut pick = *step.letters.last().expect("non-empty");
            for &choice in &step.letters {
                if u < choice.2 {
                    pick = choice;
                    break;
                }
                u -= choice.2;
            }
            q *= pick.2;
            node = pick.1;
            history.push(pick.0);
        }
    }

    /// Every reachable word with its completion probability.
    pub fn distribution(&self) -> Vec<(Word, f64)> {
        let mut out = Vec::new();
        let mut stack = vec![(self.start, self.history.clone(), 1.0)];
        while let Some((node, history, q)) = stack.pop() {
            let step = self.step(node, &history);
            if step.end > 0.0 {
                out.push((self.word_at(node), q * step.end));
            }
            for (l, child, p) in step.letters {
                let mut h = history.clone();
                h.push(l);
                stack.push((child, h, q * p));
            }
        }
        out.sort_by_key(|a| a.0);
        out
    }

    /// Completion probability of a specific word (0 if unreachable).
    pub fn prob_of(&self, word: &Word) -> f64 {
        let bytes = word.as_bytes();
        let start_depth = self.history.len() - 1;
        if bytes.len() < start_depth {
            return 0.0;
        }
        let mut node = self.start;
        let mut history = self.history.clone();
        let mut q = 1.0;
        let mut remaining = bytes.len() - start_depth;
        // The word must end with the reading.
        if self.trie.find(std::str::from_utf8(&bytes[remaining..]).unwrap_or("")) != Some(self.start) {
            return 0.0;
        }
        loop {
            let step = self.step(node, &history);
            if remaining == 0 {
                return q * step.end;
            }
            let letter = bytes[remaining - 1] - b'a';
            match step.letters.iter().find(|c| c.0 == letter) {
                Some(&(l, child, p)) => {
                    q *= p;
                    node = child;
                    history.push(l);
                    remaining -= 1;
                }
                None => return 0.0,
            }
        }
    }
}
