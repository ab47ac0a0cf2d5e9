//! Reversed character n-gram.
//!
//! Words are modelled last letter first, because a tower reading is a word
//! suffix and completing it means prepending letters. A history is the
//! sequence `BOS, w[len-1], w[len-2], ...`; the conditional for the next
//! symbol uses the last `order - 1` symbols of the history, backing off to
//! shorter contexts when a context never occurred in training. Only the
//! empty context is smoothed (add-δ over the 27 output symbols), so every
//! lookup ends in a proper distribution.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::LexiconError;

/// Output symbols: `a`..`z` then END.
pub const NUM_SYMBOLS: usize = 27;
pub const END: usize = 26;
/// History-only start marker.
const BOS: u8 = 27;
const SMOOTHING: f64 = 0.01;
const MAX_ORDER: usize = 12;

pub type Dist = [f64; NUM_SYMBOLS];

#[derive(Debug, Clone)]
pub struct CharNGram {
    order: usize,
    eps: f64,
    index: FxHashMap<u64, usize>,
    dists: Vec<Dist>,
}

fn key(ctx: &[u8]) -> u64 {
    ctx.iter()
        .fold(0u64, |acc, &s| (acc << 5) | s as u64)
        | ((ctx.len() as u64) << 60)
}

fn symbol(c: u8) -> u8 {
    debug_assert!(c.is_ascii_lowercase(), "not a lowercase letter: {c}");
    c - b'a'
}

impl CharNGram {
    /// Trains on `(word, weight)` pairs. Weights are used as fractional
    /// counts, added to every context length up to `order - 1`.
    pub fn train<'a>(
        words: impl IntoIterator<Item = (&'a str, f64)>,
        order: usize,
        eps: f64,
    ) -> Result<Self, LexiconError> {
        if order == 0 || order > MAX_ORDER || !(0.0..1.0).contains(&eps) {
            return Err(LexiconError::NGramParams { order, eps });
        }
        let mut counts: FxHashMap<u64, Dist> = FxHashMap::default();
        let mut any = false;
        let mut history = Vec::with_capacity(16);
        for (word, weight) in words {
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(LexiconError::NonPositiveFrequency {
                    word: word.to_string(),
                    freq: weight,
                });
            }
            if !word.bytes().all(|b| b.is_ascii_lowercase()) {
                return Err(LexiconError::Parse {
                    line: 0,
                    reason: format!("n-gram training word {word:?} is not lowercase a-z"),
                });
            }
            any = true;
            history.clear();
            history.push(BOS);
            let next_symbols = word
                .bytes()
                .rev()
                .map(|c| symbol(c) as usize)
                .chain(std::iter::once(END));
            for next in next_symbols {
                let longest = history.len().min(order - 1);
                for len in 0..=longest {
                    let ctx = &history[history.len() - len..];
                    counts.entry(key(ctx)).or_insert([0.0; NUM_SYMBOLS])[next] += weight;
                }
                if next != END {
                    history.push(next as u8);
                }
            }
        }
        if !any {
            return Err(LexiconError::Empty);
        }
        let root = key(&[]);
        let mut index = FxHashMap::default();
        let mut dists = Vec::with_capacity(counts.len());
        for (k, c) in counts {
            let total: f64 = c.iter().sum();
            let dist = if k == root {
                let denom = total + SMOOTHING * NUM_SYMBOLS as f64;
                c.map(|x| (x + SMOOTHING) / denom)
            } else {
                c.map(|x| x / total)
            };
            index.insert(k, dists.len());
            dists.push(dist);
        }
        Ok(Self {
            order,
            eps,
            index,
            dists,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn termination_bias(&self) -> f64 {
        self.eps
    }

    /// Number of stored contexts (including the root).
    pub fn num_contexts(&self) -> usize {
        self.dists.len()
    }

    /// Start-of-word history.
    pub fn start() -> Vec<u8> {
        vec![BOS]
    }

    /// Appends a letter (`a`..`z`) to a history.
    pub fn push(history: &mut Vec<u8>, letter: u8) {
        history.push(symbol(letter));
    }

    /// History after generating `suffix` backwards (its last letter first).
    pub fn history_for(suffix: &str) -> Vec<u8> {
        let mut h = Self::start();
        for c in suffix.bytes().rev() {
            Self::push(&mut h, c);
        }
        h
    }

    /// Distributions of the seen contexts of `history`, longest first; the
    /// last item is always the smoothed root.
    pub fn backoff_chain<'a>(&'a self, history: &'a [u8]) -> impl Iterator<Item = &'a Dist> + 'a {
        let longest = history.len().min(self.order - 1);
        (0..=longest)
            .rev()
            .filter_map(move |len| self.index.get(&key(&history[history.len() - len..])))
            .map(move |&i| &self.dists[i])
    }

    /// Unmixed conditional `P(· | history)` from the longest seen context.
    pub fn raw(&self, history: &[u8]) -> &Dist {
        let longest = history.len().min(self.order - 1);
        (0..=longest)
            .rev()
            .find_map(|len| self.index.get(&key(&history[history.len() - len..])))
            .map(|&i| &self.dists[i])
            .expect("root context is always present")
    }

    /// Conditional with the termination bias mixed in:
    /// `P(END) = ε + (1-ε)·P_raw(END)`, `P(c) = (1-ε)·P_raw(c)`.
    pub fn conditional(&self, history: &[u8]) -> Dist {
        let mut d = self.raw(history).map(|p| (1.0 - self.eps) * p);
        d[END] += self.eps;
        d
    }

    /// Probability of generating `suffix` backwards (its letters only, no END).
    pub fn sequence_prob(&self, suffix: &str) -> f64 {
        self.log_sequence_prob(suffix).exp()
    }

    pub fn log_sequence_prob(&self, suffix: &str) -> f64 {
        let mut h = Self::start();
        let mut lp = 0.0;
        for c in suffix.bytes().rev() {
            let s = symbol(c) as usize;
            lp += ((1.0 - self.eps) * self.raw(&h)[s]).ln();
            h.push(s as u8);
        }
        lp
    }

    /// Every stored conditional, ε-mixed. Useful for normalization checks.
    pub fn all_conditionals(&self) -> impl Iterator<Item = Dist> + '_ {
        self.dists.iter().map(|d| {
            let mut m = d.map(|p| (1.0 - self.eps) * p);
            m[END] += self.eps;
            m
        })
    }

    pub fn to_table(&self) -> NGramTable {
        let mut contexts: Vec<(String, Vec<f64>)> = self
            .index
            .iter()
            .map(|(&k, &i)| (decode_key(k), self.dists[i].to_vec()))
            .collect();
        contexts.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then(a.0.cmp(&b.0)));
        NGramTable {
            order: self.order,
            termination_bias: self.eps,
            contexts,
        }
    }

    pub fn from_table(table: &NGramTable) -> Result<Self, LexiconError> {
        let bad = |reason: String| LexiconError::Parse { line: 0, reason };
        if table.order == 0 || table.order > MAX_ORDER || !(0.0..1.0).contains(&table.termination_bias) {
            return Err(LexiconError::NGramParams {
                order: table.order,
                eps: table.termination_bias,
            });
        }
        let mut index = FxHashMap::default();
        let mut dists = Vec::with_capacity(table.contexts.len());
        for (ctx, probs) in &table.contexts {
            let syms: Vec<u8> = ctx
                .bytes()
                .map(|b| match b {
                    b'^' => Ok(BOS),
                    b'a'..=b'z' => Ok(b - b'a'),
                    _ => Err(bad(format!("bad context {ctx:?}"))),
                })
                .collect::<Result<_, _>>()?;
            let dist: Dist = probs
                .as_slice()
                .try_into()
                .map_err(|_| bad(format!("context {ctx:?} needs {NUM_SYMBOLS} probabilities")))?;
            index.insert(key(&syms), dists.len());
            dists.push(dist);
        }
        if !index.contains_key(&key(&[])) {
            return Err(bad("missing root context".into()));
        }
        Ok(Self {
            order: table.order,
            eps: table.termination_bias,
            index,
            dists,
        })
    }
}

fn decode_key(k: u64) -> String {
    let len = (k >> 60) as usize;
    let body = k & ((1 << 60) - 1);
    (0..len)
        .rev()
        .map(|i| match ((body >> (5 * i)) & 31) as u8 {
            BOS => '^',
            s => (b'a' + s) as char,
        })
        .collect()
}

/// Serializable form of a trained model. Contexts are written oldest symbol
/// first with `^` marking the start of the word, e.g. `^kn` is the context
/// after generating `k` then `n`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NGramTable {
    pub order: usize,
    pub termination_bias: f64,
    pub contexts: Vec<(String, Vec<f64>)>,
}
