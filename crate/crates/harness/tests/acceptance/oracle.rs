//! Test-only reference computations, written without the engine's world
//! model, planner or inference code.

use std::collections::{HashMap, VecDeque};

use blockwords::Action;

/// A block configuration: towers bottom-up, kept sorted so equal
/// configurations compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Config {
    towers: Vec<Vec<u8>>,
    held: Option<u8>,
}

impl Config {
    /// `towers` lists block ids top first, as scenario files do.
    pub fn new(towers: &[Vec<u8>], held: Option<u8>) -> Self {
        let mut towers: Vec<Vec<u8>> = towers.iter().map(|t| t.iter().rev().copied().collect()).collect();
        towers.sort();
        Self { towers, held }
    }

    fn normalized(mut self) -> Self {
        self.towers.retain(|t| !t.is_empty());
        self.towers.sort();
        self
    }

    pub fn moves(&self) -> Vec<(Action, Config)> {
        let mut out = Vec::new();
        match self.held {
            None => {
                for (i, t) in self.towers.iter().enumerate() {
                    let top = *t.last().unwrap();
                    let mut next = self.clone();
                    next.towers[i].pop();
                    next.held = Some(top);
                    let action = if t.len() == 1 {
                        Action::PickUp { subject: top }
                    } else {
                        Action::Unstack {
                            subject: top,
                            target: t[t.len() - 2],
                        }
                    };
                    out.push((action, next.normalized()));
                }
            }
            Some(h) => {
                let mut down = self.clone();
                down.held = None;
                down.towers.push(vec![h]);
                out.push((Action::PutDown { subject: h }, down.normalized()));
                for (i, t) in self.towers.iter().enumerate() {
                    let mut next = self.clone();
                    next.held = None;
                    next.towers[i].push(h);
                    out.push((
                        Action::Stack {
                            subject: h,
                            target: *t.last().unwrap(),
                        },
                        next.normalized(),
                    ));
                }
            }
        }
        out
    }

    pub fn after(&self, action: &Action) -> Config {
        self.moves()
            .into_iter()
            .find(|(a, _)| a == action)
            .unwrap_or_else(|| panic!("{action} is not legal in {self:?}"))
            .1
    }

    /// True iff nothing is held and some tower reads `word` top to bottom.
    pub fn spells(&self, letters: &[u8], word: &str) -> bool {
        self.held.is_none()
            && self.towers.iter().any(|t| {
                t.len() == word.len() && t.iter().rev().map(|&b| letters[b as usize]).eq(word.bytes())
            })
    }
}

/// Every configuration reachable from `start`, with its moves.
pub struct StateGraph {
    pub nodes: Vec<Config>,
    index: HashMap<Config, usize>,
    edges: Vec<Vec<(Action, usize)>>,
}

impl StateGraph {
    pub fn explore(start: &Config) -> Self {
        let mut g = Self {
            nodes: vec![start.clone()],
            index: HashMap::from([(start.clone(), 0)]),
            edges: Vec::new(),
        };
        let mut i = 0;
        while i < g.nodes.len() {
            let mut out = Vec::new();
            for (a, next) in g.nodes[i].moves() {
                let j = match g.index.get(&next) {
                    Some(&j) => j,
                    None => {
                        g.nodes.push(next.clone());
                        g.index.insert(next, g.nodes.len() - 1);
                        g.nodes.len() - 1
                    }
                };
                out.push((a, j));
            }
            g.edges.push(out);
            i += 1;
        }
        g
    }

    pub fn id(&self, c: &Config) -> usize {
        self.index[c]
    }

    /// Shortest number of moves from every node to a node spelling `word`.
    pub fn distances(&self, letters: &[u8], word: &str) -> Vec<u32> {
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (i, out) in self.edges.iter().enumerate() {
            for &(_, j) in out {
                reverse[j].push(i);
            }
        }
        let mut dist = vec![u32::MAX; self.nodes.len()];
        let mut queue = VecDeque::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.spells(letters, word) {
                dist[i] = 0;
                queue.push_back(i);
            }
        }
        while let Some(j) = queue.pop_front() {
            for &i in &reverse[j] {
                if dist[i] == u32::MAX {
                    dist[i] = dist[j] + 1;
                    queue.push_back(i);
                }
            }
        }
        dist
    }

    /// Log probability of taking `action` at `node` for an agent that
    /// softmaxes `-beta * (1 + distance after the move)`.
    pub fn log_choice_prob(&self, dist: &[u32], node: usize, action: &Action, beta: f64) -> f64 {
        let logits: Vec<(Action, f64)> = self.edges[node]
            .iter()
            .map(|&(a, j)| (a, -beta * (1.0 + dist[j] as f64)))
            .collect();
        let max = logits.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|x| (x.1 - max).exp()).sum();
        let chosen = logits.iter().find(|x| x.0 == *action).expect("legal action").1;
        chosen - max - z.ln()
    }
}

/// True iff `word` uses no letter more often than `letters` provides.
pub fn spellable_from(word: &str, letters: &[u8]) -> bool {
    let mut pool = [0i32; 26];
    for &c in letters {
        pool[(c - b'a') as usize] += 1;
    }
    word.bytes().all(|c| {
        pool[(c - b'a') as usize] -= 1;
        pool[(c - b'a') as usize] >= 0
    })
}

/// Posterior over `dictionary` words after each prefix of `actions`:
/// prior ∝ frequency^(1/temperature) over spellable words, times the
/// product of per-step choice probabilities.
pub fn brute_force_posteriors(
    dictionary: &[(&str, f64)],
    letters: &[u8],
    start: &Config,
    actions: &[Action],
    temperature: f64,
    beta: f64,
) -> Vec<HashMap<String, f64>> {
    let graph = StateGraph::explore(start);
    let words: Vec<(&str, f64)> = dictionary
        .iter()
        .filter(|(w, _)| (3..=8).contains(&w.len()) && spellable_from(w, letters))
        .map(|&(w, f)| (w, f.powf(1.0 / temperature)))
        .collect();
    let z: f64 = words.iter().map(|w| w.1).sum();
    let dists: Vec<Vec<u32>> = words.iter().map(|(w, _)| graph.distances(letters, w)).collect();
    let mut log_post: Vec<f64> = words.iter().map(|(_, p)| (p / z).ln()).collect();
    let mut node = graph.id(start);
    let mut config = start.clone();
    let mut out = vec![normalize(&words, &log_post)];
    for a in actions {
        for (k, d) in dists.iter().enumerate() {
            log_post[k] += graph.log_choice_prob(d, node, a, beta);
        }
        config = config.after(a);
        node = graph.id(&config);
        out.push(normalize(&words, &log_post));
    }
    out
}

fn normalize(words: &[(&str, f64)], log_w: &[f64]) -> HashMap<String, f64> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = log_w.iter().map(|l| (l - max).exp()).sum();
    words
        .iter()
        .zip(log_w)
        .map(|((w, _), l)| (w.to_string(), (l - max).exp() / z))
        .collect()
}
