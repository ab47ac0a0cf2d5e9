//! Scenario files.
//!
//! A scenario is a JSON document naming its blocks by label (the first
//! character of a label is the block's letter; a suffix such as `e2`
//! distinguishes repeated letters), the initial towers listed top to bottom,
//! the recorded action trace, the judgment points and the true word.
//!
//! ```json
//! {
//!   "id": "pink",
//!   "condition": "irrational_alternatives",
//!   "reconstructed": true,
//!   "blocks": ["p", "i", "n", "k", "t"],
//!   "towers": [["n", "k"], ["i"], ["p"], ["t"]],
//!   "actions": ["stack i n", "stack t p"],
//!   "judgments": [1, 2],
//!   "true_word": "ink"
//! }
//! ```
//!
//! Actions are `stack X Y`, `unstack X Y`, `pick-up X` and `put-down X`.
//! A `stack` of a block that is not in hand implies the grab before it.
//! Judgment points count recorded actions (0 is the initial layout).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use blockwords::trajectory::Trajectory;
use blockwords::world::{spellable, Block, BlockId};
use blockwords::{Action, Word, WorldState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil::write_atomic;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Syntax {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: field `{field}`: {message}")]
    Invalid {
        path: PathBuf,
        field: &'static str,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    BottomUpFriendly,
    IrrationalAlternatives,
    GardenPath,
    UncommonWords,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::BottomUpFriendly,
        Condition::IrrationalAlternatives,
        Condition::GardenPath,
        Condition::UncommonWords,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::BottomUpFriendly => "bottom_up_friendly",
            Condition::IrrationalAlternatives => "irrational_alternatives",
            Condition::GardenPath => "garden_path",
            Condition::UncommonWords => "uncommon_words",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The on-disk form. Field order here is the canonical order on save.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub id: String,
    pub condition: Condition,
    #[serde(default)]
    pub reconstructed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub blocks: Vec<String>,
    pub towers: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held: Option<String>,
    pub actions: Vec<String>,
    pub judgments: Vec<usize>,
    pub true_word: String,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub initial: WorldState,
    pub recorded: Vec<Action>,
    pub trajectory: Trajectory,
    pub true_word: Word,
}

impl Scenario {
    pub fn id(&self) -> &str {
        &self.file.id
    }

    pub fn condition(&self) -> Condition {
        self.file.condition
    }

    pub fn labels(&self) -> &[String] {
        &self.file.blocks
    }

    /// Parses and validates a scenario; `origin` is used in diagnostics.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Syntax {
            path: origin.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_file(file, origin)
    }

    pub fn from_file(file: ScenarioFile, origin: &Path) -> Result<Self, ScenarioError> {
        let invalid = |field, message: String| ScenarioError::Invalid {
            path: origin.to_path_buf(),
            field,
            message,
        };
        if file.id.is_empty() {
            return Err(invalid("id", "must not be empty".into()));
        }
        let labels = Labels::new(&file.blocks).map_err(|m| invalid("blocks", m))?;
        let towers = file
            .towers
            .iter()
            .map(|t| t.iter().map(|l| labels.id(l)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|m| invalid("towers", m))?;
        let held = file
            .held
            .as_deref()
            .map(|l| labels.id(l))
            .transpose()
            .map_err(|m| invalid("held", m))?;
        let initial =
            WorldState::new(&labels.blocks, towers, held).map_err(|e| invalid("towers", e.to_string()))?;
        let recorded = file
            .actions
            .iter()
            .enumerate()
            .map(|(i, a)| labels.parse_action(a).map_err(|m| format!("action {i}: {m}")))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|m| invalid("actions", m))?;
        let trajectory = Trajectory::from_recorded(initial.clone(), &recorded, &file.judgments).map_err(|e| {
            let field = match e {
                blockwords::trajectory::TrajectoryError::Judgments { .. } => "judgments",
                _ => "actions",
            };
            invalid(field, e.to_string())
        })?;
        let true_word = Word::from_str(&file.true_word).map_err(|e| invalid("true_word", e.to_string()))?;
        if !spellable(&true_word, &initial.letter_counts()) {
            return Err(invalid(
                "true_word",
                format!("{true_word} cannot be spelled from the blocks"),
            ));
        }
        Ok(Self {
            file,
            initial,
            recorded,
            trajectory,
            true_word,
        })
    }

    /// Canonical serialized form.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.file).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// Label of a block, for rendering actions.
    pub fn label(&self, id: BlockId) -> &str {
        &self.file.blocks[id as usize]
    }

    pub fn render_action(&self, action: &Action) -> String {
        render_action(&self.file.blocks, action)
    }
}

pub fn render_action(labels: &[String], action: &Action) -> String {
    let l = |b: BlockId| labels[b as usize].as_str();
    match *action {
        Action::PickUp { subject } => format!("pick-up {}", l(subject)),
        Action::PutDown { subject } => format!("put-down {}", l(subject)),
        Action::Stack { subject, target } => format!("stack {} {}", l(subject), l(target)),
        Action::Unstack { subject, target } => format!("unstack {} {}", l(subject), l(target)),
    }
}

/// Block labels and the blocks they name.
pub struct Labels<'a> {
    labels: &'a [String],
    pub blocks: Vec<Block>,
}

impl<'a> Labels<'a> {
    pub fn new(labels: &'a [String]) -> Result<Self, String> {
        if labels.is_empty() {
            return Err("at least one block is required".into());
        }
        let mut blocks = Vec::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            let letter = l.chars().next().ok_or("empty block label")?;
            if labels[..i].contains(l) {
                return Err(format!("duplicate block label {l:?}"));
            }
            blocks.push(Block::new(i as BlockId, letter).map_err(|e| format!("{l:?}: {e}"))?);
        }
        Ok(Self { labels, blocks })
    }

    pub fn id(&self, label: &str) -> Result<BlockId, String> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| i as BlockId)
            .ok_or_else(|| format!("unknown block {label:?}"))
    }

    pub fn parse_action(&self, text: &str) -> Result<Action, String> {
        let parts: Vec<&str> = text.split_whitespace().collect();
        let action = match parts.as_slice() {
            ["stack", s, t] => Action::Stack {
                subject: self.id(s)?,
                target: self.id(t)?,
            },
            ["unstack", s, t] => Action::Unstack {
                subject: self.id(s)?,
                target: self.id(t)?,
            },
            ["pick-up", s] => Action::PickUp { subject: self.id(s)? },
            ["put-down", s] => Action::PutDown { subject: self.id(s)? },
            _ => {
                return Err(format!(
                    "cannot parse {text:?} (expected `stack X Y`, `unstack X Y`, `pick-up X` or `put-down X`)"
                ))
            }
        };
        Ok(action)
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Scenario::from_json(&text, path)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    write_atomic(path, scenario.to_json().as_bytes()).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads every `*.json` file in `dir`, sorted by file name.
pub fn load_dir(dir: impl AsRef<Path>) -> Result<Vec<Scenario>, ScenarioError> {
    let dir = dir.as_ref();
    let io = |source| ScenarioError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(load_scenario).collect()
}

/// Directory of the scenarios shipped with the harness.
pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}
