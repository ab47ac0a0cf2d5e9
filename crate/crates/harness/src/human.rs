//! Human guess data: native JSON format, an importer for tabular exports of
//! the original experiment, exclusion filters and synthetic participants.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use blockwords::metrics::{human_distribution, validate_guess, GoalDistribution};
use blockwords::Word;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil::write_atomic;
use crate::scenario::Scenario;

#[derive(Debug, Error)]
pub enum HumanDataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("participant {participant}, scenario {scenario}: {message}")]
    Invalid {
        participant: String,
        scenario: String,
        message: String,
    },
}

/// One participant's guess lists for one scenario, one list per judgment
/// point, each list as it stood after that point's additions and removals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub participant: String,
    pub scenario: String,
    pub guesses: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanResponseSet {
    pub records: Vec<ResponseRecord>,
}

/// The two exclusion rules, each toggleable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionFilters {
    /// Drop participants whose guess lists never changed within any scenario.
    pub never_updated: bool,
    /// Drop participants who only ever added guesses and never removed one.
    pub add_only: bool,
}

impl Default for ExclusionFilters {
    fn default() -> Self {
        Self {
            never_updated: true,
            add_only: true,
        }
    }
}

impl ExclusionFilters {
    pub const NONE: Self = Self {
        never_updated: false,
        add_only: false,
    };
}

impl HumanResponseSet {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HumanDataError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| HumanDataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| HumanDataError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HumanDataError> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("responses serialize");
        write_atomic(path, text.as_bytes()).map_err(|source| HumanDataError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Loads either the native JSON format or a CSV export, by extension.
    pub fn load_any(path: impl AsRef<Path>) -> Result<Self, HumanDataError> {
        let path = path.as_ref();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            import_csv(path)
        } else {
            Self::load(path)
        }
    }

    /// Checks every guess against the 3 to 8 letter rule and the scenario's
    /// blocks, and that each record has one list per judgment point.
    /// Records for unknown scenarios are an error.
    pub fn validate(&self, scenarios: &[Scenario]) -> Result<(), HumanDataError> {
        for r in &self.records {
            let invalid = |message: String| HumanDataError::Invalid {
                participant: r.participant.clone(),
                scenario: r.scenario.clone(),
                message,
            };
            let s = scenarios
                .iter()
                .find(|s| s.id() == r.scenario)
                .ok_or_else(|| invalid("unknown scenario".into()))?;
            if r.guesses.len() != s.trajectory.judgments().len() {
                return Err(invalid(format!(
                    "{} guess lists for {} judgment points",
                    r.guesses.len(),
                    s.trajectory.judgments().len()
                )));
            }
            let avail = s.initial.letter_counts();
            for list in &r.guesses {
                for g in list {
                    validate_guess(g, &avail).map_err(|e| invalid(e.to_string()))?;
                }
            }
        }
        Ok(())
    }

    /// Removes guesses that fail validation, returning how many were
    /// dropped. Records for unknown scenarios are kept untouched.
    pub fn drop_invalid(&mut self, scenarios: &[Scenario]) -> usize {
        let mut dropped = 0;
        for r in &mut self.records {
            let Some(s) = scenarios.iter().find(|s| s.id() == r.scenario) else { continue };
            let avail = s.initial.letter_counts();
            for list in &mut r.guesses {
                let before = list.len();
                list.retain(|g| validate_guess(g, &avail).is_ok());
                for g in list.iter_mut() {
                    *g = g.to_ascii_lowercase();
                }
                dropped += before - list.len();
            }
        }
        dropped
    }

    /// Participants removed by `filters`.
    pub fn excluded(&self, filters: ExclusionFilters) -> BTreeSet<String> {
        let mut by_participant: BTreeMap<&str, Vec<&ResponseRecord>> = BTreeMap::new();
        for r in &self.records {
            by_participant.entry(&r.participant).or_default().push(r);
        }
        by_participant
            .into_iter()
            .filter(|(_, recs)| {
                (filters.never_updated && recs.iter().all(|r| never_updated(r)))
                    || (filters.add_only && recs.iter().all(|r| never_removed(r)))
            })
            .map(|(p, _)| p.to_string())
            .collect()
    }

    pub fn filtered(&self, filters: ExclusionFilters) -> Self {
        let out = self.excluded(filters);
        Self {
            records: self
                .records
                .iter()
                .filter(|r| !out.contains(&r.participant))
                .cloned()
                .collect(),
        }
    }

    /// Mean of the participants' uniform guess distributions at each
    /// judgment point of `scenario`. Empty guess lists are skipped; a
    /// judgment point with no guesses at all gives an empty distribution.
    pub fn mean_distributions(&self, scenario: &str, judgments: usize) -> Vec<GoalDistribution> {
        let recs: Vec<&ResponseRecord> = self.records.iter().filter(|r| r.scenario == scenario).collect();
        (0..judgments)
            .map(|j| {
                let mut acc: BTreeMap<Word, f64> = BTreeMap::new();
                let mut n = 0usize;
                for r in &recs {
                    let Some(list) = r.guesses.get(j) else { continue };
                    let words: Vec<Word> = list.iter().filter_map(|g| g.parse().ok()).collect();
                    let d = human_distribution(&words);
                    if d.is_empty() {
                        continue;
                    }
                    n += 1;
                    for (w, p) in d.iter() {
                        *acc.entry(*w).or_default() += p;
                    }
                }
                GoalDistribution::normalized(acc.into_iter().map(|(w, p)| (w, p / n.max(1) as f64)))
                    .unwrap_or_default()
            })
            .collect()
    }

    pub fn scenarios(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.scenario.as_str()).collect()
    }
}

fn never_updated(r: &ResponseRecord) -> bool {
    let sets: Vec<BTreeSet<&String>> = r.guesses.iter().map(|l| l.iter().collect()).collect();
    sets.windows(2).all(|w| w[0] == w[1])
}

fn never_removed(r: &ResponseRecord) -> bool {
    let sets: Vec<BTreeSet<&String>> = r.guesses.iter().map(|l| l.iter().collect()).collect();
    sets.windows(2).all(|w| w[0].is_subset(&w[1]))
}

const PARTICIPANT_COLUMNS: &[&str] = &["participant", "participant_id", "subject", "subject_id", "worker_id", "user"];
const SCENARIO_COLUMNS: &[&str] = &["scenario", "scenario_id", "problem", "problem_id", "stimulus", "stimulus_id"];
const JUDGMENT_COLUMNS: &[&str] = &["judgment", "judgment_point", "timestep", "time_step", "step", "t"];
const GUESS_COLUMNS: &[&str] = &["guesses", "guess", "response", "responses", "answer", "answers"];

fn find_column(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers
        .iter()
        .position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
}

/// Imports a CSV export with one row per (participant, scenario, judgment
/// point) or per individual guess. Column names are matched
/// case-insensitively against common spellings; a guess cell may hold
/// several guesses separated by commas, semicolons, `|` or spaces.
/// Judgment values are ranked per scenario, so they may be either
/// judgment indices or action timesteps.
pub fn import_csv(path: impl AsRef<Path>) -> Result<HumanResponseSet, HumanDataError> {
    let path = path.as_ref();
    let fmt = |message: String| HumanDataError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| fmt(e.to_string()))?;
    let headers = reader.headers().map_err(|e| fmt(e.to_string()))?.clone();
    let col = |names: &[&str], what: &str| {
        find_column(&headers, names).ok_or_else(|| fmt(format!("no {what} column (tried {})", names.join(", "))))
    };
    let (pc, sc, jc, gc) = (
        col(PARTICIPANT_COLUMNS, "participant")?,
        col(SCENARIO_COLUMNS, "scenario")?,
        col(JUDGMENT_COLUMNS, "judgment")?,
        col(GUESS_COLUMNS, "guess")?,
    );
    type Key = (String, String);
    let mut cells: BTreeMap<Key, BTreeMap<i64, Vec<String>>> = BTreeMap::new();
    let mut steps: HashMap<String, BTreeSet<i64>> = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| fmt(format!("row {}: {e}", i + 2)))?;
        let get = |c: usize| row.get(c).unwrap_or("").trim().to_string();
        let step: i64 = get(jc)
            .parse::<f64>()
            .map_err(|_| fmt(format!("row {}: judgment {:?} is not a number", i + 2, get(jc))))?
            as i64;
        let scenario = get(sc);
        steps.entry(scenario.clone()).or_default().insert(step);
        let list = cells.entry((get(pc), scenario)).or_default().entry(step).or_default();
        for g in get(gc).split([',', ';', '|', ' ']).map(str::trim).filter(|g| !g.is_empty()) {
            let g = g.to_ascii_lowercase();
            if !list.contains(&g) {
                list.push(g);
            }
        }
    }
    let records = cells
        .into_iter()
        .map(|((participant, scenario), by_step)| {
            let order: Vec<i64> = steps[&scenario].iter().copied().collect();
            let guesses = order.iter().map(|s| by_step.get(s).cloned().unwrap_or_default()).collect();
            ResponseRecord {
                participant,
                scenario,
                guesses,
            }
        })
        .collect();
    Ok(HumanResponseSet { records })
}

/// Writes responses in the tabular layout accepted by [`import_csv`].
pub fn export_csv(set: &HumanResponseSet, path: impl AsRef<Path>) -> Result<(), HumanDataError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(Vec::new());
    let fmt = |e: csv::Error| HumanDataError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    w.write_record(["participant", "scenario", "judgment", "guesses"]).map_err(fmt)?;
    for r in &set.records {
        for (j, list) in r.guesses.iter().enumerate() {
            w.write_record([&r.participant, &r.scenario, &j.to_string(), &list.join(";")])
                .map_err(fmt)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| HumanDataError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_atomic(path, &bytes).map_err(|source| HumanDataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Simulated participants: at each judgment point a participant keeps each
/// earlier guess that still has posterior probability above `keep`, and
/// adds 1 to 3 guesses drawn from the reference posteriors (one list of
/// distributions per scenario). Used to exercise the IoU pipeline when no
/// real data is available.
pub fn synthesize(
    scenarios: &[(&str, Vec<GoalDistribution>)],
    participants: usize,
    seed: u64,
) -> HumanResponseSet {
    let keep = 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for p in 0..participants {
        for (id, posts) in scenarios {
            let mut current: Vec<String> = Vec::new();
            let mut guesses = Vec::with_capacity(posts.len());
            for post in posts {
                current.retain(|g| g.parse::<Word>().is_ok_and(|w| post.prob(&w) > keep));
                let support: Vec<(&Word, f64)> = post.iter().collect();
                let adds = rng.random_range(1..=3);
                for _ in 0..adds {
                    if support.is_empty() {
                        break;
                    }
                    let Ok(&(w, _)) = support.choose_weighted(&mut rng, |x| x.1) else { break };
                    let s = w.to_string();
                    if !current.contains(&s) {
                        current.push(s);
                    }
                }
                guesses.push(current.clone());
            }
            records.push(ResponseRecord {
                participant: format!("sim{p:03}"),
                scenario: id.to_string(),
                guesses,
            });
        }
    }
    HumanResponseSet { records }
}

/// IoU per judgment point between model distributions and the mean human
/// distributions; `None` where either side is empty.
pub fn iou_series(model: &[GoalDistribution], human: &[GoalDistribution]) -> Vec<Option<f64>> {
    model
        .iter()
        .zip(human)
        .map(|(m, h)| blockwords::metrics::iou(m, h).ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::pink;

    fn rec(p: &str, lists: &[&[&str]]) -> ResponseRecord {
        ResponseRecord {
            participant: p.into(),
            scenario: "pink".into(),
            guesses: lists.iter().map(|l| l.iter().map(|s| s.to_string()).collect()).collect(),
        }
    }

    #[test]
    fn exclusion_rules() {
        let set = HumanResponseSet {
            records: vec![
                rec("static", &[&["ink"], &["ink"]]),
                rec("adder", &[&["ink"], &["ink", "pink"]]),
                rec("reviser", &[&["pink"], &["ink"]]),
            ],
        };
        let both = set.excluded(ExclusionFilters::default());
        assert_eq!(both.into_iter().collect::<Vec<_>>(), ["adder", "static"]);
        let only_static = set.excluded(ExclusionFilters {
            never_updated: true,
            add_only: false,
        });
        assert_eq!(only_static.into_iter().collect::<Vec<_>>(), ["static"]);
        assert!(set.excluded(ExclusionFilters::NONE).is_empty());
        assert_eq!(set.filtered(ExclusionFilters::default()).records.len(), 1);
    }

    #[test]
    fn validation_and_mean_distribution() {
        let scenarios = [pink()];
        let mut set = HumanResponseSet {
            records: vec![rec("a", &[&["ink", "pink"], &["ink"]]), rec("b", &[&["pink"], &[]])],
        };
        set.validate(&scenarios).unwrap();
        let d = set.mean_distributions("pink", 2);
        assert!((d[0].prob(&"pink".parse().unwrap()) - 0.75).abs() < 1e-12);
        assert!((d[1].prob(&"ink".parse().unwrap()) - 1.0).abs() < 1e-12);

        set.records[0].guesses[0].push("q".into());
        set.records[1].guesses[1].push("stink".into());
        assert!(set.validate(&scenarios).is_err());
        assert_eq!(set.drop_invalid(&scenarios), 2);
        set.validate(&scenarios).unwrap();
    }

    #[test]
    fn csv_import_ranks_timesteps_and_merges_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("responses.csv");
        std::fs::write(
            &path,
            "Participant_ID,Problem,TimeStep,Guess\n\
             w1,pink,4,PINK\n\
             w1,pink,2,ink\n\
             w1,pink,2,pink\n\
             w2,pink,2,\"kin; ink\"\n\
             w2,pink,4,ink\n",
        )
        .unwrap();
        let set = import_csv(&path).unwrap();
        assert_eq!(set.records.len(), 2);
        assert_eq!(set.records[0].guesses, vec![vec!["ink", "pink"], vec!["pink"]]);
        assert_eq!(set.records[1].guesses, vec![vec!["kin", "ink"], vec!["ink"]]);

        let out = dir.path().join("round.csv");
        export_csv(&set, &out).unwrap();
        assert_eq!(import_csv(&out).unwrap(), set);

        std::fs::write(&path, "who,what\n1,2\n").unwrap();
        assert!(import_csv(&path).unwrap_err().to_string().contains("participant"));
    }

    #[test]
    fn synthetic_participants_are_valid() {
        let w = |s: &str| s.parse::<Word>().unwrap();
        let post = GoalDistribution::new([(w("ink"), 0.7), (w("pink"), 0.3)]).unwrap();
        let set = synthesize(&[("pink", vec![post.clone(), post])], 20, 1);
        assert_eq!(set.records.len(), 20);
        set.validate(&[pink()]).unwrap();
        assert_eq!(synthesize(&[("pink", vec![])], 2, 1).records[0].guesses.len(), 0);
    }
}
