//! Small worlds with hand-written dictionaries, small enough for the
//! brute-force posterior.

use blockwords::world::blocks_from_letters;
use blockwords::{Action, BlockId, WorldState};

use crate::oracle::Config;

pub struct Fixture {
    pub name: &'static str,
    pub letters: &'static str,
    /// Towers as letter strings, top first.
    pub towers: &'static [&'static str],
    pub held: Option<char>,
    pub actions: Vec<Action>,
    pub dictionary: &'static [(&'static str, f64)],
    pub beta: f64,
}

impl Fixture {
    fn id(&self, c: char) -> BlockId {
        self.letters.find(c).unwrap() as BlockId
    }

    fn tower_ids(&self) -> Vec<Vec<BlockId>> {
        self.towers.iter().map(|t| t.chars().map(|c| self.id(c)).collect()).collect()
    }

    pub fn state(&self) -> WorldState {
        let blocks = blocks_from_letters(self.letters).unwrap();
        WorldState::new(&blocks, self.tower_ids(), self.held.map(|c| self.id(c))).unwrap()
    }

    pub fn config(&self) -> Config {
        Config::new(&self.tower_ids(), self.held.map(|c| self.id(c)))
    }

    pub fn lexicon_text(&self) -> String {
        self.dictionary.iter().map(|(w, f)| format!("{w}\t{f}\n")).collect()
    }
}

/// Parses compact action strings such as `"stack i n"` using the block
/// letters of a fixture (each letter names one block).
fn actions(letters: &str, script: &[&str]) -> Vec<Action> {
    let id = |s: &str| letters.find(s).unwrap() as BlockId;
    script
        .iter()
        .map(|line| {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["pick-up", x] => Action::PickUp { subject: id(x) },
                ["put-down", x] => Action::PutDown { subject: id(x) },
                ["stack", x, y] => Action::Stack {
                    subject: id(x),
                    target: id(y),
                },
                ["unstack", x, y] => Action::Unstack {
                    subject: id(x),
                    target: id(y),
                },
                _ => panic!("bad action {line:?}"),
            }
        })
        .collect()
}

pub fn all() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "ink",
            letters: "pinkt",
            towers: &["nk", "i", "p", "t"],
            held: None,
            actions: actions("pinkt", &["pick-up i", "stack i n", "pick-up t", "stack t p"]),
            dictionary: &[
                ("ink", 3.1e-5),
                ("pink", 4.0e-5),
                ("kit", 2.2e-5),
                ("tip", 3.0e-5),
                ("pit", 1.6e-5),
                ("nip", 2.0e-6),
                ("pin", 1.4e-5),
                ("tin", 1.0e-5),
                ("knit", 3.0e-6),
                ("kin", 2.5e-6),
                ("pint", 4.1e-6),
                ("tint", 1.9e-6),
                ("think", 4.0e-4),
            ],
            beta: 1.0,
        },
        Fixture {
            name: "cat",
            letters: "catsr",
            towers: &["c", "a", "t", "s", "r"],
            held: None,
            actions: actions("catsr", &["pick-up a", "stack a t", "pick-up c", "stack c a"]),
            dictionary: &[
                ("cat", 6.0e-5),
                ("cats", 2.5e-5),
                ("act", 2.2e-4),
                ("acts", 6.3e-5),
                ("art", 1.3e-4),
                ("arts", 4.4e-5),
                ("rat", 1.1e-5),
                ("rats", 5.1e-6),
                ("star", 1.0e-4),
                ("scar", 6.2e-6),
                ("cart", 8.0e-6),
                ("carts", 2.0e-6),
                ("tar", 3.0e-6),
                ("tsar", 1.0e-6),
                ("sat", 4.1e-5),
                ("arc", 5.0e-6),
                ("car", 1.5e-4),
                ("cars", 4.0e-5),
                ("scat", 4.0e-7),
                ("cast", 4.5e-5),
                ("tract", 3.0e-6),
                ("tsars", 1.0e-7),
            ],
            beta: 1.0,
        },
        Fixture {
            name: "dog",
            letters: "dogeu",
            towers: &["od", "g", "e", "u"],
            held: None,
            actions: actions("dogeu", &["unstack o d", "stack o g", "pick-up d", "stack d o"]),
            dictionary: &[
                ("dog", 8.5e-5),
                ("dogs", 2.8e-5),
                ("god", 3.7e-4),
                ("ode", 1.2e-6),
                ("doe", 2.0e-6),
                ("due", 1.0e-4),
                ("dug", 6.0e-6),
                ("ego", 1.0e-5),
                ("guide", 5.0e-5),
                ("duo", 3.0e-6),
                ("dough", 4.0e-6),
                ("goud", 1.0e-8),
            ],
            beta: 2.0,
        },
        Fixture {
            name: "name",
            letters: "mane",
            towers: &["em", "a", "n"],
            held: None,
            actions: actions("mane", &["unstack e m", "put-down e", "pick-up m", "stack m e", "pick-up a", "stack a m"]),
            dictionary: &[
                ("man", 3.3e-4),
                ("men", 2.2e-4),
                ("mane", 1.4e-6),
                ("name", 2.6e-4),
                ("mean", 3.4e-4),
                ("amen", 3.0e-6),
                ("nam", 1.0e-7),
                ("manes", 2.0e-7),
            ],
            beta: 0.5,
        },
        Fixture {
            name: "stop",
            letters: "lostp",
            towers: &["t", "o", "l", "p"],
            held: Some('s'),
            actions: actions("lostp", &["put-down s", "pick-up o", "stack o p", "pick-up t", "stack t o"]),
            dictionary: &[
                ("lost", 1.5e-4),
                ("lots", 6.0e-5),
                ("slot", 9.0e-6),
                ("plot", 3.2e-5),
                ("pots", 4.0e-6),
                ("post", 1.2e-4),
                ("stop", 2.0e-4),
                ("spot", 7.8e-5),
                ("tops", 7.0e-6),
                ("opt", 2.0e-6),
                ("opts", 5.0e-7),
                ("lop", 3.0e-7),
                ("lot", 3.3e-4),
                ("pot", 2.5e-5),
                ("top", 3.0e-4),
                ("sop", 2.0e-7),
                ("plots", 6.0e-6),
                ("slop", 5.0e-7),
                ("stomp", 1.0e-6),
            ],
            beta: 1.0,
        },
    ]
}
