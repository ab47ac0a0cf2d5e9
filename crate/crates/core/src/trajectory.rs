//! Observed action sequences.

use serde::{Deserialize, Serialize};

use crate::world::{Action, Packed, WorldError, WorldState};

/// An initial state, a legal sequence of primitive actions, and the steps
/// (number of actions observed) at which the observer is asked for a
/// judgment.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    initial: WorldState,
    actions: Vec<Action>,
    judgments: Vec<usize>,
    states: Vec<WorldState>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("action {index}: {source}")]
    Illegal { index: usize, source: WorldError },
    #[error("judgment points must be strictly increasing and at most {len}, got {points:?}")]
    Judgments { points: Vec<usize>, len: usize },
}

/// Where each recorded action landed after expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expanded {
    pub recorded_index: usize,
    pub primitive_steps: usize,
}

impl Trajectory {
    pub fn new(initial: WorldState, actions: Vec<Action>, judgments: Vec<usize>) -> Result<Self, TrajectoryError> {
        let mut states = Vec::with_capacity(actions.len() + 1);
        states.push(initial.clone());
        for (index, a) in actions.iter().enumerate() {
            let next = states[index]
                .apply(a)
                .map_err(|source| TrajectoryError::Illegal { index, source })?;
            states.push(next);
        }
        if judgments.windows(2).any(|w| w[0] >= w[1]) || judgments.last().is_some_and(|&j| j > actions.len()) {
            return Err(TrajectoryError::Judgments {
                points: judgments,
                len: actions.len(),
            });
        }
        Ok(Self {
            initial,
            actions,
            judgments,
            states,
        })
    }

    /// Builds a trajectory from a trace recorded at block-movement
    /// granularity. A `stack` of a block that is not in hand is preceded by
    /// the pick-up or unstack that grabs it. Judgment points count recorded
    /// actions and are translated to primitive steps.
    pub fn from_recorded(
        initial: WorldState,
        recorded: &[Action],
        judgments: &[usize],
    ) -> Result<Self, TrajectoryError> {
        let (actions, marks) = expand_recorded(&initial, recorded)?;
        if judgments.windows(2).any(|w| w[0] >= w[1]) || judgments.last().is_some_and(|&j| j > recorded.len()) {
            return Err(TrajectoryError::Judgments {
                points: judgments.to_vec(),
                len: recorded.len(),
            });
        }
        let judgments = judgments
            .iter()
            .map(|&j| if j == 0 { 0 } else { marks[j - 1].primitive_steps })
            .collect();
        Self::new(initial, actions, judgments)
    }

    pub fn initial(&self) -> &WorldState {
        &self.initial
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn judgments(&self) -> &[usize] {
        &self.judgments
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// State after `t` actions.
    pub fn state(&self, t: usize) -> &WorldState {
        &self.states[t]
    }

    pub fn states(&self) -> &[WorldState] {
        &self.states
    }

    pub fn packed_states(&self) -> Vec<Packed> {
        self.states.iter().map(|s| s.pack()).collect()
    }

    /// The same trajectory cut after `t` actions, keeping judgment points
    /// up to `t`.
    pub fn truncated(&self, t: usize) -> Self {
        Self {
            initial: self.initial.clone(),
            actions: self.actions[..t].to_vec(),
            judgments: self.judgments.iter().copied().filter(|&j| j <= t).collect(),
            states: self.states[..=t].to_vec(),
        }
    }
}

/// Expands a recorded trace into primitive actions, returning for each
/// recorded action the number of primitive steps taken once it completes.
pub fn expand_recorded(
    initial: &WorldState,
    recorded: &[Action],
) -> Result<(Vec<Action>, Vec<Expanded>), TrajectoryError> {
    let mut state = initial.clone();
    let mut out = Vec::with_capacity(recorded.len() * 2);
    let mut marks = Vec::with_capacity(recorded.len());
    for (index, a) in recorded.iter().enumerate() {
        let illegal = |source| TrajectoryError::Illegal { index, source };
        if let Action::Stack { subject, .. } = *a {
            if state.held().is_none() {
                let grab = match state.below(subject) {
                    Some(under) => Action::Unstack {
                        subject,
                        target: under,
                    },
                    None => Action::PickUp { subject },
                };
                state = state.apply(&grab).map_err(illegal)?;
                out.push(grab);
            }
        }
        state = state.apply(a).map_err(illegal)?;
        out.push(*a);
        marks.push(Expanded {
            recorded_index: index,
            primitive_steps: out.len(),
        });
    }
    Ok((out, marks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{blocks_from_letters, BlockId};

    fn pink_layout() -> WorldState {
        // Towers [n k], [i], [p], [t] (top to bottom).
        let letters = "pinkt";
        let blocks = blocks_from_letters(letters).unwrap();
        let id = |c: char| letters.find(c).unwrap() as BlockId;
        WorldState::new(
            &blocks,
            vec![vec![id('n'), id('k')], vec![id('i')], vec![id('p')], vec![id('t')]],
            None,
        )
        .unwrap()
    }

    #[test]
    fn implied_grabs_are_inserted() {
        let s = pink_layout();
        // stack(i, n) then stack(t, p)
        let recorded = [
            Action::Stack { subject: 1, target: 2 },
            Action::Stack { subject: 4, target: 0 },
        ];
        let t = Trajectory::from_recorded(s, &recorded, &[1, 2]).unwrap();
        assert_eq!(
            t.actions(),
            &[
                Action::PickUp { subject: 1 },
                Action::Stack { subject: 1, target: 2 },
                Action::PickUp { subject: 4 },
                Action::Stack { subject: 4, target: 0 },
            ]
        );
        assert_eq!(t.judgments(), &[2, 4]);
        assert_eq!(t.state(2).tower_reading(1).unwrap(), "ink");
        let cut = t.truncated(2);
        assert_eq!(cut.len(), 2);
        assert_eq!(cut.judgments(), &[2]);
    }

    #[test]
    fn grab_from_a_tower_is_an_unstack() {
        let s = pink_layout();
        let recorded = [Action::Stack { subject: 2, target: 0 }];
        let t = Trajectory::from_recorded(s, &recorded, &[1]).unwrap();
        assert_eq!(t.actions()[0], Action::Unstack { subject: 2, target: 3 });
    }

    #[test]
    fn bad_judgments_and_illegal_actions() {
        let s = pink_layout();
        let recorded = [Action::Stack { subject: 1, target: 2 }];
        assert!(matches!(
            Trajectory::from_recorded(s.clone(), &recorded, &[2]),
            Err(TrajectoryError::Judgments { .. })
        ));
        assert!(matches!(
            Trajectory::from_recorded(s.clone(), &[Action::Stack { subject: 3, target: 0 }], &[1]),
            Err(TrajectoryError::Illegal { index: 0, .. })
        ));
        assert!(Trajectory::new(s, vec![], vec![1]).is_err());
    }
}
