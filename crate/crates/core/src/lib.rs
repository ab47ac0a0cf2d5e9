//! Open-ended goal inference in the Block Words domain.
//!
//! An observer watches an agent stack lettered blocks and infers which word
//! the agent is spelling. Candidate goals come bottom-up from a character
//! n-gram that completes partial towers, and are scored top-down by how well
//! a boundedly rational planner pursuing each goal explains the observed
//! actions. Sequential Monte Carlo combines the two; exact enumeration and
//! proposal-only guessing are provided as baselines.

pub mod lexicon;
pub mod metrics;
pub mod planner;
pub mod proposal;
pub mod inference;
pub mod trajectory;
pub mod world;

pub use world::{Action, Block, BlockId, LetterCounts, WorldError, WorldState, Word};
