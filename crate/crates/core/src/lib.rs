//! Hierarchical log5 matchup models for baseball plate appearances, a
//! base-out Markov game simulator with a rollout-based manager, and model
//! evaluation (log loss, added wins, betting ROI).
//!
//! Module map:
//!
//! - [`events`]: plate-appearance records, CSV ingestion, empirical rates.
//! - [`outcome_model`]: log5 combination of pitcher, batter and league rates.
//! - [`inference`]: prior fitting, posterior sampling, recency chains and
//!   the four model variants.
//! - [`baserunning`]: transition tables and steal-rate mixtures.
//! - [`model`]: the fitted [`model::MatchupModel`] and its JSON format.
//! - [`gamesim`]: rosters, game state machine and Monte Carlo driver.
//! - [`manager`]: decision policies, including the rollout optimizer.
//! - [`evaluation`]: scoring, added-wins posteriors and betting analysis.
//! - [`synth`]: synthetic leagues and seasons with a known ground truth.
//! - [`cli`]: the `matchup` command-line front end.

pub mod baserunning;
pub mod cli;
pub mod dist;
pub mod error;
pub mod evaluation;
pub mod events;
pub mod gamesim;
pub mod inference;
pub mod manager;
pub mod model;
pub mod outcome_model;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use events::{BaseOutState, Hand, Handedness, Outcome, PlateAppearance, PostState};

pub use model::{MatchupModel, Variant};
