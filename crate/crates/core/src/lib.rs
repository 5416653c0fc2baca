//! Mining fairness under the round-based fork model.
//!
//! Given hashrate shares, block propagation delays, the mean block interval
//! and a tie-break rule, the [`engine`] computes for every miner the share
//! of rounds it starts, its share of main-chain rewards, and its mining
//! profit rate `MPR_i = (r_i - α_i) / α_i`. The rest of the crate checks and
//! explores those numbers:
//!
//! - [`theory`]: first-order closed forms and least-squares line fits;
//! - [`sim`]: a Monte Carlo round simulator;
//! - [`ensemble`]: profit rates over random logistic delay draws;
//! - [`game`]: the two-group propagation-speed game.

pub mod delays;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod game;
pub mod matrix;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod scenario_file;
pub mod sim;
pub mod theory;

pub use engine::{analyze, fairness_report, Analysis, FairnessReport};
pub use error::{Error, Result};
pub use matrix::SquareMatrix;
pub use scenario::{DelayModel, HashrateDistribution, MinerId, Scenario, TieBreakRule};
pub use scenario_file::{load_scenario, parse_scenario};
