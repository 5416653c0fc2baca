//! The `.scenario` file format (TOML).
//!
//! ```toml
//! n_miners = 4
//! block_interval_s = 600
//! tie_break = "first_seen"        # first_seen | random | last_generated
//!
//! [hashrates]
//! kind = "explicit"               # or "pools"
//! values = [0.4, 0.3, 0.2, 0.1]
//!
//! [delays]
//! model = "fixed_uniform"         # fixed_uniform | explicit_matrix | logistic_random | grouped_fixed
//! d = 6
//! ```
//!
//! A pool-style hashrate section names the large pools and fills the rest:
//!
//! ```toml
//! [hashrates]
//! kind = "pools"
//! fill_to = 1000
//! named = [{ label = "A", share = 0.3 }, { label = "B", share = 0.2 }]
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::scenario::{
    expand_pool_distribution, DelayModel, HashrateDistribution, PoolDistributionSpec, Scenario,
    TieBreakRule,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    n_miners: usize,
    block_interval_s: f64,
    tie_break: String,
    hashrates: RawHashrates,
    delays: RawDelays,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawHashrates {
    Explicit {
        values: Vec<f64>,
    },
    Pools {
        fill_to: usize,
        #[serde(default)]
        named: Vec<NamedShare>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NamedShare {
    label: String,
    share: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
enum RawDelays {
    FixedUniform {
        d: f64,
    },
    ExplicitMatrix {
        matrix: Vec<Vec<f64>>,
    },
    LogisticRandom {
        mean: f64,
        #[serde(default)]
        symmetric: bool,
        #[serde(default)]
        seed: u64,
        scale: Option<f64>,
    },
    GroupedFixed {
        groups: Vec<usize>,
        group_delays: Vec<Vec<f64>>,
    },
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let tie_break: TieBreakRule = raw.tie_break.parse()?;

    let hashrates = match raw.hashrates {
        RawHashrates::Explicit { values } => HashrateDistribution::new(values)?,
        RawHashrates::Pools { fill_to, named } => {
            if fill_to != raw.n_miners {
                return Err(Error::invalid(
                    "hashrates.fill_to",
                    format!("{fill_to} does not match n_miners = {}", raw.n_miners),
                ));
            }
            expand_pool_distribution(&PoolDistributionSpec {
                named_shares: named.into_iter().map(|s| (s.label, s.share)).collect(),
                fill_to,
            })?
        }
    };
    if hashrates.len() != raw.n_miners {
        return Err(Error::invalid(
            "hashrates",
            format!(
                "{} shares given for n_miners = {}",
                hashrates.len(),
                raw.n_miners
            ),
        ));
    }

    let square = |field: &str, rows: Vec<Vec<f64>>| {
        SquareMatrix::from_rows(&rows).ok_or_else(|| Error::invalid(field, "matrix must be square"))
    };
    let delays = match raw.delays {
        RawDelays::FixedUniform { d } => DelayModel::FixedUniform { d },
        RawDelays::ExplicitMatrix { matrix } => DelayModel::ExplicitMatrix {
            matrix: square("delays.matrix", matrix)?,
        },
        RawDelays::LogisticRandom {
            mean,
            symmetric,
            seed,
            scale,
        } => DelayModel::LogisticRandom {
            mean,
            symmetric,
            seed,
            scale,
        },
        RawDelays::GroupedFixed {
            groups,
            group_delays,
        } => DelayModel::GroupedFixed {
            groups,
            group_delays: square("delays.group_delays", group_delays)?,
        },
    };

    Scenario::new(hashrates, raw.block_interval_s, delays, tie_break)
}

/// Reads and parses a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text)
}
