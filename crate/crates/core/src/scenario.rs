//! Experiment inputs: hashrate shares, delay models, tie-break rules.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// Inputs whose shares miss 1 by at most this much are renormalized; larger
/// deviations are rejected.
pub const NORMALIZATION_SLACK: f64 = 1e-9;

/// Dense index of a miner in `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MinerId(pub usize);

impl fmt::Display for MinerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Hashrate share of every miner. All shares are positive and sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HashrateDistribution {
    alpha: Vec<f64>,
}

impl HashrateDistribution {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::invalid("hashrates", "no miners"));
        }
        if let Some((i, a)) = alpha
            .iter()
            .enumerate()
            .find(|(_, a)| !a.is_finite() || **a <= 0.0)
        {
            return Err(Error::invalid(
                "hashrates",
                format!("share of miner {i} must be positive, got {a}"),
            ));
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_SLACK {
            return Err(Error::invalid(
                "hashrates",
                format!("hashrates sum to {}", short_float(sum)),
            ));
        }
        let alpha = alpha.into_iter().map(|a| a / sum).collect();
        Ok(Self { alpha })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            alpha: vec![1.0 / n as f64; n],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Σα², the zero crossing of the profit-rate line.
    pub fn sum_of_squares(&self) -> f64 {
        self.alpha.iter().map(|a| a * a).sum()
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut alpha = vec![0.0; self.alpha.len()];
        for (i, &a) in self.alpha.iter().enumerate() {
            alpha[perm[i]] = a;
        }
        Self { alpha }
    }
}

impl std::ops::Index<usize> for HashrateDistribution {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.alpha[i]
    }
}

/// Rounds to six decimals and drops trailing zeros, so `1.0999999999999999`
/// prints as `1.1`.
fn short_float(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// How block propagation delays between miners are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DelayModel {
    /// Every pair of distinct miners is `d` seconds apart.
    FixedUniform { d: f64 },
    /// Delays given pair by pair.
    ExplicitMatrix { matrix: SquareMatrix },
    /// Each pair drawn from the logistic distribution implied by gossip
    /// spreading with the given mean. `scale` overrides the derived scale
    /// `mean / ln(n - 1)`; zero makes the model deterministic.
    LogisticRandom {
        mean: f64,
        symmetric: bool,
        seed: u64,
        scale: Option<f64>,
    },
    /// Miners are grouped; the delay between distinct miners depends only on
    /// their groups.
    GroupedFixed {
        groups: Vec<usize>,
        group_delays: SquareMatrix,
    },
}

impl DelayModel {
    pub fn validate(&self, n: usize) -> Result<()> {
        let check_delay = |field: &str, d: f64| {
            if d.is_finite() && d >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(
                    field,
                    format!("delay must be finite and non-negative, got {d}"),
                ))
            }
        };
        match self {
            DelayModel::FixedUniform { d } => check_delay("delays.d", *d),
            DelayModel::ExplicitMatrix { matrix } => {
                if matrix.n() != n {
                    return Err(Error::invalid(
                        "delays.matrix",
                        format!("expected {n}x{n}, got {0}x{0}", matrix.n()),
                    ));
                }
                for i in 0..n {
                    for j in 0..n {
                        check_delay("delays.matrix", matrix[(i, j)])?;
                    }
                    if matrix[(i, i)] != 0.0 {
                        return Err(Error::invalid(
                            "delays.matrix",
                            format!("self-delay of miner {i} must be 0"),
                        ));
                    }
                }
                Ok(())
            }
            DelayModel::LogisticRandom { mean, scale, .. } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return Err(Error::invalid(
                        "delays.mean",
                        format!("must be positive, got {mean}"),
                    ));
                }
                match scale {
                    Some(s) => check_delay("delays.scale", *s),
                    None if n < 3 => Err(Error::invalid(
                        "delays.mean",
                        "the gossip-derived logistic scale needs at least 3 miners",
                    )),
                    None => Ok(()),
                }
            }
            DelayModel::GroupedFixed {
                groups,
                group_delays,
            } => {
                if groups.len() != n {
                    return Err(Error::invalid(
                        "delays.groups",
                        format!("expected {n} entries, got {}", groups.len()),
                    ));
                }
                if let Some(g) = groups.iter().find(|&&g| g >= group_delays.n()) {
                    return Err(Error::invalid(
                        "delays.groups",
                        format!("group {g} has no row in group_delays"),
                    ));
                }
                group_delays
                    .as_slice()
                    .iter()
                    .try_for_each(|&d| check_delay("delays.group_delays", d))
            }
        }
    }

    /// Seed carried by the model, if it is random.
    pub fn seed(&self) -> Option<u64> {
        match self {
            DelayModel::LogisticRandom { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

/// Chain-selection policy when two blocks compete at the same height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreakRule {
    FirstSeen,
    Random,
    LastGenerated,
}

impl TieBreakRule {
    pub const ALL: [TieBreakRule; 3] = [
        TieBreakRule::FirstSeen,
        TieBreakRule::Random,
        TieBreakRule::LastGenerated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TieBreakRule::FirstSeen => "first_seen",
            TieBreakRule::Random => "random",
            TieBreakRule::LastGenerated => "last_generated",
        }
    }
}

impl fmt::Display for TieBreakRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TieBreakRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "first_seen" => Ok(TieBreakRule::FirstSeen),
            "random" => Ok(TieBreakRule::Random),
            "last_generated" => Ok(TieBreakRule::LastGenerated),
            other => Err(Error::invalid(
                "tie_break",
                format!("unknown rule {other:?} (expected first_seen, random or last_generated)"),
            )),
        }
    }
}

/// A complete, validated experiment definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    n_miners: usize,
    hashrates: HashrateDistribution,
    block_interval: f64,
    delays: DelayModel,
    tie_break: TieBreakRule,
}

impl Scenario {
    pub fn new(
        hashrates: HashrateDistribution,
        block_interval: f64,
        delays: DelayModel,
        tie_break: TieBreakRule,
    ) -> Result<Self> {
        let n_miners = hashrates.len();
        if n_miners < 2 {
            return Err(Error::invalid("n_miners", "at least 2 miners are required"));
        }
        if !(block_interval.is_finite() && block_interval > 0.0) {
            return Err(Error::invalid(
                "block_interval_s",
                format!("must be positive, got {block_interval}"),
            ));
        }
        delays.validate(n_miners)?;
        Ok(Self {
            n_miners,
            hashrates,
            block_interval,
            delays,
            tie_break,
        })
    }

    pub fn n_miners(&self) -> usize {
        self.n_miners
    }

    pub fn hashrates(&self) -> &HashrateDistribution {
        &self.hashrates
    }

    pub fn alpha(&self) -> &[f64] {
        self.hashrates.as_slice()
    }

    /// Mean block generation interval `T` in seconds.
    pub fn block_interval(&self) -> f64 {
        self.block_interval
    }

    pub fn delays(&self) -> &DelayModel {
        &self.delays
    }

    pub fn tie_break(&self) -> TieBreakRule {
        self.tie_break
    }

    pub fn with_tie_break(&self, tie_break: TieBreakRule) -> Self {
        Self {
            tie_break,
            ..self.clone()
        }
    }

    pub fn with_delays(&self, delays: DelayModel) -> Result<Self> {
        delays.validate(self.n_miners)?;
        Ok(Self {
            delays,
            ..self.clone()
        })
    }

    /// SHA-256 over the canonical JSON encoding of the validated scenario.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// A few named pools plus an even split of the remainder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolDistributionSpec {
    pub named_shares: Vec<(String, f64)>,
    pub fill_to: usize,
}

/// Expands named pool shares into a full distribution of `fill_to` miners.
///
/// The named pools come first, in the given order; the residual hashrate is
/// split evenly over the remaining miners.
pub fn expand_pool_distribution(spec: &PoolDistributionSpec) -> Result<HashrateDistribution> {
    let named = spec.named_shares.len();
    if spec.fill_to <= named {
        return Err(Error::invalid(
            "hashrates.fill_to",
            format!("must exceed the {named} named pools, got {}", spec.fill_to),
        ));
    }
    if let Some((label, share)) = spec
        .named_shares
        .iter()
        .find(|(_, s)| !s.is_finite() || *s <= 0.0)
    {
        return Err(Error::invalid(
            "hashrates.named",
            format!("share of {label:?} must be positive, got {share}"),
        ));
    }
    let named_sum: f64 = spec.named_shares.iter().map(|(_, s)| s).sum();
    let residual = 1.0 - named_sum;
    if residual <= 0.0 {
        return Err(Error::invalid(
            "hashrates.named",
            format!(
                "named shares sum to {}, leaving nothing for the remaining miners",
                short_float(named_sum)
            ),
        ));
    }
    let each = residual / (spec.fill_to - named) as f64;
    let alpha = spec
        .named_shares
        .iter()
        .map(|(_, s)| *s)
        .chain(std::iter::repeat_n(each, spec.fill_to - named))
        .collect();
    HashrateDistribution::new(alpha)
}
