//! Monte Carlo round simulator.
//!
//! Plays the round model forward one round at a time instead of solving for
//! its fixed point, so its long-run averages are an independent check on the
//! engine.
//!
//! A round started by miner `j`:
//! 1. the next block is mined by `k`, drawn with probability `α_k`;
//! 2. with probability `F_jk` that block forks `j`'s;
//! 3. without a fork `j`'s block is final and `k` starts the next round;
//! 4. with a fork one of the two blocks is final (`j`'s with probability
//!    `W_jk`) and the next round is started by a fresh draw from `α`.
//!
//! Every round therefore adds exactly one main-chain block.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{analyze, Analysis, FairnessReport};
use crate::error::{Error, Result};
use crate::rng::{child_seed, stream_rng, Rng};
use crate::scenario::{Scenario, TieBreakRule};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub rounds: u64,
    pub seed: u64,
    /// Resolve forks by drawing the fork time and the next miner explicitly
    /// instead of flipping a coin with probability `W`.
    pub race_mode: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimResult {
    pub rounds: u64,
    pub main_chain_blocks: Vec<u64>,
    pub total_main_chain_blocks: u64,
    pub fork_events: u64,
    pub round_initiations: Vec<u64>,
}

impl SimResult {
    pub fn empirical_r(&self) -> Vec<f64> {
        ratios(&self.main_chain_blocks, self.total_main_chain_blocks)
    }

    pub fn empirical_pi(&self) -> Vec<f64> {
        ratios(&self.round_initiations, self.rounds)
    }

    pub fn fork_rate(&self) -> f64 {
        self.fork_events as f64 / self.rounds as f64
    }

    /// Binomial standard error of each empirical share, evaluated at `expected`.
    pub fn binomial_se(expected: &[f64], trials: u64) -> Vec<f64> {
        expected
            .iter()
            .map(|p| (p * (1.0 - p) / trials as f64).sqrt())
            .collect()
    }

    /// Largest `|empirical r - expected r|` over miners, in standard errors.
    pub fn max_reward_deviation_se(&self, expected_r: &[f64]) -> f64 {
        max_deviation_se(
            &self.empirical_r(),
            expected_r,
            self.total_main_chain_blocks,
        )
    }

    pub fn max_initiation_deviation_se(&self, expected_pi: &[f64]) -> f64 {
        max_deviation_se(&self.empirical_pi(), expected_pi, self.rounds)
    }

    pub fn write_csv<W: std::io::Write>(
        &self,
        expected_r: &[f64],
        mut out: W,
    ) -> std::io::Result<()> {
        writeln!(
            out,
            "miner_id,main_chain_blocks,round_initiations,empirical_r,empirical_pi,engine_r,r_se"
        )?;
        let r = self.empirical_r();
        let pi = self.empirical_pi();
        let se = Self::binomial_se(expected_r, self.total_main_chain_blocks);
        for i in 0..r.len() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                i,
                self.main_chain_blocks[i],
                self.round_initiations[i],
                r[i],
                pi[i],
                expected_r[i],
                se[i]
            )?;
        }
        Ok(())
    }
}

fn ratios(counts: &[u64], total: u64) -> Vec<f64> {
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

fn max_deviation_se(empirical: &[f64], expected: &[f64], trials: u64) -> f64 {
    let se = SimResult::binomial_se(expected, trials);
    empirical
        .iter()
        .zip(expected)
        .zip(se)
        .map(|((e, x), s)| {
            let diff = (e - x).abs();
            if s > 0.0 {
                diff / s
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Runs one replication. The delay matrix, fork and win probabilities come
/// from the engine; `config.seed` drives only the rounds.
pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    let analysis = analyze(&config.scenario, None)?;
    simulate_with(config, &analysis)
}

/// Runs one replication against an already computed engine analysis.
pub fn simulate_with(config: &SimConfig, analysis: &Analysis) -> Result<SimResult> {
    if config.rounds == 0 {
        return Err(Error::invalid("rounds", "must be at least 1"));
    }
    let scenario = &config.scenario;
    let alpha = scenario.alpha();
    let n = alpha.len();
    let t = scenario.block_interval();
    let pick = WeightedIndex::new(alpha).map_err(|e| Error::invalid("hashrates", e.to_string()))?;
    let mut rng = stream_rng(config.seed, 0);

    let mut blocks = vec![0u64; n];
    let mut initiations = vec![0u64; n];
    let mut forks = 0u64;
    let mut initiator = pick.sample(&mut rng);

    for _ in 0..config.rounds {
        initiations[initiator] += 1;
        let next = pick.sample(&mut rng);
        let forked = next != initiator && rng.random::<f64>() < analysis.fork.0[(initiator, next)];
        if !forked {
            blocks[initiator] += 1;
            initiator = next;
            continue;
        }
        forks += 1;
        let (winner, extender) = if config.race_mode {
            race(
                scenario.tie_break(),
                &analysis.delays,
                t,
                initiator,
                next,
                &pick,
                &mut rng,
            )
        } else {
            let winner = if rng.random::<f64>() < analysis.win.0[(initiator, next)] {
                initiator
            } else {
                next
            };
            (winner, pick.sample(&mut rng))
        };
        blocks[winner] += 1;
        initiator = extender;
    }

    Ok(SimResult {
        rounds: config.rounds,
        total_main_chain_blocks: blocks.iter().sum(),
        main_chain_blocks: blocks,
        fork_events: forks,
        round_initiations: initiations,
    })
}

/// Explicit fork race: draws the fork time and the miner of the next block,
/// and returns `(winner, next block's miner)`.
fn race(
    rule: TieBreakRule,
    delays: &crate::matrix::SquareMatrix,
    block_interval: f64,
    first: usize,
    second: usize,
    pick: &WeightedIndex<f64>,
    rng: &mut Rng,
) -> (usize, usize) {
    let t_fs = delays[(first, second)];
    // τ ~ Exp(1/T) conditioned on τ < T_fs, by inversion.
    let u: f64 = rng.random();
    let tau = -block_interval * (u * (-t_fs / block_interval).exp_m1()).ln_1p();
    let k = pick.sample(rng);
    let extends_first = if k == first {
        true
    } else if k == second {
        false
    } else {
        match rule {
            TieBreakRule::FirstSeen => delays[(first, k)] < tau + delays[(second, k)],
            TieBreakRule::Random => rng.random::<bool>(),
            TieBreakRule::LastGenerated => false,
        }
    };
    (if extends_first { first } else { second }, k)
}

/// Independent replications; replicate `i` uses seed `child_seed(config.seed, i)`.
pub fn simulate_replicates(config: &SimConfig, replicates: u64) -> Result<Vec<SimResult>> {
    let analysis = analyze(&config.scenario, None)?;
    (0..replicates)
        .into_par_iter()
        .map(|i| {
            let child = SimConfig {
                seed: child_seed(config.seed, i),
                ..config.clone()
            };
            simulate_with(&child, &analysis)
        })
        .collect()
}

/// Reward and profit figures measured from a simulation.
pub fn empirical_report(
    result: &SimResult,
    alpha: &[f64],
    fingerprint: String,
) -> Result<FairnessReport> {
    if result.total_main_chain_blocks == 0 {
        return Err(Error::Empty(
            "simulation produced no main-chain blocks".into(),
        ));
    }
    if result.main_chain_blocks.len() != alpha.len() {
        return Err(Error::invalid(
            "alpha",
            format!(
                "{} shares for {} simulated miners",
                alpha.len(),
                result.main_chain_blocks.len()
            ),
        ));
    }
    let pi = if result.rounds > 0 {
        result.empirical_pi()
    } else {
        vec![0.0; alpha.len()]
    };
    Ok(FairnessReport::from_shares(
        alpha,
        pi,
        result.empirical_r(),
        fingerprint,
    ))
}
