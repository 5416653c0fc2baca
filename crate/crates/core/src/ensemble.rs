//! Profit rates under randomly drawn delay matrices.
//!
//! Each draw realizes a fresh logistic delay matrix and runs the engine on
//! it. Draw `i` is seeded with `child_seed(master_seed, i)`, so it can be
//! reproduced on its own.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delays::realize_delays;
use crate::engine::{analyze_with_delays, fairness_report};
use crate::error::{Error, Result};
use crate::rng::child_seed;
use crate::scenario::{DelayModel, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    /// Must use [`DelayModel::LogisticRandom`].
    pub scenario: Scenario,
    pub n_draws: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub alpha: Vec<f64>,
    pub mean_mpr: Vec<f64>,
    /// Sample standard deviation (n - 1 denominator).
    pub std_mpr: Vec<f64>,
    /// Profit rate with every delay fixed at the logistic mean.
    pub fixed_mpr: Vec<f64>,
    /// Worst `max(|Σr - 1|, |ΣMP|)` over all draws.
    pub max_conservation_residual: f64,
    pub n_draws: usize,
}

impl EnsembleStats {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "miner_id,alpha,mpr_mean,mpr_std,mpr_fixed_reference")?;
        for i in 0..self.alpha.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                i, self.alpha[i], self.mean_mpr[i], self.std_mpr[i], self.fixed_mpr[i]
            )?;
        }
        Ok(())
    }

    /// `max_i |mean MPR_i - fixed MPR_i|` relative to the spread of the fixed
    /// profit rates across miners.
    pub fn max_mean_deviation_relative_to_range(&self) -> f64 {
        let (lo, hi) = self
            .fixed_mpr
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &m| {
                (lo.min(m), hi.max(m))
            });
        let worst = self
            .mean_mpr
            .iter()
            .zip(&self.fixed_mpr)
            .map(|(m, f)| (m - f).abs())
            .fold(0.0, f64::max);
        worst / (hi - lo)
    }
}

/// Per draw: the profit rates and the worst conservation residual.
pub fn ensemble_draws(config: &EnsembleConfig) -> Result<Vec<(Vec<f64>, f64)>> {
    let scenario = &config.scenario;
    if !matches!(scenario.delays(), DelayModel::LogisticRandom { .. }) {
        return Err(Error::invalid(
            "delays.model",
            "an ensemble needs logistic_random delays",
        ));
    }
    if config.n_draws < 2 {
        return Err(Error::invalid("draws", "at least 2 draws are required"));
    }
    (0..config.n_draws as u64)
        .into_par_iter()
        .map(|draw| {
            let seed = child_seed(config.master_seed, draw);
            let delays = realize_delays(scenario.delays(), scenario.n_miners(), seed)?;
            let report = analyze_with_delays(scenario, delays)?.report;
            let (r_err, mp_err) = report.conservation_residuals();
            Ok((report.mpr, r_err.max(mp_err)))
        })
        .collect()
}

pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleStats> {
    let draws = ensemble_draws(config)?;
    let scenario = &config.scenario;
    let DelayModel::LogisticRandom { mean, .. } = scenario.delays() else {
        unreachable!("checked by ensemble_draws");
    };
    let fixed = scenario.with_delays(DelayModel::FixedUniform { d: *mean })?;
    let fixed_mpr = fairness_report(&fixed, None)?.mpr;

    let n = scenario.n_miners();
    let k = draws.len() as f64;
    // Reductions run over draws in index order.
    let mut mean = vec![0.0; n];
    for (mpr, _) in &draws {
        for (m, x) in mean.iter_mut().zip(mpr) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k);
    let mut var = vec![0.0; n];
    for (mpr, _) in &draws {
        for ((v, x), m) in var.iter_mut().zip(mpr).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let std = var.into_iter().map(|v| (v / (k - 1.0)).sqrt()).collect();

    Ok(EnsembleStats {
        alpha: scenario.alpha().to_vec(),
        mean_mpr: mean,
        std_mpr: std,
        fixed_mpr,
        max_conservation_residual: draws.iter().map(|(_, e)| *e).fold(0.0, f64::max),
        n_draws: config.n_draws,
    })
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. A variable whose
/// values are all tied has no ordering to correlate with and yields 0.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

/// Spearman correlation between hashrate share and profit-rate spread.
pub fn std_vs_hashrate_trend(stats: &EnsembleStats, alpha: &[f64]) -> Result<f64> {
    if alpha.len() < 10 {
        return Err(Error::invalid(
            "alpha",
            format!("trend needs at least 10 miners, got {}", alpha.len()),
        ));
    }
    if alpha.len() != stats.std_mpr.len() {
        return Err(Error::invalid("alpha", "length differs from the ensemble"));
    }
    Ok(spearman(alpha, &stats.std_mpr))
}
