//! First-order closed forms for uniform delays and the straight-line fits
//! used to check them against the engine.
//!
//! For every pair of distinct miners `d` seconds apart, write
//! `f = 1 - exp(-d/T)`. To first order in `f` the profit rate is
//! `MPR_i = 2f (α_i - Σ_j α_j²)`, whatever the tie-break rule.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{fairness_report, fork_probability, FairnessReport};
use crate::error::{Error, Result};
use crate::scenario::{DelayModel, Scenario};

/// Above this `d/T` the first-order formulas are used outside the range they
/// have been checked against.
pub const VALIDATED_DT_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryPrediction {
    pub f: f64,
    pub slope_2f: f64,
    pub zero_point_sum_sq: f64,
    pub mpr: Vec<f64>,
}

pub fn predict_mpr(alpha: &[f64], d: f64, block_interval: f64) -> TheoryPrediction {
    if d / block_interval > VALIDATED_DT_LIMIT {
        log::warn!(
            "d/T = {} exceeds {VALIDATED_DT_LIMIT}; the linear profit-rate law is an extrapolation here",
            d / block_interval
        );
    }
    let f = fork_probability(d, block_interval);
    let slope = 2.0 * f;
    let s = sum_of_squares(alpha);
    TheoryPrediction {
        f,
        slope_2f: slope,
        zero_point_sum_sq: s,
        mpr: alpha.iter().map(|a| slope * (a - s)).collect(),
    }
}

/// `π̂_i = α_i + α_i f (α_i - Σ_j α_j²)`
pub fn predict_round_initiation(alpha: &[f64], f: f64) -> Vec<f64> {
    let s = sum_of_squares(alpha);
    alpha.iter().map(|a| a + a * f * (a - s)).collect()
}

/// Profit rate obtained when forks are allowed to change rewards but not who
/// starts rounds: `f (α_i - Σ_j α_j²)`, half the full first-order value.
pub fn naive_mpr(alpha: &[f64], f: f64) -> Vec<f64> {
    let s = sum_of_squares(alpha);
    alpha.iter().map(|a| f * (a - s)).collect()
}

fn sum_of_squares(alpha: &[f64]) -> f64 {
    alpha.iter().map(|a| a * a).sum()
}

/// Least-squares line `y = slope · x + intercept`, written as
/// `y = slope · (x - zero_point)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub zero_point: f64,
    pub correlation: f64,
}

/// Ordinary least squares of `y` on `x` (two-pass, centred sums).
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DegenerateFit(format!(
            "{} x values but {} y values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::DegenerateFit("fewer than two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || x.iter().all(|v| *v == x[0]) {
        return Err(Error::DegenerateFit("all x values are equal".into()));
    }
    if syy == 0.0 || y.iter().all(|v| *v == y[0]) {
        return Err(Error::DegenerateFit("all y values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok(LinearFit {
        slope,
        intercept,
        zero_point: -intercept / slope,
        correlation: (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0),
    })
}

/// Fits profit rate against hashrate share over all miners.
pub fn fit_mpr_line(report: &FairnessReport) -> Result<LinearFit> {
    let mut distinct = report.alpha.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 distinct hashrate shares, got {}",
            distinct.len()
        )));
    }
    fit_line(&report.alpha, &report.mpr)
}

/// Relative distance between the fitted zero crossing and `Σα²`.
///
/// Where no line can be fitted (equal shares, or a flat profit rate) the
/// predicted line is used, whose zero crossing is `Σα²` by construction.
pub fn zero_point_identity_check(report: &FairnessReport) -> f64 {
    let s = sum_of_squares(&report.alpha);
    match fit_line(&report.alpha, &report.mpr) {
        Ok(fit) => (fit.zero_point - s).abs() / s,
        Err(_) => 0.0,
    }
}

/// One row of the slope comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeComparison {
    pub d_over_t: f64,
    pub slope_theory: f64,
    /// `None` when the engine's profit rates are flat (no forks).
    pub fit: Option<LinearFit>,
    pub sum_alpha_sq: f64,
}

impl SlopeComparison {
    pub fn is_degenerate(&self) -> bool {
        self.fit.is_none()
    }
}

pub const SLOPE_CSV_HEADER: &str =
    "d_over_T,slope_theory,slope_numeric,zero_point_numeric,sum_alpha_sq,correlation";

/// Writes comparison rows. Degenerate rows report a zero numeric slope and
/// leave the zero point and correlation empty.
pub fn write_slope_csv<W: Write>(rows: &[SlopeComparison], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SLOPE_CSV_HEADER}")?;
    for row in rows {
        match &row.fit {
            Some(fit) => writeln!(
                out,
                "{},{},{},{},{},{}",
                row.d_over_t,
                row.slope_theory,
                fit.slope,
                fit.zero_point,
                row.sum_alpha_sq,
                fit.correlation
            )?,
            None => writeln!(
                out,
                "{},{},0,,{},",
                row.d_over_t, row.slope_theory, row.sum_alpha_sq
            )?,
        }
    }
    Ok(())
}

/// Compares the engine's fitted slope with `2f` at each `d/T`, replacing the
/// scenario's delays with uniform ones `d = (d/T)·T`.
pub fn slope_sweep(scenario: &Scenario, d_over_t: &[f64]) -> Result<Vec<SlopeComparison>> {
    let t = scenario.block_interval();
    d_over_t
        .par_iter()
        .map(|&ratio| {
            if !(ratio.is_finite() && ratio >= 0.0) {
                return Err(Error::invalid(
                    "d_over_T",
                    format!("must be non-negative, got {ratio}"),
                ));
            }
            let d = ratio * t;
            let uniform = scenario.with_delays(DelayModel::FixedUniform { d })?;
            let report = fairness_report(&uniform, None)?;
            let theory = predict_mpr(scenario.alpha(), d, t);
            let fit = if ratio == 0.0 {
                log::warn!("d/T = 0 gives no forks; slope comparison is degenerate");
                None
            } else {
                Some(fit_mpr_line(&report)?)
            };
            Ok(SlopeComparison {
                d_over_t: ratio,
                slope_theory: theory.slope_2f,
                fit,
                sum_alpha_sq: theory.zero_point_sum_sq,
            })
        })
        .collect()
}
