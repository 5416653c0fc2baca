//! Exact model quantities: fork rates, fork-resolution probabilities,
//! stationary round initiation, reward shares and mining profit rates.
//!
//! All summations run over miner indices in ascending order, so results are
//! bit-reproducible for a given input.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delays::realize_delays;
use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::scenario::{Scenario, TieBreakRule};

/// Iteration stops once no component of π moves by more than this.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-13;
pub const MAX_ITERATIONS: usize = 1_000_000;

/// `F[(i, j)]`: probability that `j`'s block forks the round `i` started.
#[derive(Debug, Clone, PartialEq)]
pub struct ForkMatrix(pub SquareMatrix);

/// `W[(i, j)]`: probability that `i`'s block ends up on the main chain
/// after `j` forked `i`'s round. The diagonal is unused and left at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WinMatrix(pub SquareMatrix);

impl ForkMatrix {
    pub fn n(&self) -> usize {
        self.0.n()
    }
}

/// Probability that a competing block appears within `delay` seconds when
/// blocks arrive as a Poisson process with mean spacing `block_interval`.
#[inline]
pub fn fork_probability(delay: f64, block_interval: f64) -> f64 {
    -(-delay / block_interval).exp_m1()
}

pub fn fork_matrix(delays: &SquareMatrix, block_interval: f64) -> ForkMatrix {
    let n = delays.n();
    ForkMatrix(SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else {
            fork_probability(delays[(i, j)], block_interval)
        }
    }))
}

/// Fork-resolution probabilities under `scenario`'s tie-break rule.
///
/// A fork is resolved by the next block: whoever mines it extends one of the
/// two competing blocks. Miner `k` extends `i`'s block
/// - under first-seen, if `i`'s block reached `k` before `j`'s did, i.e.
///   `T[i][k] < τ + T[j][k]`, where `τ` is the fork time, exponentially
///   distributed and conditioned on `τ < T[i][j]`;
/// - under the random rule with probability ½ for third parties;
/// - under last-generated never, unless `k == i`.
///
/// With equal off-diagonal delays this reduces to `1 - α_j`,
/// `(1 - α_j + α_i) / 2` and `α_i` respectively.
pub fn win_matrix(scenario: &Scenario, delays: &SquareMatrix) -> WinMatrix {
    let alpha = scenario.alpha();
    match scenario.tie_break() {
        TieBreakRule::FirstSeen if delays.common_off_diagonal().is_none() => {
            first_seen_race(alpha, delays, scenario.block_interval())
        }
        rule => closed_form_win_matrix(alpha, rule),
    }
}

/// Fork-resolution probabilities for equal off-diagonal delays.
pub fn closed_form_win_matrix(alpha: &[f64], rule: TieBreakRule) -> WinMatrix {
    let n = alpha.len();
    WinMatrix(SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            return 0.0;
        }
        match rule {
            TieBreakRule::FirstSeen => 1.0 - alpha[j],
            TieBreakRule::Random => (1.0 - alpha[j] + alpha[i]) / 2.0,
            TieBreakRule::LastGenerated => alpha[i],
        }
    }))
}

/// First-seen fork resolution for an arbitrary delay matrix, O(N³).
pub fn first_seen_race(alpha: &[f64], delays: &SquareMatrix, block_interval: f64) -> WinMatrix {
    let n = alpha.len();
    // decay[i][k] = exp(-T_ik / T), growth[j][k] = exp(T_jk / T)
    let decay = delays.map(|t| (-t / block_interval).exp());
    let growth = delays.map(|t| (t / block_interval).exp());

    let mut w = SquareMatrix::zeros(n);
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t_i = delays.row(i);
            let decay_i = decay.row(i);
            (0..n)
                .map(|j| {
                    if i == j {
                        return 0.0;
                    }
                    let t_j = delays.row(j);
                    let t_ij = t_i[j];
                    if t_ij == 0.0 {
                        // Limit τ → 0: k follows whichever block reaches it first,
                        // ties going to i.
                        return (0..n).filter(|&k| t_i[k] <= t_j[k]).map(|k| alpha[k]).sum();
                    }
                    let growth_j = growth.row(j);
                    let floor = decay_i[j];
                    let norm = -(-t_ij / block_interval).exp_m1();
                    // P(τ > T_ik - T_jk | τ < T_ij) · norm
                    //   = max(0, min(1, exp((T_jk - T_ik)/T)) - exp(-T_ij/T)).
                    // Four independent accumulators let the loop vectorize.
                    let term = |a: f64, d: f64, g: f64| a * ((d * g).min(1.0) - floor).max(0.0);
                    let mut lanes = [0.0f64; 4];
                    let a4 = alpha.chunks_exact(4);
                    let d4 = decay_i.chunks_exact(4);
                    let g4 = growth_j.chunks_exact(4);
                    let tail: f64 = a4
                        .remainder()
                        .iter()
                        .zip(d4.remainder())
                        .zip(g4.remainder())
                        .map(|((&a, &d), &g)| term(a, d, g))
                        .sum();
                    for ((a, d), g) in a4.zip(d4).zip(g4) {
                        for l in 0..4 {
                            lanes[l] += term(a[l], d[l], g[l]);
                        }
                    }
                    let acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail;
                    (acc / norm).clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        w.row_mut(i).copy_from_slice(&row);
    }
    WinMatrix(w)
}

/// Stationary distribution of the miner who starts each round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundInitiation {
    pub pi: Vec<f64>,
    pub iterations: usize,
    /// L∞ change of every iteration, in order.
    pub deltas: Vec<f64>,
}

/// Row `j` holds the distribution of the next round's initiator given that
/// `j` started the current one:
/// `P[j][i] = α_i (1 - F_ji) + α_i Σ_k α_k F_jk`.
pub fn transition_matrix(alpha: &[f64], fork: &ForkMatrix) -> SquareMatrix {
    let n = alpha.len();
    let escape = fork_escape(alpha, fork);
    SquareMatrix::from_fn(n, |j, i| alpha[i] * (1.0 - fork.0[(j, i)] + escape[j]))
}

/// `s_j = Σ_k α_k F_jk`: probability that the round `j` starts is forked.
pub fn fork_escape(alpha: &[f64], fork: &ForkMatrix) -> Vec<f64> {
    fork.0
        .rows()
        .map(|row| row.iter().zip(alpha).map(|(f, a)| f * a).sum())
        .collect()
}

/// Iterates the round-initiation recurrence from `π = α` to its fixed point.
pub fn stationary_round_initiation(alpha: &[f64], fork: &ForkMatrix) -> Result<RoundInitiation> {
    let n = alpha.len();
    let escape = fork_escape(alpha, fork);
    let mut pi = alpha.to_vec();
    let mut next = vec![0.0; n];
    let mut inflow = vec![0.0; n];
    let mut deltas = Vec::new();

    for iteration in 1..=MAX_ITERATIONS {
        // π'_i = α_i (Σ_j π_j (1 + s_j) - Σ_j π_j F_ji)
        let base: f64 = pi.iter().zip(&escape).map(|(p, s)| p * (1.0 + s)).sum();
        inflow.iter_mut().for_each(|c| *c = 0.0);
        for (j, row) in fork.0.rows().enumerate() {
            let pj = pi[j];
            for (c, f) in inflow.iter_mut().zip(row) {
                *c += pj * f;
            }
        }
        let mut delta: f64 = 0.0;
        for i in 0..n {
            next[i] = alpha[i] * (base - inflow[i]);
            let step = (next[i] - pi[i]).abs();
            delta = if step.is_nan() {
                f64::INFINITY
            } else {
                delta.max(step)
            };
        }
        std::mem::swap(&mut pi, &mut next);
        deltas.push(delta);
        if !delta.is_finite() {
            break;
        }
        if delta < FIXED_POINT_TOLERANCE {
            let total: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|p| *p /= total);
            return Ok(RoundInitiation {
                pi,
                iterations: iteration,
                deltas,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: deltas.len(),
        last_delta: deltas.last().copied().unwrap_or(f64::NAN),
    })
}

/// Long-run share of main-chain blocks per miner.
///
/// `r_i = π_i (1 - Σ_j α_j F_ij + Σ_j α_j F_ij W_ij) + Σ_j π_j α_i F_ji (1 - W_ji)`
pub fn reward_shares(alpha: &[f64], pi: &[f64], fork: &ForkMatrix, win: &WinMatrix) -> Vec<f64> {
    let n = alpha.len();
    let mut r = vec![0.0; n];
    for i in 0..n {
        let f_i = fork.0.row(i);
        let w_i = win.0.row(i);
        let mut lost = 0.0;
        for j in 0..n {
            lost += alpha[j] * f_i[j] * (1.0 - w_i[j]);
        }
        r[i] = pi[i] * (1.0 - lost);
    }
    for j in 0..n {
        let f_j = fork.0.row(j);
        let w_j = win.0.row(j);
        let pj = pi[j];
        for i in 0..n {
            r[i] += pj * alpha[i] * f_j[i] * (1.0 - w_j[i]);
        }
    }
    r
}

/// Per-miner round initiation, reward share, mining profit and profit rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub alpha: Vec<f64>,
    pub pi: Vec<f64>,
    pub r: Vec<f64>,
    pub mp: Vec<f64>,
    pub mpr: Vec<f64>,
    pub fingerprint: String,
}

impl FairnessReport {
    /// Derives `MP = r - α` and `MPR = MP / α`.
    pub fn from_shares(alpha: &[f64], pi: Vec<f64>, r: Vec<f64>, fingerprint: String) -> Self {
        let mp: Vec<f64> = r.iter().zip(alpha).map(|(r, a)| r - a).collect();
        let mpr = mp.iter().zip(alpha).map(|(m, a)| m / a).collect();
        Self {
            alpha: alpha.to_vec(),
            pi,
            r,
            mp,
            mpr,
            fingerprint,
        }
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    /// `(|Σr - 1|, |ΣMP|)`
    pub fn conservation_residuals(&self) -> (f64, f64) {
        let r: f64 = self.r.iter().sum();
        let mp: f64 = self.mp.iter().sum();
        ((r - 1.0).abs(), mp.abs())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "miner_id,alpha,pi,reward_share,mp,mpr")?;
        for i in 0..self.n() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                i, self.alpha[i], self.pi[i], self.r[i], self.mp[i], self.mpr[i]
            )?;
        }
        Ok(())
    }
}

/// Everything the engine computes for one delay realization.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub delays: SquareMatrix,
    pub fork: ForkMatrix,
    pub win: WinMatrix,
    pub initiation: RoundInitiation,
    pub report: FairnessReport,
}

/// Runs the engine for a realized delay matrix.
pub fn analyze_with_delays(scenario: &Scenario, delays: SquareMatrix) -> Result<Analysis> {
    if delays.n() != scenario.n_miners() {
        return Err(Error::invalid(
            "delays",
            format!(
                "matrix is {0}x{0} for {1} miners",
                delays.n(),
                scenario.n_miners()
            ),
        ));
    }
    let alpha = scenario.alpha();
    let fork = fork_matrix(&delays, scenario.block_interval());
    let win = win_matrix(scenario, &delays);
    let initiation = stationary_round_initiation(alpha, &fork)?;
    let r = reward_shares(alpha, &initiation.pi, &fork, &win);
    let report =
        FairnessReport::from_shares(alpha, initiation.pi.clone(), r, scenario.fingerprint());
    Ok(Analysis {
        delays,
        fork,
        win,
        initiation,
        report,
    })
}

/// Realizes delays (with `seed`, or the model's own seed) and runs the engine.
pub fn analyze(scenario: &Scenario, seed: Option<u64>) -> Result<Analysis> {
    let seed = seed.or(scenario.delays().seed()).unwrap_or(0);
    let delays = realize_delays(scenario.delays(), scenario.n_miners(), seed)?;
    analyze_with_delays(scenario, delays)
}

pub fn fairness_report(scenario: &Scenario, seed: Option<u64>) -> Result<FairnessReport> {
    analyze(scenario, seed).map(|a| a.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{DelayModel, HashrateDistribution};

    fn scenario(alpha: Vec<f64>, d: f64, rule: TieBreakRule) -> Scenario {
        Scenario::new(
            HashrateDistribution::new(alpha).unwrap(),
            600.0,
            DelayModel::FixedUniform { d },
            rule,
        )
        .unwrap()
    }

    #[test]
    fn fork_rate_values() {
        assert_eq!(fork_probability(0.0, 600.0), 0.0);
        assert!((fork_probability(6.0, 600.0) - 0.009_950_166_250_831_9).abs() < 1e-15);
        assert!((2.0 * fork_probability(24.0, 600.0) - 0.078_421_1).abs() < 5e-8);
    }

    #[test]
    fn fixed_delay_win_closed_forms() {
        let alpha = [0.1, 0.2, 0.7];
        let w = closed_form_win_matrix(&alpha, TieBreakRule::FirstSeen);
        assert!((w.0[(0, 1)] - 0.8).abs() < 1e-15);
        let w = closed_form_win_matrix(&alpha, TieBreakRule::Random);
        assert!((w.0[(0, 1)] - 0.45).abs() < 1e-15);
        let w = closed_form_win_matrix(&alpha, TieBreakRule::LastGenerated);
        assert_eq!(w.0[(0, 1)], 0.1);
    }

    #[test]
    fn race_degenerates_to_first_seen_closed_form() {
        let alpha = [0.35, 0.25, 0.2, 0.15, 0.05];
        let delays = SquareMatrix::uniform_off_diagonal(5, 9.0);
        let race = first_seen_race(&alpha, &delays, 600.0);
        let closed = closed_form_win_matrix(&alpha, TieBreakRule::FirstSeen);
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert!((race.0[(i, j)] - closed.0[(i, j)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn race_favours_the_faster_block() {
        // Miner 0 reaches miner 2 instantly, miner 1 is far from everyone.
        let alpha = [0.3, 0.3, 0.4];
        let delays = SquareMatrix::from_rows(&[
            vec![0.0, 10.0, 1.0],
            vec![10.0, 0.0, 30.0],
            vec![1.0, 30.0, 0.0],
        ])
        .unwrap();
        let w = first_seen_race(&alpha, &delays, 600.0);
        assert!((w.0[(0, 1)] - 0.7).abs() < 1e-12);
        assert!((w.0[(1, 0)] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn no_forks_means_reward_equals_hashrate() {
        let s = scenario(vec![0.5, 0.3, 0.2], 0.0, TieBreakRule::FirstSeen);
        let report = fairness_report(&s, None).unwrap();
        for i in 0..3 {
            assert!((report.pi[i] - s.alpha()[i]).abs() < 1e-15);
            assert!((report.r[i] - s.alpha()[i]).abs() < 1e-15);
            assert!(report.mpr[i].abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_miners_split_evenly() {
        for rule in TieBreakRule::ALL {
            let s = scenario(vec![0.25; 4], 6.0, rule);
            let report = fairness_report(&s, None).unwrap();
            assert!(report.pi.iter().all(|p| (p - 0.25).abs() < 1e-14));
            assert!(report.mpr.iter().all(|m| m.abs() < 1e-10));
        }
    }

    #[test]
    fn transition_rows_are_stochastic() {
        let alpha = [0.5, 0.3, 0.2];
        let delays = SquareMatrix::from_rows(&[
            vec![0.0, 3.0, 40.0],
            vec![7.0, 0.0, 1.0],
            vec![12.0, 2.0, 0.0],
        ])
        .unwrap();
        let p = transition_matrix(&alpha, &fork_matrix(&delays, 600.0));
        for row in p.rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_layout() {
        let s = scenario(vec![0.6, 0.4], 6.0, TieBreakRule::FirstSeen);
        let mut buf = Vec::new();
        fairness_report(&s, None)
            .unwrap()
            .write_csv(&mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("miner_id,alpha,pi,reward_share,mp,mpr"));
        assert!(lines.next().unwrap().starts_with("0,0.6,"));
        assert!(lines.next().unwrap().starts_with("1,0.4,"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn nan_delays_surface_as_non_convergence() {
        let fork = ForkMatrix(SquareMatrix::uniform_off_diagonal(2, f64::NAN));
        assert!(matches!(
            stationary_round_initiation(&[0.5, 0.5], &fork),
            Err(Error::NoConvergence { .. })
        ));
    }
}
