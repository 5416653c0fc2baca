//! Two-group game over intra-group propagation speed.
//!
//! Miners are split into a large group (the biggest miners holding at least
//! half the hashrate) and a small group. Each group picks whether blocks
//! travel fast or slow among its own members; blocks between groups always
//! travel slowly. Utilities are aggregated group profit rates.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delays::realize_delays;
use crate::engine::{analyze_with_delays, FairnessReport};
use crate::error::Result;
use crate::matrix::SquareMatrix;
use crate::scenario::{DelayModel, Scenario};

/// Utility differences below this are treated as ties when checking for
/// profitable deviations.
pub const DEVIATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    Large,
    Small,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPartition {
    pub groups: Vec<Group>,
}

impl GroupPartition {
    pub fn members(&self, group: Group) -> impl Iterator<Item = usize> + '_ {
        self.groups
            .iter()
            .enumerate()
            .filter(move |(_, g)| **g == group)
            .map(|(i, _)| i)
    }

    pub fn hashrate(&self, group: Group, alpha: &[f64]) -> f64 {
        self.members(group).map(|i| alpha[i]).sum()
    }
}

/// Large group: the shortest prefix of miners sorted by share (descending,
/// ties by index) whose cumulative share reaches one half.
pub fn partition_groups(alpha: &[f64]) -> GroupPartition {
    let mut order: Vec<usize> = (0..alpha.len()).collect();
    order.sort_by(|&a, &b| alpha[b].total_cmp(&alpha[a]).then(a.cmp(&b)));
    let mut groups = vec![Group::Small; alpha.len()];
    let mut cumulative = 0.0;
    for i in order {
        groups[i] = Group::Large;
        cumulative += alpha[i];
        // slack for shares that were renormalized
        if cumulative >= 0.5 - 1e-12 {
            break;
        }
    }
    GroupPartition { groups }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speed {
    Fast,
    Slow,
}

impl Speed {
    pub const BOTH: [Speed; 2] = [Speed::Fast, Speed::Slow];

    fn other(self) -> Self {
        match self {
            Speed::Fast => Speed::Slow,
            Speed::Slow => Speed::Fast,
        }
    }

    fn index(self) -> usize {
        match self {
            Speed::Fast => 0,
            Speed::Slow => 1,
        }
    }
}

impl fmt::Display for Speed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Speed::Fast => "fast",
            Speed::Slow => "slow",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub large: Speed,
    pub small: Speed,
}

impl fmt::Display for StrategyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.large, self.small)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityKind {
    /// Σ MP over the group divided by Σ α over the group.
    #[default]
    GroupMpr,
    /// Σ MPR over the group.
    SumMpr,
    /// Σ MP over the group.
    SumMp,
}

impl std::str::FromStr for UtilityKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "group_mpr" => Ok(UtilityKind::GroupMpr),
            "sum_mpr" => Ok(UtilityKind::SumMpr),
            "sum_mp" => Ok(UtilityKind::SumMp),
            other => Err(crate::error::Error::invalid(
                "utility",
                format!("unknown utility {other:?} (expected group_mpr, sum_mpr or sum_mp)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub fast_d: f64,
    pub slow_d: f64,
    pub utility: UtilityKind,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            fast_d: 3.0,
            slow_d: 6.0,
            utility: UtilityKind::GroupMpr,
        }
    }
}

pub fn group_delay_model(
    partition: &GroupPartition,
    profile: StrategyProfile,
    fast_d: f64,
    slow_d: f64,
) -> DelayModel {
    let pick = |s: Speed| if s == Speed::Fast { fast_d } else { slow_d };
    let groups = partition
        .groups
        .iter()
        .map(|g| match g {
            Group::Large => 0,
            Group::Small => 1,
        })
        .collect();
    let group_delays = SquareMatrix::from_rows(&[
        vec![pick(profile.large), slow_d],
        vec![slow_d, pick(profile.small)],
    ])
    .expect("2x2");
    DelayModel::GroupedFixed {
        groups,
        group_delays,
    }
}

/// Delay matrix for one strategy profile.
pub fn group_delay_matrix(
    partition: &GroupPartition,
    profile: StrategyProfile,
    fast_d: f64,
    slow_d: f64,
) -> SquareMatrix {
    let model = group_delay_model(partition, profile, fast_d, slow_d);
    realize_delays(&model, partition.groups.len(), 0)
        .expect("grouped model is valid by construction")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameCell {
    pub profile: StrategyProfile,
    pub utility_large: f64,
    pub utility_small: f64,
    pub equilibrium: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameOutcome {
    /// Indexed `[large][small]`, fast first.
    pub cells: [[GameCell; 2]; 2],
    pub hashrate_large: f64,
    pub hashrate_small: f64,
}

impl GameOutcome {
    pub fn cell(&self, profile: StrategyProfile) -> &GameCell {
        &self.cells[profile.large.index()][profile.small.index()]
    }

    pub fn equilibria(&self) -> Vec<StrategyProfile> {
        self.cells
            .iter()
            .flatten()
            .filter(|c| c.equilibrium)
            .map(|c| c.profile)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "large,small,utility_large,utility_small,eq")?;
        for c in self.cells.iter().flatten() {
            writeln!(
                out,
                "{},{},{},{},{}",
                c.profile.large,
                c.profile.small,
                c.utility_large,
                c.utility_small,
                if c.equilibrium { "EQ" } else { "" }
            )?;
        }
        Ok(())
    }

    /// Aligned 2×2 table; rows are the large group's choice.
    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{:<14}{:<34}{:<34}", "large \\ small", "fast", "slow")?;
        for row in &self.cells {
            write!(out, "{:<14}", row[0].profile.large.to_string())?;
            for c in row {
                let cell = format!(
                    "{:+.6e} / {:+.6e}{}",
                    c.utility_large,
                    c.utility_small,
                    if c.equilibrium { " EQ" } else { "" }
                );
                write!(out, "{cell:<34}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn utility(
    report: &FairnessReport,
    partition: &GroupPartition,
    group: Group,
    kind: UtilityKind,
) -> f64 {
    let members = || partition.members(group);
    match kind {
        UtilityKind::GroupMpr => {
            let mp: f64 = members().map(|i| report.mp[i]).sum();
            mp / partition.hashrate(group, &report.alpha)
        }
        UtilityKind::SumMpr => members().map(|i| report.mpr[i]).sum(),
        UtilityKind::SumMp => members().map(|i| report.mp[i]).sum(),
    }
}

/// Evaluates all four profiles and marks pure Nash equilibria.
pub fn solve_game(
    scenario: &Scenario,
    partition: &GroupPartition,
    config: &GameConfig,
) -> Result<GameOutcome> {
    let profiles: Vec<StrategyProfile> = Speed::BOTH
        .iter()
        .flat_map(|&large| {
            Speed::BOTH
                .iter()
                .map(move |&small| StrategyProfile { large, small })
        })
        .collect();
    let utilities: Vec<(f64, f64)> = profiles
        .par_iter()
        .map(|&profile| {
            let delays = group_delay_matrix(partition, profile, config.fast_d, config.slow_d);
            let report = analyze_with_delays(scenario, delays)?.report;
            Ok((
                utility(&report, partition, Group::Large, config.utility),
                utility(&report, partition, Group::Small, config.utility),
            ))
        })
        .collect::<Result<_>>()?;

    let at = |p: StrategyProfile| utilities[p.large.index() * 2 + p.small.index()];
    let cell = |p: StrategyProfile| {
        let (ul, us) = at(p);
        let large_dev = at(StrategyProfile {
            large: p.large.other(),
            ..p
        })
        .0;
        let small_dev = at(StrategyProfile {
            small: p.small.other(),
            ..p
        })
        .1;
        GameCell {
            profile: p,
            utility_large: ul,
            utility_small: us,
            equilibrium: large_dev <= ul + DEVIATION_TOLERANCE
                && small_dev <= us + DEVIATION_TOLERANCE,
        }
    };
    let row = |large| {
        [
            cell(StrategyProfile {
                large,
                small: Speed::Fast,
            }),
            cell(StrategyProfile {
                large,
                small: Speed::Slow,
            }),
        ]
    };
    Ok(GameOutcome {
        cells: [row(Speed::Fast), row(Speed::Slow)],
        hashrate_large: partition.hashrate(Group::Large, scenario.alpha()),
        hashrate_small: partition.hashrate(Group::Small, scenario.alpha()),
    })
}
