#![allow(dead_code)]

use std::path::PathBuf;

use minefair::{load_scenario, DelayModel, HashrateDistribution, Scenario, TieBreakRule};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

pub fn bitcoin() -> Scenario {
    load_scenario(scenario_path("bitcoin-2024.scenario")).expect("bundled scenario")
}

pub fn bitcoin_logistic() -> Scenario {
    load_scenario(scenario_path("bitcoin-2024-logistic.scenario")).expect("bundled scenario")
}

pub fn uniform_scenario(alpha: Vec<f64>, d: f64, rule: TieBreakRule) -> Scenario {
    Scenario::new(
        HashrateDistribution::new(alpha).unwrap(),
        600.0,
        DelayModel::FixedUniform { d },
        rule,
    )
    .unwrap()
}

/// Delay giving fork probability `f` at T = 600.
pub fn delay_for_fork_rate(f: f64) -> f64 {
    -600.0 * (1.0 - f).ln()
}

/// Two miners with shares (a, b) and symmetric fork probability f, solved by
/// hand.
///
/// Next-initiator probabilities:
///   P(1 | 1) = a(1 + b f),  P(1 | 2) = a(1 - b f)
/// Stationary: π1 = P(1|2) / (1 - P(1|1) + P(1|2)).
/// Rewards (first-seen, W12 = 1 - b, W21 = 1 - a):
///   r1 = π1 (1 - b f + b f W12) + π2 a f (1 - W21)
pub struct TwoMinerOracle {
    pub pi: [f64; 2],
    pub r: [f64; 2],
}

pub fn two_miner_oracle(a: f64, f: f64, rule: TieBreakRule) -> TwoMinerOracle {
    let b = 1.0 - a;
    let p11 = a * (1.0 + b * f);
    let p12 = a * (1.0 - b * f);
    let pi1 = p12 / (1.0 - p11 + p12);
    let pi2 = 1.0 - pi1;
    let (w12, w21) = match rule {
        TieBreakRule::FirstSeen => (1.0 - b, 1.0 - a),
        TieBreakRule::Random => ((1.0 - b + a) / 2.0, (1.0 - a + b) / 2.0),
        TieBreakRule::LastGenerated => (a, b),
    };
    let r1 = pi1 * (1.0 - b * f + b * f * w12) + pi2 * a * f * (1.0 - w21);
    let r2 = pi2 * (1.0 - a * f + a * f * w21) + pi1 * b * f * (1.0 - w12);
    TwoMinerOracle {
        pi: [pi1, pi2],
        r: [r1, r2],
    }
}
