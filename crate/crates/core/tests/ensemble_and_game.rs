mod common;

use minefair::engine::fairness_report;
use minefair::ensemble::{run_ensemble, EnsembleConfig};
use minefair::game::{
    group_delay_model, partition_groups, solve_game, GameConfig, Group, Speed, StrategyProfile,
    UtilityKind,
};
use minefair::scenario::{expand_pool_distribution, PoolDistributionSpec};
use minefair::{DelayModel, Scenario, TieBreakRule};

fn small_logistic(scale: Option<f64>) -> Scenario {
    let alpha = expand_pool_distribution(&PoolDistributionSpec {
        named_shares: vec![("a".into(), 0.3), ("b".into(), 0.2), ("c".into(), 0.1)],
        fill_to: 30,
    })
    .unwrap();
    Scenario::new(
        alpha,
        600.0,
        DelayModel::LogisticRandom {
            mean: 6.0,
            symmetric: false,
            seed: 0,
            scale,
        },
        TieBreakRule::FirstSeen,
    )
    .unwrap()
}

#[test]
fn degenerate_logistic_has_no_spread() {
    let stats = run_ensemble(&EnsembleConfig {
        scenario: small_logistic(Some(0.0)),
        n_draws: 4,
        master_seed: 1,
    })
    .unwrap();
    assert!(stats.std_mpr.iter().all(|s| *s == 0.0));
    for (m, f) in stats.mean_mpr.iter().zip(&stats.fixed_mpr) {
        assert!((m - f).abs() < 1e-15);
    }
}

#[test]
fn ensemble_is_deterministic() {
    let config = EnsembleConfig {
        scenario: small_logistic(None),
        n_draws: 5,
        master_seed: 77,
    };
    assert_eq!(
        run_ensemble(&config).unwrap(),
        run_ensemble(&config).unwrap()
    );
    let other = EnsembleConfig {
        master_seed: 78,
        ..config.clone()
    };
    assert_ne!(
        run_ensemble(&config).unwrap(),
        run_ensemble(&other).unwrap()
    );
}

#[test]
fn ensemble_requires_logistic_delays() {
    let s = common::uniform_scenario(vec![0.5, 0.3, 0.2], 6.0, TieBreakRule::FirstSeen);
    let err = run_ensemble(&EnsembleConfig {
        scenario: s,
        n_draws: 3,
        master_seed: 0,
    })
    .unwrap_err();
    assert!(err.to_string().contains("logistic"));
}

#[test]
fn ensemble_mean_converges_with_draws() {
    let run = |n_draws| {
        run_ensemble(&EnsembleConfig {
            scenario: small_logistic(None),
            n_draws,
            master_seed: 5,
        })
        .unwrap()
    };
    let few = run(25);
    let many = run(100);
    assert!(few.max_conservation_residual < 1e-10);
    assert!(many.max_conservation_residual < 1e-10);
    // Standard error of the mean, averaged over miners.
    let sem = |s: &minefair::ensemble::EnsembleStats| {
        s.std_mpr.iter().sum::<f64>() / s.std_mpr.len() as f64 / (s.n_draws as f64).sqrt()
    };
    let ratio = sem(&few) / sem(&many);
    assert!(ratio > 1.5 && ratio < 2.7, "ratio {ratio}");
    let spread = |s: &minefair::ensemble::EnsembleStats| {
        s.mean_mpr
            .iter()
            .zip(&s.fixed_mpr)
            .map(|(m, f)| (m - f).powi(2))
            .sum::<f64>()
    };
    assert!(spread(&many) < spread(&few));
}

#[test]
fn bitcoin_partition_is_the_top_three_pools() {
    let s = common::bitcoin();
    let p = partition_groups(s.alpha());
    let large: Vec<usize> = p.members(Group::Large).collect();
    // 0.295 + 0.178 = 0.473 < 0.5 <= 0.473 + 0.125
    assert_eq!(large, vec![0, 1, 2]);
    assert!((p.hashrate(Group::Large, s.alpha()) - 0.598).abs() < 1e-12);
}

#[test]
fn bitcoin_game_structure() {
    let s = common::bitcoin();
    let p = partition_groups(s.alpha());
    let outcome = solve_game(&s, &p, &GameConfig::default()).unwrap();
    let fast_fast = StrategyProfile {
        large: Speed::Fast,
        small: Speed::Fast,
    };
    assert_eq!(outcome.equilibria(), vec![fast_fast]);
    let cell = outcome.cell(fast_fast);
    assert!(cell.utility_large > cell.utility_small);

    for c in outcome.cells.iter().flatten() {
        // zero-sum under the group profit-rate utility
        let total =
            c.utility_large * outcome.hashrate_large + c.utility_small * outcome.hashrate_small;
        assert!(total.abs() < 1e-10, "{}: {total}", c.profile);
    }
    for other in Speed::BOTH {
        let slow = outcome.cell(StrategyProfile {
            large: Speed::Slow,
            small: other,
        });
        let fast = outcome.cell(StrategyProfile {
            large: Speed::Fast,
            small: other,
        });
        assert!(fast.utility_large >= slow.utility_large);
        let slow = outcome.cell(StrategyProfile {
            large: other,
            small: Speed::Slow,
        });
        let fast = outcome.cell(StrategyProfile {
            large: other,
            small: Speed::Fast,
        });
        assert!(fast.utility_small >= slow.utility_small);
    }
}

#[test]
fn alternative_utilities_keep_an_equilibrium() {
    let s = common::uniform_scenario(
        vec![0.3, 0.2, 0.15, 0.1, 0.1, 0.05, 0.05, 0.05],
        6.0,
        TieBreakRule::FirstSeen,
    );
    let p = partition_groups(s.alpha());
    for utility in [
        UtilityKind::GroupMpr,
        UtilityKind::SumMpr,
        UtilityKind::SumMp,
    ] {
        let outcome = solve_game(
            &s,
            &p,
            &GameConfig {
                utility,
                ..GameConfig::default()
            },
        )
        .unwrap();
        assert!(!outcome.equilibria().is_empty(), "{utility:?}");
    }
}

#[test]
fn grouped_model_in_a_scenario_file_matches_the_game_matrix() {
    let s = common::uniform_scenario(vec![0.4, 0.3, 0.2, 0.1], 6.0, TieBreakRule::FirstSeen);
    let p = partition_groups(s.alpha());
    let profile = StrategyProfile {
        large: Speed::Fast,
        small: Speed::Slow,
    };
    let via_model = s
        .with_delays(group_delay_model(&p, profile, 3.0, 6.0))
        .unwrap();
    let a = fairness_report(&via_model, None).unwrap();
    let outcome = solve_game(&s, &p, &GameConfig::default()).unwrap();
    let mp_large: f64 = p.members(Group::Large).map(|i| a.mp[i]).sum();
    let expected = mp_large / p.hashrate(Group::Large, s.alpha());
    assert!((outcome.cell(profile).utility_large - expected).abs() < 1e-15);
}
