mod common;

use minefair::{load_scenario, parse_scenario, DelayModel, Error, TieBreakRule};

#[test]
fn bundled_scenarios_load() {
    let s = common::bitcoin();
    assert_eq!(s.n_miners(), 1000);
    assert_eq!(s.block_interval(), 600.0);
    assert_eq!(s.tie_break(), TieBreakRule::FirstSeen);
    assert_eq!(s.delays(), &DelayModel::FixedUniform { d: 6.0 });
    assert!((s.alpha()[0] - 0.295).abs() < 1e-12);
    assert!((s.alpha().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    // the tail shares the residual evenly
    let tail = (1.0 - 0.921) / 988.0;
    assert!((s.alpha()[999] - tail).abs() < 1e-15);

    let logistic = common::bitcoin_logistic();
    assert_eq!(logistic.alpha(), s.alpha());
    assert_eq!(logistic.delays().seed(), Some(2024));

    let two = load_scenario(common::scenario_path("two-miners.scenario")).unwrap();
    assert_eq!(two.alpha(), &[0.6, 0.4]);
}

#[test]
fn large_uniform_delay_is_accepted() {
    let text = r#"
n_miners = 1000
block_interval_s = 600
tie_break = "random"
[hashrates]
kind = "pools"
fill_to = 1000
named = []
[delays]
model = "fixed_uniform"
d = 42
"#;
    let s = parse_scenario(text).unwrap();
    assert_eq!(s.n_miners(), 1000);
    assert_eq!(s.delays(), &DelayModel::FixedUniform { d: 42.0 });
}

#[test]
fn missing_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("absent.scenario");
    let err = load_scenario(&path).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.is_validation());
    assert!(err.to_string().contains("absent.scenario"), "{err}");
}

#[test]
fn miner_count_must_match_hashrates() {
    let text = r#"
n_miners = 3
block_interval_s = 600
tie_break = "first_seen"
[hashrates]
kind = "explicit"
values = [0.6, 0.4]
[delays]
model = "fixed_uniform"
d = 6
"#;
    let err = parse_scenario(text).unwrap_err();
    assert!(err.is_validation());
}

#[test]
fn fingerprint_tracks_content() {
    let a = common::bitcoin();
    let b = common::bitcoin();
    assert_eq!(a.fingerprint(), b.fingerprint());
    assert_ne!(
        a.fingerprint(),
        a.with_tie_break(TieBreakRule::Random).fingerprint()
    );
}
