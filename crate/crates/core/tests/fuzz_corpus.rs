//! Replays the checked-in fuzz corpus through the parsers so the seeds stay
//! valid as the formats evolve.

use std::fs;
use std::path::PathBuf;

use minefair::parse_scenario;
use minefair::report::parse_dt_list;

fn corpus(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds in {}", dir.display());
    files
}

#[test]
fn scenario_seeds_parse() {
    for (path, text) in corpus("parse_scenario") {
        parse_scenario(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn dt_list_seeds_parse() {
    for (path, text) in corpus("parse_dt_list") {
        parse_dt_list(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn truncated_scenarios_never_panic() {
    for (_, text) in corpus("parse_scenario") {
        for end in (0..text.len()).filter(|i| text.is_char_boundary(*i)) {
            let _ = parse_scenario(&text[..end]);
        }
    }
}
