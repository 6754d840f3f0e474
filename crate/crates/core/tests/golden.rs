use std::path::Path;

use oppsched::golden::{golden_regression, load_fixtures};

#[test]
fn fixtures_match() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/golden.toml");
    let fixtures = load_fixtures(&path).unwrap();
    assert!(fixtures.len() >= 25);
    let outcomes = golden_regression(&fixtures);
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed()).map(|o| o.to_string()).collect();
    assert!(failed.is_empty(), "{}", failed.join("\n"));
}

#[test]
fn unknown_fixture_is_named() {
    let mut fixtures = load_fixtures(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/golden.toml")).unwrap();
    let mut extra = fixtures["beta"].clone();
    extra.value = 0.0;
    fixtures.insert("no_such_quantity".into(), extra.clone());
    fixtures.insert("beta".into(), extra);
    let outcomes = golden_regression(&fixtures);
    let bad: Vec<&str> = outcomes.iter().filter(|o| !o.passed()).map(|o| o.name.as_str()).collect();
    assert_eq!(bad, ["beta", "no_such_quantity"]);
    assert!(outcomes.iter().find(|o| o.name == "beta").unwrap().to_string().starts_with("MISMATCH beta"));
}
