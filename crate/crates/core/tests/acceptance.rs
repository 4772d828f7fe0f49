//! Acceptance criteria, one line per criterion.

use std::io::Write;

use lienard_core::selftest::{run, Options};

#[test]
fn acceptance() {
    let outcomes = run(&Options::default());
    // written past the harness capture so the table shows in every run
    let mut out = std::io::stdout().lock();
    for o in &outcomes {
        writeln!(out, "{o}").unwrap();
    }
    assert_eq!(outcomes.len(), 7);
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

#[test]
fn corrupted_generator_is_named() {
    let options = Options {
        filter: Some("power".into()),
        corrupt_generator: true,
    };
    let outcomes = run(&options);
    let cert = outcomes.iter().find(|o| o.id == 3).unwrap();
    assert!(!cert.pass);
    assert!(cert.detail.contains("g = x^3"), "{}", cert.detail);
}

#[test]
fn filter_selects_cases() {
    let outcomes = run(&Options {
        filter: Some("ep".into()),
        corrupt_generator: false,
    });
    assert!(outcomes.iter().all(|o| o.pass), "{outcomes:?}");
    assert!(outcomes.iter().all(|o| o.id != 6));
    let table = outcomes.iter().find(|o| o.id == 1).unwrap();
    assert!(table.detail.starts_with("1 instances"), "{}", table.detail);
}
