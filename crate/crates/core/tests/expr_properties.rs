//! Randomized properties of the expression core.

use lienard_core::selftest as suites;

#[test]
fn normalization_is_idempotent() {
    suites::idempotent_normalization(1000).unwrap();
}

#[test]
fn printed_trees_reparse() {
    suites::parser_round_trip(1000).unwrap();
}

#[test]
fn derivative_matches_central_difference() {
    let worst = suites::derivative_against_difference(500, 10).unwrap();
    eprintln!("worst relative derivative error {worst:.2e}");
}

#[test]
fn evaluation_commutes_with_normalization() {
    suites::evaluation_commutes(500).unwrap();
}

#[test]
fn antiderivatives_differentiate_back() {
    suites::antiderivative_round_trip(300).unwrap();
}
