mod oracle;

#[test]
fn additive_and_row_shift_invariant() {
    let (additivity, translation) = oracle::naturalness_audit(1000);
    assert!(additivity <= 1e-12, "{additivity:e}");
    assert!(translation <= 1e-12, "{translation:e}");
}
