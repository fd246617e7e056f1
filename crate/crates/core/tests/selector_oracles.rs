mod oracle;

use folde_core::linalg::Matrix;
use folde_core::selector::{constant_liar_select, top_n_select, ucb_score, ClOptions};

#[test]
fn update_matches_precision_conditioning() {
    let audit = oracle::constant_liar_audit(100);
    assert!(audit.worst_relative_error <= 1e-9, "{:e}", audit.worst_relative_error);
    assert!(audit.covariance_bitwise_stable);
}

#[test]
fn large_alpha_recovers_top_n_on_diagonal_covariance() {
    let mean: Vec<f64> = (0..40).map(|i| ((i * 37) % 23) as f64 * 0.1).collect();
    let mut cov = Matrix::identity(40);
    for i in 0..40 {
        cov[(i, i)] = 0.05 + (i % 5) as f64 * 0.01;
    }
    let ucb = ucb_score(&mean, &cov, 1.0).unwrap();
    let cl = constant_liar_select(&mean, &cov, 12, &ClOptions::new(100.0)).unwrap();
    assert_eq!(cl, top_n_select(&ucb, 12));
}
