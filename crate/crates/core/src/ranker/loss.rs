//! Pairwise Bradley–Terry loss and the squared-error ablation loss.

use alloc::vec;
use alloc::vec::Vec;

use super::pairs::Pair;
use crate::error::{Error, Result};

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Mean over pairs of `-ln σ(s_winner - s_loser)`.
pub fn bt_loss(scores: &[f64], pairs: &[Pair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("pair partition"));
    }
    let total: f64 = pairs
        .iter()
        .map(|p| softplus(-(scores[p.winner] - scores[p.loser])))
        .sum();
    Ok(total / pairs.len() as f64)
}

/// Loss and its gradient with respect to every score.
pub fn bt_loss_grad(scores: &[f64], pairs: &[Pair]) -> Result<(f64, Vec<f64>)> {
    if pairs.is_empty() {
        return Err(Error::Empty("pair partition"));
    }
    let inv = 1.0 / pairs.len() as f64;
    let mut grad = vec![0.0; scores.len()];
    let mut total = 0.0;
    for p in pairs {
        let d = scores[p.winner] - scores[p.loser];
        total += softplus(-d);
        // d/dd softplus(-d) = -σ(-d)
        let g = -sigmoid(-d) * inv;
        grad[p.winner] += g;
        grad[p.loser] -= g;
    }
    Ok((total * inv, grad))
}

/// Mean squared error over the listed items.
pub fn mse_loss_grad(predictions: &[f64], labels: &[f64], items: &[usize]) -> Result<(f64, Vec<f64>)> {
    if items.is_empty() {
        return Err(Error::Empty("regression items"));
    }
    let inv = 1.0 / items.len() as f64;
    let mut grad = vec![0.0; predictions.len()];
    let mut total = 0.0;
    for &i in items {
        let r = predictions[i] - labels[i];
        total += r * r;
        grad[i] += 2.0 * r * inv;
    }
    Ok((total * inv, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: [Pair; 1] = [Pair { winner: 0, loser: 1 }];

    #[test]
    fn equal_scores_give_ln2() {
        assert!((bt_loss(&[0.3, 0.3], &P).unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn margin_two() {
        // ln(1 + e^-2)
        let expected = 0.126_928_011_042_972_6;
        assert!((bt_loss(&[2.0, 0.0], &P).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn translation_invariant() {
        let pairs = [Pair { winner: 0, loser: 1 }, Pair { winner: 2, loser: 1 }, Pair { winner: 0, loser: 2 }];
        let s = [0.4, -1.2, 2.5];
        let shifted: Vec<f64> = s.iter().map(|x| x + 17.25).collect();
        let a = bt_loss(&s, &pairs).unwrap();
        let b = bt_loss(&shifted, &pairs).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn empty_partition_errors() {
        assert!(bt_loss(&[1.0], &[]).is_err());
    }

    #[test]
    fn grad_matches_finite_difference() {
        let pairs = [Pair { winner: 0, loser: 1 }, Pair { winner: 2, loser: 1 }];
        let s = [0.1, 0.5, -0.3];
        let (_, g) = bt_loss_grad(&s, &pairs).unwrap();
        for i in 0..3 {
            let h = 1e-6;
            let mut up = s;
            let mut down = s;
            up[i] += h;
            down[i] -= h;
            let fd = (bt_loss(&up, &pairs).unwrap() - bt_loss(&down, &pairs).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn large_margins_are_stable() {
        assert!(softplus(-800.0) >= 0.0);
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
        assert!(bt_loss(&[-1e4, 1e4], &P).unwrap().is_finite());
    }
}
