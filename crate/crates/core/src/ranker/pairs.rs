//! Directed ranking pairs and the transitivity-aware train/validation split.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// `winner` has the strictly higher label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair {
    pub winner: usize,
    pub loser: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSet {
    pub n_items: usize,
    pub pairs: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPairs {
    pub n_items: usize,
    pub train: Vec<Pair>,
    pub validation: Vec<Pair>,
}

/// One pair per unordered pair of items with unequal labels. Tied labels
/// produce no pair.
pub fn enumerate_pairs(labels: &[f64]) -> Result<PairSet> {
    if labels.len() < 2 {
        return Err(Error::TooFewRecords {
            needed: 2,
            found: labels.len(),
        });
    }
    if labels.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("ranking label".into()));
    }
    let mut pairs = Vec::new();
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            if labels[i] > labels[j] {
                pairs.push(Pair { winner: i, loser: j });
            } else if labels[j] > labels[i] {
                pairs.push(Pair { winner: j, loser: i });
            }
        }
    }
    Ok(PairSet {
        n_items: labels.len(),
        pairs,
    })
}

/// Keeps a uniform random subset of at most `max` pairs.
pub fn subsample<R: Rng + ?Sized>(set: &PairSet, max: usize, rng: &mut R) -> PairSet {
    if set.pairs.len() <= max {
        return set.clone();
    }
    let mut pairs: Vec<Pair> = set.pairs.choose_multiple(rng, max).copied().collect();
    pairs.sort();
    PairSet {
        n_items: set.n_items,
        pairs,
    }
}

/// Items reachable from `start` along winner -> loser edges.
fn reachable_from(start: usize, adjacency: &[Vec<usize>], seen: &mut [bool], queue: &mut Vec<usize>) {
    seen.iter_mut().for_each(|s| *s = false);
    queue.clear();
    queue.push(start);
    let mut head = 0;
    while head < queue.len() {
        let x = queue[head];
        head += 1;
        for &y in &adjacency[x] {
            if !seen[y] {
                seen[y] = true;
                queue.push(y);
            }
        }
    }
}

/// Shuffles the pairs and labels `round(fraction * n)` of them train. Each
/// remaining pair becomes a validation pair only if its loser is not reachable
/// from its winner through train edges (breadth-first search); implied pairs
/// are dropped, since the train set already solves them.
pub fn split_pairs<R: Rng + ?Sized>(set: &PairSet, fraction: f64, rng: &mut R) -> SplitPairs {
    let mut pairs = set.pairs.clone();
    pairs.shuffle(rng);
    let n_train = libm::round(fraction.clamp(0.0, 1.0) * pairs.len() as f64) as usize;
    let candidates = pairs.split_off(n_train.min(pairs.len()));
    let mut train = pairs;

    let mut adjacency = vec![Vec::new(); set.n_items];
    for p in &train {
        adjacency[p.winner].push(p.loser);
    }
    let mut by_winner = candidates;
    by_winner.sort();
    let mut seen = vec![false; set.n_items];
    let mut queue = Vec::new();
    let mut validation = Vec::new();
    let mut current = None;
    for p in by_winner {
        if current != Some(p.winner) {
            reachable_from(p.winner, &adjacency, &mut seen, &mut queue);
            current = Some(p.winner);
        }
        if !seen[p.loser] {
            validation.push(p);
        }
    }
    train.sort();
    SplitPairs {
        n_items: set.n_items,
        train,
        validation,
    }
}
