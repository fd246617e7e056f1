//! Zero-shot scoring: log-likelihood ratio of mutant to wild-type residues under
//! a wild-type-marginal log-probability table, summed over mutated positions.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::LogProbMatrix;
use crate::variant::{Sequence, Variant};

pub fn naturalness_score(variant: &Variant, logprobs: &LogProbMatrix) -> Result<f64> {
    score_rows(variant, logprobs.rows())
}

/// Naturalness against a raw per-position table that need not be normalized.
pub fn score_rows(variant: &Variant, rows: &[[f64; 20]]) -> Result<f64> {
    let mut total = 0.0;
    for m in variant.mutations() {
        let row = m
            .position
            .checked_sub(1)
            .and_then(|i| rows.get(i))
            .ok_or(Error::PositionOutOfRange {
                position: m.position,
                length: rows.len(),
            })?;
        total += row[m.to.index()] - row[m.from.index()];
    }
    Ok(total)
}

/// Cached naturalness for a set of variants.
#[derive(Debug, Clone, Default)]
pub struct NaturalnessTable {
    scores: BTreeMap<Variant, f64>,
}

impl NaturalnessTable {
    pub fn build<'a>(variants: impl IntoIterator<Item = &'a Variant>, logprobs: &LogProbMatrix) -> Result<Self> {
        let mut scores = BTreeMap::new();
        for v in variants {
            scores.insert(v.clone(), naturalness_score(v, logprobs)?);
        }
        Ok(NaturalnessTable { scores })
    }

    pub fn get(&self, variant: &Variant) -> Option<f64> {
        self.scores.get(variant).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variant, f64)> {
        self.scores.iter().map(|(v, &s)| (v, s))
    }
}

/// Tie-break for equal scores: ascending position, then alphabetical replacement.
fn tie_break(a: &Variant, b: &Variant) -> Ordering {
    let key = |v: &Variant| v.mutations().iter().map(|m| (m.position, m.to)).collect::<Vec<_>>();
    key(a).cmp(&key(b))
}

/// Orders scored variants best first with the deterministic tie-break.
pub fn rank_by_score(scored: &mut [(Variant, f64)]) {
    scored.sort_by(|(va, sa), (vb, sb)| sb.total_cmp(sa).then_with(|| tie_break(va, vb)));
}

/// Picks the `n` most natural candidates, best first. With `per_locus_cap`, a
/// candidate is skipped once any of its positions already has `cap` picks; the
/// result may then hold fewer than `n` variants.
pub fn zero_shot_select(
    candidates: &[Variant],
    logprobs: &LogProbMatrix,
    n: usize,
    per_locus_cap: Option<usize>,
) -> Result<Vec<Variant>> {
    if candidates.is_empty() {
        return Err(Error::Empty("zero-shot candidates"));
    }
    let mut scored = candidates
        .iter()
        .map(|v| Ok((v.clone(), naturalness_score(v, logprobs)?)))
        .collect::<Result<Vec<_>>>()?;
    rank_by_score(&mut scored);
    scored.dedup_by(|a, b| a.0 == b.0);

    let mut picked = Vec::with_capacity(n);
    let mut per_locus: BTreeMap<usize, usize> = BTreeMap::new();
    for (v, _) in scored {
        if picked.len() == n {
            break;
        }
        if let Some(cap) = per_locus_cap {
            if v.positions().any(|p| per_locus.get(&p).copied().unwrap_or(0) >= cap) {
                continue;
            }
            for p in v.positions() {
                *per_locus.entry(p).or_insert(0) += 1;
            }
        }
        picked.push(v);
    }
    Ok(picked)
}

/// Naturalness of every variant in `variants`, in order.
pub fn score_all(variants: &[Variant], logprobs: &LogProbMatrix) -> Result<Vec<f64>> {
    variants.iter().map(|v| naturalness_score(v, logprobs)).collect()
}

/// Single mutants of the reference paired with their naturalness; the targets
/// for naturalness warm-start.
pub fn warm_start_targets(reference: &Sequence, logprobs: &LogProbMatrix) -> Result<Vec<(Variant, f64)>> {
    logprobs.check_length(reference)?;
    crate::variant::all_singles(reference)
        .into_iter()
        .map(|v| {
            let s = naturalness_score(&v, logprobs)?;
            Ok((v, s))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amino::AminoAcid;
    use alloc::vec;

    fn uniform_matrix(len: usize) -> Vec<[f64; 20]> {
        vec![[libm::log(1.0 / 20.0); 20]; len]
    }

    fn aa(c: char) -> usize {
        AminoAcid::from_char(c).unwrap().index()
    }

    /// Builds a normalized row with the given log-probs for `a` and `b`, spreading the rest.
    fn row_with(a: (char, f64), b: (char, f64)) -> [f64; 20] {
        let rest = (1.0 - libm::exp(a.1) - libm::exp(b.1)) / 18.0;
        let mut r = [libm::log(rest); 20];
        r[aa(a.0)] = a.1;
        r[aa(b.0)] = b.1;
        r
    }

    #[test]
    fn empty_variant_scores_zero() {
        let m = LogProbMatrix::new(uniform_matrix(3)).unwrap();
        assert_eq!(naturalness_score(&Variant::wild_type(), &m).unwrap(), 0.0);
    }

    #[test]
    fn single_site_difference() {
        let mut rows = uniform_matrix(2);
        rows[0] = row_with(('T', -1.0), ('A', -3.0));
        let m = LogProbMatrix::new(rows).unwrap();
        let v = Variant::parse_unchecked("A1T").unwrap();
        assert!((naturalness_score(&v, &m).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn additive_over_sites() {
        let mut rows = uniform_matrix(2);
        rows[0] = row_with(('T', -1.0), ('A', -2.0));
        rows[1] = row_with(('S', -2.5), ('G', -2.0));
        let m = LogProbMatrix::new(rows).unwrap();
        let v = Variant::parse_unchecked("A1T:G2S").unwrap();
        assert!((naturalness_score(&v, &m).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_position() {
        let m = LogProbMatrix::new(uniform_matrix(2)).unwrap();
        let v = Variant::parse_unchecked("A3T").unwrap();
        assert!(matches!(
            naturalness_score(&v, &m),
            Err(Error::PositionOutOfRange { position: 3, .. })
        ));
    }

    /// Matrix where substituting `to` at `pos` scores exactly `score` (reference all 'A').
    fn scored_matrix(len: usize, entries: &[(usize, char, f64)]) -> LogProbMatrix {
        let mut logits = vec![[0.0f64; 20]; len];
        for &(pos, to, s) in entries {
            logits[pos - 1][aa(to)] = s;
        }
        LogProbMatrix::from_logits(logits).unwrap()
    }

    #[test]
    fn selects_top_n() {
        let m = scored_matrix(3, &[(1, 'C', 0.9), (2, 'C', 0.8), (3, 'C', 0.7)]);
        let v: Vec<Variant> = ["A1C", "A2C", "A3C"]
            .iter()
            .map(|s| Variant::parse_unchecked(s).unwrap())
            .collect();
        let picked = zero_shot_select(&[v[2].clone(), v[0].clone(), v[1].clone()], &m, 2, None).unwrap();
        assert_eq!(picked, vec![v[0].clone(), v[1].clone()]);
    }

    #[test]
    fn per_locus_cap() {
        let m = scored_matrix(
            5,
            &[
                (3, 'C', 0.9),
                (3, 'D', 0.8),
                (3, 'E', 0.7),
                (3, 'F', 0.6),
                (3, 'G', 0.5),
                (5, 'C', 0.4),
            ],
        );
        let names = ["A3C", "A3D", "A3E", "A3F", "A3G", "A5C"];
        let cands: Vec<Variant> = names.iter().map(|s| Variant::parse_unchecked(s).unwrap()).collect();
        let picked = zero_shot_select(&cands, &m, 4, Some(3)).unwrap();
        let got: Vec<_> = picked.iter().map(alloc::string::ToString::to_string).collect();
        assert_eq!(got, ["A3C", "A3D", "A3E", "A5C"]);
    }

    #[test]
    fn ties_break_by_position_then_letter() {
        let m = scored_matrix(3, &[(2, 'C', 1.0), (2, 'D', 1.0), (1, 'W', 1.0)]);
        let cands: Vec<Variant> = ["A2D", "A2C", "A1W"]
            .iter()
            .map(|s| Variant::parse_unchecked(s).unwrap())
            .collect();
        let picked = zero_shot_select(&cands, &m, 3, None).unwrap();
        let got: Vec<_> = picked.iter().map(alloc::string::ToString::to_string).collect();
        assert_eq!(got, ["A1W", "A2C", "A2D"]);
    }

    #[test]
    fn empty_candidates_error() {
        let m = LogProbMatrix::new(uniform_matrix(1)).unwrap();
        assert!(zero_shot_select(&[], &m, 1, None).is_err());
    }

    #[test]
    fn warm_start_covers_all_singles() {
        let r: Sequence = "ACD".parse().unwrap();
        let m = LogProbMatrix::from_logits(vec![[0.1, 0.2, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]; 3]).unwrap();
        let t = warm_start_targets(&r, &m).unwrap();
        assert_eq!(t.len(), 57);
        assert!(t.iter().all(|(v, _)| !v.is_wild_type()));
        for (v, s) in &t {
            assert_eq!(*s, naturalness_score(v, &m).unwrap());
        }
    }
}
