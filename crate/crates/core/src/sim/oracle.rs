//! Ground-truth lookup with a per-replicate holdout.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::rng::{self, tag};
use crate::stats::percentile;
use crate::variant::Variant;

/// Activity cutoffs taken from the full dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub top_decile: f64,
    pub top_percentile: f64,
}

impl Thresholds {
    pub fn of(dataset: &Dataset) -> Result<Self> {
        let a = dataset.activities();
        Ok(Thresholds {
            top_decile: percentile(&a, 90.0)?,
            top_percentile: percentile(&a, 99.0)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LandscapeOracle<'a> {
    dataset: &'a Dataset,
    visible: Vec<usize>,
    holdout: Vec<usize>,
    hidden: Vec<bool>,
    thresholds: Thresholds,
}

impl<'a> LandscapeOracle<'a> {
    /// Hides `round(holdout_fraction * N)` records, drawn from `seed`.
    pub fn new(dataset: &'a Dataset, holdout_fraction: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&holdout_fraction) {
            return Err(Error::InvalidParameter("holdout fraction must lie in [0, 1)".into()));
        }
        let n = dataset.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::stream(seed, tag::HOLDOUT));
        let n_hidden = libm::round(holdout_fraction * n as f64) as usize;
        let mut hidden = alloc::vec![false; n];
        for &k in &order[..n_hidden] {
            hidden[k] = true;
        }
        Ok(LandscapeOracle {
            dataset,
            visible: (0..n).filter(|&k| !hidden[k]).collect(),
            holdout: (0..n).filter(|&k| hidden[k]).collect(),
            hidden,
            thresholds: Thresholds::of(dataset)?,
        })
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    /// Record indices open to selection, ascending.
    pub fn visible(&self) -> &[usize] {
        &self.visible
    }

    pub fn holdout(&self) -> &[usize] {
        &self.holdout
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }

    pub fn visible_variants(&self) -> Vec<Variant> {
        self.visible.iter().map(|&k| self.dataset.records()[k].variant.clone()).collect()
    }

    /// Measured activity of a visible variant.
    pub fn measure(&self, variant: &Variant) -> Result<f64> {
        let k = self
            .dataset
            .index_of(variant)
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("{variant} is not in the dataset")))?;
        if self.hidden[k] {
            return Err(Error::InvalidParameter(alloc::format!("{variant} is held out")));
        }
        Ok(self.dataset.records()[k].activity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Record;
    use crate::variant::Sequence;

    fn dataset() -> Dataset {
        let reference: Sequence = "ACDEFGHIKL".parse().unwrap();
        let records = crate::variant::all_singles(&reference)
            .into_iter()
            .enumerate()
            .map(|(k, variant)| Record {
                variant,
                activity: k as f64,
            })
            .collect();
        Dataset::new(reference, records).unwrap()
    }

    #[test]
    fn halves_are_disjoint_and_cover() {
        let d = dataset();
        let o = LandscapeOracle::new(&d, 0.5, 7).unwrap();
        assert_eq!(o.visible().len() + o.holdout().len(), d.len());
        assert_eq!(o.holdout().len(), 95);
        assert!(o.visible().iter().all(|k| !o.holdout().contains(k)));
        let hidden = &d.records()[o.holdout()[0]].variant;
        assert!(o.measure(hidden).is_err());
        let shown = &d.records()[o.visible()[0]].variant;
        assert_eq!(o.measure(shown).unwrap(), o.visible()[0] as f64);
    }

    #[test]
    fn thresholds_use_full_dataset() {
        let d = dataset();
        let t = Thresholds::of(&d).unwrap();
        assert!((t.top_decile - 170.1).abs() < 1e-9);
        let a = LandscapeOracle::new(&d, 0.5, 1).unwrap().thresholds();
        assert_eq!(a, t);
    }
}
