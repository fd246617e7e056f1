//! Seeded synthetic fitness landscapes standing in for measured mutational scans.
//!
//! Every non-wild-type residue `(i, a)` gets a latent vector `h(i, a)`.
//! `h[0]` is stability: a mutation's stability effect saturates near zero when
//! `h[0]` is high and falls linearly when it is low. `h[1]` is the learnable
//! part of a function term whose other part is private noise absent from the
//! embeddings. A variant's activity is the sum of both effects over its
//! mutations plus sparse pairwise couplings and measurement noise.
//!
//! Naturalness logits are `h[0] + c h[2]`, so naturalness sees stability but
//! not function. The function weight is tuned until the naturalness/activity
//! rank correlation over singles hits the target. Embeddings are a fixed random
//! linear image of the summed latents plus noise.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::amino::AminoAcid;
use crate::error::{Error, Result};
use crate::model::{Dataset, EmbeddingStore, LogProbMatrix, Record};
use crate::naturalness::naturalness_score;
use crate::rng::{self, tag};
use crate::stats::spearman;
use crate::variant::{Mutation, Sequence, Variant};

/// Allowed distance between achieved and requested naturalness correlation.
pub const CALIBRATION_TOLERANCE: f64 = 0.05;

const BISECTION_STEPS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LandscapeConfig {
    pub length: usize,
    pub n_variants: usize,
    /// Substitutions allowed per site in the dataset; `None` allows all 19.
    pub substitutions_per_site: Option<usize>,
    pub epistasis_strength: f64,
    /// Share of site pairs that interact.
    pub epistasis_density: f64,
    pub naturalness_rho_target: f64,
    /// Weight of the naturalness axis that is unrelated to activity.
    pub naturalness_noise: f64,
    /// Share of the function term that embeddings can explain.
    pub learnable_share: f64,
    /// Sharpness of the stability threshold.
    pub stability_steepness: f64,
    pub embed_dim: usize,
    pub latent_dim: usize,
    pub noise_sd: f64,
    pub embedding_noise: f64,
    pub seed: u64,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        LandscapeConfig {
            length: 30,
            n_variants: 570,
            substitutions_per_site: None,
            epistasis_strength: 0.5,
            epistasis_density: 0.2,
            naturalness_rho_target: 0.48,
            naturalness_noise: 0.5,
            learnable_share: 0.5,
            stability_steepness: 2.0,
            embed_dim: 64,
            latent_dim: 32,
            noise_sd: 0.1,
            embedding_noise: 0.1,
            seed: 0,
        }
    }
}

impl LandscapeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.length == 0 || self.embed_dim == 0 || self.latent_dim < 3 {
            return bad("length and embed_dim must be positive, latent_dim at least 3");
        }
        if self.n_variants < 2 {
            return bad("a landscape needs at least 2 variants");
        }
        if matches!(self.substitutions_per_site, Some(s) if s == 0 || s > 19) {
            return bad("substitutions_per_site must lie in 1..=19");
        }
        if !(self.epistasis_strength >= 0.0) || !(0.0..=1.0).contains(&self.epistasis_density) {
            return bad("epistasis strength must be >= 0 and density in [0, 1]");
        }
        if !(self.naturalness_rho_target > -1.0 && self.naturalness_rho_target < 1.0) {
            return bad("naturalness_rho_target must lie in (-1, 1)");
        }
        if !(0.0..=1.0).contains(&self.learnable_share) || !(self.stability_steepness > 0.0) {
            return bad("learnable_share must lie in [0, 1] and stability_steepness be positive");
        }
        if !(self.noise_sd >= 0.0) || !(self.embedding_noise >= 0.0) || !(self.naturalness_noise >= 0.0) {
            return bad("noise levels must be >= 0");
        }
        Ok(())
    }

    fn subs(&self) -> usize {
        self.substitutions_per_site.unwrap_or(19)
    }

    /// Number of distinct singles and doubles the dataset can draw from.
    pub fn capacity(&self) -> (usize, usize) {
        let s = self.subs();
        let singles = self.length * s;
        let doubles = self.length * self.length.saturating_sub(1) / 2 * s * s;
        (singles, doubles)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeMeta {
    /// Activity before measurement noise, aligned with the dataset records.
    pub noiseless: Vec<f64>,
    /// Calibrated weight of the function term.
    pub function_weight: f64,
    /// Naturalness/activity Spearman over the dataset singles.
    pub naturalness_rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub dataset: Dataset,
    /// Rows for every single mutant of the reference and every dataset variant.
    pub embeddings: EmbeddingStore,
    pub logprobs: LogProbMatrix,
    pub meta: LandscapeMeta,
}

fn normal(r: &mut rng::Rng) -> f64 {
    StandardNormal.sample(r)
}

struct Latents {
    dim: usize,
    /// `h(i, a)` at `(i * 20 + a) * dim`; zero for wild-type residues.
    h: Vec<f64>,
}

impl Latents {
    fn get(&self, position: usize, aa: AminoAcid) -> &[f64] {
        let k = ((position - 1) * AminoAcid::COUNT + aa.index()) * self.dim;
        &self.h[k..k + self.dim]
    }

    fn sum(&self, v: &Variant) -> Vec<f64> {
        let mut s = vec![0.0; self.dim];
        for m in v.mutations() {
            for (x, y) in s.iter_mut().zip(self.get(m.position, m.to)) {
                *x += y;
            }
        }
        s
    }
}

/// Latent axes with a fixed meaning; the rest only shape the embeddings.
const STABILITY: usize = 0;
const LEARNABLE_FUNCTION: usize = 1;
const NATURALNESS_ONLY: usize = 2;

struct Traits<'a> {
    latents: &'a Latents,
    /// Per-residue function share that embeddings do not encode.
    idiosyncratic: Vec<f64>,
    learnable_share: f64,
    steepness: f64,
}

impl Traits<'_> {
    /// `-softplus(-k s)`: near zero for stable substitutions, linear in `s` for
    /// destabilizing ones.
    fn stability_effect(&self, m: &Mutation) -> f64 {
        let x = -self.steepness * self.latents.get(m.position, m.to)[STABILITY];
        -(x.max(0.0) + libm::log1p(libm::exp(-x.abs()))) / self.steepness
    }

    fn function(&self, m: &Mutation) -> f64 {
        let learnable = self.latents.get(m.position, m.to)[LEARNABLE_FUNCTION];
        let own = self.idiosyncratic[(m.position - 1) * AminoAcid::COUNT + m.to.index()];
        libm::sqrt(self.learnable_share) * learnable + libm::sqrt(1.0 - self.learnable_share) * own
    }
}

struct Couplings {
    seed: u64,
    length: usize,
    interacting: Vec<bool>,
}

impl Couplings {
    fn value(&self, a: &Mutation, b: &Mutation) -> f64 {
        let (i, j) = (a.position - 1, b.position - 1);
        if !self.interacting[i * self.length + j] {
            return 0.0;
        }
        let key = ((i * AminoAcid::COUNT + a.to.index()) * self.length * AminoAcid::COUNT
            + j * AminoAcid::COUNT
            + b.to.index()) as u64;
        normal(&mut rng::stream(rng::derive(self.seed, key), tag::LANDSCAPE))
    }

    fn total(&self, v: &Variant) -> f64 {
        let m = v.mutations();
        let mut t = 0.0;
        for x in 0..m.len() {
            for y in x + 1..m.len() {
                t += self.value(&m[x], &m[y]);
            }
        }
        t
    }
}

fn naturalness_logits(reference: &Sequence, traits: &Traits, noise: f64) -> Vec<[f64; 20]> {
    (1..=reference.len())
        .map(|pos| {
            let wt = reference.residue(pos).expect("position in range");
            let mut row = [0.0; 20];
            for aa in AminoAcid::all().filter(|&aa| aa != wt) {
                let h = traits.latents.get(pos, aa);
                // Offset keeps the wild type the most likely residue on average.
                row[aa.index()] = h[STABILITY] + noise * h[NATURALNESS_ONLY] - 1.0;
            }
            row
        })
        .collect()
}

/// Generates a seed-deterministic landscape.
pub fn synth_landscape(config: &LandscapeConfig) -> Result<Landscape> {
    config.validate()?;
    let (n_singles, n_doubles) = config.capacity();
    if config.n_variants > n_singles + n_doubles {
        return Err(Error::InvalidParameter(alloc::format!(
            "{} variants requested but only {} singles and doubles exist",
            config.n_variants,
            n_singles + n_doubles
        )));
    }
    let mut r = rng::stream(config.seed, tag::LANDSCAPE);
    let length = config.length;
    let reference = Sequence::new(
        (0..length)
            .map(|_| AminoAcid::from_index(r.gen_range(0..AminoAcid::COUNT)).expect("index below 20"))
            .collect(),
    );

    let mut allowed: Vec<Vec<AminoAcid>> = Vec::with_capacity(length);
    for pos in 1..=length {
        let wt = reference.residue(pos).expect("position in range");
        let others: Vec<AminoAcid> = AminoAcid::all().filter(|&a| a != wt).collect();
        let mut pick: Vec<usize> = index::sample(&mut r, others.len(), config.subs()).into_vec();
        pick.sort_unstable();
        allowed.push(pick.into_iter().map(|k| others[k]).collect());
    }

    let dim = config.latent_dim;
    let mut h = vec![0.0; length * AminoAcid::COUNT * dim];
    for pos in 1..=length {
        let wt = reference.residue(pos).expect("position in range");
        for aa in AminoAcid::all().filter(|&a| a != wt) {
            let k = ((pos - 1) * AminoAcid::COUNT + aa.index()) * dim;
            for x in &mut h[k..k + dim] {
                *x = normal(&mut r);
            }
        }
    }
    let latents = Latents { dim, h };
    let idiosyncratic: Vec<f64> = (0..length * AminoAcid::COUNT).map(|_| normal(&mut r)).collect();
    let traits = Traits {
        latents: &latents,
        idiosyncratic,
        learnable_share: config.learnable_share,
        steepness: config.stability_steepness,
    };

    let scale = 1.0 / libm::sqrt(dim as f64);
    let projection: Vec<f64> = (0..config.embed_dim * dim).map(|_| normal(&mut r) * scale).collect();

    let mut interacting = vec![false; length * length];
    for i in 0..length {
        for j in i + 1..length {
            interacting[i * length + j] = r.gen_bool(config.epistasis_density);
        }
    }
    let couplings = Couplings {
        seed: rng::derive(config.seed, tag::LANDSCAPE),
        length,
        interacting,
    };

    let mutation = |pos: usize, aa: AminoAcid| {
        Mutation::new(pos, reference.residue(pos).expect("position in range"), aa).expect("allowed residues differ from wild type")
    };
    let singles: Vec<Variant> = (1..=length)
        .flat_map(|pos| allowed[pos - 1].iter().map(move |&aa| (pos, aa)))
        .map(|(pos, aa)| Variant::single(mutation(pos, aa)))
        .collect();

    let mut variants: Vec<Variant> = if config.n_variants <= singles.len() {
        let mut pick = index::sample(&mut r, singles.len(), config.n_variants).into_vec();
        pick.sort_unstable();
        pick.into_iter().map(|k| singles[k].clone()).collect()
    } else {
        let wanted = config.n_variants - singles.len();
        let mut doubles = BTreeSet::new();
        if wanted * 2 > n_doubles {
            let mut all = Vec::with_capacity(n_doubles);
            for i in 1..=length {
                for j in i + 1..=length {
                    for &a in &allowed[i - 1] {
                        for &b in &allowed[j - 1] {
                            all.push((i, a, j, b));
                        }
                    }
                }
            }
            for k in index::sample(&mut r, all.len(), wanted).into_iter() {
                doubles.insert(all[k]);
            }
        } else {
            while doubles.len() < wanted {
                let i = r.gen_range(1..=length);
                let j = r.gen_range(1..=length);
                if i == j {
                    continue;
                }
                let (i, j) = (i.min(j), i.max(j));
                let a = allowed[i - 1][r.gen_range(0..allowed[i - 1].len())];
                let b = allowed[j - 1][r.gen_range(0..allowed[j - 1].len())];
                doubles.insert((i, a, j, b));
            }
        }
        let mut v = singles.clone();
        for (i, a, j, b) in doubles {
            v.push(Variant::from_mutations(vec![mutation(i, a), mutation(j, b)])?);
        }
        v
    };
    variants.sort();

    let parts: Vec<(f64, f64)> = variants
        .iter()
        .map(|v| {
            v.mutations().iter().fold((0.0, 0.0), |(st, fu), m| {
                (st + traits.stability_effect(m), fu + traits.function(m))
            })
        })
        .collect();
    let coupled: Vec<f64> = variants.iter().map(|v| config.epistasis_strength * couplings.total(v)).collect();
    let noise: Vec<f64> = variants.iter().map(|_| config.noise_sd * normal(&mut r)).collect();
    let noiseless_at = |w: f64| -> Vec<f64> { parts.iter().zip(&coupled).map(|((st, fu), c)| st + w * fu + c).collect() };

    let single_idx: Vec<usize> = (0..variants.len()).filter(|&k| variants[k].len() == 1).collect();
    if single_idx.len() < 3 {
        return Err(Error::Calibration("fewer than 3 singles in the dataset".into()));
    }
    let logprobs = LogProbMatrix::from_logits(naturalness_logits(&reference, &traits, config.naturalness_noise))?;
    let nat: Vec<f64> = single_idx
        .iter()
        .map(|&k| naturalness_score(&variants[k], &logprobs))
        .collect::<Result<_>>()?;
    let rho_at = |w: f64| -> Result<f64> {
        let clean = noiseless_at(w);
        let act: Vec<f64> = single_idx.iter().map(|&k| clean[k] + noise[k]).collect();
        spearman(&nat, &act)
    };
    let target = config.naturalness_rho_target;
    if rho_at(0.0)? < target {
        return Err(Error::Calibration(alloc::format!(
            "naturalness correlation cannot reach {target:.3}; lower naturalness_noise"
        )));
    }
    let mut hi = 1.0;
    let mut grow = 0;
    while rho_at(hi)? > target {
        hi *= 2.0;
        grow += 1;
        if grow > 40 {
            return Err(Error::Calibration(alloc::format!("naturalness correlation stays above {target:.3}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if rho_at(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let function_weight = 0.5 * (lo + hi);
    let naturalness_rho = rho_at(function_weight)?;
    if (naturalness_rho - target).abs() > CALIBRATION_TOLERANCE {
        return Err(Error::Calibration(alloc::format!(
            "naturalness correlation {naturalness_rho:.3} missed target {target:.3}"
        )));
    }
    let noiseless = noiseless_at(function_weight);
    let activities: Vec<f64> = noiseless.iter().zip(&noise).map(|(a, e)| a + e).collect();

    let mut embeddings = EmbeddingStore::new(config.embed_dim)?;
    let embed = |v: &Variant, store: &mut EmbeddingStore, r: &mut rng::Rng| -> Result<()> {
        if store.contains(v) {
            return Ok(());
        }
        let z = latents.sum(v);
        let row: Vec<f32> = (0..config.embed_dim)
            .map(|e| {
                let p = &projection[e * dim..(e + 1) * dim];
                let x: f64 = p.iter().zip(&z).map(|(a, b)| a * b).sum();
                (x + config.embedding_noise * normal(r)) as f32
            })
            .collect();
        store.insert(v.clone(), row)
    };
    for v in crate::variant::all_singles(&reference) {
        embed(&v, &mut embeddings, &mut r)?;
    }
    for v in &variants {
        embed(v, &mut embeddings, &mut r)?;
    }

    let records = variants
        .into_iter()
        .zip(&activities)
        .map(|(variant, &activity)| Record { variant, activity })
        .collect();
    Ok(Landscape {
        dataset: Dataset::new(reference, records)?,
        embeddings,
        logprobs,
        meta: LandscapeMeta {
            noiseless,
            function_weight,
            naturalness_rho,
        },
    })
}
