//! Independent reference implementations shared by the integration and
//! acceptance suites. Nothing here calls into the engine's own math beyond the
//! function under test.
#![allow(dead_code, clippy::needless_range_loop)]

use folde_core::amino::AminoAcid;
use folde_core::linalg::Matrix;
use folde_core::naturalness::{naturalness_score, score_rows};
use folde_core::ranker::pairs::{enumerate_pairs, split_pairs};
use folde_core::ranker::{bt_loss, bt_loss_grad, MlpConfig, MlpModel};
use folde_core::rng;
use folde_core::selector::{cl_update, CLState};
use folde_core::stats::wilcoxon_one_sided;
use folde_core::model::LogProbMatrix;
use folde_core::variant::{Mutation, Sequence, Variant};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Worst relative error between analytic and central-difference gradients of
/// the pairwise loss on a toy `8 -> 4 -> 1` network, over `instances` draws.
pub fn gradient_check(instances: usize, step: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for inst in 0..instances as u64 {
        let mut r = rng::stream(inst, 100);
        let config = MlpConfig {
            input_dim: 8,
            hidden_dims: vec![4],
            dropout: 0.2,
            final_bias: false,
            seed: inst,
        };
        let mut model = MlpModel::<f64>::new(config).unwrap();
        let batch = 6;
        let inputs: Vec<f64> = (0..batch * 8).map(|_| r.gen_range(-1.0..1.0)).collect();
        let labels: Vec<f64> = (0..batch).map(|_| r.gen_range(0.0..1.0)).collect();
        let pairs = enumerate_pairs(&labels).unwrap().pairs;

        let loss_at = |m: &MlpModel<f64>| {
            let mut dropout = rng::stream(inst, 200);
            let out = m.forward_train(&inputs, &mut dropout).unwrap().output;
            bt_loss(&out, &pairs).unwrap()
        };
        let mut dropout = rng::stream(inst, 200);
        let cache = model.forward_train(&inputs, &mut dropout).unwrap();
        let (_, d_out) = bt_loss_grad(&cache.output, &pairs).unwrap();
        let analytic = model.backward(&cache, &d_out);

        let mut numeric = vec![0.0; analytic.len()];
        for k in 0..analytic.len() {
            let orig = model.params()[k];
            model.params_mut()[k] = orig + step;
            let up = loss_at(&model);
            model.params_mut()[k] = orig - step;
            let down = loss_at(&model);
            model.params_mut()[k] = orig;
            numeric[k] = (up - down) / (2.0 * step);
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nn: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
        worst = worst.max(diff / na.max(nn).max(1e-12));
    }
    worst
}

pub struct SplitAudit {
    pub instances: usize,
    /// Validation pairs whose loser the train graph already reaches from the winner.
    pub implied_validation: usize,
    /// Instances with at least 5 pairs whose train share is outside 0.8 +- 0.1.
    pub fraction_violations: usize,
}

/// Transitive closure by Floyd-Warshall over winner -> loser train edges.
fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for &(a, b) in edges {
        reach[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    reach
}

pub fn pair_split_audit(instances: usize) -> SplitAudit {
    let mut audit = SplitAudit {
        instances,
        implied_validation: 0,
        fraction_violations: 0,
    };
    for inst in 0..instances as u64 {
        let mut r = rng::stream(inst, 300);
        let n = r.gen_range(2..=50);
        let levels = r.gen_range(2..=n.max(2) * 2);
        let labels: Vec<f64> = (0..n).map(|_| r.gen_range(0..levels) as f64).collect();
        let Ok(set) = enumerate_pairs(&labels) else { continue };
        if set.pairs.is_empty() {
            continue;
        }
        let split = split_pairs(&set, 0.8, &mut r);
        let edges: Vec<(usize, usize)> = split.train.iter().map(|p| (p.winner, p.loser)).collect();
        let reach = closure(n, &edges);
        audit.implied_validation += split.validation.iter().filter(|p| reach[p.winner][p.loser]).count();
        let total = set.pairs.len();
        if total >= 5 {
            let share = split.train.len() as f64 / total as f64;
            if (share - 0.8).abs() > 0.1 {
                audit.fraction_violations += 1;
            }
        }
    }
    audit
}

fn random_psd(r: &mut rng::Rng, n: usize) -> Matrix {
    let m = n + 2;
    let a: Vec<f64> = (0..n * m).map(|_| r.gen_range(-1.0..1.0)).collect();
    let mut s = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = (0..m).map(|k| a[i * m + k] * a[j * m + k]).sum();
            s[(i, j)] = dot / m as f64 + if i == j { 0.1 } else { 0.0 };
        }
    }
    s
}

pub struct ClAudit {
    pub worst_relative_error: f64,
    pub covariance_bitwise_stable: bool,
}

/// Compares one constant-liar update against Gaussian conditioning computed
/// through precision matrices: adding `e_k e_k^T / noise` to the precision and
/// inverting back.
pub fn constant_liar_audit(cases: usize) -> ClAudit {
    let mut worst: f64 = 0.0;
    let mut stable = true;
    for case in 0..cases as u64 {
        let mut r = rng::stream(case, 400);
        let n = r.gen_range(2..=32);
        let cov = random_psd(&mut r, n);
        let mean: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
        let alpha = r.gen_range(0.05..10.0);
        let k = r.gen_range(0..n);

        let state = CLState::new(mean.clone(), cov.clone(), alpha).unwrap();
        let next = cl_update(&state, k).unwrap();
        let other = cl_update(&CLState::with_lie(mean.clone(), cov.clone(), alpha, state.lie + 3.7).unwrap(), k).unwrap();
        stable &= next
            .cov
            .as_slice()
            .iter()
            .zip(other.cov.as_slice())
            .all(|(a, b)| a.to_bits() == b.to_bits());

        let sigma = DMatrix::from_row_slice(n, n, cov.as_slice());
        let noise = alpha * median(&cov.diagonal());
        let precision = sigma.clone().try_inverse().unwrap();
        let mut post_precision = precision.clone();
        post_precision[(k, k)] += 1.0 / noise;
        let post_cov = post_precision.try_inverse().unwrap();
        let mu = DVector::from_column_slice(&mean);
        let mut info = &precision * mu;
        info[k] += state.lie / noise;
        let post_mean = &post_cov * info;

        let keep: Vec<usize> = (0..n).filter(|&i| i != k).collect();
        let scale_c = keep.iter().flat_map(|&i| keep.iter().map(move |&j| (i, j))).map(|(i, j)| post_cov[(i, j)].abs()).fold(0.0, f64::max);
        let scale_m = keep.iter().map(|&i| post_mean[i].abs()).fold(0.0, f64::max);
        for (a, &i) in keep.iter().enumerate() {
            worst = worst.max((next.mean[a] - post_mean[i]).abs() / scale_m.max(1e-300));
            for (b, &j) in keep.iter().enumerate() {
                worst = worst.max((next.cov[(a, b)] - post_cov[(i, j)]).abs() / scale_c.max(1e-300));
            }
        }
    }
    ClAudit {
        worst_relative_error: worst,
        covariance_bitwise_stable: stable,
    }
}

fn random_reference(r: &mut rng::Rng, length: usize) -> Sequence {
    Sequence::new((0..length).map(|_| AminoAcid::from_index(r.gen_range(0..20)).unwrap()).collect())
}

fn random_variant(r: &mut rng::Rng, reference: &Sequence, max_mutations: usize) -> Variant {
    let mut positions: Vec<usize> = (1..=reference.len()).collect();
    positions.shuffle(r);
    let k = r.gen_range(1..=max_mutations);
    let mutations = positions[..k]
        .iter()
        .map(|&p| {
            let from = reference.residue(p).unwrap();
            let mut to = from;
            while to == from {
                to = AminoAcid::from_index(r.gen_range(0..20)).unwrap();
            }
            Mutation::new(p, from, to).unwrap()
        })
        .collect();
    Variant::from_mutations(mutations).unwrap()
}

fn random_logprobs(r: &mut rng::Rng, length: usize) -> LogProbMatrix {
    let logits = (0..length)
        .map(|_| {
            let mut row = [0.0; 20];
            row.iter_mut().for_each(|x| *x = r.gen_range(-4.0..4.0));
            row
        })
        .collect();
    LogProbMatrix::from_logits(logits).unwrap()
}

/// Worst deviation of (sum of singles, row-shifted table) from the direct score.
pub fn naturalness_audit(variants: usize) -> (f64, f64) {
    let mut r = rng::stream(7, 500);
    let length = 40;
    let reference = random_reference(&mut r, length);
    let lp = random_logprobs(&mut r, length);
    let shifted: Vec<[f64; 20]> = lp
        .rows()
        .iter()
        .map(|row| {
            let c = r.gen_range(-10.0..10.0);
            row.map(|x| x + c)
        })
        .collect();
    let (mut additivity, mut translation) = (0.0f64, 0.0f64);
    for _ in 0..variants {
        let v = random_variant(&mut r, &reference, 6);
        let direct = naturalness_score(&v, &lp).unwrap();
        let singles: f64 = v
            .mutations()
            .iter()
            .map(|m| naturalness_score(&Variant::single(*m), &lp).unwrap())
            .sum();
        additivity = additivity.max((direct - singles).abs());
        translation = translation.max((direct - score_rows(&v, &shifted).unwrap()).abs());
    }
    (additivity, translation)
}

/// P(W+ >= observed) by enumerating all 2^n sign assignments of the ranks.
pub fn enumerated_p(diffs: &[f64]) -> f64 {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|a| {
            let below = abs.iter().filter(|b| *b < a).count() as f64;
            let equal = abs.iter().filter(|b| *b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = nonzero.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let mut at_least = 0u64;
    for mask in 0..1u64 << n {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w >= observed - 1e-9 {
            at_least += 1;
        }
    }
    at_least as f64 / (1u64 << n) as f64
}

/// Number of random difference vectors (n = 1..=max_n, with ties) whose
/// p-value differs from enumeration.
pub fn wilcoxon_mismatches(max_n: usize, per_n: usize) -> usize {
    let mut mismatches = 0;
    for n in 1..=max_n {
        let mut r = rng::stream(n as u64, 600);
        for _ in 0..per_n {
            let diffs: Vec<f64> = (0..n).map(|_| r.gen_range(-4i32..=4) as f64 * 0.5).collect();
            if diffs.iter().all(|d| *d == 0.0) {
                continue;
            }
            if wilcoxon_one_sided(&diffs).unwrap().p_value != enumerated_p(&diffs) {
                mismatches += 1;
            }
        }
    }
    mismatches
}

/// Mean of hypergeometric top-decile hits: `picks * K / N`.
pub fn hypergeometric_mean(picks: usize, successes: usize, population: usize) -> f64 {
    picks as f64 * successes as f64 / population as f64
}

pub struct RandomPolicyAudit {
    pub mean_hits: f64,
    pub standard_error: f64,
    pub expected: f64,
}

/// Cumulative top-decile hits of the random policy on a 1000-variant landscape.
pub fn random_policy_audit(replicates: usize) -> RandomPolicyAudit {
    use folde_core::sim::{run_campaign, synth_landscape, LandscapeConfig, Policy, SimConfig, Thresholds};
    let landscape = synth_landscape(&LandscapeConfig {
        n_variants: 1000,
        seed: 11,
        ..LandscapeConfig::default()
    })
    .unwrap();
    let config = SimConfig {
        policy: Policy::Random,
        seed: 11,
        replicates,
        ..SimConfig::default()
    };
    let hits: Vec<f64> = (0..replicates)
        .map(|rep| {
            let run = run_campaign((&landscape).into(), &config, rep, None).unwrap();
            run.rounds.last().unwrap().cumulative_hits as f64
        })
        .collect();
    let n = hits.len() as f64;
    let mean = hits.iter().sum::<f64>() / n;
    let var = hits.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let top = Thresholds::of(&landscape.dataset).unwrap().top_decile;
    let successes = landscape.dataset.activities().iter().filter(|&&a| a >= top).count();
    RandomPolicyAudit {
        mean_hits: mean,
        standard_error: (var / n).sqrt(),
        expected: hypergeometric_mean(config.rounds * config.batch_size, successes, landscape.dataset.len()),
    }
}
