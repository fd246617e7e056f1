//! Aggregate tables and plot-ready series from a results file.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use folde_core::sim::{CampaignRun, MetricsReport, Policy};
use folde_core::stats::{log_differences, wilcoxon_one_sided};
use serde::Serialize;

/// One-sided test that `policy` beats `against` on final cumulative hits,
/// paired by replicate, on `ln(1 + hits)` differences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub policy: Policy,
    pub against: Policy,
    pub pairs: usize,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub policies: Vec<MetricsReport>,
    pub comparisons: Vec<Comparison>,
}

fn final_hits(runs: &[CampaignRun], policy: Policy) -> BTreeMap<usize, f64> {
    runs.iter()
        .filter(|r| r.policy == policy)
        .filter_map(|r| r.rounds.last().map(|x| (r.replicate, x.cumulative_hits as f64)))
        .collect()
}

/// Per-policy aggregates plus tests of `focus` against every other policy.
pub fn build_report(runs: &[CampaignRun], focus: Policy) -> Report {
    let mut present: Vec<Policy> = runs.iter().map(|r| r.policy).collect();
    present.sort();
    present.dedup();
    let base = final_hits(runs, focus);
    let comparisons = present
        .iter()
        .filter(|&&p| p != focus && !base.is_empty())
        .map(|&against| {
            let other = final_hits(runs, against);
            let (a, b): (Vec<f64>, Vec<f64>) = base.iter().filter_map(|(rep, h)| other.get(rep).map(|oh| (*h, *oh))).unzip();
            let p_value = log_differences(&a, &b).ok().and_then(|d| wilcoxon_one_sided(&d).ok()).map(|w| w.p_value);
            Comparison {
                policy: focus,
                against,
                pairs: a.len(),
                p_value,
            }
        })
        .collect();
    Report {
        policies: present.iter().map(|&p| MetricsReport::from_runs(p, runs)).collect(),
        comparisons,
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

/// Fixed-width text tables: per-round hits, success probability, diversity,
/// holdout correlation; then the pairwise tests.
pub fn render_tables(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<20} {:>5} {:>6} {:>6} {:>6} {:>7} {:>7} {:>8}",
        "policy", "round", "hits", "se", "p(top1%)", "loci", "new", "spearman"
    );
    for m in &report.policies {
        for r in &m.rounds {
            let _ = writeln!(
                out,
                "{:<20} {:>5} {:>6.2} {:>6.2} {:>8.2} {:>7.2} {:>7.2} {:>8}",
                m.policy.name(),
                r.round,
                r.mean_cumulative_hits,
                r.se_cumulative_hits,
                r.top_percentile_probability,
                r.mean_unique_loci,
                r.mean_new_loci,
                opt(r.mean_holdout_spearman)
            );
        }
    }
    if !report.comparisons.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<20} {:<20} {:>5} {:>8}", "policy", "vs", "pairs", "p");
        for c in &report.comparisons {
            let _ = writeln!(
                out,
                "{:<20} {:<20} {:>5} {:>8}",
                c.policy.name(),
                c.against.name(),
                c.pairs,
                c.p_value.map_or_else(|| "-".into(), |p| format!("{p:.4}"))
            );
        }
    }
    out
}
