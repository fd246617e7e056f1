//! Simulation results TSV: one line per (policy, replicate, round).
//!
//! Columns, in order: `policy replicate round alpha holdout_spearman
//! batch_hits cumulative_hits top_percentile_found unique_loci new_loci batch
//! activities`. Missing values are `NA`; `batch` and `activities` are
//! comma-joined in selection order.

use std::fmt::Write as _;
use std::path::Path;

use folde_core::sim::{CampaignRun, RoundRecord};
use folde_core::variant::Variant;

use crate::error::{io_at, Error, Result};

pub const COLUMNS: [&str; 12] = [
    "policy",
    "replicate",
    "round",
    "alpha",
    "holdout_spearman",
    "batch_hits",
    "cumulative_hits",
    "top_percentile_found",
    "unique_loci",
    "new_loci",
    "batch",
    "activities",
];

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), |v| v.to_string())
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Runs sorted by (policy, replicate) so output never depends on scheduling.
pub fn render_results(runs: &[CampaignRun]) -> String {
    let mut sorted: Vec<&CampaignRun> = runs.iter().collect();
    sorted.sort_by_key(|r| (r.policy, r.replicate));
    let mut out = COLUMNS.join("\t");
    out.push('\n');
    for run in sorted {
        for r in &run.rounds {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                run.policy,
                run.replicate,
                r.round,
                opt(r.alpha),
                opt(r.holdout_spearman),
                r.batch_hits,
                r.cumulative_hits,
                r.top_percentile_found,
                r.unique_loci,
                r.new_loci,
                join(&r.batch),
                join(&r.activities)
            );
        }
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        what: "results".into(),
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(line: usize, name: &str, s: &str) -> Result<T> {
    s.parse().map_err(|_| parse_err(line, format!("bad {name} `{s}`")))
}

fn opt_field(line: usize, name: &str, s: &str) -> Result<Option<f64>> {
    if s == "NA" {
        Ok(None)
    } else {
        field(line, name, s).map(Some)
    }
}

pub fn parse_results(text: &str) -> Result<Vec<CampaignRun>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    if header.split('\t').ne(COLUMNS) {
        return Err(parse_err(1, "unexpected header"));
    }
    let mut runs: Vec<CampaignRun> = Vec::new();
    for (n, line) in lines {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != COLUMNS.len() {
            return Err(parse_err(n, format!("expected {} fields, found {}", COLUMNS.len(), f.len())));
        }
        let policy = field(n, "policy", f[0])?;
        let replicate: usize = field(n, "replicate", f[1])?;
        let batch: Vec<Variant> = if f[10].is_empty() {
            Vec::new()
        } else {
            f[10].split(',').map(Variant::parse_unchecked).collect::<Result<_, _>>()?
        };
        let activities: Vec<f64> = if f[11].is_empty() {
            Vec::new()
        } else {
            f[11].split(',').map(|a| field(n, "activity", a)).collect::<Result<_>>()?
        };
        let record = RoundRecord {
            round: field(n, "round", f[2])?,
            batch,
            activities,
            alpha: opt_field(n, "alpha", f[3])?,
            holdout_spearman: opt_field(n, "holdout_spearman", f[4])?,
            batch_hits: field(n, "batch_hits", f[5])?,
            cumulative_hits: field(n, "cumulative_hits", f[6])?,
            top_percentile_found: field(n, "top_percentile_found", f[7])?,
            unique_loci: field(n, "unique_loci", f[8])?,
            new_loci: field(n, "new_loci", f[9])?,
        };
        match runs.last_mut() {
            Some(run) if run.policy == policy && run.replicate == replicate => run.rounds.push(record),
            _ => runs.push(CampaignRun {
                policy,
                replicate,
                rounds: vec![record],
            }),
        }
    }
    Ok(runs)
}

pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<CampaignRun>> {
    let path = path.as_ref();
    parse_results(&std::fs::read_to_string(path).map_err(io_at(path))?)
}

pub fn save_results(path: impl AsRef<Path>, runs: &[CampaignRun]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_results(runs)).map_err(io_at(path))
}
