//! Dataset TSV: a `#ref=<sequence>` line, the header `mutant\tactivity`, then
//! one record per line.

use std::fmt::Write as _;
use std::path::Path;

use folde_core::model::{Dataset, Record};
use folde_core::variant::{Sequence, Variant};

use crate::error::{io_at, Error, Result};

pub const HEADER: &str = "mutant\tactivity";

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        what: "dataset".into(),
        line,
        message: message.into(),
    }
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (n, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let reference: Sequence = first
        .strip_prefix("#ref=")
        .ok_or_else(|| parse_err(n, "expected `#ref=<sequence>`"))?
        .trim()
        .parse()?;
    let (n, header) = lines.next().ok_or_else(|| parse_err(2, "missing header"))?;
    if header.trim() != HEADER {
        return Err(parse_err(n, format!("expected header `mutant<TAB>activity`, found `{header}`")));
    }
    let mut records = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (mutant, activity) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(n, "expected two tab-separated fields"))?;
        let variant = Variant::parse(mutant.trim(), &reference).map_err(|e| parse_err(n, e.to_string()))?;
        let activity: f64 = activity
            .trim()
            .parse()
            .map_err(|_| parse_err(n, format!("unparseable activity `{activity}`")))?;
        records.push(Record { variant, activity });
    }
    Ok(Dataset::new(reference, records)?)
}

pub fn render_dataset(dataset: &Dataset) -> String {
    let mut out = format!("#ref={}\n{HEADER}\n", dataset.reference());
    for r in dataset.records() {
        let _ = writeln!(out, "{}\t{}", r.variant, r.activity);
    }
    out
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    parse_dataset(&std::fs::read_to_string(path).map_err(io_at(path))?)
}

pub fn save_dataset(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_dataset(dataset)).map_err(io_at(path))
}
