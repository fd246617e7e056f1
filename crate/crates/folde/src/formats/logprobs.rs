//! Log-probability TSV: a header of the 20 amino-acid letters in any order,
//! then one row of natural-log probabilities per position.

use std::fmt::Write as _;
use std::path::Path;

use folde_core::amino::AminoAcid;
use folde_core::model::LogProbMatrix;

use crate::error::{io_at, Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        what: "log-probabilities".into(),
        line,
        message: message.into(),
    }
}

pub fn parse_logprobs(text: &str) -> Result<LogProbMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    let (n, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let columns: Vec<AminoAcid> = header
        .split('\t')
        .map(|c| {
            let mut chars = c.trim().chars();
            match (chars.next(), chars.next()) {
                (Some(ch), None) => AminoAcid::from_char(ch).map_err(|e| parse_err(n, e.to_string())),
                _ => Err(parse_err(n, format!("bad header column `{c}`"))),
            }
        })
        .collect::<Result<_>>()?;
    let mut seen = [false; 20];
    for aa in &columns {
        if std::mem::replace(&mut seen[aa.index()], true) {
            return Err(parse_err(n, format!("duplicate column {}", aa.letter())));
        }
    }
    if columns.len() != 20 {
        return Err(parse_err(n, format!("expected 20 amino-acid columns, found {}", columns.len())));
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 20 {
            return Err(parse_err(n, format!("expected 20 values, found {}", fields.len())));
        }
        let mut row = [0.0; 20];
        for (aa, f) in columns.iter().zip(fields) {
            row[aa.index()] = f
                .trim()
                .parse()
                .map_err(|_| parse_err(n, format!("unparseable value `{f}`")))?;
        }
        rows.push(row);
    }
    Ok(LogProbMatrix::new(rows)?)
}

pub fn render_logprobs(matrix: &LogProbMatrix) -> String {
    let header: Vec<String> = AminoAcid::all().map(|a| a.letter().to_string()).collect();
    let mut out = header.join("\t");
    out.push('\n');
    for row in matrix.rows() {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "{}", cells.join("\t"));
    }
    out
}

pub fn load_logprobs(path: impl AsRef<Path>) -> Result<LogProbMatrix> {
    let path = path.as_ref();
    parse_logprobs(&std::fs::read_to_string(path).map_err(io_at(path))?)
}

pub fn save_logprobs(path: impl AsRef<Path>, matrix: &LogProbMatrix) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_logprobs(matrix)).map_err(io_at(path))
}
