//! Point mutations, variants and their text notation.
//!
//! Tokens follow the deep-mutational-scanning convention: `A23T` means the
//! alanine at 1-based position 23 becomes threonine. Multi-mutants join tokens
//! with `:` and the unmutated reference is written `WT`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::amino::AminoAcid;
use crate::error::{Error, Result};

pub const WILD_TYPE: &str = "WT";

/// Reference (wild-type) amino-acid sequence.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Sequence(Vec<AminoAcid>);

impl Sequence {
    pub fn new(residues: Vec<AminoAcid>) -> Self {
        Sequence(residues)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Residue at a 1-based position.
    pub fn residue(&self, position: usize) -> Option<AminoAcid> {
        position.checked_sub(1).and_then(|i| self.0.get(i).copied())
    }

    pub fn residues(&self) -> &[AminoAcid] {
        &self.0
    }
}

impl FromStr for Sequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let residues = s
            .trim()
            .chars()
            .map(AminoAcid::from_char)
            .collect::<Result<Vec<_>>>()?;
        if residues.is_empty() {
            return Err(Error::Empty("reference sequence"));
        }
        Ok(Sequence(residues))
    }
}

impl TryFrom<String> for Sequence {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Sequence> for String {
    fn from(s: Sequence) -> String {
        s.to_string()
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for aa in &self.0 {
            write!(f, "{}", aa.letter())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sequence({self})")
    }
}

/// A single substitution at a 1-based position.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mutation {
    pub position: usize,
    pub from: AminoAcid,
    pub to: AminoAcid,
}

impl Mutation {
    pub fn new(position: usize, from: AminoAcid, to: AminoAcid) -> Result<Self> {
        let m = Mutation { position, from, to };
        if position == 0 {
            return Err(Error::MalformedToken(m.to_string()));
        }
        if from == to {
            return Err(Error::SilentMutation(m.to_string()));
        }
        Ok(m)
    }

    fn parse_token(token: &str) -> Result<Self> {
        let malformed = || Error::MalformedToken(token.to_string());
        let mut chars = token.chars();
        let from = chars.next().ok_or_else(malformed)?;
        let to = chars.next_back().ok_or_else(malformed)?;
        let digits = chars.as_str();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        let position: usize = digits.parse().map_err(|_| malformed())?;
        let from = AminoAcid::from_char(from).map_err(|_| malformed())?;
        let to = AminoAcid::from_char(to).map_err(|_| malformed())?;
        Mutation::new(position, from, to)
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.from.letter(), self.position, self.to.letter())
    }
}

impl fmt::Debug for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A set of point mutations relative to a reference, sorted by position.
/// The empty set is the wild type.
#[derive(Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Variant {
    mutations: Vec<Mutation>,
}

impl Variant {
    pub fn wild_type() -> Self {
        Variant::default()
    }

    /// Builds a variant from mutations in any order.
    pub fn from_mutations(mut mutations: Vec<Mutation>) -> Result<Self> {
        mutations.sort();
        for w in mutations.windows(2) {
            if w[0].position == w[1].position {
                return Err(Error::DuplicatePosition(w[0].position));
            }
        }
        Ok(Variant { mutations })
    }

    pub fn single(mutation: Mutation) -> Self {
        Variant {
            mutations: alloc::vec![mutation],
        }
    }

    pub fn mutations(&self) -> &[Mutation] {
        &self.mutations
    }

    pub fn is_wild_type(&self) -> bool {
        self.mutations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.mutations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mutations.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.mutations.iter().map(|m| m.position)
    }

    /// Parses the notation without a reference; `from` letters are taken as written.
    pub fn parse_unchecked(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.eq_ignore_ascii_case(WILD_TYPE) {
            return Ok(Variant::wild_type());
        }
        if text.is_empty() {
            return Err(Error::MalformedToken(String::new()));
        }
        let mutations = text
            .split(':')
            .map(Mutation::parse_token)
            .collect::<Result<Vec<_>>>()?;
        Variant::from_mutations(mutations)
    }

    /// Parses the notation and checks every mutation against `reference`.
    pub fn parse(text: &str, reference: &Sequence) -> Result<Self> {
        let v = Variant::parse_unchecked(text)?;
        v.check_reference(reference)?;
        Ok(v)
    }

    pub fn check_reference(&self, reference: &Sequence) -> Result<()> {
        for m in &self.mutations {
            let expected = reference.residue(m.position).ok_or(Error::PositionOutOfRange {
                position: m.position,
                length: reference.len(),
            })?;
            if expected != m.from {
                return Err(Error::ReferenceMismatch {
                    token: m.to_string(),
                    position: m.position,
                    expected: expected.letter(),
                });
            }
        }
        Ok(())
    }

    /// Residue this variant carries at `position`, given the reference.
    pub fn residue_at(&self, position: usize, reference: &Sequence) -> Option<AminoAcid> {
        match self.mutations.binary_search_by(|m| m.position.cmp(&position)) {
            Ok(i) => Some(self.mutations[i].to),
            Err(_) => reference.residue(position),
        }
    }

    /// Number of positions at which the two variants carry different residues.
    pub fn hamming(&self, other: &Variant) -> usize {
        let (a, b) = (&self.mutations, &other.mutations);
        let (mut i, mut j, mut d) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].position.cmp(&b[j].position) {
                Ordering::Less => {
                    d += 1;
                    i += 1;
                }
                Ordering::Greater => {
                    d += 1;
                    j += 1;
                }
                Ordering::Equal => {
                    if a[i].to != b[j].to {
                        d += 1;
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        d + (a.len() - i) + (b.len() - j)
    }

    /// Returns a copy with `mutation` added, replacing any mutation at the same
    /// position. Adding a mutation back to the reference residue removes it.
    pub fn with_residue(&self, position: usize, residue: AminoAcid, reference: &Sequence) -> Option<Variant> {
        let wt = reference.residue(position)?;
        let mut mutations: Vec<Mutation> =
            self.mutations.iter().copied().filter(|m| m.position != position).collect();
        if residue != wt {
            mutations.push(Mutation {
                position,
                from: wt,
                to: residue,
            });
            mutations.sort();
        }
        Some(Variant { mutations })
    }
}

impl PartialOrd for Variant {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Variant {
    /// Fewer mutations first, then lexicographic by (position, from, to).
    fn cmp(&self, other: &Self) -> Ordering {
        self.mutations
            .len()
            .cmp(&other.mutations.len())
            .then_with(|| self.mutations.cmp(&other.mutations))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mutations.is_empty() {
            return f.write_str(WILD_TYPE);
        }
        for (i, m) in self.mutations.iter().enumerate() {
            if i > 0 {
                f.write_str(":")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Variant({self})")
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::parse_unchecked(s)
    }
}

impl TryFrom<String> for Variant {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Variant::parse_unchecked(&s)
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> String {
        v.to_string()
    }
}

/// All 19·L single mutants of `reference`, ordered by position then residue.
pub fn all_singles(reference: &Sequence) -> Vec<Variant> {
    let mut out = Vec::with_capacity(reference.len() * 19);
    for (i, &wt) in reference.residues().iter().enumerate() {
        for aa in AminoAcid::all().filter(|&aa| aa != wt) {
            out.push(Variant::single(Mutation {
                position: i + 1,
                from: wt,
                to: aa,
            }));
        }
    }
    out
}
