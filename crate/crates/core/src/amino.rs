use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical column order for every per-residue table.
pub const ALPHABET: &str = "ACDEFGHIKLMNPQRSTVWY";

const LETTERS: [u8; 20] = *b"ACDEFGHIKLMNPQRSTVWY";

/// One of the 20 canonical amino acids, stored as its index in [`ALPHABET`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "char", into = "char")]
pub struct AminoAcid(u8);

impl AminoAcid {
    pub const COUNT: usize = 20;

    pub fn from_index(index: usize) -> Option<Self> {
        (index < Self::COUNT).then_some(AminoAcid(index as u8))
    }

    pub fn from_char(c: char) -> Result<Self> {
        let upper = c.to_ascii_uppercase();
        LETTERS
            .iter()
            .position(|&l| l as char == upper)
            .map(|i| AminoAcid(i as u8))
            .ok_or(Error::UnknownAminoAcid(c))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn letter(self) -> char {
        LETTERS[self.0 as usize] as char
    }

    pub fn all() -> impl Iterator<Item = AminoAcid> + Clone {
        (0..Self::COUNT as u8).map(AminoAcid)
    }
}

impl TryFrom<char> for AminoAcid {
    type Error = Error;

    fn try_from(c: char) -> Result<Self> {
        AminoAcid::from_char(c)
    }
}

impl From<AminoAcid> for char {
    fn from(aa: AminoAcid) -> char {
        aa.letter()
    }
}

impl fmt::Debug for AminoAcid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl fmt::Display for AminoAcid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabet_round_trips() {
        for (i, c) in ALPHABET.chars().enumerate() {
            let aa = AminoAcid::from_char(c).unwrap();
            assert_eq!(aa.index(), i);
            assert_eq!(aa.letter(), c);
        }
        assert!(AminoAcid::from_char('X').is_err());
        assert_eq!(AminoAcid::from_char('a').unwrap().letter(), 'A');
    }
}
