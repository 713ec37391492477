use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// One letter `x_i` or `x_i^*` of a star word. Indices are 0-based in the API
/// and 1-based in the textual form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub index: usize,
    pub star: bool,
}

impl Letter {
    pub fn plain(index: usize) -> Self {
        Self { index, star: false }
    }

    pub fn starred(index: usize) -> Self {
        Self { index, star: true }
    }

    pub fn adjoint(self) -> Self {
        Self {
            index: self.index,
            star: !self.star,
        }
    }
}

/// A formal word `x_{i₁}^{ε₁} ··· x_{i_k}^{ε_k}`.
///
/// Serialized in its text form, e.g. `"1*,2"`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct StarWord {
    letters: Vec<Letter>,
}

impl StarWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self { letters }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Word `x_1^{ε_1} x_2^{ε_2} ··· x_n^{ε_n}` with distinct consecutive
    /// indices, the shape used by the reconstruction algorithm.
    pub fn from_pattern(stars: &[bool]) -> Self {
        Self::new(
            stars
                .iter()
                .enumerate()
                .map(|(index, &star)| Letter { index, star })
                .collect(),
        )
    }

    pub fn from_pairs(pairs: &[(usize, bool)]) -> Self {
        Self::new(pairs.iter().map(|&(index, star)| Letter { index, star }).collect())
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn pattern(&self) -> Vec<bool> {
        self.letters.iter().map(|l| l.star).collect()
    }

    /// The word of the adjoint product: reversed, stars flipped.
    pub fn adjoint(&self) -> Self {
        Self::new(self.letters.iter().rev().map(|l| l.adjoint()).collect())
    }

    pub fn push(&mut self, letter: Letter) {
        self.letters.push(letter);
    }

    /// One past the largest index used (0 for the empty word).
    pub fn index_bound(&self) -> usize {
        self.letters.iter().map(|l| l.index + 1).max().unwrap_or(0)
    }

    /// Ordered product of the letters over `family`.
    pub fn product(&self, family: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        let dim = check_family(family)?;
        self.check_indices(family.len())?;
        let mut acc = ComplexMatrix::identity(dim.max(1));
        if family.is_empty() {
            return Ok(acc);
        }
        for l in &self.letters {
            let x = &family[l.index];
            acc = if l.star { acc.matmul(&x.adjoint()) } else { acc.matmul(x) };
        }
        Ok(acc)
    }

    pub fn check_indices(&self, len: usize) -> Result<()> {
        match self.letters.iter().find(|l| l.index >= len) {
            Some(l) => Err(Error::IndexOutOfRange { index: l.index, len }),
            None => Ok(()),
        }
    }
}

impl FromIterator<Letter> for StarWord {
    fn from_iter<T: IntoIterator<Item = Letter>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

impl fmt::Display for StarWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("e");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}{}", l.index + 1, if l.star { "*" } else { "" })?;
        }
        Ok(())
    }
}

impl From<StarWord> for String {
    fn from(w: StarWord) -> Self {
        w.to_string()
    }
}

impl TryFrom<String> for StarWord {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for StarWord {
    type Err = Error;

    /// Parses `"1*,2,3*"` (1-based, `*` marks an adjoint). `""` and `"e"`
    /// denote the empty word.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "e" {
            return Ok(Self::empty());
        }
        s.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|tok| {
                let (digits, star) = match tok.strip_suffix('*') {
                    Some(d) => (d, true),
                    None => (tok, false),
                };
                let n: usize = digits
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad letter {tok:?} in word {s:?}")))?;
                if n == 0 {
                    return Err(Error::Parse(format!("letter indices are 1-based, got {tok:?}")));
                }
                Ok(Letter { index: n - 1, star })
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

/// Common dimension of a family (0 for the empty family).
pub fn check_family(family: &[ComplexMatrix]) -> Result<usize> {
    let Some(first) = family.first() else {
        return Ok(0);
    };
    let dim = first.dim();
    for m in &family[1..] {
        if m.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.dim(),
            });
        }
    }
    Ok(dim)
}

/// `τ(x_{i₁}^{ε₁} ··· x_{i_k}^{ε_k})`; the empty word gives 1.
pub fn word_trace(family: &[ComplexMatrix], w: &StarWord) -> Result<Complex64> {
    if w.is_empty() {
        check_family(family)?;
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok(w.product(family)?.normalized_trace())
}
