//! Brooks counting quasimorphisms on the free group F2 = <a, b> and the
//! non-equivalence certificates built from them.
//!
//! Values are exact: the homogenized Brooks number of a periodic word is the
//! signed occurrence count per period, an integer, so no limits and no
//! floating point appear anywhere in this module.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FreeQmError {
    #[error("cannot parse free-word character {0:?} (expected a, b, A, B)")]
    BadLetter(char),
    #[error("Brooks word must be nontrivial and cyclically reduced")]
    BadBrooksWord,
}

pub type Result<T> = std::result::Result<T, FreeQmError>;

/// A letter of F2: `a` or `b`, possibly inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FreeLetter {
    pub gen_b: bool,
    pub inverse: bool,
}

impl FreeLetter {
    pub fn inverted(self) -> Self {
        FreeLetter {
            gen_b: self.gen_b,
            inverse: !self.inverse,
        }
    }

    fn to_char(self) -> char {
        match (self.gen_b, self.inverse) {
            (false, false) => 'a',
            (false, true) => 'A',
            (true, false) => 'b',
            (true, true) => 'B',
        }
    }
}

/// A freely reduced word over {a, b, a^-1, b^-1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FreeWord(Vec<FreeLetter>);

impl FreeWord {
    pub fn empty() -> Self {
        FreeWord(Vec::new())
    }

    pub fn reduce(raw: impl IntoIterator<Item = FreeLetter>) -> Self {
        let mut out: Vec<FreeLetter> = Vec::new();
        for l in raw {
            if out.last().map_or(false, |t| *t == l.inverted()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        FreeWord(out)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            if c.is_whitespace() {
                continue;
            }
            let l = match c {
                'a' => FreeLetter { gen_b: false, inverse: false },
                'A' => FreeLetter { gen_b: false, inverse: true },
                'b' => FreeLetter { gen_b: true, inverse: false },
                'B' => FreeLetter { gen_b: true, inverse: true },
                _ => return Err(FreeQmError::BadLetter(c)),
            };
            letters.push(l);
        }
        Ok(FreeWord::reduce(letters))
    }

    pub fn letters(&self) -> &[FreeLetter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        FreeWord(self.0.iter().rev().map(|l| l.inverted()).collect())
    }

    pub fn concat(&self, rhs: &FreeWord) -> Self {
        FreeWord::reduce(self.0.iter().chain(rhs.0.iter()).copied())
    }

    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = FreeWord::empty();
        for _ in 0..n.unsigned_abs() {
            out = out.concat(&base);
        }
        out
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.0.len() < 2 || self.0[0] != self.0[self.0.len() - 1].inverted()
    }
}

impl std::fmt::Display for FreeWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for l in &self.0 {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

/// Cyclically reduced representative (a conjugate of `w`).
pub fn cyclic_reduce(w: &FreeWord) -> FreeWord {
    let mut v = w.0.clone();
    while v.len() >= 2 && v[0] == v[v.len() - 1].inverted() {
        v.remove(0);
        v.pop();
    }
    FreeWord(v)
}

/// Homogenized Brooks value: signed occurrences of `w` (minus those of
/// `w^-1`) per period of the bi-infinite periodic word c^infinity, where c
/// cyclically reduces `g`. Exact, conjugation-invariant, homogeneous.
///
/// Occurrences are counted syllable-aligned: a match counts only when it is
/// a concatenation of complete runs of the ambient word, i.e. the run of
/// the first letter does not extend to the left and the run of the last
/// letter does not extend to the right. This is the reading under which
/// "a^k b^l is a subword of (a^k1 b^l1)^i" fails unless the exponent pairs
/// agree, giving the delta_ij separation the certificates rely on (plain
/// substring counting would see `ab` inside (aabb)^infinity).
pub fn brooks_h(w: &FreeWord, g: &FreeWord) -> Result<i64> {
    if w.is_empty() || !w.is_cyclically_reduced() {
        return Err(FreeQmError::BadBrooksWord);
    }
    let c = cyclic_reduce(g);
    if c.is_empty() {
        return Ok(0);
    }
    let period = c.len();
    let at = |i: usize| c.0[i % period];
    let count = |target: &FreeWord| -> i64 {
        let mut n = 0;
        for start in 0..period {
            let m = target.len();
            let letters_match = (0..m).all(|k| at(start + k) == target.0[k]);
            // run alignment at both ends (indices shifted by +period to
            // stay non-negative)
            let left_aligned = at(start + period - 1) != target.0[0];
            let right_aligned = at(start + m) != target.0[m - 1];
            if letters_match && left_aligned && right_aligned {
                n += 1;
            }
        }
        n
    };
    Ok(count(w) - count(&w.inverse()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VceVerdict {
    NotEquivalent,
    Inconclusive,
}

/// Certificate that two words admit no common powers up to conjugacy,
/// witnessed by the separating Brooks functionals of the words themselves.
#[derive(Debug, Clone, Serialize)]
pub struct VceCertificate {
    pub w1: String,
    pub w2: String,
    /// brooks_h(W1, W1), brooks_h(W1, W2), brooks_h(W2, W1), brooks_h(W2, W2)
    pub values: [i64; 4],
    pub verdict: VceVerdict,
}

/// Separation test: not_equivalent when each word sees itself but not the
/// other (delta_ij values). Failure to separate is "inconclusive", never a
/// claim of equivalence.
pub fn vce_test(w1: &FreeWord, w2: &FreeWord) -> Result<VceCertificate> {
    let c1 = cyclic_reduce(w1);
    let c2 = cyclic_reduce(w2);
    if c1.is_empty() || c2.is_empty() {
        return Err(FreeQmError::BadBrooksWord);
    }
    let values = [
        brooks_h(&c1, w1)?,
        brooks_h(&c1, w2)?,
        brooks_h(&c2, w1)?,
        brooks_h(&c2, w2)?,
    ];
    let verdict = if values[0] != 0 && values[1] == 0 && values[2] == 0 && values[3] != 0 {
        VceVerdict::NotEquivalent
    } else {
        VceVerdict::Inconclusive
    };
    Ok(VceCertificate {
        w1: w1.to_string(),
        w2: w2.to_string(),
        values,
        verdict,
    })
}
