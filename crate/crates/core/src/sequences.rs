//! Deterministic letter strings over the alphabet {A, B} and their ±1
//! weight functions.
//!
//! Four generators are provided besides the seeded random reference:
//!
//! - two-periodic: `ABABAB...`
//! - Fibonacci: fixed point of `A -> AB`, `B -> A`, equivalently the
//!   recursion `S(k+1) = S(k) S(k-1)` with `S(1) = B`, `S(2) = A`;
//! - Thue-Morse: `S(k+1) = S(k) ~S(k)` with `S(1) = A`, where `~` swaps
//!   the two letters;
//! - Rudin-Shapiro: fixed point of the four-letter rules `P -> PQ`,
//!   `Q -> PR`, `R -> SQ`, `S -> SR` started from `P`, projected onto two
//!   letters by `(P, Q) -> A`, `(R, S) -> B`.
//!
//! Every generator returns the prefix of the corresponding infinite word;
//! when an iteration overshoots the requested length the word is truncated
//! from the front. All generators are pure functions of their arguments.

use std::fmt;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{invalid, Result};

/// One of the two letters a coin sequence is built from.
///
/// The weight map sends `A -> +1` and `B -> -1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Letter {
    A,
    B,
}

impl Letter {
    /// ±1 weight of the letter: +1 for `A`, -1 for `B`.
    pub fn weight(self) -> f64 {
        match self {
            Letter::A => 1.0,
            Letter::B => -1.0,
        }
    }

    /// The other letter.
    pub fn swapped(self) -> Letter {
        match self {
            Letter::A => Letter::B,
            Letter::B => Letter::A,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::A => write!(f, "A"),
            Letter::B => write!(f, "B"),
        }
    }
}

/// Tag identifying which generator produced a [`LetterString`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceKind {
    TwoPeriodic,
    Fibonacci,
    ThueMorse,
    RudinShapiro,
    Random,
}

impl SequenceKind {
    /// Stable lowercase label, also used in file names and config files.
    pub fn label(&self) -> &'static str {
        match self {
            SequenceKind::TwoPeriodic => "two-periodic",
            SequenceKind::Fibonacci => "fibonacci",
            SequenceKind::ThueMorse => "thue-morse",
            SequenceKind::RudinShapiro => "rudin-shapiro",
            SequenceKind::Random => "random",
        }
    }

    /// The four deterministic kinds, in the conventional comparison order.
    pub fn deterministic() -> [SequenceKind; 4] {
        [
            SequenceKind::TwoPeriodic,
            SequenceKind::Fibonacci,
            SequenceKind::ThueMorse,
            SequenceKind::RudinShapiro,
        ]
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for SequenceKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-periodic" => Ok(SequenceKind::TwoPeriodic),
            "fibonacci" => Ok(SequenceKind::Fibonacci),
            "thue-morse" => Ok(SequenceKind::ThueMorse),
            "rudin-shapiro" => Ok(SequenceKind::RudinShapiro),
            "random" => Ok(SequenceKind::Random),
            other => Err(invalid(format!("unknown sequence kind `{other}`"))),
        }
    }
}

/// A finite word over {A, B} together with the generator that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LetterString {
    letters: Vec<Letter>,
    kind: SequenceKind,
}

impl LetterString {
    fn new(letters: Vec<Letter>, kind: SequenceKind) -> LetterString {
        LetterString { letters, kind }
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
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

    pub fn get(&self, index: usize) -> Option<Letter> {
        self.letters.get(index).copied()
    }

    /// Plain-text form, one character per letter, no separators.
    pub fn as_text(&self) -> String {
        self.letters
            .iter()
            .map(|l| match l {
                Letter::A => 'A',
                Letter::B => 'B',
            })
            .collect()
    }

    /// Elementwise ±1 weights: `A -> +1`, `B -> -1`.
    pub fn weights(&self) -> WeightFunction {
        WeightFunction {
            signs: self.letters.iter().map(|l| l.weight()).collect(),
        }
    }
}

impl fmt::Display for LetterString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_text())
    }
}

/// Serializes as a JSON array of one-character strings.
impl Serialize for LetterString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.letters.len()))?;
        for letter in &self.letters {
            seq.serialize_element(letter)?;
        }
        seq.end()
    }
}

/// ±1 signs of a letter string, indexed by lattice site when the length is
/// odd (site `x` corresponds to word index `x + N` with `L = 2N + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    signs: Vec<f64>,
}

impl WeightFunction {
    /// Build directly from ±1 signs; intended for synthetic inputs.
    pub fn from_signs(signs: Vec<f64>) -> Result<WeightFunction> {
        if signs.iter().any(|s| *s != 1.0 && *s != -1.0) {
            return Err(invalid("weight function entries must be +1 or -1"));
        }
        Ok(WeightFunction { signs })
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }
}

/// Free-function form of [`LetterString::weights`].
pub fn weight_function(s: &LetterString) -> WeightFunction {
    s.weights()
}

fn check_length(length: usize) -> Result<()> {
    if length == 0 {
        return Err(invalid("sequence length must be at least 1"));
    }
    Ok(())
}

/// Alternating word `ABAB...`, starting with `A`.
pub fn two_periodic(length: usize) -> Result<LetterString> {
    check_length(length)?;
    let letters = (0..length)
        .map(|i| if i % 2 == 0 { Letter::A } else { Letter::B })
        .collect();
    Ok(LetterString::new(letters, SequenceKind::TwoPeriodic))
}

/// Prefix of the Fibonacci word, from `S(k+1) = S(k) S(k-1)` with
/// `S(1) = B`, `S(2) = A`.
pub fn fibonacci(length: usize) -> Result<LetterString> {
    check_length(length)?;
    let mut prev = vec![Letter::B];
    let mut cur = vec![Letter::A];
    while cur.len() < length {
        let mut next = cur.clone();
        next.extend_from_slice(&prev);
        prev = cur;
        cur = next;
    }
    cur.truncate(length);
    Ok(LetterString::new(cur, SequenceKind::Fibonacci))
}

/// Prefix of the Thue-Morse word, from `S(k+1) = S(k) ~S(k)` with `S(1) = A`.
pub fn thue_morse(length: usize) -> Result<LetterString> {
    check_length(length)?;
    let mut word = vec![Letter::A];
    while word.len() < length {
        let swapped: Vec<Letter> = word.iter().map(|l| l.swapped()).collect();
        word.extend(swapped);
    }
    word.truncate(length);
    Ok(LetterString::new(word, SequenceKind::ThueMorse))
}

#[derive(Clone, Copy)]
enum Quad {
    P,
    Q,
    R,
    S,
}

impl Quad {
    fn substitute(self) -> [Quad; 2] {
        match self {
            Quad::P => [Quad::P, Quad::Q],
            Quad::Q => [Quad::P, Quad::R],
            Quad::R => [Quad::S, Quad::Q],
            Quad::S => [Quad::S, Quad::R],
        }
    }

    fn project(self) -> Letter {
        match self {
            Quad::P | Quad::Q => Letter::A,
            Quad::R | Quad::S => Letter::B,
        }
    }
}

/// Prefix of the Rudin-Shapiro word: iterate the four-letter substitution
/// from seed `P`, then project `(P, Q) -> A` and `(R, S) -> B`.
pub fn rudin_shapiro(length: usize) -> Result<LetterString> {
    check_length(length)?;
    let mut word = vec![Quad::P];
    while word.len() < length {
        word = word.iter().flat_map(|q| q.substitute()).collect();
    }
    let letters = word.iter().take(length).map(|q| q.project()).collect();
    Ok(LetterString::new(letters, SequenceKind::RudinShapiro))
}

/// SplitMix64 stream; fixed algorithm so that letter strings are
/// bit-reproducible across implementations.
///
/// State update: `s += 0x9E3779B97F4A7C15`; output: `z = s`;
/// `z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9`;
/// `z = (z ^ (z >> 27)) * 0x94D049BB133111EB`; `z = z ^ (z >> 31)`.
struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    fn next(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// I.i.d. uniform letters from a seeded SplitMix64 stream; the letter is `A`
/// exactly when the top bit of the next output word is clear. Same seed,
/// same string.
pub fn random(length: usize, seed: u64) -> Result<LetterString> {
    check_length(length)?;
    let mut rng = SplitMix64::new(seed);
    let letters = (0..length)
        .map(|_| {
            if rng.next() >> 63 == 0 {
                Letter::A
            } else {
                Letter::B
            }
        })
        .collect();
    Ok(LetterString::new(letters, SequenceKind::Random))
}

/// Dispatch on kind. The seed is only consulted for [`SequenceKind::Random`].
pub fn generate(kind: SequenceKind, length: usize, seed: u64) -> Result<LetterString> {
    match kind {
        SequenceKind::TwoPeriodic => two_periodic(length),
        SequenceKind::Fibonacci => fibonacci(length),
        SequenceKind::ThueMorse => thue_morse(length),
        SequenceKind::RudinShapiro => rudin_shapiro(length),
        SequenceKind::Random => random(length, seed),
    }
}
