//! Free-group words and their translation to edge paths in the ambient graph.
//!
//! The ambient graph for parameter `m` has two vertices joined by `m` edges
//! labeled `a1..am`, all oriented from the type-1 vertex to the type-2 vertex.
//! Its fundamental group at the type-1 vertex is free of rank `m - 1`; we fix
//! the basis `x_i = a_i a_m^{-1}` (the last edge spans the tree). A word in
//! `x_1..x_{m-1}` therefore translates into a closed edge path that alternates
//! forward and backward ambient letters.

use std::fmt;

use crate::error::{Error, Result};

/// Label of an ambient edge, 1-based (`a1..am`).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Letter(pub u32);

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// One signed generator occurrence: `x_index` or `x_index^-1`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Gen {
    pub index: u32,
    pub inverse: bool,
}

impl Gen {
    pub fn new(index: u32, inverse: bool) -> Gen {
        Gen { index, inverse }
    }

    pub fn inv(self) -> Gen {
        Gen { index: self.index, inverse: !self.inverse }
    }

    fn cancels(self, other: Gen) -> bool {
        self.index == other.index && self.inverse != other.inverse
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}{}", self.index, if self.inverse { "^-1" } else { "" })
    }
}

/// A word in the free generators `x1, x2, ...`; not necessarily reduced.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Word {
    pub gens: Vec<Gen>,
}

impl Word {
    pub fn new(gens: Vec<Gen>) -> Word {
        Word { gens }
    }

    pub fn empty() -> Word {
        Word { gens: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    /// Free reduction: repeatedly cancel adjacent `x_i x_i^-1` pairs.
    pub fn reduced(&self) -> Word {
        let mut out: Vec<Gen> = Vec::with_capacity(self.gens.len());
        for &g in &self.gens {
            if out.last().is_some_and(|&top| top.cancels(g)) {
                out.pop();
            } else {
                out.push(g);
            }
        }
        Word { gens: out }
    }

    pub fn is_reduced(&self) -> bool {
        self.gens.windows(2).all(|w| !w[0].cancels(w[1]))
    }

    pub fn inverse(&self) -> Word {
        Word { gens: self.gens.iter().rev().map(|g| g.inv()).collect() }
    }

    /// Concatenation followed by free reduction.
    pub fn concat(&self, other: &Word) -> Word {
        let mut gens = self.gens.clone();
        gens.extend_from_slice(&other.gens);
        Word { gens }.reduced()
    }

    /// Largest generator index used, or 0 for the empty word.
    pub fn max_index(&self) -> u32 {
        self.gens.iter().map(|g| g.index).max().unwrap_or(0)
    }

    /// Parse whitespace-separated tokens of the form `x3` or `x3^-1`.
    pub fn parse(s: &str) -> Result<Word> {
        let mut gens = Vec::new();
        for tok in s.split_whitespace() {
            gens.push(parse_gen(tok)?);
        }
        Ok(Word { gens })
    }
}

fn parse_gen(tok: &str) -> Result<Gen> {
    let body = tok
        .strip_prefix('x')
        .ok_or_else(|| Error::Parse(format!("bad generator token {tok:?}: expected x<i> or x<i>^-1")))?;
    let (digits, inverse) = match body.strip_suffix("^-1") {
        Some(d) => (d, true),
        None => (body, false),
    };
    let index: u32 = digits
        .parse()
        .map_err(|_| Error::Parse(format!("bad generator token {tok:?}: expected x<i> or x<i>^-1")))?;
    if index == 0 {
        return Err(Error::Parse(format!("bad generator token {tok:?}: index must be positive")));
    }
    Ok(Gen { index, inverse })
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.gens.is_empty() {
            return write!(f, "1");
        }
        for (i, g) in self.gens.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

/// One step of an edge path in the ambient graph: `forward` traverses the
/// labeled edge from the type-1 vertex to the type-2 vertex.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Step {
    pub label: Letter,
    pub forward: bool,
}

impl Step {
    pub fn fwd(label: u32) -> Step {
        Step { label: Letter(label), forward: true }
    }

    pub fn back(label: u32) -> Step {
        Step { label: Letter(label), forward: false }
    }

    pub fn inv(self) -> Step {
        Step { label: self.label, forward: !self.forward }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.label, if self.forward { "" } else { "^-1" })
    }
}

/// Free reduction of an edge path: cancel adjacent mutually inverse steps.
pub fn reduce_path(steps: &[Step]) -> Vec<Step> {
    let mut out: Vec<Step> = Vec::with_capacity(steps.len());
    for &s in steps {
        if out.last().is_some_and(|&top| top == s.inv()) {
            out.pop();
        } else {
            out.push(s);
        }
    }
    out
}

/// Translate a word into the closed ambient edge path it traces from the
/// type-1 vertex, already freely reduced.
///
/// Every `x_i` becomes `a_i a_m^{-1}` and every `x_i^{-1}` becomes
/// `a_m a_i^{-1}`, so the result alternates forward and backward steps and has
/// even length. Errors if some generator index is outside `1..=m-1`.
pub fn word_to_loop(word: &Word, m: u32) -> Result<Vec<Step>> {
    if m < 3 {
        return Err(Error::AmbientTooSmall(m));
    }
    let mut steps = Vec::with_capacity(2 * word.len());
    for g in &word.reduced().gens {
        if g.index >= m {
            return Err(Error::GeneratorRange { index: g.index, max: m - 1 });
        }
        if g.inverse {
            steps.push(Step::fwd(m));
            steps.push(Step::back(g.index));
        } else {
            steps.push(Step::fwd(g.index));
            steps.push(Step::back(m));
        }
    }
    let reduced = reduce_path(&steps);
    debug_assert!(reduced.len() % 2 == 0);
    debug_assert!(reduced.iter().enumerate().all(|(i, s)| s.forward == (i % 2 == 0)));
    Ok(reduced)
}

/// Convert a reduced closed ambient path at the type-1 vertex back into a
/// word in the `x_i` basis: each `a_p a_q^{-1}` pair becomes `x_p x_q^{-1}`,
/// with `x_m` reading as the identity.
pub fn loop_to_word(steps: &[Step], m: u32) -> Result<Word> {
    let steps = reduce_path(steps);
    if steps.len() % 2 != 0 {
        return Err(Error::Internal("ambient loop has odd length".into()));
    }
    let mut gens = Vec::new();
    for pair in steps.chunks(2) {
        let (up, down) = (pair[0], pair[1]);
        if !up.forward || down.forward {
            return Err(Error::Internal("ambient loop does not alternate directions".into()));
        }
        if up.label.0 < m {
            gens.push(Gen::new(up.label.0, false));
        }
        if down.label.0 < m {
            gens.push(Gen::new(down.label.0, true));
        }
    }
    Ok(Word { gens }.reduced())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn parse_and_display_round_trip() {
        let word = w("x1 x2^-1 x1");
        assert_eq!(word.to_string(), "x1 x2^-1 x1");
        assert_eq!(Word::parse(&word.to_string()).unwrap(), word);
        assert_eq!(w("").to_string(), "1");
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(Word::parse("y1").is_err());
        assert!(Word::parse("x0").is_err());
        assert!(Word::parse("x1^2").is_err());
        assert!(Word::parse("x").is_err());
    }

    #[test]
    fn reduction_cancels_adjacent_inverses() {
        assert_eq!(w("x1 x1^-1").reduced(), Word::empty());
        assert_eq!(w("x1 x2 x2^-1 x1^-1 x3").reduced(), w("x3"));
        assert!(w("x1 x2").reduced().is_reduced());
    }

    #[test]
    fn reduction_is_idempotent_and_length_monotone() {
        let cases = ["x1 x1^-1 x1", "x2 x2 x2^-1 x2^-1", "x1 x2 x1^-1", ""];
        for c in cases {
            let once = w(c).reduced();
            assert_eq!(once.reduced(), once);
            assert!(once.len() <= w(c).len());
            assert!(once.is_reduced());
        }
    }

    #[test]
    fn inverse_concat_is_trivial() {
        let word = w("x1 x2^-1 x3 x1");
        assert_eq!(word.concat(&word.inverse()), Word::empty());
    }

    #[test]
    fn basis_translation_examples() {
        // x1 with m = 3 traces a1 a3^-1.
        assert_eq!(word_to_loop(&w("x1"), 3).unwrap(), vec![Step::fwd(1), Step::back(3)]);
        // x1^-1 with m = 3 traces a3 a1^-1.
        assert_eq!(word_to_loop(&w("x1^-1"), 3).unwrap(), vec![Step::fwd(3), Step::back(1)]);
        // x1 x2 with m = 3 traces a1 a3^-1 a2 a3^-1.
        assert_eq!(
            word_to_loop(&w("x1 x2"), 3).unwrap(),
            vec![Step::fwd(1), Step::back(3), Step::fwd(2), Step::back(3)]
        );
        // The a3^-1 a3 juncture in x1 x2^-1 cancels.
        assert_eq!(word_to_loop(&w("x1 x2^-1"), 3).unwrap(), vec![Step::fwd(1), Step::back(2)]);
    }

    #[test]
    fn translation_rejects_out_of_range() {
        assert!(matches!(
            word_to_loop(&w("x3"), 3),
            Err(Error::GeneratorRange { index: 3, max: 2 })
        ));
        assert!(matches!(word_to_loop(&w("x1"), 2), Err(Error::AmbientTooSmall(2))));
    }

    #[test]
    fn loop_translation_round_trips() {
        for s in ["x1", "x1^-1", "x1 x2", "x2 x1^-1 x2^-1", "x1 x1 x2^-1 x1"] {
            let word = w(s).reduced();
            let steps = word_to_loop(&word, 3).unwrap();
            assert_eq!(loop_to_word(&steps, 3).unwrap(), word);
        }
        for s in ["x1 x3^-1", "x3 x2 x1^-1"] {
            let word = w(s).reduced();
            let steps = word_to_loop(&word, 4).unwrap();
            assert_eq!(loop_to_word(&steps, 4).unwrap(), word);
        }
    }
}
