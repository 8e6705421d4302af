//! Measure-once quantum finite automata over exact rationals.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{format_rational, norm_sq, row_apply, Rational, RationalMatrix, RationalVector};
use crate::SCHEMA;

/// A word as a sequence of alphabet indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

/// Comparison against a threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
}

impl Relation {
    pub const ALL: [Relation; 4] = [Relation::Ge, Relation::Gt, Relation::Le, Relation::Lt];

    pub fn holds(self, value: &Rational, lambda: &Rational) -> bool {
        match self {
            Relation::Ge => value >= lambda,
            Relation::Gt => value > lambda,
            Relation::Le => value <= lambda,
            Relation::Lt => value < lambda,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Le => "<=",
            Relation::Lt => "<",
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Relation::Gt | Relation::Lt)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Relation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            ">=" | "ge" | "≥" => Ok(Relation::Ge),
            ">" | "gt" => Ok(Relation::Gt),
            "<=" | "le" | "≤" => Ok(Relation::Le),
            "<" | "lt" => Ok(Relation::Lt),
            other => Err(Error::Parse(format!("unknown relation `{other}`"))),
        }
    }
}

/// A cutpoint language `{w : Val(w) <relation> lambda}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdSpec {
    pub lambda: Rational,
    pub relation: Relation,
}

impl ThresholdSpec {
    pub fn new(lambda: Rational, relation: Relation) -> Self {
        Self { lambda, relation }
    }

    /// Values of an automaton lie in [0, 1]; thresholds outside are legal but degenerate.
    pub fn warnings(&self) -> Vec<String> {
        if self.lambda < Rational::zero() || self.lambda > Rational::one() {
            vec![format!(
                "threshold {} lies outside [0, 1]",
                format_rational(&self.lambda)
            )]
        } else {
            Vec::new()
        }
    }

    pub fn accepts(&self, value: &Rational) -> bool {
        self.relation.holds(value, &self.lambda)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Qfa {
    alphabet: Vec<String>,
    transitions: Vec<RationalMatrix>,
    initial: RationalVector,
    projection: RationalMatrix,
}

impl Qfa {
    /// Checks shapes only; use [`Qfa::validate`] for the exact invariants.
    pub fn new(
        alphabet: Vec<String>,
        transitions: Vec<RationalMatrix>,
        initial: RationalVector,
        projection: RationalMatrix,
    ) -> Result<Self> {
        let n = initial.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("dimension must be positive".into()));
        }
        if alphabet.len() != transitions.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} symbols but {} transition matrices",
                alphabet.len(),
                transitions.len()
            )));
        }
        for (i, sym) in alphabet.iter().enumerate() {
            if sym.is_empty() || sym.contains(',') {
                return Err(Error::InvalidArgument(format!("bad symbol name `{sym}`")));
            }
            if alphabet[..i].contains(sym) {
                return Err(Error::InvalidArgument(format!("duplicate symbol `{sym}`")));
            }
        }
        for (sym, m) in alphabet.iter().zip(&transitions) {
            if m.rows() != n || m.cols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "transition `{sym}` is {}x{}, expected {n}x{n}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        if projection.rows() != n || projection.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "projection is {}x{}, expected {n}x{n}",
                projection.rows(),
                projection.cols()
            )));
        }
        Ok(Self {
            alphabet,
            transitions,
            initial,
            projection,
        })
    }

    /// Like [`Qfa::new`] but also rejects automata that violate an invariant.
    pub fn new_validated(
        alphabet: Vec<String>,
        transitions: Vec<RationalMatrix>,
        initial: RationalVector,
        projection: RationalMatrix,
    ) -> Result<Self> {
        let qfa = Self::new(alphabet, transitions, initial, projection)?;
        qfa.ensure_valid()?;
        Ok(qfa)
    }

    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn transitions(&self) -> &[RationalMatrix] {
        &self.transitions
    }

    pub fn transition(&self, symbol: usize) -> &RationalMatrix {
        &self.transitions[symbol]
    }

    pub fn initial(&self) -> &RationalVector {
        &self.initial
    }

    pub fn projection(&self) -> &RationalMatrix {
        &self.projection
    }

    /// Violations of the three exact invariants; empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        for (sym, m) in self.alphabet.iter().zip(&self.transitions) {
            if !m.is_orthogonal() {
                violations.push(format!("transition `{sym}` is not orthogonal: X·Xᵀ ≠ I"));
            }
        }
        let ns = self.initial.norm_sq();
        if !ns.is_one() {
            violations.push(format!(
                "initial vector has norm² = {} ≠ 1",
                format_rational(&ns)
            ));
        }
        if !self.projection.is_symmetric() {
            violations.push("projection is not symmetric: Pᵀ ≠ P".into());
        }
        match self.projection.mul(&self.projection) {
            Ok(p2) if p2 == self.projection => {}
            _ => violations.push("projection is not idempotent: P² ≠ P".into()),
        }
        violations
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidQfa(violations))
        }
    }

    pub fn symbol_index(&self, symbol: &str) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))
    }

    /// Parses a word. Symbols are comma-separated when any contain more than
    /// one character or when the text contains a comma; otherwise each
    /// character is a symbol. `""` and `"ε"` denote the empty word.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        if text.is_empty() || text == "ε" {
            return Ok(Word::empty());
        }
        let single_char = self.alphabet.iter().all(|s| s.chars().count() == 1);
        let symbols = if single_char && !text.contains(',') {
            text.chars()
                .map(|c| self.symbol_index(&c.to_string()))
                .collect::<Result<Vec<_>>>()?
        } else {
            text.split(',')
                .map(|s| self.symbol_index(s.trim()))
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Word(symbols))
    }

    pub fn format_word(&self, w: &Word) -> String {
        let single_char = self.alphabet.iter().all(|s| s.chars().count() == 1);
        let parts: Vec<&str> = w.0.iter().map(|&i| self.alphabet[i].as_str()).collect();
        if single_char {
            parts.concat()
        } else {
            parts.join(",")
        }
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        match w.0.iter().find(|&&i| i >= self.alphabet.len()) {
            Some(i) => Err(Error::UnknownSymbol(format!("#{i}"))),
            None => Ok(()),
        }
    }

    /// `X_w = X_{w_1} ⋯ X_{w_|w|}`; the empty word maps to the identity.
    pub fn word_matrix(&self, w: &Word) -> Result<RationalMatrix> {
        self.check_word(w)?;
        let mut m = RationalMatrix::identity(self.dim());
        for &sym in &w.0 {
            m = m.mul(&self.transitions[sym])?;
        }
        Ok(m)
    }

    /// `s·X_w`, computed left to right.
    pub fn state(&self, w: &Word) -> Result<RationalVector> {
        self.check_word(w)?;
        let mut v = self.initial.clone();
        for &sym in &w.0 {
            v = row_apply(&v, &self.transitions[sym])?;
        }
        Ok(v)
    }

    /// `Val(w) = ‖s·X_w·P‖²`.
    pub fn value(&self, w: &Word) -> Result<Rational> {
        let v = self.state(w)?;
        Ok(self.measure(&v))
    }

    /// `‖v·P‖²` for a state vector `v`.
    pub fn measure(&self, v: &RationalVector) -> Rational {
        norm_sq(&row_apply(v, &self.projection).expect("state has automaton dimension"))
    }

    /// `‖s·X·P‖²` for an arbitrary matrix `X` (the polynomial `f` of the decision procedure).
    pub fn measure_matrix(&self, x: &RationalMatrix) -> Result<Rational> {
        let v = row_apply(&self.initial, x)?;
        Ok(self.measure(&v))
    }

    /// Visits every word of length `min_len..=max_len` in length-lexicographic
    /// order together with its state vector `s·X_w`. Stops early when the
    /// visitor returns `false`.
    pub fn for_each_word(
        &self,
        min_len: usize,
        max_len: usize,
        mut visit: impl FnMut(&Word, &RationalVector) -> bool,
    ) {
        let mut frontier = vec![(Word::empty(), self.initial.clone())];
        for len in 0..=max_len {
            if len >= min_len {
                for (w, v) in &frontier {
                    if !visit(w, v) {
                        return;
                    }
                }
            }
            if len == max_len {
                break;
            }
            let mut next = Vec::with_capacity(frontier.len() * self.alphabet.len());
            for (w, v) in &frontier {
                for (sym, m) in self.transitions.iter().enumerate() {
                    let mut word = w.0.clone();
                    word.push(sym);
                    next.push((Word(word), row_apply(v, m).expect("square transitions")));
                }
            }
            frontier = next;
        }
    }

    /// Length-lexicographically first word of length ≤ `max_len` in the
    /// threshold language, with its exact value.
    pub fn bounded_search(
        &self,
        threshold: &ThresholdSpec,
        max_len: usize,
        include_empty: bool,
    ) -> Option<(Word, Rational)> {
        if include_empty {
            let v = self.measure(&self.initial);
            if threshold.accepts(&v) {
                return Some((Word::empty(), v));
            }
        }
        for len in 1..=max_len {
            // Subtrees are searched independently; the first hit in symbol
            // order is the length-lexicographic minimum.
            let hits: Vec<Option<(Vec<usize>, Rational)>> = (0..self.alphabet.len())
                .into_par_iter()
                .map(|sym| {
                    let v = row_apply(&self.initial, &self.transitions[sym]).ok()?;
                    let mut path = vec![sym];
                    self.first_at_depth(&v, len - 1, threshold, &mut path)
                        .map(|val| (path, val))
                })
                .collect();
            if let Some((path, val)) = hits.into_iter().flatten().next() {
                return Some((Word(path), val));
            }
        }
        None
    }

    fn first_at_depth(
        &self,
        v: &RationalVector,
        remaining: usize,
        threshold: &ThresholdSpec,
        path: &mut Vec<usize>,
    ) -> Option<Rational> {
        if remaining == 0 {
            let val = self.measure(v);
            return threshold.accepts(&val).then_some(val);
        }
        for (sym, m) in self.transitions.iter().enumerate() {
            let next = row_apply(v, m).expect("square transitions");
            path.push(sym);
            if let Some(val) = self.first_at_depth(&next, remaining - 1, threshold, path) {
                return Some(val);
            }
            path.pop();
        }
        None
    }

    pub fn to_file(&self) -> QfaFile {
        QfaFile {
            schema: Some(SCHEMA.to_string()),
            alphabet: self.alphabet.clone(),
            n: self.dim(),
            transitions: self
                .alphabet
                .iter()
                .cloned()
                .zip(self.transitions.iter().cloned())
                .collect(),
            initial: self.initial.clone(),
            projection: self.projection.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("serializable")
    }

    /// Parses the JSON automaton format; shapes are always checked, the
    /// exact invariants only when `validate` is set.
    pub fn from_json(text: &str, validate: bool) -> Result<Self> {
        let file: QfaFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_qfa(validate)
    }
}

/// On-disk automaton format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QfaFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub alphabet: Vec<String>,
    pub n: usize,
    pub transitions: BTreeMap<String, RationalMatrix>,
    pub initial: RationalVector,
    pub projection: RationalMatrix,
}

impl QfaFile {
    pub fn into_qfa(self, validate: bool) -> Result<Qfa> {
        if self.initial.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "initial vector has length {}, declared n = {}",
                self.initial.len(),
                self.n
            )));
        }
        if self.transitions.len() != self.alphabet.len() {
            return Err(Error::DimensionMismatch(
                "transition map does not match the alphabet".into(),
            ));
        }
        let mut transitions = Vec::with_capacity(self.alphabet.len());
        let mut map = self.transitions;
        for sym in &self.alphabet {
            let m = map
                .remove(sym)
                .ok_or_else(|| Error::UnknownSymbol(sym.clone()))?;
            transitions.push(m);
        }
        let qfa = Qfa::new(self.alphabet, transitions, self.initial, self.projection)?;
        if validate {
            qfa.ensure_valid()?;
        }
        Ok(qfa)
    }
}

/// Small reference automata used across the crate and its tests.
pub mod samples {
    use super::*;
    use crate::exactmath::{int, rat};

    /// Single rotation `X_a` on `s = (3/5, 0, 4/5)` measured on the middle axis.
    pub fn rotation_automaton() -> Qfa {
        let (xa, _) = crate::pcp::rotation_generators();
        Qfa::new(
            vec!["a".into()],
            vec![xa],
            RationalVector::new(vec![rat(3, 5), int(0), rat(4, 5)]),
            RationalMatrix::diag(&[int(0), int(1), int(0)]),
        )
        .expect("well-formed")
    }

    /// Quarter-turn rotation with `s = (1, 0)` measured on the first axis.
    pub fn c4_automaton() -> Qfa {
        Qfa::new(
            vec!["a".into()],
            vec![c4_rotation()],
            RationalVector::from_ints(&[1, 0]),
            RationalMatrix::diag(&[int(1), int(0)]),
        )
        .expect("well-formed")
    }

    /// `((0, −1), (1, 0))`.
    pub fn c4_rotation() -> RationalMatrix {
        RationalMatrix::from_ints_scaled(&[&[0, -1], &[1, 0]], 1)
    }
}

#[cfg(test)]
mod tests {
    use super::samples::*;
    use super::*;
    use crate::exactmath::{int, rat};

    #[test]
    fn sample_automata_are_valid() {
        assert!(rotation_automaton().validate().is_empty());
        assert!(c4_automaton().validate().is_empty());
    }

    #[test]
    fn validate_reports_each_violation() {
        let a = rotation_automaton();
        let bad_init = Qfa::new(
            a.alphabet().to_vec(),
            a.transitions().to_vec(),
            RationalVector::from_ints(&[1, 1, 0]),
            a.projection().clone(),
        )
        .unwrap();
        let v = bad_init.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("norm² = 2"), "{v:?}");

        let bad_proj = Qfa::new(
            a.alphabet().to_vec(),
            a.transitions().to_vec(),
            a.initial().clone(),
            RationalMatrix::diag(&[int(1), rat(1, 2), int(0)]),
        )
        .unwrap();
        let v = bad_proj.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("P² ≠ P"), "{v:?}");

        let bad_trans = Qfa::new(
            a.alphabet().to_vec(),
            vec![RationalMatrix::diag(&[int(2), int(1), int(1)])],
            a.initial().clone(),
            a.projection().clone(),
        )
        .unwrap();
        assert_eq!(bad_trans.validate().len(), 1);
        assert!(bad_trans.ensure_valid().is_err());
    }

    #[test]
    fn shape_errors() {
        assert!(Qfa::new(
            vec!["a".into()],
            vec![RationalMatrix::identity(2)],
            RationalVector::from_ints(&[1, 0, 0]),
            RationalMatrix::identity(3),
        )
        .is_err());
        assert!(Qfa::new(
            vec!["a".into(), "a".into()],
            vec![RationalMatrix::identity(1), RationalMatrix::identity(1)],
            RationalVector::from_ints(&[1]),
            RationalMatrix::identity(1),
        )
        .is_err());
    }

    #[test]
    fn word_matrix_and_values() {
        let a = rotation_automaton();
        assert!(a.word_matrix(&Word::empty()).unwrap().is_identity());
        assert_eq!(a.value(&Word::empty()).unwrap(), int(0));
        assert_eq!(a.value(&a.parse_word("a").unwrap()).unwrap(), rat(144, 625));
        assert!(a.value(&Word(vec![3])).is_err());
        assert!(a.parse_word("b").is_err());
    }

    #[test]
    fn full_projection_gives_value_one() {
        let a = rotation_automaton();
        let full = Qfa::new(
            a.alphabet().to_vec(),
            a.transitions().to_vec(),
            a.initial().clone(),
            RationalMatrix::identity(3),
        )
        .unwrap();
        full.for_each_word(0, 6, |w, _| {
            assert_eq!(full.value(w).unwrap(), int(1));
            true
        });
    }

    #[test]
    fn word_parsing() {
        let multi = Qfa::new(
            vec!["ab".into(), "c".into()],
            vec![RationalMatrix::identity(1), RationalMatrix::identity(1)],
            RationalVector::from_ints(&[1]),
            RationalMatrix::identity(1),
        )
        .unwrap();
        let w = multi.parse_word("ab,c,ab").unwrap();
        assert_eq!(w, Word(vec![0, 1, 0]));
        assert_eq!(multi.format_word(&w), "ab,c,ab");
        let c4 = c4_automaton();
        assert_eq!(c4.parse_word("aaa").unwrap().len(), 3);
        assert_eq!(c4.parse_word("a,a").unwrap().len(), 2);
        assert_eq!(c4.parse_word("ε").unwrap(), Word::empty());
    }

    #[test]
    fn bounded_search_examples() {
        let a = rotation_automaton();
        let above_one = ThresholdSpec::new(int(1), Relation::Gt);
        assert_eq!(a.bounded_search(&above_one, 10, true), None);

        let c4 = c4_automaton();
        let half = ThresholdSpec::new(rat(1, 2), Relation::Gt);
        let (w, v) = c4.bounded_search(&half, 6, false).unwrap();
        assert_eq!((c4.format_word(&w).as_str(), v), ("aa", int(1)));

        let nonneg = ThresholdSpec::new(int(0), Relation::Ge);
        let (w, v) = c4.bounded_search(&nonneg, 6, true).unwrap();
        assert!(w.is_empty());
        assert_eq!(v, int(1));
        // with ε allowed the strict search stops at ε immediately
        assert!(c4.bounded_search(&half, 6, true).unwrap().0.is_empty());
    }

    #[test]
    fn bounded_search_is_length_lex_minimal() {
        // two letters, compare against brute force over for_each_word
        let (xa, xb) = crate::pcp::rotation_generators();
        let a = Qfa::new(
            vec!["a".into(), "b".into()],
            vec![xa, xb],
            RationalVector::new(vec![rat(3, 5), int(0), rat(4, 5)]),
            RationalMatrix::diag(&[int(0), int(1), int(0)]),
        )
        .unwrap();
        for lambda in [rat(1, 10), rat(1, 2), rat(9, 10), rat(99, 100)] {
            let t = ThresholdSpec::new(lambda, Relation::Gt);
            let mut brute = None;
            a.for_each_word(1, 5, |w, v| {
                let val = a.measure(v);
                if t.accepts(&val) {
                    brute = Some((w.clone(), val));
                    false
                } else {
                    true
                }
            });
            assert_eq!(a.bounded_search(&t, 5, false), brute);
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let a = rotation_automaton();
        let text = a.to_json();
        assert_eq!(Qfa::from_json(&text, true).unwrap(), a);
        let broken = text.replace("\"4/5\"\n  ]", "\"1\"\n  ]");
        assert!(broken != text);
        assert!(matches!(
            Qfa::from_json(&broken, true),
            Err(Error::InvalidQfa(_))
        ));
        assert!(Qfa::from_json(&broken, false).is_ok());
    }

    #[test]
    fn relation_parsing() {
        for r in Relation::ALL {
            assert_eq!(r.symbol().parse::<Relation>().unwrap(), r);
        }
        assert!("=".parse::<Relation>().is_err());
        assert_eq!(
            ThresholdSpec::new(rat(3, 2), Relation::Gt).warnings().len(),
            1
        );
    }
}
