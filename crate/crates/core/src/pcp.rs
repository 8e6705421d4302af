//! Reductions from Post's correspondence problem.
//!
//! Words over `{a, b}` are encoded by the rotations `X_a`, `X_b` of angle
//! `arccos(3/5)` about the third and first axes. The vector `t = (3, 0, 4)`
//! separates distinct reduced words, which turns "`u_w = v_w`" into a zero
//! test on a six-dimensional orthogonal block matrix.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{int, rat, Rational, RationalMatrix, RationalVector};
use crate::qfa::{Qfa, Relation, ThresholdSpec, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedLetter {
    pub base: Letter,
    pub inverted: bool,
}

impl SignedLetter {
    pub const ALL: [SignedLetter; 4] = [
        SignedLetter::new(Letter::A, false),
        SignedLetter::new(Letter::A, true),
        SignedLetter::new(Letter::B, false),
        SignedLetter::new(Letter::B, true),
    ];

    pub const fn new(base: Letter, inverted: bool) -> Self {
        Self { base, inverted }
    }

    pub fn inverse(self) -> Self {
        Self::new(self.base, !self.inverted)
    }

    /// `5·X` for this letter, as integers.
    fn scaled_matrix(self) -> [[i64; 3]; 3] {
        let m = match self.base {
            Letter::A => [[3, -4, 0], [4, 3, 0], [0, 0, 5]],
            Letter::B => [[5, 0, 0], [0, 3, -4], [0, 4, 3]],
        };
        if self.inverted {
            // orthogonal: the inverse is the transpose
            let mut t = [[0; 3]; 3];
            for (i, row) in m.iter().enumerate() {
                for (j, &e) in row.iter().enumerate() {
                    t[j][i] = e;
                }
            }
            t
        } else {
            m
        }
    }
}

impl fmt::Display for SignedLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match (self.base, self.inverted) {
            (Letter::A, false) => "a",
            (Letter::A, true) => "A",
            (Letter::B, false) => "b",
            (Letter::B, true) => "B",
        };
        f.write_str(c)
    }
}

/// Renders a signed word with upper case for inverses, e.g. `aBb`.
pub fn format_signed_word(w: &[SignedLetter]) -> String {
    if w.is_empty() {
        return "ε".into();
    }
    w.iter().map(ToString::to_string).collect()
}

pub fn parse_signed_word(s: &str) -> Result<Vec<SignedLetter>> {
    s.chars()
        .filter(|&c| c != 'ε')
        .map(|c| match c {
            'a' => Ok(SignedLetter::new(Letter::A, false)),
            'A' => Ok(SignedLetter::new(Letter::A, true)),
            'b' => Ok(SignedLetter::new(Letter::B, false)),
            'B' => Ok(SignedLetter::new(Letter::B, true)),
            other => Err(Error::Parse(format!("bad signed letter `{other}`"))),
        })
        .collect()
}

/// `(3 0 4)·M = (x1, x2, x3) / 5^k`, with the triple left unreduced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiveAdicForm {
    pub x1: BigInt,
    pub x2: BigInt,
    pub x3: BigInt,
    pub k: usize,
}

impl FiveAdicForm {
    fn start() -> Self {
        Self {
            x1: BigInt::from(3),
            x2: BigInt::zero(),
            x3: BigInt::from(4),
            k: 0,
        }
    }

    fn step(&self, letter: SignedLetter) -> Self {
        let m = letter.scaled_matrix();
        let x = [&self.x1, &self.x2, &self.x3];
        let col = |j: usize| -> BigInt { (0..3).map(|i| x[i] * m[i][j]).sum() };
        Self {
            x1: col(0),
            x2: col(1),
            x3: col(2),
            k: self.k + 1,
        }
    }

    pub fn x2_divisible_by_five(&self) -> bool {
        self.x2.is_multiple_of(&BigInt::from(5))
    }

    pub fn norm_sq(&self) -> BigInt {
        &self.x1 * &self.x1 + &self.x2 * &self.x2 + &self.x3 * &self.x3
    }

    pub fn to_vector(&self) -> RationalVector {
        let den = BigInt::from(5).pow(self.k as u32);
        RationalVector::new(
            [&self.x1, &self.x2, &self.x3]
                .iter()
                .map(|x| Rational::new((*x).clone(), den.clone()))
                .collect(),
        )
    }
}

/// `(X_a, X_b)`.
pub fn rotation_generators() -> (RationalMatrix, RationalMatrix) {
    (
        RationalMatrix::from_ints_scaled(&[&[3, -4, 0], &[4, 3, 0], &[0, 0, 5]], 5),
        RationalMatrix::from_ints_scaled(&[&[5, 0, 0], &[0, 3, -4], &[0, 4, 3]], 5),
    )
}

pub fn test_vector() -> RationalVector {
    RationalVector::from_ints(&[3, 0, 4])
}

/// Position of the first adjacent letter–inverse pair, if any.
pub fn first_cancellation(word: &[SignedLetter]) -> Option<usize> {
    word.windows(2)
        .position(|pair| pair[1] == pair[0].inverse())
}

pub fn five_adic_form(word: &[SignedLetter]) -> Result<FiveAdicForm> {
    if let Some(i) = first_cancellation(word) {
        return Err(Error::NonReducedWord(i, i + 1));
    }
    Ok(word.iter().fold(FiveAdicForm::start(), |acc, &l| acc.step(l)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FreenessFailure {
    pub word: String,
    pub x1: String,
    pub x2: String,
    pub x3: String,
    pub k: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FreenessReport {
    pub max_len: usize,
    pub words_checked: u64,
    /// Reduced words per length `1..=max_len`.
    pub per_length: Vec<u64>,
    pub first_failure: Option<FreenessFailure>,
}

impl FreenessReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Checks `5 ∤ x2` and `x1² + x2² + x3² = 25^(k+1)` for every reduced signed
/// word of length `1..=max_len`.
pub fn check_freeness_certificate(max_len: usize) -> FreenessReport {
    struct Subtree {
        per_length: Vec<u64>,
        failure: Option<FreenessFailure>,
    }

    fn dfs(
        form: &FiveAdicForm,
        word: &mut Vec<SignedLetter>,
        max_len: usize,
        out: &mut Subtree,
    ) {
        out.per_length[form.k - 1] += 1;
        if out.failure.is_none() {
            let expected = BigInt::from(25).pow(form.k as u32 + 1);
            let reason = if form.x2_divisible_by_five() {
                Some("5 divides x2")
            } else if form.norm_sq() != expected {
                Some("norm not conserved")
            } else {
                None
            };
            if let Some(reason) = reason {
                out.failure = Some(FreenessFailure {
                    word: format_signed_word(word),
                    x1: form.x1.to_string(),
                    x2: form.x2.to_string(),
                    x3: form.x3.to_string(),
                    k: form.k,
                    reason: reason.into(),
                });
            }
        }
        if form.k == max_len {
            return;
        }
        let last = *word.last().expect("non-empty");
        for next in SignedLetter::ALL {
            if next == last.inverse() {
                continue;
            }
            word.push(next);
            dfs(&form.step(next), word, max_len, out);
            word.pop();
        }
    }

    if max_len == 0 {
        return FreenessReport {
            max_len,
            words_checked: 0,
            per_length: Vec::new(),
            first_failure: None,
        };
    }
    let subtrees: Vec<Subtree> = SignedLetter::ALL
        .par_iter()
        .map(|&first| {
            let mut out = Subtree {
                per_length: vec![0; max_len],
                failure: None,
            };
            let mut word = vec![first];
            dfs(&FiveAdicForm::start().step(first), &mut word, max_len, &mut out);
            out
        })
        .collect();
    let mut per_length = vec![0u64; max_len];
    let mut first_failure = None;
    for s in subtrees {
        for (acc, c) in per_length.iter_mut().zip(&s.per_length) {
            *acc += c;
        }
        if first_failure.is_none() {
            first_failure = s.failure;
        }
    }
    FreenessReport {
        max_len,
        words_checked: per_length.iter().sum(),
        per_length,
        first_failure,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InjectivityReport {
    pub max_len: usize,
    pub words: usize,
    pub distinct_images: usize,
    pub collision: Option<(String, String)>,
}

/// Checks `t·X_u ≠ t·X_v` for all distinct reduced words of length `≤ max_len`.
pub fn check_injectivity(max_len: usize) -> InjectivityReport {
    let mut seen: HashMap<RationalVector, String> = HashMap::new();
    let mut collision = None;
    let mut words = 0;
    let mut layer: Vec<(Vec<SignedLetter>, FiveAdicForm)> = vec![(Vec::new(), FiveAdicForm::start())];
    for len in 0..=max_len {
        let mut next = Vec::new();
        for (w, form) in &layer {
            words += 1;
            let name = format_signed_word(w);
            if let Some(prev) = seen.insert(form.to_vector(), name.clone()) {
                collision.get_or_insert((prev, name));
            }
            if len < max_len {
                for l in SignedLetter::ALL {
                    if w.last().is_some_and(|&p| p == l.inverse()) {
                        continue;
                    }
                    let mut w2 = w.clone();
                    w2.push(l);
                    next.push((w2, form.step(l)));
                }
            }
        }
        layer = next;
    }
    InjectivityReport {
        max_len,
        words,
        distinct_images: seen.len(),
        collision,
    }
}

fn parse_ab(word: &str) -> Result<Vec<Letter>> {
    word.chars()
        .map(|c| match c {
            'a' => Ok(Letter::A),
            'b' => Ok(Letter::B),
            other => Err(Error::Parse(format!(
                "PCP words are over {{a, b}}, found `{other}`"
            ))),
        })
        .collect()
}

/// `X_w` for a word over `{a, b}`; the empty word maps to `I₃`.
pub fn encode_word(word: &str) -> Result<RationalMatrix> {
    let (xa, xb) = rotation_generators();
    parse_ab(word)?.iter().try_fold(RationalMatrix::identity(3), |m, l| {
        m.mul(match l {
            Letter::A => &xa,
            Letter::B => &xb,
        })
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcpInstance {
    pairs: Vec<(String, String)>,
}

impl PcpInstance {
    pub fn new(pairs: Vec<(String, String)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("a PCP instance needs at least one pair".into()));
        }
        for (u, v) in &pairs {
            parse_ab(u)?;
            parse_ab(v)?;
        }
        Ok(Self { pairs })
    }

    pub fn from_strs(pairs: &[(&str, &str)]) -> Result<Self> {
        Self::new(pairs.iter().map(|(u, v)| (u.to_string(), v.to_string())).collect())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: PcpInstance =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(raw.pairs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    /// `(u_w, v_w)` for an index word (indices are zero-based).
    pub fn images(&self, w: &Word) -> Result<(String, String)> {
        let mut u = String::new();
        let mut v = String::new();
        for &i in w.symbols() {
            let (ui, vi) = self
                .pairs
                .get(i)
                .ok_or_else(|| Error::UnknownSymbol(format!("{}", i + 1)))?;
            u.push_str(ui);
            v.push_str(vi);
        }
        Ok((u, v))
    }

    pub fn alphabet(&self) -> Vec<String> {
        (1..=self.k()).map(|i| i.to_string()).collect()
    }

    /// The six-dimensional block matrix `Y_i` of pair `i` (zero-based).
    pub fn block_matrix(&self, i: usize) -> Result<RationalMatrix> {
        let (u, v) = &self.pairs[i];
        Ok(block_from_pair(&encode_word(u)?, &encode_word(v)?))
    }
}

/// `(1/2)·((U+V, U−V), (U−V, V+U))`.
pub fn block_from_pair(xu: &RationalMatrix, xv: &RationalMatrix) -> RationalMatrix {
    let half = rat(1, 2);
    let sum = xu.add(xv).expect("3x3").scale(&half);
    let diff = xu.sub(xv).expect("3x3").scale(&half);
    let mut y = RationalMatrix::zeros(6, 6);
    y.set_block(0, 0, &sum);
    y.set_block(0, 3, &diff);
    y.set_block(3, 0, &diff);
    y.set_block(3, 3, &sum);
    y
}

/// `y = (t, 0) = (3, 0, 4, 0, 0, 0)`.
pub fn pcp_start_vector() -> RationalVector {
    RationalVector::from_ints(&[3, 0, 4, 0, 0, 0])
}

/// `P = diag(0₃, I₃)`.
pub fn pcp_projection() -> RationalMatrix {
    RationalMatrix::diag(&[int(0), int(0), int(0), int(1), int(1), int(1)])
}

/// The PCP automaton over alphabet `1..k`. Its start vector is `y/5`, so
/// `value(w) = ‖y·Y_w·P‖² / 25`; the zero set is the set of solutions.
pub fn build_pcp_qfa(p: &PcpInstance) -> Result<Qfa> {
    let transitions = (0..p.k())
        .map(|i| p.block_matrix(i))
        .collect::<Result<Vec<_>>>()?;
    Qfa::new(
        p.alphabet(),
        transitions,
        pcp_start_vector().scale(&rat(1, 5)),
        pcp_projection(),
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PcpCheck {
    pub is_solution: bool,
    pub u: String,
    pub v: String,
}

pub fn pcp_solution_predicate(p: &PcpInstance, w: &Word) -> Result<PcpCheck> {
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    let (u, v) = p.images(w)?;
    Ok(PcpCheck {
        is_solution: u == v,
        u,
        v,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReductionReport {
    pub max_len: usize,
    pub words_checked: u64,
    pub solutions: Vec<String>,
    /// Words where `value = 0` and `u_w = v_w` disagree (expected: none).
    pub mismatches: Vec<String>,
}

/// Exhaustively compares `value(w) = 0` with `u_w = v_w` for non-empty words.
pub fn check_reduction(p: &PcpInstance, max_len: usize) -> Result<ReductionReport> {
    let qfa = build_pcp_qfa(p)?;
    let mut report = ReductionReport {
        max_len,
        words_checked: 0,
        solutions: Vec::new(),
        mismatches: Vec::new(),
    };
    let mut err = None;
    qfa.for_each_word(1, max_len, |w, state| {
        report.words_checked += 1;
        let zero = qfa.measure(state).is_zero();
        match pcp_solution_predicate(p, w) {
            Ok(check) => {
                let name = qfa.format_word(w);
                if check.is_solution {
                    report.solutions.push(name.clone());
                }
                if check.is_solution != zero {
                    report.mismatches.push(name);
                }
                true
            }
            Err(e) => {
                err = Some(e);
                false
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

/// Two generators in dimension `6k` simulating the `k` block matrices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TwoMatrixSystem {
    pub k: usize,
    pub z0: RationalMatrix,
    pub z1: RationalMatrix,
    /// `x = (y, 0, …, 0)`, unnormalized (norm 5).
    pub x: RationalVector,
    pub q: RationalMatrix,
}

impl TwoMatrixSystem {
    pub fn dim(&self) -> usize {
        6 * self.k
    }

    /// Automaton over `{0, 1}` with start vector `x/5` and projection `Q`.
    pub fn to_qfa(&self) -> Qfa {
        Qfa::new(
            vec!["0".into(), "1".into()],
            vec![self.z0.clone(), self.z1.clone()],
            self.x.scale(&rat(1, 5)),
            self.q.clone(),
        )
        .expect("consistent shapes")
    }

    /// Follows the block that carries the state along `ν`: `0` applies
    /// `Y_{c+1}` at the current block `c`, `1` moves to block `c+1 mod k`.
    /// Returns the final block and the index word of the applied `Y`s.
    pub fn decode(&self, nu: &Word) -> (usize, Word) {
        let mut block = 0;
        let mut applied = Vec::new();
        for &letter in nu.symbols() {
            if letter == 0 {
                applied.push(block);
            } else {
                block = (block + 1) % self.k;
            }
        }
        (block, Word(applied))
    }
}

pub fn build_two_matrix_system(p: &PcpInstance) -> Result<TwoMatrixSystem> {
    let k = p.k();
    let ys = (0..k).map(|i| p.block_matrix(i)).collect::<Result<Vec<_>>>()?;
    let z0 = RationalMatrix::block_diag(&ys.iter().collect::<Vec<_>>());
    let mut z1 = RationalMatrix::zeros(6 * k, 6 * k);
    let i6 = RationalMatrix::identity(6);
    for i in 0..k {
        z1.set_block(6 * i, 6 * ((i + 1) % k), &i6);
    }
    let x = pcp_start_vector().concat(&RationalVector::zeros(6 * (k - 1)));
    let mut q = RationalMatrix::zeros(6 * k, 6 * k);
    q.set_block(0, 0, &pcp_projection());
    Ok(TwoMatrixSystem { k, z0, z1, x, q })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NuWitness {
    pub word: String,
    /// Block holding the state after `ν`.
    pub end_block: usize,
    /// Index word `w` whose `Y_w` the state went through (one-based symbols).
    pub simulated_word: String,
    /// `true` when `ν` ends on block 0 having applied a non-empty `w`, i.e.
    /// it simulates a one-letter witness.
    pub simulates_nonempty_word: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TwoMatrixReport {
    pub k: usize,
    pub max_len_w: usize,
    pub max_len_nu: usize,
    pub w_witness: Option<String>,
    pub nu_witness: Option<NuWitness>,
    /// Both sides found a witness, or neither did, within budget.
    pub sides_agree: bool,
}

/// Bounded, empirical comparison of zero-value non-empty words on the
/// `k`-letter automaton and on the two-letter system.
pub fn check_two_matrix_claim(
    p: &PcpInstance,
    max_len_w: usize,
    max_len_nu: usize,
) -> Result<TwoMatrixReport> {
    let zero = ThresholdSpec::new(Rational::zero(), Relation::Le);
    let single = build_pcp_qfa(p)?;
    let w_witness = single
        .bounded_search(&zero, max_len_w, false)
        .map(|(w, _)| single.format_word(&w));
    let system = build_two_matrix_system(p)?;
    let two = system.to_qfa();
    let nu_witness = two.bounded_search(&zero, max_len_nu, false).map(|(nu, _)| {
        let (end_block, simulated) = system.decode(&nu);
        NuWitness {
            word: two.format_word(&nu),
            end_block,
            simulated_word: single.format_word(&simulated),
            simulates_nonempty_word: end_block == 0 && !simulated.is_empty(),
        }
    });
    Ok(TwoMatrixReport {
        k: p.k(),
        max_len_w,
        max_len_nu,
        sides_agree: w_witness.is_some() == nu_witness.is_some(),
        w_witness,
        nu_witness,
    })
}

/// Number of reduced words of exactly length `len` over four signed letters.
pub fn reduced_word_count(len: usize) -> u64 {
    if len == 0 {
        1
    } else {
        4 * 3u64.pow(len as u32 - 1)
    }
}

/// `Y_i·Y_iᵀ = I` for every block of `p`.
pub fn blocks_orthogonal(p: &PcpInstance) -> Result<bool> {
    Ok((0..p.k()).all(|i| p.block_matrix(i).is_ok_and(|y| y.is_orthogonal())))
}

/// `t·X_u` as a rational vector.
pub fn test_image(word: &[SignedLetter]) -> Result<RationalVector> {
    Ok(five_adic_form(word)?.to_vector())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sl(s: &str) -> Vec<SignedLetter> {
        parse_signed_word(s).unwrap()
    }

    #[test]
    fn generators_are_the_displayed_rotations() {
        let (xa, xb) = rotation_generators();
        assert!(xa.mul(&xa.transpose()).unwrap().is_identity());
        assert!(xb.mul(&xb.transpose()).unwrap().is_identity());
        assert_eq!(xa[(0, 1)], rat(-4, 5));
        assert_eq!(xa[(1, 0)], rat(4, 5));
        assert_eq!(xa[(2, 2)], int(1));
        assert_eq!(xb[(1, 2)], rat(-4, 5));
        assert_eq!(xb[(2, 1)], rat(4, 5));
        assert_eq!(xb[(0, 0)], int(1));
    }

    #[test]
    fn five_adic_examples() {
        let e = five_adic_form(&[]).unwrap();
        assert_eq!((e.x1, e.x2, e.x3, e.k), (3.into(), 0.into(), 4.into(), 0));
        let a = five_adic_form(&sl("a")).unwrap();
        assert_eq!((a.x1, a.x2, a.x3, a.k), (9.into(), (-12).into(), 20.into(), 1));
        let b = five_adic_form(&sl("b")).unwrap();
        assert_eq!((b.x1, b.x2, b.x3, b.k), (15.into(), 16.into(), 12.into(), 1));
        assert_eq!(five_adic_form(&sl("abBa")), Err(Error::NonReducedWord(1, 2)));
    }

    #[test]
    fn five_adic_matches_rational_product() {
        let (xa, xb) = rotation_generators();
        let (ia, ib) = (xa.transpose(), xb.transpose());
        for s in ["aB", "ABab", "bba", "BAbaBA"] {
            let w = sl(s);
            let mut v = test_vector();
            for l in &w {
                let m = match (l.base, l.inverted) {
                    (Letter::A, false) => &xa,
                    (Letter::A, true) => &ia,
                    (Letter::B, false) => &xb,
                    (Letter::B, true) => &ib,
                };
                v = v.apply(m).unwrap();
            }
            assert_eq!(test_image(&w).unwrap(), v, "{s}");
        }
    }

    #[test]
    fn freeness_small_budgets() {
        let r = check_freeness_certificate(1);
        assert_eq!(r.words_checked, 4);
        assert!(r.passed());
        let r = check_freeness_certificate(4);
        assert_eq!(r.per_length, vec![4, 12, 36, 108]);
        assert!(r.passed());
    }

    #[test]
    fn injectivity_up_to_five() {
        let r = check_injectivity(5);
        assert_eq!(r.words, 1 + 4 + 12 + 36 + 108 + 324);
        assert_eq!(r.distinct_images, r.words);
        assert!(r.collision.is_none());
    }

    #[test]
    fn encode_word_examples() {
        let (xa, xb) = rotation_generators();
        assert!(encode_word("").unwrap().is_identity());
        assert_eq!(encode_word("ab").unwrap(), xa.mul(&xb).unwrap());
        let aa = encode_word("aa").unwrap();
        let den = BigInt::from(25);
        assert!(aa
            .entries()
            .iter()
            .all(|e| (e * Rational::from_integer(den.clone())).is_integer()));
        assert!(encode_word("abc").is_err());
    }

    #[test]
    fn pcp_automaton_examples() {
        let eps = PcpInstance::from_strs(&[("", "")]).unwrap();
        assert!(eps.block_matrix(0).unwrap().is_identity());

        let p = PcpInstance::from_strs(&[("a", "aa"), ("aa", "a")]).unwrap();
        let qfa = build_pcp_qfa(&p).unwrap();
        assert!(qfa.validate().is_empty());
        assert_eq!(qfa.dim(), 6);
        assert_eq!(qfa.initial(), &RationalVector::new(vec![
            rat(3, 5), int(0), rat(4, 5), int(0), int(0), int(0)
        ]));
        let w12 = qfa.parse_word("12").unwrap();
        assert_eq!(qfa.value(&w12).unwrap(), int(0));
        assert!(qfa.value(&qfa.parse_word("1").unwrap()).unwrap() > int(0));
        assert!(blocks_orthogonal(&p).unwrap());
    }

    #[test]
    fn value_scaling_against_unnormalized_vector() {
        let p = PcpInstance::from_strs(&[("ab", "b"), ("a", "ba")]).unwrap();
        let qfa = build_pcp_qfa(&p).unwrap();
        qfa.for_each_word(0, 3, |w, _| {
            let yw = pcp_start_vector()
                .apply(&qfa.word_matrix(w).unwrap())
                .unwrap()
                .apply(&pcp_projection())
                .unwrap();
            assert_eq!(qfa.value(w).unwrap() * int(25), yw.norm_sq());
            true
        });
    }

    #[test]
    fn predicate_examples() {
        let p = PcpInstance::from_strs(&[("a", "aa"), ("aa", "a")]).unwrap();
        let c = pcp_solution_predicate(&p, &Word(vec![0, 1])).unwrap();
        assert!(c.is_solution);
        assert_eq!((c.u.as_str(), c.v.as_str()), ("aaa", "aaa"));
        let c = pcp_solution_predicate(&p, &Word(vec![0])).unwrap();
        assert!(!c.is_solution);
        assert_eq!((c.u.as_str(), c.v.as_str()), ("a", "aa"));
        assert_eq!(pcp_solution_predicate(&p, &Word::empty()), Err(Error::EmptyWord));
    }

    #[test]
    fn solution_free_instance_has_positive_values() {
        let p = PcpInstance::from_strs(&[("a", "b")]).unwrap();
        let qfa = build_pcp_qfa(&p).unwrap();
        let mut min: Option<Rational> = None;
        qfa.for_each_word(1, 6, |_, v| {
            let val = qfa.measure(v);
            if min.as_ref().is_none_or(|m| &val < m) {
                min = Some(val);
            }
            true
        });
        assert!(min.unwrap() > int(0));
        let r = check_reduction(&p, 6).unwrap();
        assert!(r.solutions.is_empty() && r.mismatches.is_empty());
    }

    #[test]
    fn two_matrix_shapes() {
        let one = PcpInstance::from_strs(&[("ab", "a")]).unwrap();
        let s = build_two_matrix_system(&one).unwrap();
        assert_eq!(s.z0, one.block_matrix(0).unwrap());
        assert!(s.z1.is_identity());

        let seven = PcpInstance::from_strs(&[
            ("a", "b"), ("ab", "b"), ("", "a"), ("bb", "a"), ("a", "a"), ("b", ""), ("ba", "ab"),
        ])
        .unwrap();
        let s = build_two_matrix_system(&seven).unwrap();
        assert_eq!(s.dim(), 42);
        assert!(s.z0.is_orthogonal() && s.z1.is_orthogonal());
        let mut power = RationalMatrix::identity(42);
        for step in 1..=7 {
            power = power.mul(&s.z1).unwrap();
            assert_eq!(power.is_identity(), step == 7);
        }
        assert!(s.to_qfa().validate().is_empty());
    }

    #[test]
    fn decode_tracks_blocks() {
        let p = PcpInstance::from_strs(&[("a", "aa"), ("aa", "a")]).unwrap();
        let s = build_two_matrix_system(&p).unwrap();
        let (block, w) = s.decode(&Word(vec![0, 1, 0, 1]));
        assert_eq!((block, w), (0, Word(vec![0, 1])));
        // decoding agrees with the actual state vector
        let qfa = s.to_qfa();
        let single = build_pcp_qfa(&p).unwrap();
        let state = qfa.state(&Word(vec![0, 1, 0, 1])).unwrap();
        let expected = single.state(&Word(vec![0, 1])).unwrap();
        assert_eq!(&state.entries()[..6], expected.entries());
        assert!(state.entries()[6..].iter().all(Zero::is_zero));
    }
}
