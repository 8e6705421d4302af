//! Affine rescaling of automaton values with rational entries.
//!
//! `shift_affine(A, α, β)` builds `B` with `Val_B(w) = α·Val_A(w) + β` for
//! every word. Square roots of `α`, `β` and `1 − α − β` are avoided by
//! writing each as a sum of four rational squares.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactmath::{format_rational, Rational, RationalMatrix, RationalVector};
use crate::qfa::Qfa;

/// `a1² + a2² + a3² + a4² = target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourSquares {
    pub parts: [Rational; 4],
    pub target: Rational,
}

impl FourSquares {
    pub fn sum_of_squares(&self) -> Rational {
        self.parts.iter().map(|a| a * a).sum()
    }

    pub fn is_exact(&self) -> bool {
        self.sum_of_squares() == self.target
    }

    pub fn nonzero_parts(&self) -> Vec<Rational> {
        self.parts.iter().filter(|a| !a.is_zero()).cloned().collect()
    }
}

/// Four integer squares summing to `n`, lexicographically largest first:
/// `n1 ≥ n2 ≥ n3 ≥ n4`, with `n1` as large as possible, then `n2`, and so on.
pub fn four_squares_integer(n: &BigInt) -> [BigInt; 4] {
    fn search(rest: &BigInt, cap: &BigInt, slots: usize, out: &mut Vec<BigInt>) -> bool {
        if slots == 0 {
            return rest.is_zero();
        }
        let root = rest.sqrt();
        let mut candidate = if &root < cap { root } else { cap.clone() };
        loop {
            let sq = &candidate * &candidate;
            // the remaining slots can hold at most slots·candidate²
            if BigInt::from(slots) * &sq < *rest {
                return false;
            }
            out.push(candidate.clone());
            if search(&(rest - &sq), &candidate, slots - 1, out) {
                return true;
            }
            out.pop();
            if candidate.is_zero() {
                return false;
            }
            candidate -= 1;
        }
    }

    assert!(!n.is_negative(), "four_squares_integer needs n ≥ 0");
    let mut out = Vec::with_capacity(4);
    let found = search(n, &n.sqrt(), 4, &mut out);
    assert!(found, "every non-negative integer is a sum of four squares");
    [out[0].clone(), out[1].clone(), out[2].clone(), out[3].clone()]
}

/// Four rational squares summing to `lambda = p/q`: decompose `p·q` and
/// divide each part by `q`.
pub fn four_squares(lambda: &Rational) -> Result<FourSquares> {
    if lambda.is_negative() {
        return Err(Error::InvalidArgument(format!(
            "{} is negative and not a sum of squares",
            format_rational(lambda)
        )));
    }
    let q = lambda.denom().clone();
    let ints = four_squares_integer(&(lambda.numer() * &q));
    let parts = ints.map(|n| Rational::new(n, q.clone()));
    Ok(FourSquares {
        parts,
        target: lambda.clone(),
    })
}

/// Named `(α, β)` choices for a threshold `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftPreset {
    /// `Val_B = λ·Val_A`.
    ScaleByLambda,
    /// `Val_B = (1 − λ)·Val_A + λ`, so `Val_B ≤ λ` iff `Val_A ≤ 0`.
    LiftToLambda,
}

impl ShiftPreset {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "paper-lemma1" | "scale" => Ok(Self::ScaleByLambda),
            "paper-corollary" | "lift" => Ok(Self::LiftToLambda),
            other => Err(Error::InvalidArgument(format!("unknown preset `{other}`"))),
        }
    }

    pub fn coefficients(self, lambda: &Rational) -> (Rational, Rational) {
        match self {
            Self::ScaleByLambda => (lambda.clone(), Rational::zero()),
            Self::LiftToLambda => (Rational::one() - lambda, lambda.clone()),
        }
    }
}

fn check_coefficients(alpha: &Rational, beta: &Rational) -> Result<()> {
    if alpha.is_negative() || beta.is_negative() || alpha + beta > Rational::one() {
        return Err(Error::InvalidArgument(format!(
            "need α ≥ 0, β ≥ 0 and α + β ≤ 1, got α = {}, β = {}",
            format_rational(alpha),
            format_rational(beta)
        )));
    }
    Ok(())
}

/// Builds `B` with `Val_B = α·Val_A + β`.
///
/// Layout: one copy of `A` per nonzero part `c_i` of `α = Σ c_i²` (start
/// vector `c_i·s`, one copy with `c = 0` when `α = 0`), then four coordinates
/// holding the parts of `β` (projected in) and four holding the parts of
/// `1 − α − β` (projected out). Transitions act as `X` on every copy and as
/// the identity on the last eight coordinates.
///
/// `α = 0` is accepted: the value identity still holds, but the map is then
/// constant and no longer separates thresholds.
pub fn shift_affine(a: &Qfa, alpha: &Rational, beta: &Rational) -> Result<Qfa> {
    check_coefficients(alpha, beta)?;
    let mut weights = four_squares(alpha)?.nonzero_parts();
    if weights.is_empty() {
        weights.push(Rational::zero());
    }
    let in_parts = four_squares(beta)?;
    let out_parts = four_squares(&(Rational::one() - alpha - beta))?;

    let mut initial = RationalVector::new(Vec::new());
    for c in &weights {
        initial = initial.concat(&a.initial().scale(c));
    }
    initial = initial
        .concat(&RationalVector::new(in_parts.parts.to_vec()))
        .concat(&RationalVector::new(out_parts.parts.to_vec()));

    let tail = RationalMatrix::identity(8);
    let transitions = a
        .transitions()
        .iter()
        .map(|x| {
            let mut blocks: Vec<&RationalMatrix> = vec![x; weights.len()];
            blocks.push(&tail);
            RationalMatrix::block_diag(&blocks)
        })
        .collect();

    let mut tail_projection = RationalMatrix::zeros(8, 8);
    tail_projection.set_block(0, 0, &RationalMatrix::identity(4));
    let mut blocks: Vec<&RationalMatrix> = vec![a.projection(); weights.len()];
    blocks.push(&tail_projection);
    let projection = RationalMatrix::block_diag(&blocks);

    Qfa::new(a.alphabet().to_vec(), transitions, initial, projection)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShiftCounterexample {
    pub word: String,
    pub value_a: String,
    pub value_b: String,
    pub expected_b: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShiftReport {
    pub max_len: usize,
    pub words_checked: u64,
    pub initial_norm_sq: String,
    pub initial_unit: bool,
    pub first_counterexample: Option<ShiftCounterexample>,
}

impl ShiftReport {
    pub fn passed(&self) -> bool {
        self.initial_unit && self.first_counterexample.is_none()
    }
}

/// Checks `Val_B(w) = α·Val_A(w) + β` for every `|w| ≤ max_len` and `‖s_B‖² = 1`.
pub fn verify_shift(
    a: &Qfa,
    b: &Qfa,
    alpha: &Rational,
    beta: &Rational,
    max_len: usize,
) -> Result<ShiftReport> {
    if a.alphabet() != b.alphabet() {
        return Err(Error::InvalidArgument("automata have different alphabets".into()));
    }
    let norm = b.initial().norm_sq();
    let mut words_checked = 0;
    let mut first_counterexample = None;
    let mut err = None;
    a.for_each_word(0, max_len, |w, state_a| {
        words_checked += 1;
        let value_a = a.measure(state_a);
        let value_b = match b.value(w) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                return false;
            }
        };
        let expected = alpha * &value_a + beta;
        if value_b != expected {
            first_counterexample = Some(ShiftCounterexample {
                word: a.format_word(w),
                value_a: format_rational(&value_a),
                value_b: format_rational(&value_b),
                expected_b: format_rational(&expected),
            });
            return false;
        }
        true
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(ShiftReport {
        max_len,
        words_checked,
        initial_unit: norm.is_one(),
        initial_norm_sq: format_rational(&norm),
        first_counterexample,
    })
}
