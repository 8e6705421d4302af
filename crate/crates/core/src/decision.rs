//! Dovetailed procedures for the strict-threshold problems "is there a
//! non-empty word with `Val(w) > λ`" and "... `Val(w) < λ`".
//!
//! Each round runs a bounded word search, a closure attempt, and grows the
//! invariant basis. Emptiness can only be certified by a backend; the shipped
//! backends handle the value bound `0 ≤ Val ≤ 1` and finite closures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{rational_str, Rational, RationalMatrix};
use crate::invariant::{monomial_basis, semigroup_closure, ClosureResult, InvariantBasis};
use crate::qfa::{Qfa, Relation, ThresholdSpec, Word};
use crate::SCHEMA;
use num_traits::{One, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Above,
    Below,
}

impl Direction {
    pub fn relation(self) -> Relation {
        match self {
            Direction::Above => Relation::Gt,
            Direction::Below => Relation::Lt,
        }
    }

    pub fn from_relation(r: Relation) -> Option<Self> {
        match r {
            Relation::Gt => Some(Direction::Above),
            Relation::Lt => Some(Direction::Below),
            _ => None,
        }
    }

    /// True when `candidate` is a better extremum than `current`.
    fn improves(self, candidate: &Rational, current: &Rational) -> bool {
        match self {
            Direction::Above => candidate > current,
            Direction::Below => candidate < current,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum VerdictKind {
    Witness,
    Empty,
    Unknown,
}

impl VerdictKind {
    pub fn exit_code(self) -> i32 {
        match self {
            VerdictKind::Witness => 0,
            VerdictKind::Empty => 1,
            VerdictKind::Unknown => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_word_len: usize,
    pub closure_cap: usize,
    pub max_degree: u32,
    /// Number of rounds; budgets double each round and the last one uses the
    /// full caps.
    pub round_schedule: u32,
    /// Degrees whose monomial space is larger than this are skipped.
    pub max_monomials: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_word_len: 12,
            closure_cap: 100_000,
            max_degree: 3,
            round_schedule: 4,
            max_monomials: 1_000,
        }
    }
}

impl Budget {
    pub fn check(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.max_word_len == 0 {
            bad.push("max_word_len");
        }
        if self.closure_cap == 0 {
            bad.push("closure_cap");
        }
        if self.max_degree == 0 {
            bad.push("max_degree");
        }
        if self.round_schedule == 0 {
            bad.push("round_schedule");
        }
        if self.max_monomials == 0 {
            bad.push("max_monomials");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "budget entries must be positive: {}",
                bad.join(", ")
            )))
        }
    }

    /// Budget for round `r` (zero-based): `cap / 2^(rounds-1-r)`, rounded up.
    fn round(&self, r: u32) -> (usize, usize, u32) {
        let shift = self.round_schedule - 1 - r;
        let scaled = |cap: usize| -> usize {
            if shift >= usize::BITS {
                1
            } else {
                cap.div_ceil(1usize << shift).max(1)
            }
        };
        let deg = scaled(self.max_degree as usize) as u32;
        (scaled(self.max_word_len), scaled(self.closure_cap), deg)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    /// The word as typed on the command line.
    pub word: String,
    pub symbols: Vec<usize>,
    #[serde(with = "rational_str")]
    pub value: Rational,
    /// Which stage produced it: "word-search" or "finite-closure".
    pub source: String,
}

impl Witness {
    fn new(a: &Qfa, w: &Word, value: Rational, source: &str) -> Self {
        Witness {
            word: a.format_word(w),
            symbols: w.0.clone(),
            value,
            source: source.into(),
        }
    }

    pub fn to_word(&self) -> Word {
        Word(self.symbols.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifiedElement {
    pub matrix: RationalMatrix,
    /// A non-empty generator word reaching the element.
    pub word: String,
    pub symbols: Vec<usize>,
    #[serde(with = "rational_str")]
    pub value: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeEvidence {
    pub degree: u32,
    pub monomial_count: usize,
    /// `None` when the degree was skipped for exceeding `max_monomials`.
    pub dimension: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// `0 ≤ Val ≤ 1` already rules the relation out.
    ValueBound {
        #[serde(with = "rational_str")]
        bound: Rational,
    },
    /// The generated group is finite; `extremum` is the exact max (above) or
    /// min (below) of `‖s·g·P‖²` over all elements.
    FiniteClosure {
        group_order: usize,
        #[serde(with = "rational_str")]
        extremum: Rational,
        extremal_index: usize,
        elements: Vec<CertifiedElement>,
    },
    /// Invariant bases computed so far; not a proof of anything.
    InvariantBasis {
        generator_fingerprint: String,
        degrees: Vec<DegreeEvidence>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetSpent {
    pub rounds: u32,
    pub max_word_len_reached: usize,
    pub closure_cap_reached: usize,
    pub closure_discovered: usize,
    pub max_degree_reached: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub schema: String,
    pub kind: VerdictKind,
    pub direction: Direction,
    pub relation: Relation,
    #[serde(with = "rational_str")]
    pub lambda: Rational,
    pub witness: Option<Witness>,
    pub certificate: Option<Certificate>,
    pub budget: Budget,
    pub budget_spent: BudgetSpent,
    pub diagnostics: Vec<String>,
}

impl Verdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Re-evaluates the witness, or every certified element, exactly.
    pub fn recheck(&self, a: &Qfa) -> Result<bool> {
        let rel = self.direction.relation();
        match self.kind {
            VerdictKind::Witness => {
                let Some(w) = &self.witness else { return Ok(false) };
                let word = w.to_word();
                if word.is_empty() {
                    return Ok(false);
                }
                let v = a.value(&word)?;
                Ok(v == w.value && rel.holds(&v, &self.lambda))
            }
            VerdictKind::Empty => match &self.certificate {
                Some(Certificate::ValueBound { bound }) => Ok(match self.direction {
                    Direction::Above => self.lambda >= *bound,
                    Direction::Below => self.lambda <= *bound,
                }),
                Some(Certificate::FiniteClosure { elements, .. }) => {
                    let closure = semigroup_closure(a.transitions(), elements.len())?;
                    if !closure.is_finite() || closure.elements.len() != elements.len() {
                        return Ok(false);
                    }
                    for e in elements {
                        let word = Word(e.symbols.clone());
                        if word.is_empty() || a.word_matrix(&word)? != e.matrix {
                            return Ok(false);
                        }
                        let v = a.measure_matrix(&e.matrix)?;
                        if v != e.value || rel.holds(&v, &self.lambda) {
                            return Ok(false);
                        }
                    }
                    Ok(true)
                }
                _ => Ok(false),
            },
            VerdictKind::Unknown => Ok(true),
        }
    }
}

/// What a backend concludes about "no word satisfies the strict relation".
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormulaOutcome {
    /// Emptiness holds, with a re-checkable certificate.
    Holds(Certificate),
    /// Emptiness fails; a concrete non-empty witness word.
    Fails(Word, Rational),
    Unknown,
}

/// Everything a backend may look at in one round.
pub struct FormulaContext<'a> {
    pub qfa: &'a Qfa,
    pub lambda: &'a Rational,
    pub direction: Direction,
    pub closure: Option<&'a ClosureResult>,
    pub basis: Option<&'a InvariantBasis>,
}

/// Decides the emptiness formula for one round. A real-closed-field
/// elimination engine would implement this over `ctx.basis`.
pub trait FormulaBackend: Sync {
    fn name(&self) -> &'static str;
    fn decide(&self, ctx: &FormulaContext<'_>) -> Result<FormulaOutcome>;
}

/// Uses only `0 ≤ Val ≤ 1`.
pub struct TrivialBounds;

impl FormulaBackend for TrivialBounds {
    fn name(&self) -> &'static str {
        "trivial-bounds"
    }

    fn decide(&self, ctx: &FormulaContext<'_>) -> Result<FormulaOutcome> {
        Ok(match ctx.direction {
            Direction::Above if *ctx.lambda >= Rational::one() => {
                FormulaOutcome::Holds(Certificate::ValueBound {
                    bound: Rational::one(),
                })
            }
            Direction::Below if *ctx.lambda <= Rational::zero() => {
                FormulaOutcome::Holds(Certificate::ValueBound {
                    bound: Rational::zero(),
                })
            }
            _ => FormulaOutcome::Unknown,
        })
    }
}

/// Complete when the closure is finite: the closure then equals the set of
/// products of non-empty words, so its extremum is exact.
pub struct FiniteClosure;

impl FormulaBackend for FiniteClosure {
    fn name(&self) -> &'static str {
        "finite-closure"
    }

    fn decide(&self, ctx: &FormulaContext<'_>) -> Result<FormulaOutcome> {
        let Some(closure) = ctx.closure.filter(|c| c.is_finite()) else {
            return Ok(FormulaOutcome::Unknown);
        };
        let a = ctx.qfa;
        let mut elements: Vec<CertifiedElement> = Vec::with_capacity(closure.elements.len());
        let mut best: Option<(usize, Rational)> = None;
        for (i, e) in closure.elements.iter().enumerate() {
            let word = closure
                .nonempty_word(i)
                .cloned()
                .ok_or_else(|| Error::InvalidArgument("finite closure without identity word".into()))?;
            let value = a.measure_matrix(&e.matrix)?;
            // Ties go to the shorter word, then to the earlier element.
            let better = match &best {
                None => true,
                Some((j, v)) => {
                    ctx.direction.improves(&value, v)
                        || (value == *v && word.len() < elements[*j].symbols.len())
                }
            };
            if better {
                best = Some((i, value.clone()));
            }
            elements.push(CertifiedElement {
                matrix: e.matrix.clone(),
                word: a.format_word(&word),
                symbols: word.0.clone(),
                value,
            });
        }
        let (idx, extremum) = best.expect("closure contains the identity");
        if ctx.direction.relation().holds(&extremum, ctx.lambda) {
            let w = Word(elements[idx].symbols.clone());
            return Ok(FormulaOutcome::Fails(w, extremum));
        }
        Ok(FormulaOutcome::Holds(Certificate::FiniteClosure {
            group_order: elements.len(),
            extremum,
            extremal_index: idx,
            elements,
        }))
    }
}

/// The backends shipped with the toolkit, in the order they are consulted.
/// A finite-closure certificate is preferred over the bare value bound.
pub fn default_backends() -> Vec<Box<dyn FormulaBackend>> {
    vec![Box::new(FiniteClosure), Box::new(TrivialBounds)]
}

pub fn decide_strict_above(a: &Qfa, lambda: &Rational, b: &Budget) -> Result<Verdict> {
    decide_with(a, lambda, Direction::Above, b, &default_backends())
}

pub fn decide_strict_below(a: &Qfa, lambda: &Rational, b: &Budget) -> Result<Verdict> {
    decide_with(a, lambda, Direction::Below, b, &default_backends())
}

/// The round loop, with an explicit backend list.
pub fn decide_with(
    a: &Qfa,
    lambda: &Rational,
    direction: Direction,
    b: &Budget,
    backends: &[Box<dyn FormulaBackend>],
) -> Result<Verdict> {
    a.ensure_valid()?;
    b.check()?;
    let relation = direction.relation();
    let threshold = ThresholdSpec::new(lambda.clone(), relation);
    let mut verdict = Verdict {
        schema: SCHEMA.to_string(),
        kind: VerdictKind::Unknown,
        direction,
        relation,
        lambda: lambda.clone(),
        witness: None,
        certificate: None,
        budget: b.clone(),
        budget_spent: BudgetSpent::default(),
        diagnostics: Vec::new(),
    };
    let fingerprint = crate::invariant::generator_fingerprint(a.transitions());
    let mut evidence: Vec<DegreeEvidence> = Vec::new();
    let n = a.dim();

    for r in 0..b.round_schedule {
        let (len, cap, deg) = b.round(r);
        let spent = &mut verdict.budget_spent;
        spent.rounds = r + 1;

        // (i) word search
        spent.max_word_len_reached = spent.max_word_len_reached.max(len);
        if let Some((w, v)) = a.bounded_search(&threshold, len, false) {
            verdict.kind = VerdictKind::Witness;
            verdict.witness = Some(Witness::new(a, &w, v, "word-search"));
            return Ok(verdict);
        }

        // (ii) closure attempt
        spent.closure_cap_reached = spent.closure_cap_reached.max(cap);
        let closure = semigroup_closure(a.transitions(), cap)?;
        spent.closure_discovered = spent.closure_discovered.max(closure.discovered);

        // (iii) invariant basis growth
        let mut basis = None;
        for d in (evidence.len() as u32 + 1)..=deg {
            let count = monomial_basis(n, d).len();
            if count > b.max_monomials {
                evidence.push(DegreeEvidence {
                    degree: d,
                    monomial_count: count,
                    dimension: None,
                });
                continue;
            }
            let vb = crate::invariant::invariant_basis(a.transitions(), d)?;
            evidence.push(DegreeEvidence {
                degree: d,
                monomial_count: count,
                dimension: Some(vb.dimension()),
            });
            spent.max_degree_reached = d;
            basis = Some(vb);
        }

        let ctx = FormulaContext {
            qfa: a,
            lambda,
            direction,
            closure: Some(&closure),
            basis: basis.as_ref(),
        };
        if consult(backends, &ctx, &mut verdict, r + 1)? {
            return Ok(verdict);
        }
    }

    let spent = &verdict.budget_spent;
    verdict.diagnostics.push(format!(
        "no word of length 1..={} satisfies {} {}",
        spent.max_word_len_reached,
        relation.symbol(),
        crate::exactmath::format_rational(lambda)
    ));
    verdict.diagnostics.push(format!(
        "closure exceeded cap {} (infinite or larger group)",
        spent.closure_cap_reached
    ));
    verdict.diagnostics.push(
        "no shipped backend decides the invariant-basis formula; result left open".into(),
    );
    verdict.certificate = Some(Certificate::InvariantBasis {
        generator_fingerprint: fingerprint,
        degrees: evidence,
    });
    Ok(verdict)
}

/// Runs the backends in order; true once one of them settles the verdict.
fn consult(
    backends: &[Box<dyn FormulaBackend>],
    ctx: &FormulaContext<'_>,
    verdict: &mut Verdict,
    round: u32,
) -> Result<bool> {
    for backend in backends {
        match backend.decide(ctx)? {
            FormulaOutcome::Holds(cert) => {
                verdict.kind = VerdictKind::Empty;
                verdict.certificate = Some(cert);
                verdict
                    .diagnostics
                    .push(format!("decided by {} in round {round}", backend.name()));
                return Ok(true);
            }
            FormulaOutcome::Fails(w, v) => {
                verdict.kind = VerdictKind::Witness;
                verdict.witness = Some(Witness::new(ctx.qfa, &w, v, backend.name()));
                return Ok(true);
            }
            FormulaOutcome::Unknown => {}
        }
    }
    Ok(false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Nonempty,
    ProvablyEmpty,
    NoWitnessUpToBudget,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableCell {
    pub language: String,
    pub relation: Relation,
    pub status: CellStatus,
    pub witness: Option<Witness>,
    /// Whether emptiness of this language is decidable for these automata.
    pub decidable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmptinessTable {
    pub schema: String,
    #[serde(with = "rational_str")]
    pub lambda: Rational,
    pub max_len: usize,
    pub include_empty: bool,
    pub cells: Vec<TableCell>,
}

impl EmptinessTable {
    pub fn cell(&self, relation: Relation) -> &TableCell {
        self.cells
            .iter()
            .find(|c| c.relation == relation)
            .expect("all four relations present")
    }
}

/// Bounded search for each of `L_≥, L_>, L_≤, L_<`.
pub fn bounded_emptiness_table(
    a: &Qfa,
    lambda: &Rational,
    max_len: usize,
    include_empty: bool,
) -> Result<EmptinessTable> {
    a.ensure_valid()?;
    let one = Rational::one();
    let zero = Rational::zero();
    let cells = Relation::ALL
        .iter()
        .map(|&relation| {
            let spec = ThresholdSpec::new(lambda.clone(), relation);
            let found = a.bounded_search(&spec, max_len, include_empty);
            let bound_rules_out = match relation {
                Relation::Ge => *lambda > one,
                Relation::Gt => *lambda >= one,
                Relation::Le => *lambda < zero,
                Relation::Lt => *lambda <= zero,
            };
            let (status, witness) = match found {
                Some((w, v)) => (CellStatus::Nonempty, Some(Witness::new(a, &w, v, "word-search"))),
                None if bound_rules_out => (CellStatus::ProvablyEmpty, None),
                None => (CellStatus::NoWitnessUpToBudget, None),
            };
            TableCell {
                language: format!("L{}", relation.symbol()),
                relation,
                status,
                witness,
                decidable: relation.is_strict(),
            }
        })
        .collect();
    Ok(EmptinessTable {
        schema: SCHEMA.to_string(),
        lambda: lambda.clone(),
        max_len,
        include_empty,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::{int, rat};
    use crate::qfa::samples::{c4_automaton, rotation_automaton};

    fn small() -> Budget {
        Budget {
            max_word_len: 6,
            closure_cap: 64,
            max_degree: 2,
            round_schedule: 2,
            max_monomials: 100,
        }
    }

    #[test]
    fn round_budgets_double() {
        let b = Budget {
            max_word_len: 12,
            closure_cap: 100,
            max_degree: 3,
            round_schedule: 4,
            max_monomials: 10,
        };
        let rounds: Vec<_> = (0..4).map(|r| b.round(r)).collect();
        assert_eq!(rounds, vec![(2, 13, 1), (3, 25, 1), (6, 50, 2), (12, 100, 3)]);
    }

    #[test]
    fn zero_budget_rejected() {
        let mut b = small();
        b.round_schedule = 0;
        assert!(decide_strict_above(&c4_automaton(), &rat(1, 2), &b).is_err());
    }

    #[test]
    fn c4_above_half_is_aa() {
        let a = c4_automaton();
        let v = decide_strict_above(&a, &rat(1, 2), &small()).unwrap();
        assert_eq!(v.kind, VerdictKind::Witness);
        let w = v.witness.as_ref().unwrap();
        assert_eq!(w.word, "aa");
        assert_eq!(w.value, int(1));
        assert!(v.recheck(&a).unwrap());
    }

    #[test]
    fn c4_above_one_is_empty_by_bound() {
        let a = c4_automaton();
        let backends: Vec<Box<dyn FormulaBackend>> = vec![Box::new(TrivialBounds)];
        let v = decide_with(&a, &int(1), Direction::Above, &small(), &backends).unwrap();
        assert_eq!(v.kind, VerdictKind::Empty);
        assert_eq!(
            v.certificate,
            Some(Certificate::ValueBound { bound: int(1) })
        );
        assert!(v.recheck(&a).unwrap());
        let v = decide_strict_above(&a, &int(1), &small()).unwrap();
        assert!(matches!(v.certificate, Some(Certificate::FiniteClosure { .. })));
    }

    #[test]
    fn closure_backend_alone_certifies_c4() {
        let a = c4_automaton();
        let backends: Vec<Box<dyn FormulaBackend>> = vec![Box::new(FiniteClosure)];
        let v = decide_with(&a, &int(1), Direction::Above, &small(), &backends).unwrap();
        assert_eq!(v.kind, VerdictKind::Empty);
        match v.certificate.as_ref().unwrap() {
            Certificate::FiniteClosure {
                group_order,
                extremum,
                ..
            } => {
                assert_eq!(*group_order, 4);
                assert_eq!(*extremum, int(1));
            }
            other => panic!("unexpected certificate {other:?}"),
        }
        assert!(v.recheck(&a).unwrap());
    }

    #[test]
    fn closure_witness_uses_shortest_word() {
        // Word search limited to length 1 cannot see "aa"; the closure can.
        let a = c4_automaton();
        let b = Budget {
            max_word_len: 1,
            round_schedule: 1,
            ..small()
        };
        let v = decide_strict_above(&a, &rat(1, 2), &b).unwrap();
        let w = v.witness.unwrap();
        assert_eq!((w.word.as_str(), w.source.as_str()), ("aa", "finite-closure"));
    }

    #[test]
    fn c4_below() {
        let a = c4_automaton();
        for lambda in [rat(1, 2), rat(1, 1_000_000)] {
            let v = decide_strict_below(&a, &lambda, &small()).unwrap();
            let w = v.witness.unwrap();
            assert_eq!((w.word.as_str(), w.value.clone()), ("a", int(0)));
        }
        let v = decide_strict_below(&a, &int(0), &small()).unwrap();
        assert_eq!(v.kind, VerdictKind::Empty);
    }

    #[test]
    fn free_group_is_unknown_between_bounds() {
        let a = rotation_automaton();
        let b = Budget {
            max_word_len: 3,
            closure_cap: 50,
            ..small()
        };
        let v = decide_strict_above(&a, &rat(99, 100), &b).unwrap();
        assert_eq!(v.kind, VerdictKind::Unknown);
        match v.certificate.unwrap() {
            Certificate::InvariantBasis { degrees, .. } => assert_eq!(degrees.len(), 2),
            other => panic!("unexpected certificate {other:?}"),
        }
        let v = decide_strict_above(&a, &int(1), &b).unwrap();
        assert_eq!(v.kind, VerdictKind::Empty);
    }

    #[test]
    fn table_examples() {
        let t = bounded_emptiness_table(&c4_automaton(), &rat(1, 2), 4, false).unwrap();
        assert!(t.cells.iter().all(|c| c.status == CellStatus::Nonempty));
        assert_eq!(t.cell(Relation::Gt).witness.as_ref().unwrap().word, "aa");
        assert_eq!(t.cell(Relation::Lt).witness.as_ref().unwrap().word, "a");

        let t = bounded_emptiness_table(&rotation_automaton(), &int(1), 4, true).unwrap();
        assert_eq!(t.cell(Relation::Gt).status, CellStatus::ProvablyEmpty);
        assert_eq!(t.cell(Relation::Le).witness.as_ref().unwrap().word, "");
        assert!(t.cell(Relation::Gt).decidable && !t.cell(Relation::Ge).decidable);
    }

    #[test]
    fn verdict_json_round_trip() {
        let a = c4_automaton();
        let backends: Vec<Box<dyn FormulaBackend>> = vec![Box::new(FiniteClosure)];
        let v = decide_with(&a, &int(1), Direction::Above, &small(), &backends).unwrap();
        let back: Verdict = serde_json::from_str(&v.to_json()).unwrap();
        assert_eq!(back, v);
    }
}
