//! End-to-end checks behind `qfa selftest`. Every report is deterministic:
//! fixed seeds, no timings, ordered maps only.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::decision::{
    decide_strict_above, decide_strict_below, Budget, Certificate, Direction, VerdictKind,
};
use crate::error::Result;
use crate::exactmath::{format_rational, int, rat, Rational, RationalMatrix};
use crate::invariant::{in_span, invariant_basis, semigroup_closure, vanishing_report, PolyQ};
use crate::pcp::{
    block_from_pair, build_pcp_qfa, build_two_matrix_system, check_freeness_certificate,
    check_reduction, check_two_matrix_claim, encode_word, rotation_generators, PcpInstance,
};
use crate::qfa::samples::{c4_automaton, c4_rotation, rotation_automaton};
use crate::qfa::{Qfa, ThresholdSpec, Word};
use crate::shift::{four_squares, shift_affine, verify_shift};
use crate::SCHEMA;

const SEED: u64 = 20_240_601;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    pub details: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestReport {
    pub schema: String,
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

impl SelftestReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

fn report(id: u32, title: &str, passed: bool, details: Value) -> CriterionReport {
    CriterionReport {
        id,
        title: title.into(),
        passed,
        details,
    }
}

/// Instances with a solution of length 2 (`"12"`, or `"1"` for one pair).
pub fn planted_instances() -> Vec<PcpInstance> {
    [
        vec![("a", "aa"), ("aa", "a")],
        vec![("a", "a")],
        vec![("ab", "a"), ("b", "bb")],
        vec![("a", "ab"), ("ba", "a")],
        vec![("b", ""), ("", "b")],
    ]
    .iter()
    .map(|p| PcpInstance::from_strs(p).expect("valid instance"))
    .collect()
}

/// Instances with no solution at all (each has a one-line reason: lengths
/// or first letters never match).
pub fn solution_free_instances() -> Vec<PcpInstance> {
    [
        vec![("a", "b")],
        vec![("a", "aa")],
        vec![("ab", "ba")],
        vec![("a", "b"), ("b", "a")],
        vec![("ab", "b"), ("a", "ba")],
    ]
    .iter()
    .map(|p| PcpInstance::from_strs(p).expect("valid instance"))
    .collect()
}

fn random_word(rng: &mut ChaCha8Rng, alphabet: usize, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    Word((0..len).map(|_| rng.gen_range(0..alphabet)).collect())
}

fn pairs_text(p: &PcpInstance) -> String {
    let parts: Vec<String> = p
        .pairs()
        .iter()
        .map(|(u, v)| format!("({u},{v})"))
        .collect();
    format!("{{{}}}", parts.join(","))
}

pub fn criterion_1() -> Result<CriterionReport> {
    let a = rotation_automaton();
    let empty = a.value(&Word::empty())?;
    let single = a.value(&a.parse_word("a")?)?;
    let exact = empty.is_zero() && single == rat(144, 625);

    let planted = &planted_instances()[0];
    let pcp = build_pcp_qfa(planted)?;
    let shifted = shift_affine(&c4_automaton(), &rat(1, 2), &rat(1, 4))?;
    let automata: Vec<(&str, Qfa)> = vec![
        ("rotation", a.clone()),
        ("c4", c4_automaton()),
        ("pcp", pcp),
        ("c4-shifted", shifted),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut checked = 0;
    let mut failures = Vec::new();
    for (name, q) in &automata {
        for _ in 0..200 {
            let w = random_word(&mut rng, q.alphabet().len(), 12);
            let v = q.value(&w)?;
            let norm = q.state(&w)?.norm_sq();
            checked += 1;
            if v < Rational::zero() || v > Rational::one() || !norm.is_one() {
                failures.push(format!("{name}:{}", q.format_word(&w)));
            }
        }
    }
    Ok(report(
        1,
        "model exactness",
        exact && failures.is_empty(),
        json!({
            "value_empty": format_rational(&empty),
            "value_a": format_rational(&single),
            "random_words_checked": checked,
            "failures": failures,
        }),
    ))
}

/// `Y` of the concatenated images, built directly from the encoded strings.
fn y_of_images(p: &PcpInstance, w: &Word) -> Result<RationalMatrix> {
    let (u, v) = p.images(w)?;
    Ok(block_from_pair(&encode_word(&u)?, &encode_word(&v)?))
}

pub fn criterion_2() -> Result<CriterionReport> {
    let (xa, xb) = rotation_generators();
    let mut orthogonal = vec![("X_a".to_string(), xa.is_orthogonal()), ("X_b".into(), xb.is_orthogonal())];
    let instances = [
        planted_instances()[0].clone(),
        planted_instances()[2].clone(),
        solution_free_instances()[4].clone(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut pairs_checked = 0;
    let mut homomorphism_failures = Vec::new();
    for p in &instances {
        let label = pairs_text(p);
        for i in 0..p.k() {
            orthogonal.push((format!("{label} Y_{}", i + 1), p.block_matrix(i)?.is_orthogonal()));
        }
        let system = build_two_matrix_system(p)?;
        orthogonal.push((format!("{label} Z_0"), system.z0.is_orthogonal()));
        orthogonal.push((format!("{label} Z_1"), system.z1.is_orthogonal()));
        let q = build_pcp_qfa(p)?;
        for _ in 0..100 {
            let w = random_word(&mut rng, p.k(), 5);
            let nu = random_word(&mut rng, p.k(), 5);
            let lhs = y_of_images(p, &w.concat(&nu))?;
            let rhs = y_of_images(p, &w)?.mul(&y_of_images(p, &nu)?)?;
            let via_product = q.word_matrix(&w.concat(&nu))?;
            pairs_checked += 1;
            if lhs != rhs || lhs != via_product {
                homomorphism_failures.push(format!(
                    "{label}: {} . {}",
                    q.format_word(&w),
                    q.format_word(&nu)
                ));
            }
        }
    }
    let non_orthogonal: Vec<&String> = orthogonal.iter().filter(|(_, ok)| !ok).map(|(n, _)| n).collect();
    Ok(report(
        2,
        "gadget integrity",
        non_orthogonal.is_empty() && homomorphism_failures.is_empty(),
        json!({
            "matrices_checked": orthogonal.len(),
            "non_orthogonal": non_orthogonal,
            "homomorphism_pairs_checked": pairs_checked,
            "homomorphism_failures": homomorphism_failures,
        }),
    ))
}

pub fn criterion_3() -> Result<CriterionReport> {
    let r = check_freeness_certificate(8);
    Ok(report(
        3,
        "5-adic certificate",
        r.passed() && r.words_checked == 13_120,
        serde_json::to_value(&r).expect("serializable"),
    ))
}

pub fn criterion_4() -> Result<CriterionReport> {
    let mut passed = true;
    let mut rows = Vec::new();
    for (planted, p) in planted_instances()
        .into_iter()
        .map(|p| (true, p))
        .chain(solution_free_instances().into_iter().map(|p| (false, p)))
    {
        let r = check_reduction(&p, 6)?;
        let expected = if p.k() == 1 { "1" } else { "12" };
        let ok = r.mismatches.is_empty()
            && if planted {
                r.solutions.iter().any(|s| s == expected)
            } else {
                r.solutions.is_empty()
            };
        passed &= ok;
        rows.push(json!({
            "instance": pairs_text(&p),
            "planted": planted,
            "words_checked": r.words_checked,
            "solutions": r.solutions,
            "mismatches": r.mismatches,
            "passed": ok,
        }));
    }
    Ok(report(4, "PCP reduction correctness", passed, Value::Array(rows)))
}

pub fn criterion_5() -> Result<CriterionReport> {
    let instances = [
        vec![("a", "a")],
        vec![("a", "b")],
        vec![("a", "aa"), ("aa", "a")],
        vec![("a", "b"), ("b", "a")],
    ];
    let mut passed = true;
    let mut rows = Vec::new();
    for pairs in &instances {
        let p = PcpInstance::from_strs(pairs)?;
        let max_w = 4;
        let max_nu = 4 * p.k() * (max_w + 1);
        let r = check_two_matrix_claim(&p, max_w, max_nu)?;
        passed &= r.sides_agree;
        rows.push(json!({
            "instance": pairs_text(&p),
            "report": serde_json::to_value(&r).expect("serializable"),
        }));
    }
    Ok(report(5, "two-matrix claim (bounded)", passed, Value::Array(rows)))
}

pub fn criterion_6() -> Result<CriterionReport> {
    let lambdas = [int(0), rat(1, 2), rat(3, 7), rat(9, 10), int(1)];
    let mut passed = true;
    let mut decompositions = Vec::new();
    let mut shifts = Vec::new();
    for lambda in &lambdas {
        let fs = four_squares(lambda)?;
        passed &= fs.is_exact();
        decompositions.push(json!({
            "lambda": format_rational(lambda),
            "parts": fs.parts.iter().map(format_rational).collect::<Vec<_>>(),
            "exact": fs.is_exact(),
        }));
        let coefficient_pairs = [
            (lambda.clone(), int(0)),
            (int(1) - lambda, lambda.clone()),
            (rat(1, 2), rat(1, 4)),
        ];
        for (alpha, beta) in &coefficient_pairs {
            for (name, a) in [("rotation", rotation_automaton()), ("c4", c4_automaton())] {
                let b = shift_affine(&a, alpha, beta)?;
                let r = verify_shift(&a, &b, alpha, beta, 6)?;
                passed &= r.passed();
                shifts.push(json!({
                    "lambda": format_rational(lambda),
                    "alpha": format_rational(alpha),
                    "beta": format_rational(beta),
                    "automaton": name,
                    "dim": b.dim(),
                    "words_checked": r.words_checked,
                    "initial_norm_sq": r.initial_norm_sq,
                    "passed": r.passed(),
                }));
            }
        }
    }
    Ok(report(
        6,
        "threshold shift",
        passed,
        json!({ "four_squares": decompositions, "shifts": shifts }),
    ))
}

pub fn criterion_7() -> Result<CriterionReport> {
    let identity = invariant_basis(&[RationalMatrix::identity(2)], 1)?;
    let identity_display: Vec<String> = identity.polys.iter().map(|f| f.to_string()).collect();
    let identity_ok = identity_display == ["x11 - 1", "x12", "x21", "x22 - 1"];

    let c4 = [c4_rotation()];
    let c4_d1 = invariant_basis(&c4, 1)?;
    let c4_d2 = invariant_basis(&c4, 2)?;
    let circle = PolyQ::var(2, 0, 0)
        .mul(&PolyQ::var(2, 0, 0))
        .add(&PolyQ::var(2, 1, 0).mul(&PolyQ::var(2, 1, 0)))
        .sub(&PolyQ::constant(2, int(1)));
    let circle_ok = in_span(&c4_d2.polys, &circle);

    let (xa, xb) = rotation_generators();
    let gens = [xa, xb];
    let free_d2 = invariant_basis(&gens, 2)?;
    let vanishing = vanishing_report(&free_d2, &gens, 5)?;

    Ok(report(
        7,
        "invariant polynomials",
        identity_ok && c4_d1.dimension() == 0 && circle_ok && vanishing.all_zero(),
        json!({
            "identity_d1": identity_display,
            "c4_d1_dimension": c4_d1.dimension(),
            "c4_d2_dimension": c4_d2.dimension(),
            "c4_d2_contains_circle": circle_ok,
            "free_d2_dimension": free_d2.dimension(),
            "vanishing": serde_json::to_value(&vanishing).expect("serializable"),
        }),
    ))
}

pub fn criterion_8() -> Result<CriterionReport> {
    let c4 = semigroup_closure(&[c4_rotation()], 1000)?;
    let c4_ok = c4.is_finite()
        && c4.elements.len() == 4
        && c4.group_check.as_ref().is_some_and(|g| g.holds());
    let (xa, xb) = rotation_generators();
    let free = semigroup_closure(&[xa, xb], 10_000)?;
    Ok(report(
        8,
        "semigroup closure",
        c4_ok && !free.is_finite(),
        json!({
            "c4_status": c4.status,
            "c4_order": c4.elements.len(),
            "c4_group_check": c4.group_check,
            "free_status": free.status,
            "free_cap": free.cap,
        }),
    ))
}

/// Budget used by criterion 9.
pub fn driver_budget() -> Budget {
    Budget {
        max_word_len: 10,
        closure_cap: 256,
        max_degree: 2,
        round_schedule: 3,
        max_monomials: 200,
    }
}

pub fn criterion_9() -> Result<CriterionReport> {
    let b = driver_budget();
    let c4 = c4_automaton();
    let mut checks = Vec::new();

    let v = decide_strict_above(&c4, &rat(1, 2), &b)?;
    let w = v.witness.as_ref();
    checks.push((
        "above(c4, 1/2) = WITNESS(aa, 1)",
        v.kind == VerdictKind::Witness
            && w.is_some_and(|w| w.word == "aa" && w.value == int(1))
            && v.recheck(&c4)?,
    ));

    let v = decide_strict_above(&c4, &int(1), &b)?;
    checks.push((
        "above(c4, 1) = EMPTY with closure certificate",
        v.kind == VerdictKind::Empty
            && matches!(v.certificate, Some(Certificate::FiniteClosure { group_order: 4, .. }))
            && v.recheck(&c4)?,
    ));

    let v = decide_strict_below(&c4, &rat(1, 2), &b)?;
    checks.push((
        "below(c4, 1/2) = WITNESS with value 0",
        v.kind == VerdictKind::Witness
            && v.witness.as_ref().is_some_and(|w| w.value.is_zero())
            && v.recheck(&c4)?,
    ));

    let pcp = build_pcp_qfa(&planted_instances()[0])?;
    let automata: Vec<(&str, Qfa)> = vec![
        ("c4", c4.clone()),
        ("rotation", rotation_automaton()),
        ("pcp", pcp),
    ];
    let mut below_zero = true;
    for (_, a) in &automata {
        let v = decide_strict_below(a, &int(0), &b)?;
        below_zero &= v.kind == VerdictKind::Empty && v.recheck(a)?;
    }
    checks.push(("below(any, 0) = EMPTY", below_zero));

    // Cross-check against exhaustive search over non-empty words.
    let lambdas = [int(0), rat(1, 1_000_000), rat(144, 625), rat(1, 2), rat(99, 100), int(1)];
    let mut cross = Vec::new();
    let mut contradictions = Vec::new();
    for (name, a) in &automata {
        for lambda in &lambdas {
            for direction in [Direction::Above, Direction::Below] {
                let v = match direction {
                    Direction::Above => decide_strict_above(a, lambda, &b)?,
                    Direction::Below => decide_strict_below(a, lambda, &b)?,
                };
                let spec = ThresholdSpec::new(lambda.clone(), direction.relation());
                let exhaustive = a.bounded_search(&spec, 10, false);
                let contradicts = match v.kind {
                    VerdictKind::Empty => exhaustive.is_some(),
                    VerdictKind::Witness => !v.recheck(a)?,
                    VerdictKind::Unknown => false,
                };
                let tag = format!(
                    "{name} {} {}",
                    direction.relation().symbol(),
                    format_rational(lambda)
                );
                if contradicts {
                    contradictions.push(tag.clone());
                }
                cross.push(json!({
                    "case": tag,
                    "verdict": v.kind,
                    "exhaustive_witness": exhaustive.is_some(),
                }));
            }
        }
    }
    checks.push(("no contradiction with exhaustive search to length 10", contradictions.is_empty()));

    let passed = checks.iter().all(|(_, ok)| *ok);
    Ok(report(
        9,
        "decision driver",
        passed,
        json!({
            "checks": checks.iter().map(|(n, ok)| json!({"check": n, "passed": ok})).collect::<Vec<_>>(),
            "cross_check": cross,
            "contradictions": contradictions,
        }),
    ))
}

/// Criteria 1 to 9.
pub fn run_core() -> Result<Vec<CriterionReport>> {
    Ok(vec![
        criterion_1()?,
        criterion_2()?,
        criterion_3()?,
        criterion_4()?,
        criterion_5()?,
        criterion_6()?,
        criterion_7()?,
        criterion_8()?,
        criterion_9()?,
    ])
}

/// Runs criteria 1 to 9 twice and appends criterion 10, which compares the
/// two serialized runs byte for byte.
pub fn run_all() -> Result<SelftestReport> {
    let first = run_core()?;
    let second = run_core()?;
    let a = serde_json::to_string(&first).expect("serializable");
    let b = serde_json::to_string(&second).expect("serializable");
    let mut criteria = first;
    criteria.push(report(
        10,
        "determinism",
        a == b,
        json!({ "bytes": a.len(), "identical": a == b }),
    ));
    Ok(SelftestReport {
        schema: SCHEMA.to_string(),
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    })
}

/// Looks up a single criterion by number.
pub fn run_one(id: u32) -> Result<Option<CriterionReport>> {
    Ok(Some(match id {
        1 => criterion_1()?,
        2 => criterion_2()?,
        3 => criterion_3()?,
        4 => criterion_4()?,
        5 => criterion_5()?,
        6 => criterion_6()?,
        7 => criterion_7()?,
        8 => criterion_8()?,
        9 => criterion_9()?,
        _ => return Ok(None),
    }))
}
