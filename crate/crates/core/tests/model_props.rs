use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;
use qfa_core::exactmath::{int, rat, Rational};
use qfa_core::pcp::{
    block_from_pair, build_pcp_qfa, encode_word, first_cancellation, five_adic_form,
    pcp_solution_predicate, PcpInstance, SignedLetter,
};
use qfa_core::qfa::samples::{c4_automaton, rotation_automaton};
use qfa_core::shift::{four_squares, four_squares_integer, shift_affine};
use qfa_core::{Qfa, Relation, ThresholdSpec, Word};

fn two_letter_rotations() -> Qfa {
    let (xa, xb) = qfa_core::pcp::rotation_generators();
    Qfa::new(
        vec!["a".into(), "b".into()],
        vec![xa, xb],
        qfa_core::RationalVector::new(vec![rat(3, 5), int(0), rat(4, 5)]),
        qfa_core::RationalMatrix::diag(&[int(1), int(0), int(0)]),
    )
    .unwrap()
}

fn ab_string() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::bool::ANY, 0..4)
        .prop_map(|v| v.into_iter().map(|b| if b { 'a' } else { 'b' }).collect())
}

fn instance() -> impl Strategy<Value = PcpInstance> {
    prop::collection::vec((ab_string(), ab_string()), 1..4)
        .prop_map(|pairs| PcpInstance::new(pairs).unwrap())
}

fn word(alphabet: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0..alphabet, 0..=max_len).prop_map(Word)
}

fn instance_and_words() -> impl Strategy<Value = (PcpInstance, Word, Word)> {
    instance().prop_flat_map(|p| {
        let k = p.k();
        (Just(p), word(k, 4), word(k, 4))
    })
}

fn reduced_word() -> impl Strategy<Value = Vec<SignedLetter>> {
    prop::collection::vec(0usize..4, 1..12).prop_map(|choices| {
        let mut out: Vec<SignedLetter> = Vec::new();
        for c in choices {
            let mut l = SignedLetter::ALL[c];
            if out.last().is_some_and(|p| p.inverse() == l) {
                l = SignedLetter::ALL[(c + 1) % 4];
            }
            out.push(l);
        }
        out
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn state_norm_is_conserved(w in word(2, 12)) {
        let a = two_letter_rotations();
        prop_assert!(a.state(&w).unwrap().norm_sq().is_one());
        let v = a.value(&w).unwrap();
        prop_assert!(v >= Rational::zero() && v <= Rational::one());
    }

    #[test]
    fn word_matrix_is_a_homomorphism(u in word(2, 6), v in word(2, 6)) {
        let a = two_letter_rotations();
        let joined = a.word_matrix(&u.concat(&v)).unwrap();
        let product = a.word_matrix(&u).unwrap().mul(&a.word_matrix(&v).unwrap()).unwrap();
        prop_assert_eq!(joined, product);
    }

    #[test]
    fn block_encoding_is_a_homomorphism((p, u, v) in instance_and_words()) {
        let y = |w: &Word| {
            let (s, t) = p.images(w).unwrap();
            block_from_pair(&encode_word(&s).unwrap(), &encode_word(&t).unwrap())
        };
        prop_assert_eq!(y(&u.concat(&v)), y(&u).mul(&y(&v)).unwrap());
        prop_assert!(y(&u).is_orthogonal());
    }

    #[test]
    fn zero_value_iff_pcp_solution((p, u, _) in instance_and_words()) {
        prop_assume!(!u.is_empty());
        let a = build_pcp_qfa(&p).unwrap();
        let zero = a.value(&u).unwrap().is_zero();
        prop_assert_eq!(zero, pcp_solution_predicate(&p, &u).unwrap().is_solution);
    }

    #[test]
    fn five_adic_invariant(w in reduced_word()) {
        prop_assert!(first_cancellation(&w).is_none());
        let f = five_adic_form(&w).unwrap();
        prop_assert!(!f.x2_divisible_by_five());
        prop_assert_eq!(f.norm_sq(), BigInt::from(25).pow(f.k as u32 + 1));
    }

    #[test]
    fn four_squares_integer_sums(n in 0u64..2_000_000) {
        let parts = four_squares_integer(&BigInt::from(n));
        let sum: BigInt = parts.iter().map(|x| x * x).sum();
        prop_assert_eq!(sum, BigInt::from(n));
    }

    #[test]
    fn four_squares_rational_is_exact(p in 0i64..500, q in 1i64..500) {
        let fs = four_squares(&rat(p, q)).unwrap();
        prop_assert!(fs.is_exact());
        prop_assert_eq!(fs.sum_of_squares(), rat(p, q));
    }

    #[test]
    fn shift_is_affine(ap in 0i64..=10, bp in 0i64..=10, w in word(1, 8)) {
        prop_assume!(ap + bp <= 10);
        let (alpha, beta) = (rat(ap, 10), rat(bp, 10));
        for a in [rotation_automaton(), c4_automaton()] {
            let b = shift_affine(&a, &alpha, &beta).unwrap();
            prop_assert!(b.validate().is_empty());
            let expected = &alpha * a.value(&w).unwrap() + &beta;
            prop_assert_eq!(b.value(&w).unwrap(), expected);
        }
    }

    #[test]
    fn strict_search_is_monotone_in_budget(num in 0i64..=20, len in 1usize..6) {
        let a = two_letter_rotations();
        let spec = ThresholdSpec::new(rat(num, 20), Relation::Gt);
        if let Some(hit) = a.bounded_search(&spec, len, false) {
            prop_assert_eq!(a.bounded_search(&spec, len + 3, false), Some(hit));
        }
    }
}

#[test]
fn bounded_search_matches_brute_force() {
    let a = two_letter_rotations();
    for num in 0..=10 {
        for rel in Relation::ALL {
            let spec = ThresholdSpec::new(rat(num, 10), rel);
            let mut expected = None;
            a.for_each_word(1, 6, |w, s| {
                let v = a.measure(s);
                if spec.accepts(&v) {
                    expected = Some((w.clone(), v));
                    return false;
                }
                true
            });
            assert_eq!(a.bounded_search(&spec, 6, false), expected, "{num}/10 {rel:?}");
        }
    }
}
