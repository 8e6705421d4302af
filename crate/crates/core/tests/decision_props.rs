use proptest::prelude::*;
use qfa_core::decision::{
    bounded_emptiness_table, decide_strict_above, decide_strict_below, Budget, CellStatus,
    Certificate, Direction, VerdictKind,
};
use qfa_core::exactmath::{int, rat, RationalMatrix, RationalVector};
use qfa_core::pcp::{build_pcp_qfa, PcpInstance};
use qfa_core::qfa::samples::{c4_automaton, rotation_automaton};
use qfa_core::{Qfa, Relation, ThresholdSpec};

fn budget(len: usize, cap: usize) -> Budget {
    Budget {
        max_word_len: len,
        closure_cap: cap,
        max_degree: 2,
        round_schedule: 2,
        max_monomials: 60,
    }
}

/// Order-8 group generated by a quarter turn and a reflection, on a
/// start vector that sees several distinct values.
fn dihedral_automaton() -> Qfa {
    let r = RationalMatrix::from_ints_scaled(&[&[0, -1], &[1, 0]], 1);
    let f = RationalMatrix::from_ints_scaled(&[&[1, 0], &[0, -1]], 1);
    Qfa::new(
        vec!["r".into(), "f".into()],
        vec![r, f],
        RationalVector::new(vec![rat(3, 5), rat(4, 5)]),
        RationalMatrix::diag(&[int(1), int(0)]),
    )
    .unwrap()
}

fn automata() -> Vec<Qfa> {
    vec![c4_automaton(), rotation_automaton(), dihedral_automaton()]
}

fn direction_of(above: bool) -> Direction {
    if above {
        Direction::Above
    } else {
        Direction::Below
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn verdicts_agree_with_exhaustive_search(
        idx in 0usize..3,
        num in 0i64..=40,
        above in prop::bool::ANY,
    ) {
        let a = &automata()[idx];
        let lambda = rat(num, 40);
        let dir = direction_of(above);
        let v = match dir {
            Direction::Above => decide_strict_above(a, &lambda, &budget(6, 64)).unwrap(),
            Direction::Below => decide_strict_below(a, &lambda, &budget(6, 64)).unwrap(),
        };
        let spec = ThresholdSpec::new(lambda.clone(), dir.relation());
        let exhaustive = a.bounded_search(&spec, 10, false);
        match v.kind {
            VerdictKind::Empty => prop_assert!(exhaustive.is_none()),
            VerdictKind::Witness => prop_assert!(v.recheck(a).unwrap()),
            VerdictKind::Unknown => {}
        }
        prop_assert!(v.recheck(a).unwrap());
    }

    #[test]
    fn larger_budgets_never_flip(idx in 0usize..3, num in 0i64..=40, above in prop::bool::ANY) {
        let a = &automata()[idx];
        let lambda = rat(num, 40);
        let run = |b: &Budget| match direction_of(above) {
            Direction::Above => decide_strict_above(a, &lambda, b).unwrap().kind,
            Direction::Below => decide_strict_below(a, &lambda, b).unwrap().kind,
        };
        let small = run(&budget(2, 4));
        let large = run(&budget(8, 128));
        if small != VerdictKind::Unknown {
            prop_assert_eq!(small, large);
        }
    }
}

#[test]
fn empty_certificates_are_group_extrema() {
    let a = dihedral_automaton();
    for num in 0..=25 {
        let lambda = rat(num, 25);
        let v = decide_strict_above(&a, &lambda, &budget(3, 64)).unwrap();
        if let (VerdictKind::Empty, Some(Certificate::FiniteClosure { elements, extremum, .. })) =
            (v.kind, &v.certificate)
        {
            assert_eq!(elements.len(), 8);
            for e in elements {
                assert!(e.value <= lambda);
                assert!(e.value <= *extremum);
                assert_eq!(a.measure_matrix(&e.matrix).unwrap(), e.value);
            }
        }
    }
}

#[test]
fn witness_appears_once_length_budget_reaches_it() {
    // value("a") = 144/625 on the rotation automaton, and nothing shorter exists.
    let a = rotation_automaton();
    let v = decide_strict_above(&a, &rat(1, 5), &budget(1, 8)).unwrap();
    assert_eq!(v.kind, VerdictKind::Witness);
    assert_eq!(v.witness.unwrap().word, "a");
}

#[test]
fn pcp_table_finds_the_solution() {
    let p = PcpInstance::from_strs(&[("a", "aa"), ("aa", "a")]).unwrap();
    let a = build_pcp_qfa(&p).unwrap();
    let t = bounded_emptiness_table(&a, &int(0), 2, false).unwrap();
    let le = t.cell(Relation::Le);
    assert_eq!(le.status, CellStatus::Nonempty);
    let w = le.witness.as_ref().unwrap();
    assert_eq!((w.word.as_str(), w.value.clone()), ("12", int(0)));
    assert_eq!(t.cell(Relation::Lt).status, CellStatus::ProvablyEmpty);
}
