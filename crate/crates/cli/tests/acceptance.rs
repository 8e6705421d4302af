//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N ... PASS/FAIL` line. Criteria run one at a time so the
//! runtime limits measure the criterion alone.

use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use qfa_core::selftest::{self, CriterionReport};

static SERIAL: Mutex<()> = Mutex::new(());

/// Wall-clock limits per criterion, in seconds.
const LIMITS: [(u32, u64); 9] = [
    (1, 1),
    (2, 5),
    (3, 10),
    (4, 30),
    (5, 60),
    (6, 10),
    (7, 60),
    (8, 30),
    (9, 10),
];

fn limit(id: u32) -> Duration {
    let secs = LIMITS.iter().find(|(i, _)| *i == id).map(|(_, s)| *s).unwrap();
    Duration::from_secs(secs)
}

fn check(id: u32, run: fn() -> qfa_core::Result<CriterionReport>) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let report = run().expect("criterion ran");
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit(id);
    let ok = report.passed && in_time;
    println!(
        "criterion {id:>2} {:<28} {} ({:.2}s, limit {}s)",
        report.title,
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit(id).as_secs()
    );
    assert!(report.passed, "criterion {id} failed: {}", report.details);
    assert!(in_time, "criterion {id} took {elapsed:?}, limit {:?}", limit(id));
}

#[test]
fn criterion_01_model_exactness() {
    check(1, selftest::criterion_1);
}

#[test]
fn criterion_02_gadget_integrity() {
    check(2, selftest::criterion_2);
}

#[test]
fn criterion_03_five_adic_certificate() {
    check(3, selftest::criterion_3);
}

#[test]
fn criterion_04_pcp_reduction() {
    check(4, selftest::criterion_4);
}

#[test]
fn criterion_05_two_matrix_claim() {
    check(5, selftest::criterion_5);
}

#[test]
fn criterion_06_threshold_shift() {
    check(6, selftest::criterion_6);
}

#[test]
fn criterion_07_invariant_polynomials() {
    check(7, selftest::criterion_7);
}

#[test]
fn criterion_08_semigroup_closure() {
    check(8, selftest::criterion_8);
}

#[test]
fn criterion_09_decision_driver() {
    check(9, selftest::criterion_9);
}

#[test]
fn criterion_10_determinism() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_qfa"))
            .args(["selftest", "--json"])
            .output()
            .expect("qfa runs")
    };
    let first = run();
    let second = run();
    let same = first.stdout == second.stdout && !first.stdout.is_empty();
    println!(
        "criterion 10 {:<28} {} ({} bytes)",
        "determinism",
        if same { "PASS" } else { "FAIL" },
        first.stdout.len()
    );
    assert!(same, "selftest --json output differs between runs");
}
