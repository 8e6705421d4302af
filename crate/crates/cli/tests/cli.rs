use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn qfa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfa"))
        .args(args)
        .output()
        .expect("qfa runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

fn scratch(name: &str) -> String {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name).display().to_string()
}

#[test]
fn eval_prints_exact_value() {
    let o = qfa(&["eval", "--in", &data("astar.json"), "--word", "a"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "144/625");
}

#[test]
fn approx_is_labelled_display_only() {
    let o = qfa(&["eval", "--in", &data("astar.json"), "--word", "a", "--approx", "4"]);
    assert!(stdout(&o).contains("0.2304"));
    assert!(stdout(&o).contains("display only"));
    let o = qfa(&["eval", "--in", &data("astar.json"), "--word", "a", "--json", "--approx"]);
    let v = json(&o);
    assert_eq!(v["value"], "144/625");
    assert_eq!(v["approx"]["note"], "display only");
}

#[test]
fn every_json_document_carries_the_schema() {
    let c4 = data("c4.json");
    let pcp = data("pcp_planted.json");
    let runs: Vec<Vec<&str>> = vec![
        vec!["eval", "--in", &c4, "--word", "aa"],
        vec!["search", "--in", &c4, "--lambda", "1/2", "--relation", ">"],
        vec!["reduce-pcp", "--instance", &pcp],
        vec!["two-matrix", "--instance", &pcp, "--max-len-w", "3", "--max-len-nu", "6"],
        vec!["freeness", "--max-len", "3"],
        vec!["shift", "--in", &c4, "--alpha", "1/2", "--beta", "1/4"],
        vec!["invariants", "--in", &c4, "--degree", "2"],
        vec!["closure", "--in", &c4, "--cap", "10"],
        vec!["decide", "--in", &c4, "--lambda", "1/2"],
        vec!["table", "--in", &c4, "--lambda", "1/2", "--max-len", "4"],
        vec!["selftest", "--criterion", "3"],
    ];
    for mut args in runs {
        let name = args[0];
        args.push("--json");
        let o = qfa(&args);
        let v = json(&o);
        assert_eq!(v["schema"], qfa_core::SCHEMA, "{name}");
        assert_eq!(v["command"], name);
    }
}

#[test]
fn freeness_summary() {
    let o = qfa(&["freeness", "--max-len", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("all reduced words pass"));
}

#[test]
fn decide_exit_codes() {
    let c4 = data("c4.json");
    let o = qfa(&["decide", "--in", &c4, "--lambda", "1", "--relation", ">", "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["kind"], "EMPTY");
    assert_eq!(v["certificate"]["kind"], "finite-closure");
    assert_eq!(v["certificate"]["group_order"], 4);

    let o = qfa(&["decide", "--in", &c4, "--lambda", "1/2", "--relation", ">"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("WITNESS aa"));

    let o = qfa(&[
        "decide", "--in", &data("astar.json"), "--lambda", "99/100", "--max-len", "4",
        "--closure-cap", "50", "--max-degree", "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(qfa(&["eval", "--bogus"]).status.code(), Some(64));
    assert_eq!(qfa(&["frobnicate"]).status.code(), Some(64));
    let c4 = data("c4.json");
    assert_eq!(qfa(&["decide", "--in", &c4, "--lambda", "x"]).status.code(), Some(64));
    assert_eq!(
        qfa(&["decide", "--in", &c4, "--lambda", "1/2", "--relation", ">="]).status.code(),
        Some(64)
    );
    assert_eq!(qfa(&["freeness", "--threads", "0"]).status.code(), Some(64));
}

#[test]
fn data_errors_exit_65() {
    assert_eq!(
        qfa(&["eval", "--in", "/nonexistent/x.json", "--word", "a"]).status.code(),
        Some(65)
    );
    let c4 = data("c4.json");
    assert_eq!(qfa(&["eval", "--in", &c4, "--word", "z"]).status.code(), Some(65));
    let bad = scratch("bad.json");
    std::fs::write(
        &bad,
        r#"{"alphabet":["a"],"n":2,"transitions":{"a":[["1","1"],["0","1"]]},"initial":["1","0"],"projection":[["1","0"],["0","0"]]}"#,
    )
    .unwrap();
    let o = qfa(&["eval", "--in", &bad, "--word", "a"]);
    assert_eq!(o.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not orthogonal"));
    assert_eq!(
        qfa(&["eval", "--in", &bad, "--word", "a", "--no-validate"]).status.code(),
        Some(0)
    );
}

#[test]
fn emitted_automata_reload_losslessly() {
    let out = scratch("pcp.json");
    let o = qfa(&["reduce-pcp", "--instance", &data("pcp_planted.json"), "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let a = qfa_core::Qfa::from_json(&text, true).unwrap();
    assert_eq!(format!("{}\n", a.to_json()), text);
    let o = qfa(&["eval", "--in", &out, "--word", "12"]);
    assert_eq!(stdout(&o).trim(), "0");

    let shifted = scratch("shifted.json");
    let o = qfa(&[
        "shift", "--in", &data("astar.json"), "--preset", "lift", "--lambda", "3/7",
        "--out", &shifted,
    ]);
    assert_eq!(o.status.code(), Some(0));
    // (4/7)·(144/625) + 3/7
    assert_eq!(stdout(&qfa(&["eval", "--in", &shifted, "--word", "a"])).trim(), "2451/4375");
}

#[test]
fn invariant_basis_file_round_trips() {
    let out = scratch("basis.json");
    let o = qfa(&["invariants", "--in", &data("c4.json"), "--degree", "2", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let file: qfa_core::invariant::BasisFile = serde_json::from_str(&text).unwrap();
    let basis = qfa_core::invariant::InvariantBasis::from_file(&file).unwrap();
    assert_eq!(basis.dimension(), file.dimension);
    assert_eq!(serde_json::to_string_pretty(&basis.to_file()).unwrap() + "\n", text);
}

#[test]
fn table_on_pcp_automaton() {
    let out = scratch("pcp_table.json");
    qfa(&["reduce-pcp", "--instance", &data("pcp_planted.json"), "--out", &out]);
    let v = json(&qfa(&["table", "--in", &out, "--lambda", "0", "--max-len", "2", "--json"]));
    let le = v["cells"].as_array().unwrap().iter().find(|c| c["relation"] == "<=").unwrap();
    assert_eq!(le["witness"]["word"], "12");
    assert_eq!(le["witness"]["value"], "0");
}

#[test]
fn two_matrix_writes_a_two_letter_automaton() {
    let out = scratch("sys.json");
    let o = qfa(&["two-matrix", "--instance", &data("pcp_free.json"), "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    let a = qfa_core::Qfa::from_json(&std::fs::read_to_string(&out).unwrap(), true).unwrap();
    assert_eq!(a.alphabet(), ["0", "1"]);
    assert_eq!(a.dim(), 6);
}

#[test]
fn threads_do_not_change_results() {
    let c4 = data("c4.json");
    let one = qfa(&["search", "--in", &c4, "--lambda", "1/2", "--json", "--max-len", "6"]);
    let four = qfa(&["search", "--in", &c4, "--lambda", "1/2", "--json", "--max-len", "6", "--threads", "4"]);
    assert_eq!(one.stdout, four.stdout);
}
