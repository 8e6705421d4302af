use std::fs;
use std::path::Path;

use qfa_core::decision::{
    bounded_emptiness_table, decide_with, default_backends, Budget, Certificate, CellStatus,
    Direction, Verdict, VerdictKind,
};
use qfa_core::exactmath::{approx_decimal, format_rational, parse_rational};
use qfa_core::invariant::{invariant_basis, semigroup_closure, vanishing_report};
use qfa_core::pcp::{
    build_pcp_qfa, build_two_matrix_system, check_freeness_certificate, check_injectivity,
    check_reduction, check_two_matrix_claim, PcpInstance,
};
use qfa_core::shift::{four_squares, shift_affine, verify_shift, ShiftPreset};
use qfa_core::{Qfa, Rational, Relation, ThresholdSpec, SCHEMA};
use serde_json::{json, Map, Value};

use crate::{Cli, Command, Global, EXIT_DATA, EXIT_INTERNAL, EXIT_USAGE};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<qfa_core::Error> for Failure {
    fn from(e: qfa_core::Error) -> Self {
        Failure {
            code: EXIT_DATA,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_DATA,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, format!("{text}\n"))
        .map_err(|e| Failure::internal(format!("cannot write {}: {e}", path.display())))
}

fn load_qfa(path: &Path, g: &Global) -> Result<Qfa, Failure> {
    Ok(Qfa::from_json(&read(path)?, !g.no_validate)?)
}

fn load_instance(path: &Path) -> Result<PcpInstance, Failure> {
    Ok(PcpInstance::from_json(&read(path)?)?)
}

fn rational_arg(name: &str, text: &str) -> Result<Rational, Failure> {
    parse_rational(text).map_err(|e| Failure::usage(format!("--{name}: {e}")))
}

fn relation_arg(text: &str) -> Result<Relation, Failure> {
    text.parse()
        .map_err(|e: qfa_core::Error| Failure::usage(format!("--relation: {e}")))
}

fn positive(name: &str, v: usize) -> Result<usize, Failure> {
    if v == 0 {
        Err(Failure::usage(format!("--{name} must be at least 1")))
    } else {
        Ok(v)
    }
}

/// Stamps the schema and command name into a JSON object and prints it.
fn emit(command: &str, body: Value) {
    let mut doc = Map::new();
    doc.insert("schema".into(), json!(SCHEMA));
    doc.insert("command".into(), json!(command));
    if let Value::Object(fields) = body {
        doc.extend(fields);
    } else {
        doc.insert("result".into(), body);
    }
    println!("{}", serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable"));
}

fn approx_json(g: &Global, values: &[(&str, &Rational)]) -> Value {
    match g.approx {
        None => Value::Null,
        Some(d) => {
            let mut m = Map::new();
            m.insert("note".into(), json!("display only"));
            m.insert("digits".into(), json!(d));
            for (k, v) in values {
                m.insert((*k).into(), json!(approx_decimal(v, d)));
            }
            Value::Object(m)
        }
    }
}

/// `p/q`, followed by the rounded decimal when `--approx` is set.
fn show(g: &Global, r: &Rational) -> String {
    match g.approx {
        None => format_rational(r),
        Some(d) => format!("{}  (≈ {}, display only)", format_rational(r), approx_decimal(r, d)),
    }
}

fn shown_word(w: &str) -> String {
    if w.is_empty() {
        "ε".into()
    } else {
        w.to_string()
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    if g.threads == 0 {
        return Err(Failure::usage("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(g.threads)
        .build_global()
        .map_err(|e| Failure::internal(format!("thread pool: {e}")))?;

    match &cli.command {
        Command::Eval { input, word } => eval(g, input, word),
        Command::Search {
            input,
            lambda,
            relation,
            max_len,
            include_empty,
        } => search(g, input, lambda, relation, *max_len, *include_empty),
        Command::ReducePcp {
            instance,
            out,
            check_len,
        } => reduce_pcp(g, instance, out.as_deref(), *check_len),
        Command::TwoMatrix {
            instance,
            out,
            max_len_w,
            max_len_nu,
        } => two_matrix(g, instance, out.as_deref(), *max_len_w, *max_len_nu),
        Command::Freeness {
            max_len,
            injectivity,
        } => freeness(g, *max_len, *injectivity),
        Command::Shift {
            input,
            alpha,
            beta,
            preset,
            lambda,
            out,
            verify_len,
        } => shift(g, input, alpha, beta, preset, lambda, out.as_deref(), *verify_len),
        Command::Invariants {
            input,
            degree,
            out,
            vanish_len,
        } => invariants(g, input, *degree, out.as_deref(), *vanish_len),
        Command::Closure { input, cap } => closure(g, input, *cap),
        Command::Decide {
            input,
            lambda,
            relation,
            max_len,
            closure_cap,
            max_degree,
            rounds,
            max_monomials,
        } => {
            let budget = Budget {
                max_word_len: positive("max-len", *max_len)?,
                closure_cap: positive("closure-cap", *closure_cap)?,
                max_degree: positive("max-degree", *max_degree as usize)? as u32,
                round_schedule: positive("rounds", *rounds as usize)? as u32,
                max_monomials: positive("max-monomials", *max_monomials)?,
            };
            decide(g, input, lambda, relation, budget)
        }
        Command::Table {
            input,
            lambda,
            max_len,
            include_empty,
        } => table(g, input, lambda, *max_len, *include_empty),
        Command::Selftest { criterion } => selftest(g, *criterion),
    }
}

fn eval(g: &Global, input: &Path, word: &str) -> Outcome {
    let a = load_qfa(input, g)?;
    let w = a.parse_word(word)?;
    let value = a.value(&w)?;
    if g.json {
        emit(
            "eval",
            json!({
                "word": a.format_word(&w),
                "symbols": w.0,
                "value": format_rational(&value),
                "approx": approx_json(g, &[("value", &value)]),
            }),
        );
    } else {
        println!("{}", show(g, &value));
    }
    Ok(0)
}

fn search(
    g: &Global,
    input: &Path,
    lambda: &str,
    relation: &str,
    max_len: usize,
    include_empty: bool,
) -> Outcome {
    let a = load_qfa(input, g)?;
    let spec = ThresholdSpec::new(rational_arg("lambda", lambda)?, relation_arg(relation)?);
    let warnings = spec.warnings();
    let found = a.bounded_search(&spec, max_len, include_empty);
    if g.json {
        let witness = found.as_ref().map(|(w, v)| {
            json!({
                "word": a.format_word(w),
                "symbols": w.0,
                "value": format_rational(v),
                "approx": approx_json(g, &[("value", v)]),
            })
        });
        emit(
            "search",
            json!({
                "lambda": format_rational(&spec.lambda),
                "relation": spec.relation,
                "max_len": max_len,
                "include_empty": include_empty,
                "witness": witness,
                "warnings": warnings,
            }),
        );
    } else {
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        match &found {
            Some((w, v)) => println!("witness {}  value {}", shown_word(&a.format_word(w)), show(g, v)),
            None => println!("no witness up to length {max_len}"),
        }
    }
    Ok(0)
}

fn reduce_pcp(g: &Global, instance: &Path, out: Option<&Path>, check_len: Option<usize>) -> Outcome {
    let p = load_instance(instance)?;
    let a = build_pcp_qfa(&p)?;
    let check = check_len.map(|n| check_reduction(&p, n)).transpose()?;
    if let Some(path) = out {
        write(path, &a.to_json())?;
    }
    if g.json {
        let mut body = json!({
            "k": p.k(),
            "dim": a.dim(),
            "check": check,
        });
        if out.is_none() {
            body["qfa"] = serde_json::to_value(a.to_file()).expect("serializable");
        }
        emit("reduce-pcp", body);
    } else {
        match out {
            Some(path) => println!("wrote {}-letter automaton of dimension {} to {}", p.k(), a.dim(), path.display()),
            None => println!("{}", a.to_json()),
        }
        if let Some(r) = &check {
            println!(
                "checked {} words up to length {}: {} solutions, {} mismatches",
                r.words_checked,
                r.max_len,
                r.solutions.len(),
                r.mismatches.len()
            );
            if !r.solutions.is_empty() {
                println!("solutions: {}", r.solutions.join(" "));
            }
        }
    }
    match &check {
        Some(r) if !r.mismatches.is_empty() => Err(Failure::internal(format!(
            "reduction mismatch on {}",
            r.mismatches.join(" ")
        ))),
        _ => Ok(0),
    }
}

fn two_matrix(
    g: &Global,
    instance: &Path,
    out: Option<&Path>,
    max_len_w: Option<usize>,
    max_len_nu: Option<usize>,
) -> Outcome {
    let p = load_instance(instance)?;
    let system = build_two_matrix_system(&p)?;
    let a = system.to_qfa();
    let claim = match (max_len_w, max_len_nu) {
        (Some(w), Some(nu)) => Some(check_two_matrix_claim(
            &p,
            positive("max-len-w", w)?,
            positive("max-len-nu", nu)?,
        )?),
        (None, None) => None,
        _ => return Err(Failure::usage("--max-len-w and --max-len-nu go together")),
    };
    if let Some(path) = out {
        write(path, &a.to_json())?;
    }
    if g.json {
        let mut body = json!({
            "k": system.k,
            "dim": system.dim(),
            "claim": claim,
        });
        if out.is_none() {
            body["qfa"] = serde_json::to_value(a.to_file()).expect("serializable");
        }
        emit("two-matrix", body);
    } else {
        match out {
            Some(path) => println!("wrote two-letter system of dimension {} to {}", system.dim(), path.display()),
            None => println!("{}", a.to_json()),
        }
        if let Some(r) = &claim {
            let w = r.w_witness.as_deref().map(shown_word).unwrap_or_else(|| "none".into());
            let nu = r.nu_witness.as_ref().map(|n| n.word.clone()).unwrap_or_else(|| "none".into());
            println!(
                "zero-value word w (|w| ≤ {}): {w}; ν (|ν| ≤ {}): {nu}; {}",
                r.max_len_w,
                r.max_len_nu,
                if r.sides_agree { "sides agree" } else { "sides disagree" }
            );
        }
    }
    Ok(0)
}

fn freeness(g: &Global, max_len: usize, injectivity: bool) -> Outcome {
    let r = check_freeness_certificate(max_len);
    let inj = injectivity.then(|| check_injectivity(max_len));
    if g.json {
        emit(
            "freeness",
            json!({
                "passed": r.passed(),
                "report": r,
                "injectivity": inj,
            }),
        );
    } else {
        match &r.first_failure {
            None => println!(
                "all reduced words pass: {} words of length 1..={}",
                r.words_checked, r.max_len
            ),
            Some(f) => println!("failure at {}: {}", f.word, f.reason),
        }
        if let Some(i) = &inj {
            match &i.collision {
                None => println!("{} words, {} distinct images", i.words, i.distinct_images),
                Some((u, v)) => println!("collision: {u} and {v}"),
            }
        }
    }
    if r.passed() && inj.as_ref().is_none_or(|i| i.collision.is_none()) {
        Ok(0)
    } else {
        Err(Failure::internal("freeness certificate failed"))
    }
}

#[allow(clippy::too_many_arguments)]
fn shift(
    g: &Global,
    input: &Path,
    alpha: &Option<String>,
    beta: &Option<String>,
    preset: &Option<String>,
    lambda: &Option<String>,
    out: Option<&Path>,
    verify_len: usize,
) -> Outcome {
    let (alpha, beta) = match (alpha, beta, preset, lambda) {
        (Some(a), Some(b), None, None) => (rational_arg("alpha", a)?, rational_arg("beta", b)?),
        (None, None, Some(p), Some(l)) => {
            let preset = ShiftPreset::from_name(p).map_err(|e| Failure::usage(e.to_string()))?;
            preset.coefficients(&rational_arg("lambda", l)?)
        }
        _ => {
            return Err(Failure::usage(
                "give either --alpha and --beta, or --preset and --lambda",
            ))
        }
    };
    let a = load_qfa(input, g)?;
    let b = shift_affine(&a, &alpha, &beta)?;
    let report = verify_shift(&a, &b, &alpha, &beta, verify_len)?;
    let parts = four_squares(&alpha)?;
    if let Some(path) = out {
        write(path, &b.to_json())?;
    }
    if g.json {
        let mut body = json!({
            "alpha": format_rational(&alpha),
            "beta": format_rational(&beta),
            "alpha_four_squares": parts.parts.iter().map(format_rational).collect::<Vec<_>>(),
            "dim": b.dim(),
            "verification": report,
            "passed": report.passed(),
            "approx": approx_json(g, &[("alpha", &alpha), ("beta", &beta)]),
        });
        if out.is_none() {
            body["qfa"] = serde_json::to_value(b.to_file()).expect("serializable");
        }
        emit("shift", body);
    } else {
        match out {
            Some(path) => println!("wrote automaton of dimension {} to {}", b.dim(), path.display()),
            None => println!("{}", b.to_json()),
        }
        println!(
            "Val_B = {}·Val_A + {} verified on {} words (|w| ≤ {}): {}",
            show(g, &alpha),
            show(g, &beta),
            report.words_checked,
            verify_len,
            if report.passed() { "ok" } else { "FAILED" }
        );
    }
    if report.passed() {
        Ok(0)
    } else {
        Err(Failure::internal("shift verification failed"))
    }
}

fn invariants(
    g: &Global,
    input: &Path,
    degree: u32,
    out: Option<&Path>,
    vanish_len: Option<usize>,
) -> Outcome {
    let a = load_qfa(input, g)?;
    let basis = invariant_basis(a.transitions(), degree)?;
    let vanishing = vanish_len
        .map(|n| vanishing_report(&basis, a.transitions(), n))
        .transpose()?;
    let file = basis.to_file();
    let text = serde_json::to_string_pretty(&file).expect("serializable");
    if let Some(path) = out {
        write(path, &text)?;
    }
    if g.json {
        let mut body = json!({
            "n": basis.n,
            "degree": degree,
            "dimension": basis.dimension(),
            "monomial_count": basis.monomial_count,
            "vanishing": vanishing,
        });
        if out.is_none() {
            body["basis"] = serde_json::to_value(&file).expect("serializable");
        }
        emit("invariants", body);
    } else {
        println!(
            "degree ≤ {degree}: {} invariant polynomials ({} monomials)",
            basis.dimension(),
            basis.monomial_count
        );
        match out {
            Some(path) => println!("wrote basis to {}", path.display()),
            None => {
                for f in &basis.polys {
                    println!("  {f}");
                }
            }
        }
        if let Some(r) = &vanishing {
            println!(
                "vanishing on {} products (|w| ≤ {}): {}",
                r.words_checked,
                r.max_word_len,
                if r.all_zero() { "all zero" } else { "NONZERO" }
            );
        }
    }
    match &vanishing {
        Some(r) if !r.all_zero() => Err(Failure::internal("invariant does not vanish on the group")),
        _ => Ok(0),
    }
}

fn closure(g: &Global, input: &Path, cap: usize) -> Outcome {
    let a = load_qfa(input, g)?;
    let c = semigroup_closure(a.transitions(), positive("cap", cap)?)?;
    if g.json {
        let elements: Vec<Value> = c
            .elements
            .iter()
            .map(|e| {
                json!({
                    "matrix": e.matrix,
                    "word": a.format_word(&e.word),
                    "symbols": e.word.0,
                })
            })
            .collect();
        emit(
            "closure",
            json!({
                "status": c.status,
                "cap": c.cap,
                "discovered": c.discovered,
                "elements": elements,
                "identity_word": c.identity_word.as_ref().map(|w| a.format_word(w)),
                "group_check": c.group_check,
            }),
        );
    } else if c.is_finite() {
        let check = c.group_check.as_ref().is_some_and(|g| g.holds());
        println!(
            "finite: {} elements, group axioms {}",
            c.elements.len(),
            if check { "verified" } else { "FAILED" }
        );
        for e in &c.elements {
            println!("  {}", shown_word(&a.format_word(&e.word)));
        }
    } else {
        println!("budget-exceeded: more than {} elements", c.cap);
    }
    Ok(0)
}

fn decide(g: &Global, input: &Path, lambda: &str, relation: &str, budget: Budget) -> Outcome {
    let relation = relation_arg(relation)?;
    let direction = Direction::from_relation(relation)
        .ok_or_else(|| Failure::usage("decide handles the strict relations `>` and `<` only"))?;
    let lambda = rational_arg("lambda", lambda)?;
    let a = load_qfa(input, g)?;
    let v = decide_with(&a, &lambda, direction, &budget, &default_backends())?;
    if g.json {
        let mut doc = serde_json::to_value(&v).expect("serializable");
        if let Value::Object(m) = &mut doc {
            m.remove("schema");
            if let Some(w) = &v.witness {
                m.insert("approx".into(), approx_json(g, &[("value", &w.value)]));
            }
        }
        emit("decide", doc);
    } else {
        print_verdict(g, &v);
    }
    Ok(v.kind.exit_code() as u8)
}

fn print_verdict(g: &Global, v: &Verdict) {
    let lam = format_rational(&v.lambda);
    match v.kind {
        VerdictKind::Witness => {
            let w = v.witness.as_ref().expect("witness verdict");
            println!(
                "WITNESS {}  value {} {} {lam}  (from {})",
                shown_word(&w.word),
                show(g, &w.value),
                v.relation.symbol(),
                w.source
            );
        }
        VerdictKind::Empty => {
            let what = match &v.certificate {
                Some(Certificate::FiniteClosure {
                    group_order,
                    extremum,
                    extremal_index,
                    elements,
                }) => format!(
                    "finite closure of order {group_order}, {} value {} at {}",
                    if v.direction == Direction::Above { "max" } else { "min" },
                    show(g, extremum),
                    elements[*extremal_index].word
                ),
                Some(Certificate::ValueBound { bound }) => {
                    format!("value bound {}", format_rational(bound))
                }
                _ => "certificate".into(),
            };
            println!("EMPTY  no word has value {} {lam}: {what}", v.relation.symbol());
        }
        VerdictKind::Unknown => {
            println!("UNKNOWN");
            for d in &v.diagnostics {
                println!("  {d}");
            }
        }
    }
}

fn table(g: &Global, input: &Path, lambda: &str, max_len: usize, include_empty: bool) -> Outcome {
    let lambda = rational_arg("lambda", lambda)?;
    let a = load_qfa(input, g)?;
    let t = bounded_emptiness_table(&a, &lambda, max_len, include_empty)?;
    if g.json {
        let mut doc = serde_json::to_value(&t).expect("serializable");
        if let Value::Object(m) = &mut doc {
            m.remove("schema");
        }
        emit("table", doc);
    } else {
        println!(
            "λ = {}, words of length {}..={}",
            show(g, &lambda),
            if include_empty { 0 } else { 1 },
            max_len
        );
        for c in &t.cells {
            let status = match c.status {
                CellStatus::Nonempty => {
                    let w = c.witness.as_ref().expect("nonempty cell");
                    format!("nonempty: {} (value {})", shown_word(&w.word), show(g, &w.value))
                }
                CellStatus::ProvablyEmpty => "empty (value bound)".into(),
                CellStatus::NoWitnessUpToBudget => "no witness up to budget".into(),
            };
            println!(
                "  {:<4} {:<40} emptiness {}",
                c.language,
                status,
                if c.decidable { "decidable" } else { "undecidable" }
            );
        }
    }
    Ok(0)
}

fn selftest(g: &Global, criterion: Option<u32>) -> Outcome {
    let criteria = match criterion {
        Some(id) => vec![qfa_core::selftest::run_one(id)?
            .ok_or_else(|| Failure::usage(format!("no criterion {id} (use 1 to 9)")))?],
        None => qfa_core::selftest::run_all()?.criteria,
    };
    let passed = criteria.iter().all(|c| c.passed);
    if g.json {
        emit("selftest", json!({ "passed": passed, "criteria": criteria }));
    } else {
        for c in &criteria {
            println!(
                "criterion {:>2} {:<28} {}",
                c.id,
                c.title,
                if c.passed { "PASS" } else { "FAIL" }
            );
        }
    }
    Ok(if passed { 0 } else { 1 })
}
