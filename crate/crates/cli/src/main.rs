//! `qfa`: command-line front end for the exact QFA toolkit.
//!
//! Exit codes: 0 success, 64 usage error, 65 data or validation error,
//! 70 internal error. `decide` exits 0/1/2 for WITNESS/EMPTY/UNKNOWN and
//! `selftest` exits 1 when a criterion fails.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATA: u8 = 65;
pub const EXIT_INTERNAL: u8 = 70;

#[derive(Parser, Debug)]
#[command(name = "qfa", version, about = "Exact measure-once quantum finite automata toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Also print decimal approximations (display only) to DIGITS places.
    #[arg(long, global = true, value_name = "DIGITS", num_args = 0..=1, default_missing_value = "6")]
    pub approx: Option<usize>,
    /// Worker threads for internal parallelism.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Skip the exact unitarity/projection checks when loading automata.
    #[arg(long, global = true)]
    pub no_validate: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact value of one word.
    Eval {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        word: String,
    },
    /// Length-lexicographically first word in a threshold language.
    Search {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value = ">")]
        relation: String,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        #[arg(long)]
        include_empty: bool,
    },
    /// Build the automaton of a PCP instance.
    ReducePcp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compare zero values with PCP solutions up to this length.
        #[arg(long)]
        check_len: Option<usize>,
    },
    /// Build the two-generator system of a PCP instance.
    TwoMatrix {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// With --max-len-nu, compare zero-value words on both sides.
        #[arg(long)]
        max_len_w: Option<usize>,
        #[arg(long)]
        max_len_nu: Option<usize>,
    },
    /// Check the 5-adic freeness certificate on all reduced words.
    Freeness {
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        /// Also check that distinct reduced words give distinct images.
        #[arg(long)]
        injectivity: bool,
    },
    /// Affine value shift `Val_B = α·Val_A + β`.
    Shift {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        beta: Option<String>,
        /// `scale` (α = λ, β = 0) or `lift` (α = 1 − λ, β = λ).
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Verify the value identity for all words up to this length.
        #[arg(long, default_value_t = 6)]
        verify_len: usize,
    },
    /// Invariant polynomials of degree at most D.
    Invariants {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        degree: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluate the basis on all products up to this word length.
        #[arg(long)]
        vanish_len: Option<usize>,
    },
    /// Breadth-first semigroup closure of the transitions.
    Closure {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        cap: usize,
    },
    /// Strict-threshold emptiness (`>` or `<`).
    Decide {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value = ">")]
        relation: String,
        #[arg(long, default_value_t = 12)]
        max_len: usize,
        #[arg(long, default_value_t = 100_000)]
        closure_cap: usize,
        #[arg(long, default_value_t = 3)]
        max_degree: u32,
        #[arg(long, default_value_t = 4)]
        rounds: u32,
        #[arg(long, default_value_t = 1_000)]
        max_monomials: usize,
    },
    /// Bounded emptiness report for all four threshold languages.
    Table {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        #[arg(long)]
        include_empty: bool,
    },
    /// Run the acceptance checks.
    Selftest {
        /// Run only this criterion (1 to 9).
        #[arg(long)]
        criterion: Option<u32>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = std::panic::catch_unwind(|| commands::run(&cli));
    match outcome {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(e)) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
