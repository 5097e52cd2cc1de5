//! Command-line front end. Exit status 0 on success, 1 on a logical failure
//! (rule violation, underivable sequent) and 2 on bad input.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::derivation::check;
use crate::script::{compile_script, parse_proof, ScriptError};
use crate::search::{decide, generate_corpus, SearchConfig, SearchResult};
use crate::semantics::{eval, parse_model, standard_models, Bounds, Model};
use crate::syntax::{parse_formula, parse_oracle, parse_sequent, print_proof_file, OracleSpec};
use crate::terms::Formula;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "omega", version, about = "Check, normalize and search derivations of the ω-sequent calculus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a proof file and print its conclusion.
    Check {
        proof: PathBuf,
        #[arg(long)]
        oracle: Option<PathBuf>,
    },
    /// Compile a proof script into a primitive proof file.
    Normalize {
        script: PathBuf,
        #[arg(long)]
        oracle: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a derivation of a sequent.
    Decide {
        sequent: String,
        #[arg(long)]
        oracle: Option<PathBuf>,
        #[arg(long = "omega-n", default_value_t = 3)]
        omega_n: u64,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a closed formula in a finite model.
    Eval {
        formula: String,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Stabilization index for every ω-meet; found by audit when absent.
        #[arg(long)]
        bound: Option<u64>,
    },
    /// Print a random corpus of checked derivations.
    Corpus {
        #[arg(long)]
        oracle: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long = "omega-n", default_value_t = 3)]
        omega_n: u64,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// An error with its exit status.
struct Failure {
    code: i32,
    message: String,
}

fn input(message: impl ToString) -> Failure {
    Failure { code: EXIT_INPUT, message: message.to_string() }
}

fn logical(message: impl ToString) -> Failure {
    Failure { code: EXIT_FAILURE, message: message.to_string() }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn write_or_print(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| input(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| input(e)),
    }
}

fn load_oracle(path: Option<&Path>) -> Result<OracleSpec, Failure> {
    match path {
        None => Ok(OracleSpec::Arithmetic),
        Some(p) => parse_oracle(&read(p)?).map_err(|e| input(format!("{}: {e}", p.display()))),
    }
}

fn script_failure(e: ScriptError) -> Failure {
    match e {
        ScriptError::Parse(e) => input(e),
        ScriptError::Proof(e) => logical(e),
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_INPUT;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Check { proof, oracle } => {
            let spec = load_oracle(oracle.as_deref())?;
            let d = parse_proof(&read(&proof)?).map_err(script_failure)?;
            let concl = check(&d, spec.oracle()).map_err(logical)?;
            let _ = writeln!(out, "checked: {concl}");
            Ok(EXIT_OK)
        }
        Command::Normalize { script, oracle, out: dest } => {
            let spec = load_oracle(oracle.as_deref())?;
            let d = compile_script(&read(&script)?, spec.oracle()).map_err(script_failure)?;
            check(&d, spec.oracle()).map_err(logical)?;
            write_or_print(dest.as_deref(), &print_proof_file(&d), out)?;
            Ok(EXIT_OK)
        }
        Command::Decide { sequent, oracle, omega_n, depth, out: dest } => {
            let spec = load_oracle(oracle.as_deref())?;
            let s = parse_sequent(&sequent).map_err(input)?;
            if !s.is_closed() {
                return Err(input(format!("sequent is not closed: {s}")));
            }
            let cfg = SearchConfig { omega_truncation: omega_n.max(1), depth_limit: depth };
            let result = decide(&s, spec.oracle(), &cfg);
            let _ = writeln!(out, "{}", result.verdict());
            match result {
                SearchResult::Derivable(d) => {
                    if let Some(p) = dest.as_deref() {
                        write_or_print(Some(p), &print_proof_file(&d), out)?;
                    }
                    Ok(EXIT_OK)
                }
                _ => Ok(EXIT_FAILURE),
            }
        }
        Command::Eval { formula, model, bound } => {
            let m: Model = match model.as_deref() {
                Some(p) => parse_model(&read(p)?).map_err(|e| input(format!("{}: {e}", p.display())))?,
                None => standard_models().remove(0),
            };
            let f = parse_formula(&formula).map_err(input)?;
            let mut bounds = Bounds::auto();
            if let Some(index) = bound {
                let mut alls = Vec::new();
                collect_alls(&f, &mut alls);
                bounds = Bounds::uniform_for(&alls, index);
            }
            let v = eval(&f, &m, &bounds).map_err(logical)?;
            let _ = writeln!(out, "{}", m.name(v));
            Ok(EXIT_OK)
        }
        Command::Corpus { oracle, count, seed, omega_n, depth, out: dest } => {
            let spec = load_oracle(oracle.as_deref())?;
            let cfg = SearchConfig { omega_truncation: omega_n.max(1), depth_limit: depth };
            let text: String = generate_corpus(spec.oracle(), &cfg, count, seed).iter().map(print_proof_file).collect();
            write_or_print(dest.as_deref(), &text, out)?;
            Ok(EXIT_OK)
        }
    }
}

/// ω-meet subformulas of `f`, closed ones only.
fn collect_alls(f: &Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::Prime(_) => {}
        Formula::Meet(a, b) => {
            collect_alls(a, out);
            collect_alls(b, out);
        }
        Formula::Neg(a) => collect_alls(a, out),
        Formula::All(_, body) => {
            if f.is_closed() {
                out.push(f.clone());
            }
            collect_alls(body, out);
        }
    }
}
