//! S-expression surface syntax for terms, formulas, sequents, derivations
//! and oracle files. Printing is canonical so that golden files are stable.

use std::fmt::{self, Write as _};

use crate::derivation::{BranchBody, Derivation, Node, OmegaBranch};
use crate::sexpr::{parse_one, ParseError, Sexp};
use crate::terms::{
    var, ArithmeticOracle, FinitePreorder, Formula, Numeral, Pred, PreorderOracle, PrimeFormula, Sequent, Term, Var,
};

const KEYWORDS: &[&str] = &["prime", "meet", "neg", "all", "seq", "s", "+", "*", "=", "<=", "_"];

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Num(n) => write!(f, "{n}"),
            Term::Var(v) => write!(f, "{v}"),
            Term::Succ(t) => write!(f, "(s {t})"),
            Term::Add(a, b) => write!(f, "(+ {a} {b})"),
            Term::Mul(a, b) => write!(f, "(* {a} {b})"),
        }
    }
}

impl fmt::Display for PrimeFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrimeFormula::Rel(p, a, b) => write!(f, "(prime ({} {a} {b}))", p.symbol()),
            PrimeFormula::Atom(name) => write!(f, "{name}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Prime(p) => write!(f, "{p}"),
            Formula::Meet(a, b) => write!(f, "(meet {a} {b})"),
            Formula::Neg(a) => write!(f, "(neg {a})"),
            Formula::All(x, body) => write!(f, "(all {x} {body})"),
        }
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(seq (")?;
        for (i, a) in self.ante.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ") ")?;
        match &self.succ {
            Some(s) => write!(f, "{s})"),
            None => write!(f, "_)"),
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'' || c == '-')
        && !KEYWORDS.contains(&s)
}

pub fn ident(s: &Sexp) -> Result<Var, ParseError> {
    match s.as_atom() {
        Some(a) if is_ident(a) => Ok(var(a)),
        _ => Err(s.error(format!("expected an identifier, found `{s}`"))),
    }
}

pub fn numeral(s: &Sexp) -> Result<Numeral, ParseError> {
    let a = s.as_atom().ok_or_else(|| s.error("expected a numeral"))?;
    if let Some(n) = Numeral::parse_strokes(a) {
        return Ok(n);
    }
    a.parse::<u64>().ok().and_then(Numeral::new).ok_or_else(|| s.error(format!("expected a numeral >= 1, found `{a}`")))
}

pub fn usize_atom(s: &Sexp) -> Result<usize, ParseError> {
    s.as_atom().and_then(|a| a.parse().ok()).ok_or_else(|| s.error(format!("expected a position, found `{s}`")))
}

fn arity<'a>(s: &Sexp, args: &'a [Sexp], n: usize) -> Result<&'a [Sexp], ParseError> {
    if args.len() != n {
        return Err(s.error(format!("expected {n} arguments, found {}", args.len())));
    }
    Ok(args)
}

pub fn term_from(s: &Sexp) -> Result<Term, ParseError> {
    if let Some(a) = s.as_atom() {
        if a.starts_with(|c: char| c.is_ascii_digit()) {
            return Ok(Term::Num(numeral(s)?));
        }
        return Ok(Term::Var(ident(s)?));
    }
    let (head, args) = s.as_form().ok_or_else(|| s.error("expected a term"))?;
    match head {
        "s" => Ok(Term::succ(term_from(&arity(s, args, 1)?[0])?)),
        "+" => {
            let a = arity(s, args, 2)?;
            Ok(Term::add(term_from(&a[0])?, term_from(&a[1])?))
        }
        "*" => {
            let a = arity(s, args, 2)?;
            Ok(Term::mul(term_from(&a[0])?, term_from(&a[1])?))
        }
        _ => Err(s.error(format!("unknown term constructor `{head}`"))),
    }
}

fn relation_from(s: &Sexp) -> Result<Option<PrimeFormula>, ParseError> {
    let Some((head, args)) = s.as_form() else {
        return Ok(None);
    };
    let pred = match head {
        "=" => Pred::Eq,
        "<=" => Pred::Le,
        _ => return Ok(None),
    };
    let a = arity(s, args, 2)?;
    Ok(Some(PrimeFormula::Rel(pred, term_from(&a[0])?, term_from(&a[1])?)))
}

pub fn prime_from(s: &Sexp) -> Result<PrimeFormula, ParseError> {
    if s.as_atom().is_some() {
        return Ok(PrimeFormula::Atom(ident(s)?));
    }
    if let Some(p) = relation_from(s)? {
        return Ok(p);
    }
    match s.as_form() {
        Some(("prime", args)) => prime_from(&arity(s, args, 1)?[0]),
        _ => Err(s.error(format!("expected a prime formula, found `{s}`"))),
    }
}

pub fn formula_from(s: &Sexp) -> Result<Formula, ParseError> {
    if s.as_atom().is_some() {
        return Ok(Formula::Prime(prime_from(s)?));
    }
    if let Some(p) = relation_from(s)? {
        return Ok(Formula::Prime(p));
    }
    let (head, args) = s.as_form().ok_or_else(|| s.error("expected a formula"))?;
    match head {
        "prime" => Ok(Formula::Prime(prime_from(s)?)),
        "meet" => {
            let a = arity(s, args, 2)?;
            Ok(Formula::meet(formula_from(&a[0])?, formula_from(&a[1])?))
        }
        "neg" => Ok(Formula::neg(formula_from(&arity(s, args, 1)?[0])?)),
        "all" => {
            let a = arity(s, args, 2)?;
            Ok(Formula::All(ident(&a[0])?, Box::new(formula_from(&a[1])?)))
        }
        _ => Err(s.error(format!("unknown formula constructor `{head}`"))),
    }
}

/// A formula, or `_` for an absent succedent.
pub fn opt_formula_from(s: &Sexp) -> Result<Option<Formula>, ParseError> {
    if s.as_atom() == Some("_") {
        Ok(None)
    } else {
        formula_from(s).map(Some)
    }
}

pub fn sequent_from(s: &Sexp) -> Result<Sequent, ParseError> {
    match s.as_form() {
        Some(("seq", args)) => {
            let a = arity(s, args, 2)?;
            let ante = a[0]
                .as_list()
                .ok_or_else(|| a[0].error("expected the antecedent list"))?
                .iter()
                .map(formula_from)
                .collect::<Result<_, _>>()?;
            Ok(Sequent::new(ante, opt_formula_from(&a[1])?))
        }
        _ => Err(s.error(format!("expected (seq ANTECEDENTS SUCCEDENT), found `{s}`"))),
    }
}

pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    formula_from(&parse_one(src)?)
}

pub fn parse_sequent(src: &str) -> Result<Sequent, ParseError> {
    sequent_from(&parse_one(src)?)
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    term_from(&parse_one(src)?)
}

// ---------------------------------------------------------------------------
// Derivations.

/// Canonical multi-line rendering of a primitive derivation.
pub fn print_derivation(d: &Derivation) -> String {
    let mut out = String::new();
    write_derivation(d, 0, &mut out);
    out
}

/// A proof file: `(proof D)` followed by a newline.
pub fn print_proof_file(d: &Derivation) -> String {
    let mut out = String::from("(proof\n  ");
    write_derivation(d, 2, &mut out);
    out.push_str(")\n");
    out
}

fn newline(indent: usize, out: &mut String) {
    out.push('\n');
    for _ in 0..indent {
        out.push(' ');
    }
}

fn write_derivation(d: &Derivation, indent: usize, out: &mut String) {
    let inner = indent + 2;
    let c = &d.conclusion;
    match &d.node {
        Node::Basic => {
            let _ = write!(out, "(basic {c})");
            return;
        }
        Node::A(l, r) => {
            out.push_str("(a");
            newline(inner, out);
            write_derivation(l, inner, out);
            newline(inner, out);
            write_derivation(r, inner, out);
        }
        Node::B(p) => {
            out.push_str("(b");
            newline(inner, out);
            write_derivation(p, inner, out);
        }
        Node::C { binder, branch } => {
            let _ = write!(out, "(c {}", branch.param);
            write_branch(branch, inner, out);
            if *binder != branch.param {
                newline(inner, out);
                out.push_str(binder);
            }
        }
        Node::J(branch) => {
            let _ = write!(out, "(j {}", branch.param);
            write_branch(branch, inner, out);
        }
        Node::D { pos, premiss } => {
            let _ = write!(out, "(d {} {pos}", c.ante[*pos]);
            newline(inner, out);
            write_derivation(premiss, inner, out);
        }
        Node::E(p) => {
            match &c.succ {
                Some(f) => {
                    let _ = write!(out, "(e {f}");
                }
                None => out.push_str("(e _"),
            }
            newline(inner, out);
            write_derivation(p, inner, out);
        }
        Node::F { witness, premiss } => {
            let _ = write!(out, "(f {witness} {}", c.ante[0]);
            newline(inner, out);
            write_derivation(premiss, inner, out);
        }
        Node::G { pos, premiss } | Node::H { pos, premiss } | Node::I { pos, premiss } => {
            let _ = write!(out, "({} {pos}", d.tag().name());
            newline(inner, out);
            write_derivation(premiss, inner, out);
        }
    }
    out.push(')');
}

fn write_branch(branch: &OmegaBranch, indent: usize, out: &mut String) {
    newline(indent, out);
    match &branch.body {
        BranchBody::Parametric(body) => write_derivation(body, indent, out),
        BranchBody::Induction(recipe) => {
            let _ = write!(out, "(induct {}", recipe.var);
            newline(indent + 2, out);
            write_derivation(&recipe.step, indent + 2, out);
            out.push(')');
        }
    }
    newline(indent, out);
    if branch.exceptions.is_empty() {
        out.push_str("()");
        return;
    }
    out.push('(');
    for (i, (n, exc)) in branch.exceptions.iter().enumerate() {
        if i > 0 {
            newline(indent + 1, out);
        }
        let _ = write!(out, "({n}");
        newline(indent + 3, out);
        write_derivation(exc, indent + 3, out);
        out.push(')');
    }
    out.push(')');
}

// ---------------------------------------------------------------------------
// Oracle files.

/// The oracle named by an oracle file.
#[derive(Debug, Clone)]
pub enum OracleSpec {
    Arithmetic,
    Preorder(FinitePreorder),
}

impl OracleSpec {
    pub fn oracle(&self) -> &dyn PreorderOracle {
        match self {
            OracleSpec::Arithmetic => &ArithmeticOracle,
            OracleSpec::Preorder(p) => p,
        }
    }
}

/// `(arithmetic)` or `(preorder (elems p q ...) (leq (p q) ...))`.
pub fn oracle_from(s: &Sexp) -> Result<OracleSpec, ParseError> {
    match s.as_form() {
        Some(("arithmetic", [])) => Ok(OracleSpec::Arithmetic),
        Some(("preorder", clauses)) => {
            let mut elems = Vec::new();
            let mut pairs = Vec::new();
            for clause in clauses {
                match clause.as_form() {
                    Some(("elems", names)) => {
                        for n in names {
                            elems.push(ident(n)?);
                        }
                    }
                    Some(("leq", ps)) => {
                        for p in ps {
                            match p.as_list() {
                                Some([a, b]) => pairs.push((ident(a)?, ident(b)?)),
                                _ => return Err(p.error("expected a pair (a b)")),
                            }
                        }
                    }
                    _ => return Err(clause.error("expected (elems ...) or (leq ...)")),
                }
            }
            Ok(OracleSpec::Preorder(FinitePreorder::new(elems, pairs)))
        }
        _ => Err(s.error("expected (arithmetic) or (preorder ...)")),
    }
}

pub fn parse_oracle(src: &str) -> Result<OracleSpec, ParseError> {
    oracle_from(&parse_one(src)?)
}

pub fn print_oracle(spec: &OracleSpec) -> String {
    match spec {
        OracleSpec::Arithmetic => "(arithmetic)\n".into(),
        OracleSpec::Preorder(p) => {
            let elems: Vec<String> = p.elements().iter().map(|e| e.to_string()).collect();
            let pairs: Vec<String> = p.pairs().iter().map(|(a, b)| format!("({a} {b})")).collect();
            format!("(preorder (elems {}) (leq {}))\n", elems.join(" "), pairs.join(" "))
        }
    }
}
