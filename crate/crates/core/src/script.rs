//! Reading proof files and proof scripts. A script may use the admissible
//! tags `k l m n o p q refl dne` besides the primitive rules; compiling it
//! runs the corresponding transformers, so the result is primitive.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::admissible::{
    cut, derive_complete_induction, derive_dne, invert_meet_right, invert_neg, invert_omega, refl, substitute_freevar,
    Side,
};
use crate::derivation::{
    mk_a, mk_b, mk_basic, mk_c_as, mk_d, mk_e, mk_f, mk_g, mk_h, mk_i, mk_j, BranchBody, Derivation, InductionRecipe,
    OmegaBranch,
};
use crate::error::{NodePath, PathStep, ProofError};
use crate::sexpr::{parse_one, ParseError, Sexp};
use crate::syntax::{formula_from, ident, numeral, opt_formula_from, sequent_from, term_from, usize_atom};
use crate::terms::PreorderOracle;

pub const ADMISSIBLE_TAGS: &[&str] = &["k", "l", "m", "n", "o", "p", "q", "refl", "dne"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Proof(#[from] ProofError),
}

/// Reads `(proof D)` with primitive rules only.
pub fn parse_proof(src: &str) -> Result<Derivation, ScriptError> {
    let s = parse_one(src)?;
    let body = file_body(&s, &["proof"])?;
    Reader { oracle: None }.derivation(body, &NodePath::default())
}

/// Reads `(script D)` or `(proof D)` and compiles admissible tags away.
pub fn compile_script(src: &str, oracle: &dyn PreorderOracle) -> Result<Derivation, ScriptError> {
    let s = parse_one(src)?;
    let body = file_body(&s, &["script", "proof"])?;
    Reader { oracle: Some(oracle) }.derivation(body, &NodePath::default())
}

fn file_body<'a>(s: &'a Sexp, heads: &[&str]) -> Result<&'a Sexp, ParseError> {
    match s.as_form() {
        Some((head, [body])) if heads.contains(&head) => Ok(body),
        _ => Err(s.error(format!("expected ({} D)", heads.join(" | ")))),
    }
}

struct Reader<'a> {
    /// Present when admissible tags are allowed.
    oracle: Option<&'a dyn PreorderOracle>,
}

fn at(path: &NodePath, e: ProofError) -> ProofError {
    match e {
        ProofError::RuleMismatch { path: p, expected, found } if p.0.is_empty() => {
            ProofError::RuleMismatch { path: path.clone(), expected, found }
        }
        ProofError::ParameterEscape { path: p, param } if p.0.is_empty() => {
            ProofError::ParameterEscape { path: path.clone(), param }
        }
        other => other,
    }
}

impl Reader<'_> {
    fn derivation(&self, s: &Sexp, path: &NodePath) -> Result<Derivation, ScriptError> {
        let (tag, args) = s.as_form().ok_or_else(|| s.error("expected a rule application"))?;
        let argc = |n: usize| -> Result<(), ParseError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(s.error(format!("rule {tag} takes {n} arguments, found {}", args.len())))
            }
        };
        let sub = |i: usize, e: &Sexp| self.derivation(e, &path.child(PathStep::Premiss(i)));
        if ADMISSIBLE_TAGS.contains(&tag) && self.oracle.is_none() {
            return Err(s.error(format!("admissible rule {tag} in a proof file; use a script")).into());
        }
        let built: Result<Derivation, ProofError> = match tag {
            "basic" => {
                argc(1)?;
                mk_basic(sequent_from(&args[0])?)
            }
            "a" => {
                argc(2)?;
                mk_a(sub(0, &args[0])?, sub(1, &args[1])?)
            }
            "b" => {
                argc(1)?;
                mk_b(sub(0, &args[0])?)
            }
            "c" => {
                if args.len() != 3 && args.len() != 4 {
                    return Err(s.error("rule c takes PARAM BODY (EXC...) [BINDER]").into());
                }
                let branch = self.branch(&args[0], &args[1], &args[2], path)?;
                let binder = match args.get(3) {
                    Some(b) => ident(b)?,
                    None => branch.param.clone(),
                };
                mk_c_as(binder, branch)
            }
            "j" => {
                argc(3)?;
                mk_j(self.branch(&args[0], &args[1], &args[2], path)?)
            }
            "d" => {
                argc(3)?;
                mk_d(formula_from(&args[0])?, usize_atom(&args[1])?, sub(0, &args[2])?)
            }
            "e" => {
                argc(2)?;
                mk_e(opt_formula_from(&args[0])?, sub(0, &args[1])?)
            }
            "f" => {
                argc(3)?;
                mk_f(term_from(&args[0])?, formula_from(&args[1])?, sub(0, &args[2])?)
            }
            "g" | "h" | "i" => {
                argc(2)?;
                let pos = usize_atom(&args[0])?;
                let p = sub(0, &args[1])?;
                match tag {
                    "g" => mk_g(pos, p),
                    "h" => mk_h(pos, p),
                    _ => mk_i(pos, p),
                }
            }
            "k" => {
                argc(2)?;
                cut(&sub(0, &args[0])?, &sub(1, &args[1])?)
            }
            "l" | "m" => {
                argc(1)?;
                let side = if tag == "l" { Side::Left } else { Side::Right };
                invert_meet_right(&sub(0, &args[0])?, side)
            }
            "n" => {
                argc(1)?;
                invert_neg(&sub(0, &args[0])?)
            }
            "o" => {
                argc(2)?;
                invert_omega(&sub(0, &args[1])?, numeral(&args[0])?)
            }
            "p" => {
                argc(3)?;
                substitute_freevar(&sub(0, &args[2])?, &ident(&args[0])?, numeral(&args[1])?)
            }
            "q" => {
                if args.len() != 2 && args.len() != 3 {
                    return Err(s.error("rule q takes VAR D [RESULT]").into());
                }
                let v = ident(&args[0])?;
                let result = match args.get(2) {
                    Some(r) => ident(r)?,
                    None => v.clone(),
                };
                derive_complete_induction(&sub(0, &args[1])?, &v, &result)
            }
            "refl" => {
                argc(1)?;
                Ok(refl(&formula_from(&args[0])?))
            }
            "dne" => {
                argc(1)?;
                derive_dne(&formula_from(&args[0])?, self.oracle.expect("scripts carry an oracle"))
            }
            other => return Err(s.error(format!("unknown rule {other}")).into()),
        };
        built.map_err(|e| at(path, e).into())
    }

    fn branch(&self, param: &Sexp, body: &Sexp, excs: &Sexp, path: &NodePath) -> Result<OmegaBranch, ScriptError> {
        let param = ident(param)?;
        let bpath = path.child(PathStep::Body);
        let body = match body.as_form() {
            Some(("induct", [v, step])) => BranchBody::Induction(InductionRecipe {
                var: ident(v)?,
                step: Box::new(self.derivation(step, &bpath.child(PathStep::Premiss(0)))?),
            }),
            _ => BranchBody::Parametric(Box::new(self.derivation(body, &bpath)?)),
        };
        let list = excs.as_list().ok_or_else(|| excs.error("expected an exception list"))?;
        let mut exceptions = BTreeMap::new();
        for e in list {
            match e.as_list() {
                Some([n, d]) => {
                    let n = numeral(n)?;
                    let d = self.derivation(d, &path.child(PathStep::Exception(n.value())))?;
                    if exceptions.insert(n, d).is_some() {
                        return Err(e.error(format!("duplicate exception {n}")).into());
                    }
                }
                _ => return Err(e.error("expected (N D)").into()),
            }
        }
        Ok(OmegaBranch { param, body, exceptions })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::check;
    use crate::syntax::print_proof_file;
    use crate::terms::{arithmetic_oracle, finite_preorder};

    #[test]
    fn proof_files_round_trip() {
        let o = arithmetic_oracle();
        let src = "(script (k (refl (all x (prime (= x x)))) (dne (all x (prime (= x x))))))";
        let err = compile_script(src, &o).unwrap_err();
        assert!(matches!(err, ScriptError::Proof(ProofError::ConclusionMismatch(_))));
        let src = "(script (q a (basic (seq ((prime (<= 1 a))) (prime (<= 1 (s a)))))))";
        let d = compile_script(src, &o).unwrap();
        assert_eq!(d.conclusion.to_string(), "(seq ((prime (<= 1 1))) (prime (<= 1 a)))");
        check(&d, &o).unwrap();
        let d = compile_script("(script (dne (neg (all x (prime (= x 2))))))", &o).unwrap();
        check(&d, &o).unwrap();
        let text = print_proof_file(&d);
        assert_eq!(parse_proof(&text).unwrap(), d);
    }

    #[test]
    fn admissible_tags_are_rejected_in_proof_files() {
        assert!(matches!(parse_proof("(proof (refl p))"), Err(ScriptError::Parse(_))));
        assert!(matches!(parse_proof(""), Err(ScriptError::Parse(_))));
    }

    #[test]
    fn bad_nodes_report_their_path() {
        let src = "(proof (b (a (basic (seq (p) q)) (basic (seq (q) q)))))";
        match parse_proof(src) {
            Err(ScriptError::Proof(ProofError::RuleMismatch { path, .. })) => assert_eq!(path.to_string(), "root/0"),
            other => panic!("{other:?}"),
        }
        let o = finite_preorder(&["p", "q"], &[("p", "q")]);
        let d = compile_script("(script (k (basic (seq (p) q)) (refl q)))", &o).unwrap();
        assert_eq!(d.conclusion.to_string(), "(seq (p) q)");
        check(&d, &o).unwrap();
    }
}
