//! Formula and numeral syntax, substitution, and the prime-level preorder
//! interface.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Variable and binder names.
pub type Var = Arc<str>;

pub fn var(name: &str) -> Var {
    Arc::from(name)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("free variable `{0}` in a term that must be closed")]
    FreeVariablePresent(Var),
    #[error("arithmetic overflow while evaluating a term")]
    Overflow,
    #[error("prime `{0}` has no arithmetic truth value")]
    NotArithmetic(String),
}

/// A natural number `>= 1`, written `1`, `1'`, `1''`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Numeral(u64);

impl Numeral {
    pub const ONE: Numeral = Numeral(1);

    pub fn new(value: u64) -> Option<Numeral> {
        (value >= 1).then_some(Numeral(value))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn succ(self) -> Numeral {
        Numeral(self.0 + 1)
    }

    /// Stroke notation: `1` followed by `value - 1` primes.
    pub fn render(self) -> String {
        let mut s = String::from("1");
        for _ in 1..self.0 {
            s.push('\'');
        }
        s
    }

    pub fn parse_strokes(s: &str) -> Option<Numeral> {
        let rest = s.strip_prefix('1')?;
        if !rest.chars().all(|c| c == '\'') {
            return None;
        }
        Some(Numeral(1 + rest.len() as u64))
    }
}

impl fmt::Display for Numeral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Arithmetic terms. A successor applied to a literal is folded into the
/// next literal, so `1'` and `2` are the same term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Num(Numeral),
    Var(Var),
    Succ(Box<Term>),
    Add(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
}

impl Term {
    pub fn num(value: u64) -> Term {
        Term::Num(Numeral::new(value).expect("numerals start at 1"))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(var(name))
    }

    pub fn succ(t: Term) -> Term {
        match t {
            Term::Num(n) => Term::Num(n.succ()),
            t => Term::Succ(Box::new(t)),
        }
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Term, b: Term) -> Term {
        Term::Mul(Box::new(a), Box::new(b))
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Term::Num(_) => true,
            Term::Var(_) => false,
            Term::Succ(t) => t.is_closed(),
            Term::Add(a, b) | Term::Mul(a, b) => a.is_closed() && b.is_closed(),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Num(_) => {}
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Succ(t) => t.collect_vars(out),
            Term::Add(a, b) | Term::Mul(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn mentions(&self, v: &str) -> bool {
        match self {
            Term::Num(_) => false,
            Term::Var(w) => &**w == v,
            Term::Succ(t) => t.mentions(v),
            Term::Add(a, b) | Term::Mul(a, b) => a.mentions(v) || b.mentions(v),
        }
    }

    pub fn subst(&self, v: &str, t: &Term) -> Term {
        match self {
            Term::Num(_) => self.clone(),
            Term::Var(w) if &**w == v => t.clone(),
            Term::Var(_) => self.clone(),
            Term::Succ(a) => Term::succ(a.subst(v, t)),
            Term::Add(a, b) => Term::add(a.subst(v, t), b.subst(v, t)),
            Term::Mul(a, b) => Term::mul(a.subst(v, t), b.subst(v, t)),
        }
    }

    pub fn eval(&self) -> Result<Numeral, TermError> {
        let value = match self {
            Term::Num(n) => n.0,
            Term::Var(v) => return Err(TermError::FreeVariablePresent(v.clone())),
            Term::Succ(t) => t.eval()?.0.checked_add(1).ok_or(TermError::Overflow)?,
            Term::Add(a, b) => a.eval()?.0.checked_add(b.eval()?.0).ok_or(TermError::Overflow)?,
            Term::Mul(a, b) => a.eval()?.0.checked_mul(b.eval()?.0).ok_or(TermError::Overflow)?,
        };
        Ok(Numeral(value))
    }

    /// Coefficients (lowest degree first) of the term as a polynomial in `v`.
    /// Any other variable makes the term non-polynomial in `v`.
    pub(crate) fn polynomial(&self, v: &str) -> Option<Vec<i128>> {
        fn trim(mut p: Vec<i128>) -> Vec<i128> {
            while p.len() > 1 && p.last() == Some(&0) {
                p.pop();
            }
            p
        }
        let p = match self {
            Term::Num(n) => vec![n.0 as i128],
            Term::Var(w) if &**w == v => vec![0, 1],
            Term::Var(_) => return None,
            Term::Succ(t) => {
                let mut p = t.polynomial(v)?;
                p[0] = p[0].checked_add(1)?;
                p
            }
            Term::Add(a, b) => {
                let (pa, pb) = (a.polynomial(v)?, b.polynomial(v)?);
                let mut out = vec![0i128; pa.len().max(pb.len())];
                for (i, c) in pa.iter().enumerate() {
                    out[i] = out[i].checked_add(*c)?;
                }
                for (i, c) in pb.iter().enumerate() {
                    out[i] = out[i].checked_add(*c)?;
                }
                out
            }
            Term::Mul(a, b) => {
                let (pa, pb) = (a.polynomial(v)?, b.polynomial(v)?);
                let mut out = vec![0i128; pa.len() + pb.len() - 1];
                for (i, x) in pa.iter().enumerate() {
                    for (j, y) in pb.iter().enumerate() {
                        out[i + j] = out[i + j].checked_add(x.checked_mul(*y)?)?;
                    }
                }
                out
            }
        };
        Some(trim(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pred {
    Eq,
    Le,
}

impl Pred {
    pub fn symbol(self) -> &'static str {
        match self {
            Pred::Eq => "=",
            Pred::Le => "<=",
        }
    }

    fn holds(self, a: u64, b: u64) -> bool {
        match self {
            Pred::Eq => a == b,
            Pred::Le => a <= b,
        }
    }
}

/// Prime formulas: either an arithmetic relation between terms, or a bare
/// named element of an abstract preordered carrier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrimeFormula {
    Rel(Pred, Term, Term),
    Atom(Var),
}

impl PrimeFormula {
    pub fn eq(a: Term, b: Term) -> PrimeFormula {
        PrimeFormula::Rel(Pred::Eq, a, b)
    }

    pub fn le(a: Term, b: Term) -> PrimeFormula {
        PrimeFormula::Rel(Pred::Le, a, b)
    }

    pub fn atom(name: &str) -> PrimeFormula {
        PrimeFormula::Atom(var(name))
    }

    pub fn is_closed(&self) -> bool {
        match self {
            PrimeFormula::Rel(_, a, b) => a.is_closed() && b.is_closed(),
            PrimeFormula::Atom(_) => true,
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        if let PrimeFormula::Rel(_, a, b) = self {
            a.collect_vars(out);
            b.collect_vars(out);
        }
    }

    pub fn subst(&self, v: &str, t: &Term) -> PrimeFormula {
        match self {
            PrimeFormula::Rel(p, a, b) => PrimeFormula::Rel(*p, a.subst(v, t), b.subst(v, t)),
            PrimeFormula::Atom(_) => self.clone(),
        }
    }

    fn mentions(&self, v: &str) -> bool {
        match self {
            PrimeFormula::Rel(_, a, b) => a.mentions(v) || b.mentions(v),
            PrimeFormula::Atom(_) => false,
        }
    }
}

/// Truth of a closed arithmetic prime.
pub fn eval_prime(p: &PrimeFormula) -> Result<bool, TermError> {
    match p {
        PrimeFormula::Rel(pred, a, b) => Ok(pred.holds(a.eval()?.0, b.eval()?.0)),
        PrimeFormula::Atom(name) => Err(TermError::NotArithmetic(name.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Prime(PrimeFormula),
    Meet(Box<Formula>, Box<Formula>),
    Neg(Box<Formula>),
    /// `(x) A(x)`: the meet of the family `A(1), A(1'), ...`.
    All(Var, Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Prime(PrimeFormula::atom(name))
    }

    pub fn meet(a: Formula, b: Formula) -> Formula {
        Formula::Meet(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Formula) -> Formula {
        Formula::Neg(Box::new(a))
    }

    pub fn all(binder: &str, body: Formula) -> Formula {
        Formula::All(var(binder), Box::new(body))
    }

    pub fn as_prime(&self) -> Option<&PrimeFormula> {
        match self {
            Formula::Prime(p) => Some(p),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    pub fn collect_free(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::Prime(p) => p.collect_vars(out),
            Formula::Meet(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Formula::Neg(a) => a.collect_free(out),
            Formula::All(x, body) => {
                let mut inner = BTreeSet::new();
                body.collect_free(&mut inner);
                inner.remove(x);
                out.extend(inner);
            }
        }
    }

    /// Every variable name, free or bound.
    pub fn collect_names(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::Prime(p) => p.collect_vars(out),
            Formula::Meet(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
            Formula::Neg(a) => a.collect_names(out),
            Formula::All(x, body) => {
                out.insert(x.clone());
                body.collect_names(out);
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn has_free(&self, v: &str) -> bool {
        match self {
            Formula::Prime(p) => p.mentions(v),
            Formula::Meet(a, b) => a.has_free(v) || b.has_free(v),
            Formula::Neg(a) => a.has_free(v),
            Formula::All(x, body) => &**x != v && body.has_free(v),
        }
    }

    /// Replaces free occurrences of `v` by `t`. Returns `None` if a variable
    /// of `t` would be captured by a binder.
    pub fn try_subst(&self, v: &str, t: &Term) -> Option<Formula> {
        Some(match self {
            Formula::Prime(p) => Formula::Prime(p.subst(v, t)),
            Formula::Meet(a, b) => Formula::meet(a.try_subst(v, t)?, b.try_subst(v, t)?),
            Formula::Neg(a) => Formula::neg(a.try_subst(v, t)?),
            Formula::All(x, body) => {
                if &**x == v || !body.has_free(v) {
                    self.clone()
                } else if t.mentions(x) {
                    return None;
                } else {
                    Formula::All(x.clone(), Box::new(body.try_subst(v, t)?))
                }
            }
        })
    }

    /// Substitution of a term that cannot be captured (closed, or a name
    /// known not to be bound in `self`).
    pub fn subst(&self, v: &str, t: &Term) -> Formula {
        self.try_subst(v, t).expect("substituted term captured by a binder")
    }

    /// Member `n` of an `All` family; `None` for other shapes.
    pub fn instance(&self, t: &Term) -> Option<Formula> {
        match self {
            Formula::All(x, body) => body.try_subst(x, t),
            _ => None,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Prime(_) => 0,
            Formula::Meet(a, b) => 1 + a.depth().max(b.depth()),
            Formula::Neg(a) | Formula::All(_, a) => 1 + a.depth(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Prime(_) => 1,
            Formula::Meet(a, b) => 1 + a.size() + b.size(),
            Formula::Neg(a) | Formula::All(_, a) => 1 + a.size(),
        }
    }
}

/// Substitution of a closed term for a free variable.
pub fn substitute(f: &Formula, v: &str, t: &Term) -> Result<Formula, TermError> {
    let mut vars = BTreeSet::new();
    t.collect_vars(&mut vars);
    if let Some(w) = vars.into_iter().next() {
        return Err(TermError::FreeVariablePresent(w));
    }
    Ok(f.subst(v, t))
}

/// `antecedent -> succedent`; the antecedent list is read as a meet, an
/// absent succedent as the empty right-hand side.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sequent {
    pub ante: Vec<Formula>,
    pub succ: Option<Formula>,
}

impl Sequent {
    pub fn new(ante: Vec<Formula>, succ: Option<Formula>) -> Sequent {
        Sequent { ante, succ }
    }

    pub fn empty() -> Sequent {
        Sequent::new(Vec::new(), None)
    }

    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.ante.iter().chain(self.succ.iter())
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for f in self.formulas() {
            f.collect_free(&mut out);
        }
        out
    }

    pub fn has_free(&self, v: &str) -> bool {
        self.formulas().any(|f| f.has_free(v))
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn try_subst(&self, v: &str, t: &Term) -> Option<Sequent> {
        Some(Sequent {
            ante: self.ante.iter().map(|f| f.try_subst(v, t)).collect::<Option<_>>()?,
            succ: match &self.succ {
                Some(f) => Some(f.try_subst(v, t)?),
                None => None,
            },
        })
    }

    pub fn subst(&self, v: &str, t: &Term) -> Sequent {
        self.try_subst(v, t).expect("substituted term captured by a binder")
    }

    /// Shape test for basic relations: at most one antecedent formula and
    /// every formula prime.
    pub fn prime_shape(&self) -> Option<(Option<&PrimeFormula>, Option<&PrimeFormula>)> {
        if self.ante.len() > 1 {
            return None;
        }
        let left = match self.ante.first() {
            Some(f) => Some(f.as_prime()?),
            None => None,
        };
        let right = match &self.succ {
            Some(f) => Some(f.as_prime()?),
            None => None,
        };
        Some((left, right))
    }
}

/// A parameter of an enclosing ω-branch together with the indices handled
/// by that branch's exception table (the body need not hold there).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScopeEntry {
    pub param: Var,
    pub excluded: BTreeSet<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("cannot decide the basic schema {0}")]
    Undecided(String),
}

/// Decides the basic relations among prime formulas.
pub trait PreorderOracle: Send + Sync {
    /// Defined on sequents of prime shape whose formulas are closed.
    fn basic(&self, s: &Sequent) -> bool;

    /// Basic relation for every admissible value of the in-scope parameters
    /// occurring in `s`.
    fn basic_schema(&self, s: &Sequent, scope: &[ScopeEntry]) -> Result<bool, SchemaError> {
        let _ = scope;
        if s.is_closed() {
            Ok(self.basic(s))
        } else {
            Err(SchemaError::Undecided(format!("{s:?}")))
        }
    }

    /// Prime formulas the oracle knows about, when it is finite.
    fn carrier(&self) -> Option<Vec<PrimeFormula>> {
        None
    }
}

/// Primes ordered by material implication, with `-> P` and `P ->` basic
/// according to the truth of `P`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ArithmeticOracle;

pub fn arithmetic_oracle() -> ArithmeticOracle {
    ArithmeticOracle
}

impl ArithmeticOracle {
    fn truth(p: Option<&PrimeFormula>) -> Option<Option<bool>> {
        match p {
            None => Some(None),
            Some(p) => eval_prime(p).ok().map(Some),
        }
    }
}

impl PreorderOracle for ArithmeticOracle {
    fn basic(&self, s: &Sequent) -> bool {
        let Some((l, r)) = s.prime_shape() else {
            return false;
        };
        let (Some(l), Some(r)) = (Self::truth(l), Self::truth(r)) else {
            return false;
        };
        match (l, r) {
            (Some(a), Some(b)) => !a || b,
            (None, Some(b)) => b,
            (Some(a), None) => !a,
            (None, None) => false,
        }
    }

    fn basic_schema(&self, s: &Sequent, scope: &[ScopeEntry]) -> Result<bool, SchemaError> {
        let undecided = || SchemaError::Undecided(format!("{s:?}"));
        let Some((l, r)) = s.prime_shape() else {
            return Ok(false);
        };
        let free = s.free_vars();
        if free.is_empty() {
            return Ok(self.basic(s));
        }
        // p -> p holds at every instance where p has a truth value.
        if let (Some(PrimeFormula::Rel(..)), Some(_)) = (l, r) {
            if l == r {
                return Ok(true);
            }
        }
        if free.len() > 1 {
            return Err(undecided());
        }
        let v = free.into_iter().next().unwrap();
        let entry = scope.iter().find(|e| e.param == v).ok_or_else(undecided)?;
        let mut bound: i128 = 1;
        for p in l.into_iter().chain(r) {
            if let PrimeFormula::Rel(_, a, b) = p {
                let (pa, pb) = (a.polynomial(&v).ok_or_else(undecided)?, b.polynomial(&v).ok_or_else(undecided)?);
                let mut diff = vec![0i128; pa.len().max(pb.len())];
                for (i, c) in pa.iter().enumerate() {
                    diff[i] += c;
                }
                for (i, c) in pb.iter().enumerate() {
                    diff[i] -= c;
                }
                while diff.len() > 1 && diff.last() == Some(&0) {
                    diff.pop();
                }
                if diff.len() > 1 {
                    // Every real root lies below 1 + max |a_i / a_lead|.
                    let lead = diff.last().unwrap().abs();
                    let max = diff[..diff.len() - 1].iter().map(|c| c.abs()).max().unwrap_or(0);
                    bound = bound.max(2 + max / lead);
                }
            }
        }
        const LIMIT: i128 = 100_000;
        if bound > LIMIT {
            return Err(undecided());
        }
        let top = entry.excluded.iter().next_back().map_or(0, |&m| m as i128);
        let last = bound.max(top + 1);
        if last > LIMIT + entry.excluded.len() as i128 {
            return Err(undecided());
        }
        for n in 1..=last as u64 {
            if entry.excluded.contains(&n) {
                continue;
            }
            if !self.basic(&s.subst(&v, &Term::num(n))) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// A finite preorder on named atoms: the reflexive-transitive closure of
/// the given pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePreorder {
    elements: Vec<Var>,
    index: BTreeMap<Var, usize>,
    leq: Vec<Vec<bool>>,
}

pub fn finite_preorder(elements: &[&str], pairs: &[(&str, &str)]) -> FinitePreorder {
    FinitePreorder::new(
        elements.iter().map(|e| var(e)).collect(),
        pairs.iter().map(|(a, b)| (var(a), var(b))).collect(),
    )
}

impl FinitePreorder {
    /// Pairs naming unknown elements extend the carrier.
    pub fn new(mut elements: Vec<Var>, pairs: Vec<(Var, Var)>) -> FinitePreorder {
        for (a, b) in &pairs {
            for x in [a, b] {
                if !elements.contains(x) {
                    elements.push(x.clone());
                }
            }
        }
        let index: BTreeMap<Var, usize> = elements.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let n = elements.len();
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for (a, b) in &pairs {
            leq[index[a]][index[b]] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    for j in 0..n {
                        if leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }
        FinitePreorder { elements, index, leq }
    }

    /// Builds from a full relation matrix, taking its closure.
    pub fn from_matrix(elements: Vec<Var>, matrix: &[Vec<bool>]) -> FinitePreorder {
        let mut pairs = Vec::new();
        for (i, row) in matrix.iter().enumerate() {
            for (j, &b) in row.iter().enumerate() {
                if b {
                    pairs.push((elements[i].clone(), elements[j].clone()));
                }
            }
        }
        FinitePreorder::new(elements, pairs)
    }

    pub fn elements(&self) -> &[Var] {
        &self.elements
    }

    pub fn leq(&self, a: &str, b: &str) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.leq[i][j],
            _ => false,
        }
    }

    /// Non-reflexive pairs of the closure, in carrier order.
    pub fn pairs(&self) -> Vec<(Var, Var)> {
        let mut out = Vec::new();
        for (i, a) in self.elements.iter().enumerate() {
            for (j, b) in self.elements.iter().enumerate() {
                if i != j && self.leq[i][j] {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        out
    }
}

impl PreorderOracle for FinitePreorder {
    fn basic(&self, s: &Sequent) -> bool {
        match s.prime_shape() {
            Some((Some(PrimeFormula::Atom(a)), Some(PrimeFormula::Atom(b)))) => self.leq(a, b),
            _ => false,
        }
    }

    fn carrier(&self) -> Option<Vec<PrimeFormula>> {
        Some(self.elements.iter().map(|e| PrimeFormula::Atom(e.clone())).collect())
    }
}

impl<T: PreorderOracle + ?Sized> PreorderOracle for &T {
    fn basic(&self, s: &Sequent) -> bool {
        (**self).basic(s)
    }
    fn basic_schema(&self, s: &Sequent, scope: &[ScopeEntry]) -> Result<bool, SchemaError> {
        (**self).basic_schema(s, scope)
    }
    fn carrier(&self) -> Option<Vec<PrimeFormula>> {
        (**self).carrier()
    }
}

impl<T: PreorderOracle + ?Sized> PreorderOracle for Box<T> {
    fn basic(&self, s: &Sequent) -> bool {
        (**self).basic(s)
    }
    fn basic_schema(&self, s: &Sequent, scope: &[ScopeEntry]) -> Result<bool, SchemaError> {
        (**self).basic_schema(s, scope)
    }
    fn carrier(&self) -> Option<Vec<PrimeFormula>> {
        (**self).carrier()
    }
}

/// A name not in `taken`, derived from `base` by appending primes.
pub fn fresh_name(base: &str, taken: &BTreeSet<Var>) -> Var {
    let mut name = base.to_string();
    while taken.iter().any(|t| **t == *name) {
        name.push('\'');
    }
    var(&name)
}
