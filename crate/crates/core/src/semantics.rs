//! Evaluation of closed formulas into finite pseudocomplemented
//! semilattices, and the soundness check over derivations.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::derivation::{BranchBody, Derivation, Node};
use crate::sexpr::{parse_one, ParseError, Sexp};
use crate::syntax::formula_from;
use crate::terms::{eval_prime, var, FinitePreorder, Formula, PreorderOracle, PrimeFormula, Sequent, Term, Var};

/// Extra instances past a declared bound that must agree with it.
pub const AUDIT_WINDOW: u64 = 5;

/// Largest stabilization index tried when no bound is declared.
pub const AUTO_BOUND_LIMIT: u64 = 64;

/// Instances of each ω-branch visited by [`soundness_check`], besides the
/// listed exceptions.
pub const SOUNDNESS_WINDOW: u64 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("family of {formula} does not stabilize at {index}")]
    BoundViolated { formula: String, index: u64 },
    #[error("prime {0} has no assigned element")]
    UnassignedPrime(String),
    #[error("formula is not closed: {0}")]
    NotClosed(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("cannot instantiate an ω-branch: {0}")]
    Branch(String),
}

/// A finite preorder with meets, a pseudocomplement and extremal elements,
/// together with an assignment of prime formulas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    order: FinitePreorder,
    meet: Vec<Vec<usize>>,
    neg: Vec<usize>,
    bottom: usize,
    top: usize,
    assign: BTreeMap<PrimeFormula, usize>,
    /// Arithmetic primes not in `assign` go to the top when true and to
    /// the bottom when false.
    truth: bool,
}

impl Model {
    /// Derives meet and negation from the order, rejecting orders without
    /// them.
    pub fn new(order: FinitePreorder) -> Result<Model, SemanticsError> {
        let n = order.elements().len();
        if n == 0 {
            return Err(SemanticsError::InvalidModel("empty carrier".into()));
        }
        let le = |i: usize, j: usize| order.leq(&order.elements()[i], &order.elements()[j]);
        let bottom = (0..n)
            .find(|&b| (0..n).all(|x| le(b, x)))
            .ok_or_else(|| SemanticsError::InvalidModel("no least element".into()))?;
        let top = (0..n)
            .find(|&t| (0..n).all(|x| le(x, t)))
            .ok_or_else(|| SemanticsError::InvalidModel("no greatest element".into()))?;
        let mut meet = vec![vec![0; n]; n];
        for a in 0..n {
            for b in 0..n {
                let lower: Vec<usize> = (0..n).filter(|&x| le(x, a) && le(x, b)).collect();
                let glb = lower.iter().copied().find(|&g| lower.iter().all(|&x| le(x, g))).ok_or_else(|| {
                    SemanticsError::InvalidModel(format!(
                        "no meet of {} and {}",
                        order.elements()[a],
                        order.elements()[b]
                    ))
                })?;
                meet[a][b] = glb;
            }
        }
        let mut neg = vec![0; n];
        for a in 0..n {
            let disjoint: Vec<usize> = (0..n).filter(|&x| le(meet[a][x], bottom)).collect();
            let greatest = disjoint.iter().copied().find(|&g| disjoint.iter().all(|&x| le(x, g))).ok_or_else(|| {
                SemanticsError::InvalidModel(format!("no pseudocomplement of {}", order.elements()[a]))
            })?;
            neg[a] = greatest;
        }
        let model = Model { order, meet, neg, bottom, top, assign: BTreeMap::new(), truth: false };
        if !model.pseudocomplement_law_holds() {
            return Err(SemanticsError::InvalidModel("pseudocomplement law fails".into()));
        }
        Ok(model)
    }

    pub fn with_assignment(mut self, p: PrimeFormula, element: &str) -> Result<Model, SemanticsError> {
        let i =
            self.index(element).ok_or_else(|| SemanticsError::InvalidModel(format!("unknown element {element}")))?;
        self.assign.insert(p, i);
        Ok(self)
    }

    pub fn with_truth(mut self, truth: bool) -> Model {
        self.truth = truth;
        self
    }

    pub fn elements(&self) -> &[Var] {
        self.order.elements()
    }

    pub fn order(&self) -> &FinitePreorder {
        &self.order
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.elements().iter().position(|e| **e == *name)
    }

    pub fn name(&self, i: usize) -> &str {
        &self.elements()[i]
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.order.leq(&self.elements()[a], &self.elements()[b])
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.meet[a][b]
    }

    pub fn neg(&self, a: usize) -> usize {
        self.neg[a]
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn assignment(&self) -> &BTreeMap<PrimeFormula, usize> {
        &self.assign
    }

    pub fn truth(&self) -> bool {
        self.truth
    }

    /// `a & x <= bottom` iff `x <= ~a`, for every pair.
    pub fn pseudocomplement_law_holds(&self) -> bool {
        let n = self.elements().len();
        (0..n).all(|a| (0..n).all(|x| self.leq(self.meet(a, x), self.bottom) == self.leq(x, self.neg(a))))
    }

    fn prime(&self, p: &PrimeFormula) -> Result<usize, SemanticsError> {
        if let Some(&i) = self.assign.get(p) {
            return Ok(i);
        }
        if self.truth {
            if let Ok(b) = eval_prime(p) {
                return Ok(if b { self.top } else { self.bottom });
            }
        }
        Err(SemanticsError::UnassignedPrime(p.to_string()))
    }

    /// The assignment respects the basic relations of `oracle` among the
    /// primes it assigns.
    pub fn compatible_with(&self, oracle: &dyn PreorderOracle) -> bool {
        let primes: Vec<(&PrimeFormula, usize)> = self.assign.iter().map(|(p, i)| (p, *i)).collect();
        let prime = |p: &PrimeFormula| Formula::Prime(p.clone());
        for &(p, i) in &primes {
            if oracle.basic(&Sequent::new(vec![], Some(prime(p)))) && !self.leq(self.top, i) {
                return false;
            }
            if oracle.basic(&Sequent::new(vec![prime(p)], None)) && !self.leq(i, self.bottom) {
                return false;
            }
            for &(q, j) in &primes {
                if oracle.basic(&Sequent::new(vec![prime(p)], Some(prime(q)))) && !self.leq(i, j) {
                    return false;
                }
            }
        }
        true
    }
}

/// Stabilization indices for ω-meets. Families without a declared bound get
/// the least index up to [`AUTO_BOUND_LIMIT`] that passes the audit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bounds {
    pub declared: BTreeMap<Formula, u64>,
}

impl Bounds {
    pub fn auto() -> Bounds {
        Bounds::default()
    }

    pub fn uniform_for(formulas: &[Formula], index: u64) -> Bounds {
        Bounds { declared: formulas.iter().map(|f| (f.clone(), index)).collect() }
    }

    pub fn declare(mut self, all: Formula, index: u64) -> Bounds {
        self.declared.insert(all, index);
        self
    }
}

/// Value of a closed formula.
pub fn eval(f: &Formula, m: &Model, bounds: &Bounds) -> Result<usize, SemanticsError> {
    match f {
        Formula::Prime(p) => {
            if !p.is_closed() {
                return Err(SemanticsError::NotClosed(f.to_string()));
            }
            m.prime(p)
        }
        Formula::Meet(a, b) => Ok(m.meet(eval(a, m, bounds)?, eval(b, m, bounds)?)),
        Formula::Neg(a) => Ok(m.neg(eval(a, m, bounds)?)),
        Formula::All(..) => {
            if !f.is_closed() {
                return Err(SemanticsError::NotClosed(f.to_string()));
            }
            let member = |n: u64| eval(&f.instance(&Term::num(n)).expect("an ω-meet"), m, bounds);
            let audit = |index: u64| -> Result<bool, SemanticsError> {
                let at = member(index)?;
                for k in index + 1..=index + AUDIT_WINDOW {
                    if member(k)? != at {
                        return Ok(false);
                    }
                }
                Ok(true)
            };
            let index = match bounds.declared.get(f) {
                Some(&index) => {
                    if !audit(index.max(1))? {
                        return Err(SemanticsError::BoundViolated { formula: f.to_string(), index });
                    }
                    index.max(1)
                }
                None => {
                    let mut found = None;
                    for index in 1..=AUTO_BOUND_LIMIT {
                        if audit(index)? {
                            found = Some(index);
                            break;
                        }
                    }
                    found.ok_or_else(|| SemanticsError::BoundViolated {
                        formula: f.to_string(),
                        index: AUTO_BOUND_LIMIT,
                    })?
                }
            };
            let mut acc = m.top();
            for n in 1..=index {
                acc = m.meet(acc, member(n)?);
            }
            Ok(acc)
        }
    }
}

/// Whether the meet of the antecedent lies below the succedent.
pub fn sequent_holds(s: &Sequent, m: &Model, bounds: &Bounds) -> Result<bool, SemanticsError> {
    let mut left = m.top();
    for f in &s.ante {
        left = m.meet(left, eval(f, m, bounds)?);
    }
    let right = match &s.succ {
        Some(f) => eval(f, m, bounds)?,
        None => m.bottom(),
    };
    Ok(m.leq(left, right))
}

/// Evaluates every closed conclusion in `d`, visiting ω-branches at indices
/// `1..=SOUNDNESS_WINDOW` and at every exception.
pub fn soundness_check(d: &Derivation, m: &Model, bounds: &Bounds) -> Result<bool, SemanticsError> {
    if d.conclusion.is_closed() && !sequent_holds(&d.conclusion, m, bounds)? {
        return Ok(false);
    }
    match &d.node {
        Node::Basic => Ok(true),
        Node::A(l, r) => Ok(soundness_check(l, m, bounds)? && soundness_check(r, m, bounds)?),
        Node::C { branch, .. } | Node::J(branch) => {
            let mut indices: Vec<u64> = (1..=SOUNDNESS_WINDOW).collect();
            indices.extend(branch.exceptions.keys().map(|n| n.value()));
            indices.sort_unstable();
            indices.dedup();
            for n in indices {
                let inst = branch
                    .instantiate(crate::terms::Numeral::new(n).unwrap())
                    .map_err(|e| SemanticsError::Branch(e.to_string()))?;
                if !soundness_check(&inst, m, bounds)? {
                    return Ok(false);
                }
            }
            if let BranchBody::Induction(recipe) = &branch.body {
                return soundness_check(
                    &recipe
                        .step
                        .subst(&recipe.var, &Term::num(1))
                        .map_err(|e| SemanticsError::Branch(e.to_string()))?,
                    m,
                    bounds,
                );
            }
            Ok(true)
        }
        _ => soundness_check(d.premiss().expect("single premiss"), m, bounds),
    }
}

/// The two-element and four-element Boolean algebras and the three-element
/// chain, with arithmetic primes read by truth.
pub fn standard_models() -> Vec<Model> {
    let bool2 = FinitePreorder::new(vec![var("0"), var("1")], vec![(var("0"), var("1"))]);
    let bool4 = FinitePreorder::new(
        vec![var("0"), var("a"), var("b"), var("1")],
        vec![(var("0"), var("a")), (var("0"), var("b")), (var("a"), var("1")), (var("b"), var("1"))],
    );
    let chain3 =
        FinitePreorder::new(vec![var("0"), var("m"), var("1")], vec![(var("0"), var("m")), (var("m"), var("1"))]);
    [bool2, bool4, chain3]
        .into_iter()
        .map(|o| Model::new(o).expect("standard models are valid").with_truth(true))
        .collect()
}

/// Assignments of `primes` into `m` that respect `oracle`, in lexicographic
/// order, at most `limit` of them.
pub fn compatible_assignments(
    m: &Model,
    primes: &[PrimeFormula],
    oracle: &dyn PreorderOracle,
    limit: usize,
) -> Vec<Model> {
    let n = m.elements().len();
    let mut out = Vec::new();
    let mut choice = vec![0usize; primes.len()];
    loop {
        let mut candidate = m.clone();
        for (p, &i) in primes.iter().zip(&choice) {
            candidate.assign.insert(p.clone(), i);
        }
        if candidate.compatible_with(oracle) {
            out.push(candidate);
            if out.len() >= limit {
                return out;
            }
        }
        let mut k = 0;
        loop {
            if k == choice.len() {
                return out;
            }
            choice[k] += 1;
            if choice[k] < n {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Model files.

/// A model element name: any atom.
fn element(s: &Sexp) -> Result<Var, ParseError> {
    s.as_atom().map(var).ok_or_else(|| s.error("expected an element name"))
}

pub fn model_from(s: &Sexp) -> Result<Model, ParseError> {
    let Some(("model", args)) = s.as_form() else {
        return Err(s.error("expected (model (elems ...) (leq ...) (assign ...))"));
    };
    let mut elems = Vec::new();
    let mut pairs = Vec::new();
    let mut assign = Vec::new();
    let mut truth = false;
    for part in args {
        match part.as_form() {
            Some(("elems", xs)) => {
                for x in xs {
                    elems.push(element(x)?);
                }
            }
            Some(("leq", xs)) => {
                for x in xs {
                    match x.as_list() {
                        Some([a, b]) => pairs.push((element(a)?, element(b)?)),
                        _ => return Err(x.error("expected (a b)")),
                    }
                }
            }
            Some(("assign", xs)) => {
                for x in xs {
                    match x.as_list() {
                        Some([p, e]) => {
                            let Formula::Prime(p) = formula_from(p)? else {
                                return Err(p.error("expected a prime formula"));
                            };
                            assign.push((p, element(e)?, e.clone()));
                        }
                        _ => return Err(x.error("expected (prime element)")),
                    }
                }
            }
            Some(("truth", [])) => truth = true,
            _ => return Err(part.error("expected elems, leq, assign or (truth)")),
        }
    }
    for (a, b) in &pairs {
        for x in [a, b] {
            if !elems.contains(x) {
                return Err(s.error(format!("unknown element {x}")));
            }
        }
    }
    let mut model = Model::new(FinitePreorder::new(elems, pairs)).map_err(|e| s.error(e.to_string()))?;
    for (p, e, at) in assign {
        model = model.with_assignment(p, &e).map_err(|err| at.error(err.to_string()))?;
    }
    Ok(model.with_truth(truth))
}

pub fn parse_model(src: &str) -> Result<Model, ParseError> {
    model_from(&parse_one(src)?)
}

pub fn print_model(m: &Model) -> String {
    let elems: Vec<&str> = m.elements().iter().map(|e| &**e).collect();
    let leq: Vec<String> = m.order.pairs().iter().map(|(a, b)| format!("({a} {b})")).collect();
    let assign: Vec<String> =
        m.assign.iter().map(|(p, i)| format!("({} {})", Formula::Prime(p.clone()), m.name(*i))).collect();
    let mut out =
        format!("(model\n  (elems {})\n  (leq {})\n  (assign {})", elems.join(" "), leq.join(" "), assign.join(" "));
    if m.truth {
        out.push_str("\n  (truth)");
    }
    out.push_str(")\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissible::refl;
    use crate::syntax::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn standard_model_tables() {
        let [b2, b4, c3] = <[Model; 3]>::try_from(standard_models()).unwrap();
        assert_eq!(b2.name(b2.neg(b2.bottom())), "1");
        let m = c3.index("m").unwrap();
        assert_eq!(c3.name(c3.neg(m)), "0");
        let (a, b) = (b4.index("a").unwrap(), b4.index("b").unwrap());
        assert_eq!(b4.name(b4.meet(a, b)), "0");
        assert_eq!(b4.name(b4.neg(a)), "b");
        for m in [&b2, &b4, &c3] {
            assert!(m.pseudocomplement_law_holds());
        }
    }

    #[test]
    fn eval_examples() {
        let m = standard_models().remove(0);
        let b = Bounds::auto();
        assert_eq!(m.name(eval(&f("(neg (prime (= 1 1)))"), &m, &b).unwrap()), "0");
        let p = f("(prime (= 1 1))");
        assert_eq!(eval(&Formula::meet(p.clone(), p.clone()), &m, &b).unwrap(), eval(&p, &m, &b).unwrap());
        let all = f("(all x (prime (= x x)))");
        let declared = Bounds::auto().declare(all.clone(), 1);
        assert_eq!(m.name(eval(&all, &m, &declared).unwrap()), "1");
        let late = f("(all x (neg (prime (= x 3))))");
        assert_eq!(m.name(eval(&late, &m, &b).unwrap()), "0");
        let bad = Bounds::auto().declare(late.clone(), 2);
        assert!(matches!(eval(&late, &m, &bad), Err(SemanticsError::BoundViolated { .. })));
        assert!(matches!(eval(&f("p"), &m, &b), Err(SemanticsError::UnassignedPrime(_))));
    }

    #[test]
    fn model_files_round_trip_and_reject_bad_orders() {
        let src = "(model (elems bot p top) (leq (bot p) (p top)) (assign (p p) ((prime (= 1 1)) top)))";
        let m = parse_model(src).unwrap();
        assert_eq!(parse_model(&print_model(&m)).unwrap(), m);
        let two_minimal = "(model (elems x y t) (leq (x t) (y t)) (assign))";
        assert!(parse_model(two_minimal).is_err());
    }

    #[test]
    fn refl_is_sound_everywhere() {
        for m in standard_models() {
            for s in
                ["(prime (= 1 2))", "(neg (meet (prime (= 1 1)) (neg (prime (= 2 2)))))", "(all x (prime (<= 2 x)))"]
            {
                assert!(soundness_check(&refl(&f(s)), &m, &Bounds::auto()).unwrap(), "{s}");
            }
        }
    }
}
