//! Admissible rules as derivation transformers: reflexivity, the three
//! inversions, right weakening, cut, substitution of a free variable,
//! complete induction and double-negation elimination. Every output is a
//! tree of primitive rules and passes [`check`](crate::derivation::check)
//! whenever the inputs do.

use std::collections::{BTreeMap, BTreeSet};

use crate::derivation::{
    mk_a, mk_b, mk_basic, mk_c_as, mk_d, mk_e, mk_f, mk_g, mk_h, mk_i, mk_j, BranchBody, Derivation, InductionRecipe,
    Node, OmegaBranch,
};
use crate::error::ProofError;
use crate::structural::{adjust, move_entry, weaken_front};
use crate::terms::{fresh_name, Formula, Numeral, PreorderOracle, PrimeFormula, ScopeEntry, Sequent, Term, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

fn param_name(x: &Var, avoid: &BTreeSet<Var>, f: &Formula) -> Var {
    if !avoid.contains(x) {
        return x.clone();
    }
    let mut taken = avoid.clone();
    f.collect_names(&mut taken);
    fresh_name(x, &taken)
}

// ---------------------------------------------------------------------------
// Reflexivity.

/// `A -> A`.
pub fn refl(f: &Formula) -> Derivation {
    refl_avoiding(f, &f.free_vars())
}

/// `A -> A` whose ω-parameters avoid `avoid`.
pub fn refl_avoiding(f: &Formula, avoid: &BTreeSet<Var>) -> Derivation {
    refl_in(f, avoid).expect("reflexivity trees are well formed")
}

fn refl_in(f: &Formula, avoid: &BTreeSet<Var>) -> Result<Derivation, ProofError> {
    match f {
        Formula::Prime(_) => mk_basic(Sequent::new(vec![f.clone()], Some(f.clone()))),
        Formula::Meet(a, b) => {
            let left = mk_d((**b).clone(), 1, refl_in(a, avoid)?)?;
            let right = mk_d((**a).clone(), 0, refl_in(b, avoid)?)?;
            mk_i(0, mk_a(left, right)?)
        }
        Formula::Neg(a) => mk_b(mk_e(None, refl_in(a, avoid)?)?),
        Formula::All(x, body) => {
            let p = param_name(x, avoid, f);
            let inst = body.subst(x, &Term::Var(p.clone()));
            let mut inner_avoid = avoid.clone();
            inner_avoid.insert(p.clone());
            let inner = refl_in(&inst, &inner_avoid)?;
            let body_d = mk_f(Term::Var(p.clone()), f.clone(), inner)?;
            mk_c_as(x.clone(), OmegaBranch::parametric(&p, body_d))
        }
    }
}

// ---------------------------------------------------------------------------
// Reapplying a single-premiss left rule over a transformed premiss.

/// Rebuilds the left rule at the root of `old` over `premiss`, whose
/// antecedent is the old premiss antecedent with `shift` extra formulas in
/// front.
fn reapply(old: &Derivation, premiss: Derivation, shift: usize) -> Result<Derivation, ProofError> {
    match &old.node {
        Node::D { pos, .. } => mk_d(old.conclusion.ante[*pos].clone(), pos + shift, premiss),
        Node::G { pos, .. } => mk_g(pos + shift, premiss),
        Node::H { pos, .. } => mk_h(pos + shift, premiss),
        Node::I { pos, .. } => mk_i(pos + shift, premiss),
        Node::F { witness, .. } => {
            let all = old.conclusion.ante[0].clone();
            let p = move_entry(premiss, shift, 0)?;
            let p = mk_f(witness.clone(), all, p)?;
            move_entry(p, 0, shift)
        }
        _ => unreachable!("reapply on a rule with a fixed succedent"),
    }
}

fn is_left_rule(d: &Derivation) -> bool {
    matches!(d.node, Node::D { .. } | Node::F { .. } | Node::G { .. } | Node::H { .. } | Node::I { .. })
}

/// Maps the body (with `None`) and each exception (with its index) of a `j`
/// branch.
fn map_branch(
    branch: &OmegaBranch,
    mut f: impl FnMut(&Derivation, Option<Numeral>) -> Result<Derivation, ProofError>,
) -> Result<OmegaBranch, ProofError> {
    let BranchBody::Parametric(body) = &branch.body else {
        return Err(ProofError::RecipeOpaque);
    };
    let body = BranchBody::Parametric(Box::new(f(body, None)?));
    let exceptions = branch
        .exceptions
        .iter()
        .map(|(n, d)| Ok((*n, f(d, Some(*n))?)))
        .collect::<Result<BTreeMap<_, _>, ProofError>>()?;
    Ok(OmegaBranch { param: branch.param.clone(), body, exceptions })
}

fn at_index(t: &Term, param: &Var, n: Option<Numeral>) -> Term {
    match n {
        Some(n) => t.subst(param, &Term::Num(n)),
        None => t.clone(),
    }
}

// ---------------------------------------------------------------------------
// Inversions.

/// From `G -> A & B` to `G -> A` (or `G -> B`).
pub fn invert_meet_right(d: &Derivation, side: Side) -> Result<Derivation, ProofError> {
    let Some(Formula::Meet(a, b)) = &d.conclusion.succ else {
        return Err(ProofError::NotAMeetSuccedent(d.conclusion.to_string()));
    };
    let target = match side {
        Side::Left => (**a).clone(),
        Side::Right => (**b).clone(),
    };
    match &d.node {
        Node::A(l, r) => Ok(match side {
            Side::Left => (**l).clone(),
            Side::Right => (**r).clone(),
        }),
        Node::E(p) => mk_e(Some(target), (**p).clone()),
        Node::J(branch) => mk_j(map_branch(branch, |x, _| invert_meet_right(x, side))?),
        _ if is_left_rule(d) => reapply(d, invert_meet_right(d.premiss().unwrap(), side)?, 0),
        _ => Err(ProofError::NotAMeetSuccedent(d.conclusion.to_string())),
    }
}

/// From `G -> ~A` to `A, G ->`.
pub fn invert_neg(d: &Derivation) -> Result<Derivation, ProofError> {
    let Some(Formula::Neg(a)) = &d.conclusion.succ else {
        return Err(ProofError::NotANegSuccedent(d.conclusion.to_string()));
    };
    match &d.node {
        Node::B(p) => Ok((**p).clone()),
        Node::E(p) => mk_d((**a).clone(), 0, mk_e(None, (**p).clone())?),
        Node::J(branch) => mk_j(map_branch(branch, |x, _| invert_neg(x))?),
        _ if is_left_rule(d) => reapply(d, invert_neg(d.premiss().unwrap())?, 1),
        _ => Err(ProofError::NotANegSuccedent(d.conclusion.to_string())),
    }
}

/// From `G -> (x) A(x)` to `G -> A(n)`.
pub fn invert_omega(d: &Derivation, n: Numeral) -> Result<Derivation, ProofError> {
    invert_omega_at(d, &Term::Num(n))
}

/// From `G -> (x) A(x)` to `G -> A(t)`, for a closed term or a parameter `t`.
pub fn invert_omega_at(d: &Derivation, t: &Term) -> Result<Derivation, ProofError> {
    let Some(all @ Formula::All(..)) = &d.conclusion.succ else {
        return Err(ProofError::NotAnOmegaSuccedent(d.conclusion.to_string()));
    };
    match &d.node {
        Node::C { branch, .. } => branch.instantiate_term(t),
        Node::E(p) => {
            let target = all.instance(t).ok_or_else(|| ProofError::NotAnOmegaSuccedent(all.to_string()))?;
            mk_e(Some(target), (**p).clone())
        }
        Node::J(branch) => mk_j(map_branch(branch, |x, n| invert_omega_at(x, &at_index(t, &branch.param, n)))?),
        _ if is_left_rule(d) => reapply(d, invert_omega_at(d.premiss().unwrap(), t)?, 0),
        _ => Err(ProofError::NotAnOmegaSuccedent(d.conclusion.to_string())),
    }
}

// ---------------------------------------------------------------------------
// Right weakening.

/// From `G ->` to `G -> D`.
pub fn weaken_right(d: &Derivation, target: Option<&Formula>) -> Result<Derivation, ProofError> {
    let mut avoid = d.names();
    if let Some(t) = target {
        t.collect_names(&mut avoid);
    }
    weaken_right_in(d, target, &avoid)
}

fn weaken_right_in(d: &Derivation, target: Option<&Formula>, avoid: &BTreeSet<Var>) -> Result<Derivation, ProofError> {
    if d.conclusion.succ.is_some() {
        return Err(ProofError::mismatch("a sequent with absent succedent", d.conclusion.to_string()));
    }
    let Some(target) = target else {
        return Ok(d.clone());
    };
    match &d.node {
        Node::E(p) => mk_e(Some(target.clone()), (**p).clone()),
        Node::Basic => from_false(&d.conclusion.ante, target, avoid),
        Node::J(branch) => mk_j(map_branch(branch, |x, n| match n {
            None => weaken_right_in(x, Some(target), avoid),
            Some(n) => weaken_right_in(x, Some(&target.subst(&branch.param, &Term::Num(n))), avoid),
        })?),
        _ if is_left_rule(d) => reapply(d, weaken_right_in(d.premiss().unwrap(), Some(target), avoid)?, 0),
        _ => Err(ProofError::mismatch("a sequent with absent succedent", d.conclusion.to_string())),
    }
}

/// `G -> D` from the basic `G ->`, where `G` is a single prime or empty.
fn from_false(ante: &[Formula], target: &Formula, avoid: &BTreeSet<Var>) -> Result<Derivation, ProofError> {
    match target {
        Formula::Prime(_) => mk_basic(Sequent::new(ante.to_vec(), Some(target.clone()))),
        Formula::Meet(x, y) => mk_a(from_false(ante, x, avoid)?, from_false(ante, y, avoid)?),
        Formula::Neg(x) => {
            let bottom = mk_basic(Sequent::new(ante.to_vec(), None))?;
            mk_b(mk_d((**x).clone(), 0, bottom)?)
        }
        Formula::All(x, body) => {
            let mut taken = avoid.clone();
            for f in ante {
                f.collect_names(&mut taken);
            }
            let p = param_name(x, &taken, target);
            let inst = body.subst(x, &Term::Var(p.clone()));
            taken.insert(p.clone());
            let inner = from_false(ante, &inst, &taken)?;
            mk_c_as(x.clone(), OmegaBranch::parametric(&p, inner))
        }
    }
}

// ---------------------------------------------------------------------------
// Cut.

/// Cuts the first antecedent occurrence in `d2` of the succedent of `d1`:
/// from `A -> b` and `P -> D` to `A, P' -> D`, where `P'` is `P` without
/// that occurrence.
pub fn cut(d1: &Derivation, d2: &Derivation) -> Result<Derivation, ProofError> {
    let b =
        d1.conclusion.succ.as_ref().ok_or_else(|| {
            ProofError::ConclusionMismatch(format!("left premiss {} has no succedent", d1.conclusion))
        })?;
    let i = d2
        .conclusion
        .ante
        .iter()
        .position(|f| f == b)
        .ok_or_else(|| ProofError::ConclusionMismatch(format!("{b} does not occur in {}", d2.conclusion)))?;
    cut_zeta(d1, d2, &[i])
}

/// Cuts the antecedent entries of `d2` at `marks`, each equal to the
/// succedent of `d1`, in one pass.
pub fn cut_zeta(d1: &Derivation, d2: &Derivation, marks: &[usize]) -> Result<Derivation, ProofError> {
    let b =
        d1.conclusion.succ.as_ref().ok_or_else(|| {
            ProofError::ConclusionMismatch(format!("left premiss {} has no succedent", d1.conclusion))
        })?;
    let ante = &d2.conclusion.ante;
    let mut flags = vec![false; ante.len()];
    for &m in marks {
        if ante.get(m) != Some(b) {
            return Err(ProofError::ConclusionMismatch(format!("entry {m} of {} is not {b}", d2.conclusion)));
        }
        flags[m] = true;
    }
    let mut avoid = d1.names();
    d2.collect_names(&mut avoid);
    Cutter { avoid }.zeta(d1, d2, &flags)
}

struct Cutter {
    /// Names in use anywhere in the inputs; fresh parameters avoid them.
    avoid: BTreeSet<Var>,
}

fn unmarked_before(marks: &[bool], pos: usize) -> usize {
    marks[..pos].iter().filter(|m| !**m).count()
}

fn without(marks: &[bool], pos: usize) -> Vec<bool> {
    let mut m = marks.to_vec();
    m.remove(pos);
    m
}

impl Cutter {
    fn fresh(&mut self, base: &Var) -> Var {
        let v = fresh_name(base, &self.avoid);
        self.avoid.insert(v.clone());
        v
    }

    fn zeta(&mut self, d1: &Derivation, d2: &Derivation, marks: &[bool]) -> Result<Derivation, ProofError> {
        let a = d1.conclusion.ante.clone();
        let alen = a.len();
        if !marks.iter().any(|m| *m) {
            return weaken_front(d2.clone(), &a);
        }
        let keep = |c: &Sequent| -> Vec<Formula> {
            let mut out = a.clone();
            out.extend(c.ante.iter().zip(marks).filter(|(_, m)| !**m).map(|(f, _)| f.clone()));
            out
        };
        match &d2.node {
            Node::Basic => self.prime_cut(d1, d2),
            Node::A(l, r) => mk_a(self.zeta(d1, l, marks)?, self.zeta(d1, r, marks)?),
            Node::B(p) => {
                let mut pm = vec![false];
                pm.extend_from_slice(marks);
                let res = self.zeta(d1, p, &pm)?;
                mk_b(move_entry(res, alen, 0)?)
            }
            Node::C { binder, branch } => {
                let d1_names = d1.names();
                let branch = if d1_names.contains(&branch.param) {
                    let fresh = self.fresh(&branch.param);
                    branch.rename_param(&fresh)
                } else {
                    branch.clone()
                };
                self.avoid.insert(branch.param.clone());
                let mapped = map_branch(&branch, |x, _| self.zeta(d1, x, marks))?;
                mk_c_as(binder.clone(), mapped)
            }
            Node::J(branch) => {
                let p = branch.param.clone();
                let opened = self.open_at(d1, &p)?;
                let mapped = map_branch(branch, |x, n| match n {
                    None => self.zeta(&opened, x, marks),
                    Some(n) => {
                        let inst = d1.subst(&p, &Term::Num(n))?;
                        self.zeta(&inst, x, marks)
                    }
                })?;
                mk_j(mapped)
            }
            Node::D { pos, premiss } => {
                let res = self.zeta(d1, premiss, &without(marks, *pos))?;
                if marks[*pos] {
                    Ok(res)
                } else {
                    let f = d2.conclusion.ante[*pos].clone();
                    mk_d(f, alen + unmarked_before(marks, *pos), res)
                }
            }
            Node::E(p) => {
                let last = marks.len() - 1;
                let res = self.zeta(d1, p, &marks[..last])?;
                if !marks[last] {
                    return mk_e(d2.conclusion.succ.clone(), res);
                }
                // The cut formula is ~B'; res derives A, C -> B'.
                let inv = invert_neg(d1)?;
                let w = weaken_right_in(&inv, d2.conclusion.succ.as_ref(), &self.avoid)?;
                let mut wm = vec![false; w.conclusion.ante.len()];
                wm[0] = true;
                let z = self.zeta(&res, &w, &wm)?;
                adjust(z, &keep(&d2.conclusion))
            }
            Node::F { witness, premiss } => {
                let mut pm = vec![false];
                pm.extend_from_slice(&marks[1..]);
                let res = self.zeta(d1, premiss, &pm)?;
                if !marks[0] {
                    let all = d2.conclusion.ante[0].clone();
                    let r = move_entry(res, alen, 0)?;
                    let r = mk_f(witness.clone(), all, r)?;
                    return move_entry(r, 0, alen);
                }
                let inv = invert_omega_at(d1, witness)?;
                let mut zm = vec![false; res.conclusion.ante.len()];
                zm[alen] = true;
                let z = self.zeta(&inv, &res, &zm)?;
                adjust(z, &keep(&d2.conclusion))
            }
            Node::G { pos, premiss } => {
                let mut pm = marks.to_vec();
                pm.insert(pos + 1, marks[*pos]);
                let res = self.zeta(d1, premiss, &pm)?;
                if marks[*pos] {
                    Ok(res)
                } else {
                    mk_g(alen + unmarked_before(marks, *pos), res)
                }
            }
            Node::H { pos, premiss } => {
                let mut pm = marks.to_vec();
                pm.swap(*pos, pos + 1);
                let res = self.zeta(d1, premiss, &pm)?;
                if marks[*pos] || marks[pos + 1] {
                    Ok(res)
                } else {
                    mk_h(alen + unmarked_before(marks, *pos), res)
                }
            }
            Node::I { pos, premiss } => {
                let mut pm = marks.to_vec();
                pm[*pos] = false;
                pm.insert(pos + 1, false);
                let res = self.zeta(d1, premiss, &pm)?;
                let k = alen + unmarked_before(marks, *pos);
                if !marks[*pos] {
                    return mk_i(k, res);
                }
                let left = invert_meet_right(d1, Side::Left)?;
                let mut m1 = vec![false; res.conclusion.ante.len()];
                m1[k] = true;
                let z1 = self.zeta(&left, &res, &m1)?;
                let right = invert_meet_right(d1, Side::Right)?;
                let mut m2 = vec![false; z1.conclusion.ante.len()];
                m2[alen + k] = true;
                let z2 = self.zeta(&right, &z1, &m2)?;
                adjust(z2, &keep(&d2.conclusion))
            }
        }
    }

    /// `d1` read inside the body of a `j` branch on `p`: `j` nodes on `p`
    /// are opened and `c` parameters named `p` are renamed.
    fn open_at(&mut self, d1: &Derivation, p: &Var) -> Result<Derivation, ProofError> {
        let opened = d1.subst(p, &Term::Var(p.clone()))?;
        self.rename_c_params(&opened, p)
    }

    fn rename_c_params(&mut self, d: &Derivation, p: &Var) -> Result<Derivation, ProofError> {
        let needs = {
            let mut found = false;
            d.visit(&mut |x| {
                if let Node::C { branch, .. } = &x.node {
                    found |= branch.param == *p;
                }
            });
            found
        };
        if !needs {
            return Ok(d.clone());
        }
        let node = match &d.node {
            Node::Basic => Node::Basic,
            Node::A(l, r) => Node::A(Box::new(self.rename_c_params(l, p)?), Box::new(self.rename_c_params(r, p)?)),
            Node::C { binder, branch } => {
                let branch = if branch.param == *p {
                    let fresh = self.fresh(p);
                    branch.rename_param(&fresh)
                } else {
                    branch.clone()
                };
                Node::C { binder: binder.clone(), branch: map_branch(&branch, |x, _| self.rename_c_params(x, p))? }
            }
            Node::J(branch) => Node::J(map_branch(branch, |x, _| self.rename_c_params(x, p))?),
            _ => {
                let prem = Box::new(self.rename_c_params(d.premiss().unwrap(), p)?);
                match &d.node {
                    Node::B(_) => Node::B(prem),
                    Node::E(_) => Node::E(prem),
                    Node::D { pos, .. } => Node::D { pos: *pos, premiss: prem },
                    Node::F { witness, .. } => Node::F { witness: witness.clone(), premiss: prem },
                    Node::G { pos, .. } => Node::G { pos: *pos, premiss: prem },
                    Node::H { pos, .. } => Node::H { pos: *pos, premiss: prem },
                    Node::I { pos, .. } => Node::I { pos: *pos, premiss: prem },
                    _ => unreachable!(),
                }
            }
        };
        Ok(Derivation { conclusion: d.conclusion.clone(), node })
    }

    /// Cut of `d1: A -> q` against the basic `q -> D`.
    fn prime_cut(&mut self, d1: &Derivation, d2: &Derivation) -> Result<Derivation, ProofError> {
        let target = d2.conclusion.succ.clone();
        match &d1.node {
            Node::Basic => mk_basic(Sequent::new(d1.conclusion.ante.clone(), target)),
            Node::E(p) => mk_e(target, (**p).clone()),
            Node::J(branch) => {
                let p = branch.param.clone();
                let mapped = map_branch(branch, |x, n| match n {
                    None => self.prime_cut(x, d2),
                    Some(n) => self.prime_cut(x, &d2.subst(&p, &Term::Num(n))?),
                })?;
                mk_j(mapped)
            }
            _ if is_left_rule(d1) => {
                let inner = self.prime_cut(d1.premiss().unwrap(), d2)?;
                reapply(d1, inner, 0)
            }
            _ => Err(ProofError::ConclusionMismatch(format!("{} cannot end in a prime succedent", d1.tag().name()))),
        }
    }
}

// ---------------------------------------------------------------------------
// Substitution and induction.

/// Replaces the free variable `v` of the conclusion by the numeral `n`.
pub fn substitute_freevar(d: &Derivation, v: &str, n: Numeral) -> Result<Derivation, ProofError> {
    if !d.conclusion.has_free(v) {
        return Err(ProofError::VariableNotFree(v.to_string()));
    }
    d.subst(v, &Term::Num(n))
}

/// From `step: A(a) -> A(a')` to `A(1) -> A(b)` with `b` free, backed by
/// an induction recipe.
pub fn derive_complete_induction(step: &Derivation, var: &str, result: &str) -> Result<Derivation, ProofError> {
    let recipe = InductionRecipe { var: crate::terms::var(var), step: Box::new(step.clone()) };
    let (from, _) = recipe.family()?;
    let seed = refl(&from.subst(var, &Term::num(1)));
    let branch = OmegaBranch {
        param: crate::terms::var(result),
        body: BranchBody::Induction(recipe),
        exceptions: BTreeMap::from([(Numeral::new(1).unwrap(), seed)]),
    };
    mk_j(branch)
}

// ---------------------------------------------------------------------------
// Double-negation elimination.

/// `~~P -> P` for a prime decided by the oracle.
pub fn derive_prime_dne(p: &PrimeFormula, oracle: &dyn PreorderOracle) -> Result<Derivation, ProofError> {
    prime_dne_in(p, oracle, &[])
}

fn prime_dne_in(p: &PrimeFormula, oracle: &dyn PreorderOracle, scope: &[ScopeEntry]) -> Result<Derivation, ProofError> {
    let prime = Formula::Prime(p.clone());
    let nn = Formula::neg(Formula::neg(prime.clone()));
    let top = Sequent::new(vec![], Some(prime.clone()));
    if oracle.basic_schema(&top, scope).unwrap_or(false) {
        return mk_d(nn, 0, mk_basic(top)?);
    }
    let bottom = Sequent::new(vec![prime.clone()], None);
    if oracle.basic_schema(&bottom, scope).unwrap_or(false) {
        return mk_e(Some(prime), mk_b(mk_basic(bottom)?)?);
    }
    Err(ProofError::OracleUndecided(prime.to_string()))
}

/// `~~A -> A` for a closed formula whose primes the oracle decides.
pub fn derive_dne(f: &Formula, oracle: &dyn PreorderOracle) -> Result<Derivation, ProofError> {
    let mut avoid = BTreeSet::new();
    f.collect_names(&mut avoid);
    Dne { oracle, avoid }.dne(f, &mut Vec::new())
}

/// Largest exception table tried when an ω-meet body is not uniform.
const DNE_MAX_EXCEPTIONS: u64 = 64;

struct Dne<'a> {
    oracle: &'a dyn PreorderOracle,
    avoid: BTreeSet<Var>,
}

/// From `Z -> W` to `~~Z -> ~~W`.
fn nn_lift(d: Derivation) -> Result<Derivation, ProofError> {
    let d = mk_b(mk_e(None, d)?)?;
    mk_b(mk_e(None, d)?)
}

impl Dne<'_> {
    fn dne(&mut self, f: &Formula, scope: &mut Vec<ScopeEntry>) -> Result<Derivation, ProofError> {
        match f {
            Formula::Prime(p) => prime_dne_in(p, self.oracle, scope),
            Formula::Neg(x) => {
                // X -> ~~X, then ~~~X -> ~X.
                let d = mk_e(None, refl_avoiding(x, &self.avoid))?;
                let d = mk_h(0, d)?;
                let d = mk_b(d)?;
                mk_b(mk_e(None, d)?)
            }
            Formula::Meet(x, y) => {
                let left = mk_i(0, mk_d((**y).clone(), 1, refl_avoiding(x, &self.avoid))?)?;
                let left = cut(&nn_lift(left)?, &self.dne(x, scope)?)?;
                let right = mk_i(0, mk_d((**x).clone(), 0, refl_avoiding(y, &self.avoid))?)?;
                let right = cut(&nn_lift(right)?, &self.dne(y, scope)?)?;
                mk_a(left, right)
            }
            Formula::All(x, _) => {
                let p = fresh_name(x, &self.avoid);
                self.avoid.insert(p.clone());
                let mut k = 0;
                loop {
                    match self.omega_branch(f, &p, k, scope) {
                        Ok(branch) => return mk_c_as(x.clone(), branch),
                        Err(ProofError::OracleUndecided(_)) if k < DNE_MAX_EXCEPTIONS => {
                            k = if k == 0 { 1 } else { k * 2 };
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }

    /// `~~(x) X -> X(t)`.
    fn instance(&mut self, all: &Formula, t: &Term, scope: &mut Vec<ScopeEntry>) -> Result<Derivation, ProofError> {
        let inst = all.instance(t).expect("an ω-meet");
        let mut avoid = self.avoid.clone();
        t.collect_vars(&mut avoid);
        let d = mk_f(t.clone(), all.clone(), refl_avoiding(&inst, &avoid))?;
        cut(&nn_lift(d)?, &self.dne(&inst, scope)?)
    }

    fn omega_branch(
        &mut self,
        all: &Formula,
        p: &Var,
        k: u64,
        scope: &mut Vec<ScopeEntry>,
    ) -> Result<OmegaBranch, ProofError> {
        let mut exceptions = BTreeMap::new();
        for n in 1..=k {
            let n = Numeral::new(n).unwrap();
            exceptions.insert(n, self.instance(all, &Term::Num(n), scope)?);
        }
        scope.push(ScopeEntry { param: p.clone(), excluded: (1..=k).collect() });
        let body = self.instance(all, &Term::Var(p.clone()), scope);
        scope.pop();
        Ok(OmegaBranch { param: p.clone(), body: BranchBody::Parametric(Box::new(body?)), exceptions })
    }
}
