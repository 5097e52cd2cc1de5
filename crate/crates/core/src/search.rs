//! Bounded backward proof search with truncated ω-rules, and random corpus
//! generation by forward rule application.
//!
//! Goals are kept with set-normalized antecedents: meets are split and
//! duplicates dropped. Found proofs are rebuilt over the exact antecedent
//! lists with exchange, contraction, weakening and packing.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::derivation::{mk_a, mk_b, mk_basic, mk_c_as, mk_d, mk_e, mk_f, mk_g, mk_h, mk_i, Derivation, OmegaBranch};
use crate::structural::adjust;
use crate::terms::{fresh_name, Formula, Numeral, PreorderOracle, PrimeFormula, ScopeEntry, Sequent, Term, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    /// ω-rules use the instances `1..=omega_truncation`.
    pub omega_truncation: u64,
    pub depth_limit: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { omega_truncation: 3, depth_limit: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchResult {
    Derivable(Derivation),
    Underivable,
    DepthExceeded,
}

impl SearchResult {
    pub fn derivation(&self) -> Option<&Derivation> {
        match self {
            SearchResult::Derivable(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_derivable(&self) -> bool {
        matches!(self, SearchResult::Derivable(_))
    }

    pub fn verdict(&self) -> &'static str {
        match self {
            SearchResult::Derivable(_) => "Derivable",
            SearchResult::Underivable => "Underivable",
            SearchResult::DepthExceeded => "DepthExceeded",
        }
    }
}

/// Searches for a derivation of `s`, whose formulas must be closed.
pub fn decide(s: &Sequent, oracle: &dyn PreorderOracle, cfg: &SearchConfig) -> SearchResult {
    let mut search = Search { oracle, cfg, memo: BTreeMap::new(), active: BTreeSet::new(), scope: Vec::new() };
    let out = search.prove(&s.ante, &s.succ, cfg.depth_limit);
    match out.derivation {
        Some(d) => SearchResult::Derivable(d),
        None if out.depth_hit => SearchResult::DepthExceeded,
        None => SearchResult::Underivable,
    }
}

type Key = (Vec<Formula>, Option<Formula>, Vec<Var>);

struct Outcome {
    derivation: Option<Derivation>,
    depth_hit: bool,
    /// The failure depended on a goal still under construction.
    cycle_hit: bool,
}

impl Outcome {
    fn found(d: Derivation) -> Outcome {
        Outcome { derivation: Some(d), depth_hit: false, cycle_hit: false }
    }

    fn failed() -> Outcome {
        Outcome { derivation: None, depth_hit: false, cycle_hit: false }
    }
}

struct Search<'a> {
    oracle: &'a dyn PreorderOracle,
    cfg: &'a SearchConfig,
    memo: BTreeMap<Key, Option<Derivation>>,
    active: BTreeSet<Key>,
    scope: Vec<ScopeEntry>,
}

/// Meets split into their components, recursively, in order.
fn flatten(list: &[Formula]) -> Vec<Formula> {
    let mut out = Vec::new();
    fn go(f: &Formula, out: &mut Vec<Formula>) {
        match f {
            Formula::Meet(a, b) => {
                go(a, out);
                go(b, out);
            }
            _ => out.push(f.clone()),
        }
    }
    for f in list {
        go(f, &mut out);
    }
    out
}

fn flat_len(f: &Formula) -> usize {
    match f {
        Formula::Meet(a, b) => flat_len(a) + flat_len(b),
        _ => 1,
    }
}

/// Packs the flattened components starting at `pos` back into `f`.
fn pack_entry(mut d: Derivation, pos: usize, f: &Formula) -> Derivation {
    if let Formula::Meet(a, b) = f {
        d = pack_entry(d, pos, a);
        d = pack_entry(d, pos + 1, b);
        d = mk_i(pos, d).expect("adjacent components");
    }
    d
}

/// From a derivation over `flatten(list)` to one over `list`.
fn pack(mut d: Derivation, list: &[Formula]) -> Derivation {
    let mut starts = Vec::with_capacity(list.len());
    let mut at = 0;
    for f in list {
        starts.push(at);
        at += flat_len(f);
    }
    for (f, &start) in list.iter().zip(&starts).rev() {
        d = pack_entry(d, start, f);
    }
    d
}

impl Search<'_> {
    /// A derivation whose antecedent is exactly `list`.
    fn prove(&mut self, list: &[Formula], succ: &Option<Formula>, depth: usize) -> Outcome {
        let flat = flatten(list);
        let set: Vec<Formula> = flat.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let mut out = self.solve(set, succ.clone(), depth);
        if let Some(d) = out.derivation.take() {
            let d = adjust(d, &flat).expect("set and flattened list share their members");
            out.derivation = Some(pack(d, list));
        }
        out
    }

    fn solve(&mut self, set: Vec<Formula>, succ: Option<Formula>, depth: usize) -> Outcome {
        let key: Key = (set.clone(), succ.clone(), self.scope.iter().map(|e| e.param.clone()).collect());
        if let Some(hit) = self.memo.get(&key) {
            return match hit {
                Some(d) => Outcome::found(d.clone()),
                None => Outcome::failed(),
            };
        }
        if self.active.contains(&key) {
            return Outcome { derivation: None, depth_hit: false, cycle_hit: true };
        }
        if depth == 0 {
            return Outcome { derivation: None, depth_hit: true, cycle_hit: false };
        }
        self.active.insert(key.clone());
        let out = self.expand(&set, &succ, depth - 1);
        self.active.remove(&key);
        match &out.derivation {
            Some(d) => {
                self.memo.insert(key, Some(d.clone()));
            }
            None if !out.depth_hit && !out.cycle_hit => {
                self.memo.insert(key, None);
            }
            None => {}
        }
        out
    }

    fn expand(&mut self, set: &[Formula], succ: &Option<Formula>, depth: usize) -> Outcome {
        match succ {
            Some(Formula::Meet(a, b)) => {
                let l = self.prove(set, &Some((**a).clone()), depth);
                let Some(ld) = l.derivation else { return l };
                let r = self.prove(set, &Some((**b).clone()), depth);
                let Some(rd) = r.derivation else { return r };
                return Outcome::found(mk_a(ld, rd).expect("shared antecedent"));
            }
            Some(Formula::Neg(a)) => {
                let mut list = vec![(**a).clone()];
                list.extend_from_slice(set);
                let mut out = self.prove(&list, &None, depth);
                out.derivation = out.derivation.map(|d| mk_b(d).expect("leading formula"));
                return out;
            }
            Some(all @ Formula::All(x, _)) => return self.omega_right(set, all, x, depth),
            _ => {}
        }
        let mut acc = Outcome::failed();
        if let Some(d) = self.basic(set, succ) {
            return Outcome::found(d);
        }
        for f in set {
            match f {
                Formula::Neg(b) => {
                    let out = self.prove(set, &Some((**b).clone()), depth);
                    if let Some(d) = out.derivation {
                        let d = mk_e(succ.clone(), d).expect("succedent present");
                        return Outcome::found(adjust(d, set).expect("negation kept"));
                    }
                    acc.depth_hit |= out.depth_hit;
                    acc.cycle_hit |= out.cycle_hit;
                }
                Formula::All(..) => {
                    for w in self.witnesses() {
                        let inst = f.instance(&w).expect("an ω-meet");
                        if set.contains(&inst) && !matches!(inst, Formula::Meet(..)) {
                            continue;
                        }
                        let mut list = vec![inst];
                        list.extend_from_slice(set);
                        let out = self.prove(&list, succ, depth);
                        if let Some(d) = out.derivation {
                            let d = mk_f(w.clone(), f.clone(), d).expect("leading instance");
                            return Outcome::found(adjust(d, set).expect("ω-meet kept"));
                        }
                        acc.depth_hit |= out.depth_hit;
                        acc.cycle_hit |= out.cycle_hit;
                    }
                }
                _ => {}
            }
        }
        acc
    }

    fn witnesses(&self) -> Vec<Term> {
        let mut out: Vec<Term> = (1..=self.cfg.omega_truncation).map(Term::num).collect();
        out.extend(self.scope.iter().map(|e| Term::Var(e.param.clone())));
        out
    }

    fn basic(&self, set: &[Formula], succ: &Option<Formula>) -> Option<Derivation> {
        let try_basic = |ante: Vec<Formula>| -> Option<Derivation> {
            let s = Sequent::new(ante, succ.clone());
            s.prime_shape()?;
            if self.oracle.basic_schema(&s, &self.scope).unwrap_or(false) {
                let d = mk_basic(s).ok()?;
                adjust(d, set).ok()
            } else {
                None
            }
        };
        if let Some(d) = try_basic(vec![]) {
            return Some(d);
        }
        set.iter().filter(|f| matches!(f, Formula::Prime(_))).find_map(|f| try_basic(vec![f.clone()]))
    }

    fn omega_right(&mut self, set: &[Formula], all: &Formula, x: &Var, depth: usize) -> Outcome {
        let mut taken: BTreeSet<Var> = self.scope.iter().map(|e| e.param.clone()).collect();
        for f in set {
            f.collect_names(&mut taken);
        }
        all.collect_names(&mut taken);
        let p = fresh_name(&format!("{x}{}", self.scope.len() + 1), &taken);
        let mut branch_exceptions = BTreeMap::new();
        for n in 1..=self.cfg.omega_truncation {
            let inst = all.instance(&Term::num(n)).expect("an ω-meet");
            let out = self.prove(set, &Some(inst), depth);
            let Some(d) = out.derivation else { return out };
            branch_exceptions.insert(Numeral::new(n).unwrap(), d);
        }
        let inst = all.instance(&Term::Var(p.clone())).expect("an ω-meet");
        self.scope.push(ScopeEntry { param: p.clone(), excluded: (1..=self.cfg.omega_truncation).collect() });
        let out = self.prove(set, &Some(inst), depth);
        self.scope.pop();
        let Some(body) = out.derivation else { return out };
        let mut branch = OmegaBranch::parametric(&p, body);
        branch.exceptions = branch_exceptions;
        Outcome::found(mk_c_as(x.clone(), branch).expect("parameter fresh for the antecedent"))
    }
}

// ---------------------------------------------------------------------------
// Random formulas and corpora.

/// Primes to build formulas from: the oracle carrier when finite, else a
/// few closed arithmetic equations and inequalities.
pub fn alphabet(oracle: &dyn PreorderOracle) -> Vec<PrimeFormula> {
    oracle.carrier().unwrap_or_else(|| {
        vec![
            PrimeFormula::eq(Term::num(1), Term::num(1)),
            PrimeFormula::eq(Term::num(1), Term::num(2)),
            PrimeFormula::le(Term::num(2), Term::add(Term::num(1), Term::num(1))),
            PrimeFormula::le(Term::num(3), Term::num(1)),
        ]
    })
}

/// A random closed formula of depth at most `depth`. ω-meets are vacuous or
/// range over `x = x`, `x <= x + 1` and `x = 1` when the alphabet is
/// arithmetic.
pub fn random_formula(rng: &mut impl Rng, primes: &[PrimeFormula], depth: usize) -> Formula {
    if depth <= 1 || rng.gen_bool(0.3) {
        return Formula::Prime(primes.choose(rng).expect("non-empty alphabet").clone());
    }
    match rng.gen_range(0..3) {
        0 => Formula::meet(random_formula(rng, primes, depth - 1), random_formula(rng, primes, depth - 1)),
        1 => Formula::neg(random_formula(rng, primes, depth - 1)),
        _ => {
            let arithmetic = primes.iter().any(|p| !matches!(p, PrimeFormula::Atom(_)));
            if arithmetic && rng.gen_bool(0.5) {
                let x = Term::var("x");
                let body = match rng.gen_range(0..3) {
                    0 => PrimeFormula::eq(x.clone(), x),
                    1 => PrimeFormula::le(x.clone(), Term::add(x, Term::num(1))),
                    _ => PrimeFormula::eq(x, Term::num(1)),
                };
                Formula::all("x", Formula::Prime(body))
            } else {
                Formula::all("x", random_formula(rng, primes, depth - 1))
            }
        }
    }
}

/// `count` checked derivations built by forward rule application from basic
/// sequents; the same seed gives the same list.
pub fn generate_corpus(oracle: &dyn PreorderOracle, cfg: &SearchConfig, count: usize, seed: u64) -> Vec<Derivation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let primes = alphabet(oracle);
    let basics = basic_sequents(oracle, &primes);
    let mut out = Vec::with_capacity(count);
    if basics.is_empty() {
        return out;
    }
    let steps = cfg.depth_limit.clamp(1, 6);
    while out.len() < count {
        let mut d = mk_basic(basics.choose(&mut rng).unwrap().clone()).expect("prime shape");
        let n = rng.gen_range(0..=steps);
        for _ in 0..n {
            if let Some(next) = forward_step(&mut rng, d.clone(), &primes, &basics) {
                d = next;
            }
        }
        out.push(d);
    }
    out
}

fn basic_sequents(oracle: &dyn PreorderOracle, primes: &[PrimeFormula]) -> Vec<Sequent> {
    let mut out = Vec::new();
    let fs: Vec<Formula> = primes.iter().map(|p| Formula::Prime(p.clone())).collect();
    let mut candidates: Vec<Sequent> = Vec::new();
    for p in &fs {
        candidates.push(Sequent::new(vec![], Some(p.clone())));
        candidates.push(Sequent::new(vec![p.clone()], None));
        for q in &fs {
            candidates.push(Sequent::new(vec![p.clone()], Some(q.clone())));
        }
    }
    for s in candidates {
        if oracle.basic(&s) {
            out.push(s);
        }
    }
    out
}

fn forward_step(
    rng: &mut ChaCha8Rng,
    d: Derivation,
    primes: &[PrimeFormula],
    basics: &[Sequent],
) -> Option<Derivation> {
    let ante_len = d.conclusion.ante.len();
    match rng.gen_range(0..9) {
        0 => {
            // a: pair with a second small derivation over the same antecedent.
            let other = mk_basic(basics.choose(rng)?.clone()).ok()?;
            other.conclusion.succ.as_ref()?;
            d.conclusion.succ.as_ref()?;
            let mut target = d.conclusion.ante.clone();
            target.extend(other.conclusion.ante.iter().cloned());
            let left = adjust(d, &target).ok()?;
            let right = adjust(other, &target).ok()?;
            mk_a(left, right).ok()
        }
        1 => {
            if d.conclusion.succ.is_some() || ante_len == 0 {
                return None;
            }
            mk_b(d).ok()
        }
        2 => {
            // c over a vacuous family.
            d.conclusion.succ.as_ref()?;
            let taken = d.names();
            let p = fresh_name("x", &taken);
            mk_c_as(p.clone(), OmegaBranch::parametric(&p, d)).ok()
        }
        3 => {
            let f = random_formula(rng, primes, 2);
            let pos = rng.gen_range(0..=ante_len);
            mk_d(f, pos, d).ok()
        }
        4 => {
            d.conclusion.succ.as_ref()?;
            let rhs = if rng.gen_bool(0.5) { None } else { Some(random_formula(rng, primes, 2)) };
            mk_e(rhs, d).ok()
        }
        5 => {
            let first = d.conclusion.ante.first()?.clone();
            let taken = d.names();
            let x = fresh_name("x", &taken);
            mk_f(Term::num(1), Formula::All(x, Box::new(first)), d).ok()
        }
        6 => {
            if ante_len == 0 {
                return None;
            }
            let pos = rng.gen_range(0..ante_len);
            let copy = d.conclusion.ante[pos].clone();
            mk_g(pos, mk_d(copy, pos + 1, d).ok()?).ok()
        }
        7 => {
            if ante_len < 2 {
                return None;
            }
            mk_h(rng.gen_range(0..ante_len - 1), d).ok()
        }
        _ => {
            if ante_len < 2 {
                return None;
            }
            mk_i(rng.gen_range(0..ante_len - 1), d).ok()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::check;
    use crate::syntax::parse_sequent;
    use crate::terms::{arithmetic_oracle, finite_preorder};

    fn seq(s: &str) -> Sequent {
        parse_sequent(s).unwrap()
    }

    #[test]
    fn decide_examples() {
        let o = finite_preorder(&["p", "q", "r"], &[("p", "q")]);
        let cfg = SearchConfig::default();
        let d = decide(&seq("(seq (p) q)"), &o, &cfg);
        assert_eq!(d.derivation().unwrap().tag().name(), "basic");
        assert_eq!(decide(&seq("(seq (q) p)"), &o, &cfg), SearchResult::Underivable);
        let e = decide(&seq("(seq ((meet p (neg q))) r)"), &o, &cfg);
        let d = e.derivation().expect("derivable via e");
        assert!(d.tags().contains("e"));
        check(d, &o).unwrap();
        assert_eq!(decide(&seq("(seq () _)"), &o, &cfg), SearchResult::Underivable);
    }

    #[test]
    fn found_derivations_check() {
        let o = arithmetic_oracle();
        let cfg = SearchConfig::default();
        for s in [
            "(seq ((neg (neg (prime (= 1 1))))) (prime (= 1 1)))",
            "(seq () (all x (prime (= x x))))",
            "(seq ((all x (prime (= x 1)))) (prime (= 2 1)))",
            "(seq ((meet a b)) (neg (neg (meet b a))))",
        ] {
            let s = seq(s);
            if s.formulas().any(|f| f.to_string().contains(" a")) {
                let p = finite_preorder(&["a", "b"], &[]);
                let d = decide(&s, &p, &cfg);
                check(d.derivation().unwrap(), &p).unwrap();
            } else {
                let d = decide(&s, &o, &cfg);
                check(d.derivation().unwrap_or_else(|| panic!("{s}")), &o).unwrap();
            }
        }
    }

    #[test]
    fn non_uniform_families_are_not_derivable() {
        let o = arithmetic_oracle();
        let cfg = SearchConfig::default();
        let r = decide(&seq("(seq () (all x (prime (<= x 3))))"), &o, &cfg);
        assert!(!r.is_derivable());
    }

    #[test]
    fn corpus_is_deterministic_and_checks() {
        let o = finite_preorder(&["p", "q"], &[("p", "q")]);
        let cfg = SearchConfig::default();
        let a = generate_corpus(&o, &cfg, 10, 1);
        assert_eq!(a.len(), 10);
        assert_eq!(a, generate_corpus(&o, &cfg, 10, 1));
        for d in &a {
            check(d, &o).unwrap();
        }
        assert!(generate_corpus(&o, &cfg, 0, 1).is_empty());
    }
}
