#![allow(dead_code)]

use std::collections::BTreeSet;

use omega_calculus::admissible::{
    cut, cut_zeta, derive_complete_induction, derive_prime_dne, invert_meet_right, refl, Side,
};
use omega_calculus::derivation::{mk_basic, mk_e, Derivation};
use omega_calculus::search::{decide, random_formula, SearchConfig};
use omega_calculus::syntax::{parse_formula, parse_sequent};
use omega_calculus::terms::{arithmetic_oracle, finite_preorder, var, FinitePreorder, Numeral, PrimeFormula};
use omega_calculus::{Formula, PreorderOracle};
use rand::Rng;

pub fn f(s: &str) -> Formula {
    parse_formula(s).unwrap()
}

pub fn basic(s: &str) -> Derivation {
    mk_basic(parse_sequent(s).unwrap()).unwrap()
}

/// A reconstructed figure: its golden file name, the derivation and the
/// oracle it checks against.
pub struct Figure {
    pub name: &'static str,
    pub derivation: Derivation,
    pub oracle: Box<dyn PreorderOracle>,
}

fn fig(name: &'static str, derivation: Derivation, oracle: impl PreorderOracle + 'static) -> Figure {
    Figure { name, derivation, oracle: Box::new(oracle) }
}

/// The step `1 <= a -> 1 <= a'` of the induction figure.
pub fn induction_step() -> Derivation {
    basic("(seq ((prime (<= 1 a))) (prime (<= 1 (s a))))")
}

pub fn figures() -> Vec<Figure> {
    let ab = || finite_preorder(&["a", "b"], &[]);
    let mut out = vec![
        fig("refl_meet", refl(&f("(meet a b)")), ab()),
        fig("refl_omega", refl(&f("(all x (prime (= x x)))")), arithmetic_oracle()),
        fig("refl_neg", refl(&f("(neg a)")), ab()),
    ];
    // A derivation of c1 & ~c2 <= a & b ending in rule e, inverted to the
    // left conjunct by retargeting e.
    let order = finite_preorder(&["c1", "c2", "a", "b"], &[("c1", "c2")]);
    let ending_in_e = mk_e(Some(f("(meet a b)")), basic("(seq (c1) c2)")).unwrap();
    out.push(fig("invert_meet_e", invert_meet_right(&ending_in_e, Side::Left).unwrap(), order));
    // Cutting ~b against a derivation ending in e that exposes ~b.
    let order = finite_preorder(&["a", "b", "c", "d"], &[("c", "b")]);
    let left = refl(&f("(neg b)"));
    let right = mk_e(Some(f("d")), basic("(seq (c) b)")).unwrap();
    out.push(fig("cut_neg_e", cut_zeta(&left, &right, &[1]).unwrap(), order));
    let o = arithmetic_oracle();
    let p_true = PrimeFormula::eq(omega_calculus::Term::num(1), omega_calculus::Term::num(1));
    let p_false = PrimeFormula::eq(omega_calculus::Term::num(1), omega_calculus::Term::num(3));
    out.push(fig("dne_true_prime", derive_prime_dne(&p_true, &o).unwrap(), arithmetic_oracle()));
    out.push(fig("dne_false_prime", derive_prime_dne(&p_false, &o).unwrap(), arithmetic_oracle()));
    let j = derive_complete_induction(&induction_step(), "a", "b").unwrap();
    let omega_figure = match &j.node {
        omega_calculus::derivation::Node::J(branch) => branch.instantiate(Numeral::new(3).unwrap()).unwrap(),
        _ => unreachable!(),
    };
    out.push(fig("induction_m3", omega_figure, arithmetic_oracle()));
    out
}

// ---------------------------------------------------------------------------
// Preorders.

/// All preorders on `n` elements named `e0, e1, ...`, up to isomorphism.
pub fn preorders_up_to_iso(n: usize) -> Vec<FinitePreorder> {
    let names: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let off: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).collect();
    let perms = permutations(n);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u32..(1 << off.len()) {
        let mut m = vec![vec![false; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = true;
        }
        for (k, &(i, j)) in off.iter().enumerate() {
            m[i][j] = mask & (1 << k) != 0;
        }
        let transitive = (0..n).all(|i| (0..n).all(|j| (0..n).all(|k| !(m[i][j] && m[j][k]) || m[i][k])));
        if !transitive {
            continue;
        }
        let canon = perms
            .iter()
            .map(|p| {
                let mut bits = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        bits.push(m[p[i]][p[j]]);
                    }
                }
                bits
            })
            .min()
            .unwrap();
        if seen.insert(canon) {
            out.push(FinitePreorder::from_matrix(names.iter().map(|s| var(s)).collect(), &m));
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, n - 1);
            out.push(q);
        }
    }
    out
}

/// The closure of random pairs on `n` elements.
pub fn random_preorder(rng: &mut impl Rng, n: usize) -> FinitePreorder {
    let names: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(0.25) {
                pairs.push((var(&names[i]), var(&names[j])));
            }
        }
    }
    FinitePreorder::new(names.iter().map(|s| var(s)).collect(), pairs)
}

// ---------------------------------------------------------------------------
// Cut pairs.

/// Search-found `a -> b` and `b -> c` over `oracle`, with formulas of depth
/// at most 2.
pub fn cut_pair(
    rng: &mut impl Rng,
    oracle: &dyn PreorderOracle,
    cfg: &SearchConfig,
    tries: usize,
) -> Option<(Derivation, Derivation)> {
    let primes = omega_calculus::search::alphabet(oracle);
    for _ in 0..tries {
        let a = random_formula(rng, &primes, 3);
        let b = random_formula(rng, &primes, 3);
        let s1 = omega_calculus::Sequent::new(vec![a], Some(b.clone()));
        let Some(d1) = decide(&s1, oracle, cfg).derivation().cloned() else { continue };
        for _ in 0..tries {
            let c = random_formula(rng, &primes, 3);
            let s2 = omega_calculus::Sequent::new(vec![b.clone()], Some(c));
            if let Some(d2) = decide(&s2, oracle, cfg).derivation() {
                return Some((d1, d2.clone()));
            }
        }
    }
    None
}

/// Checks `cut(d1, d2)` and returns whether it concludes `a -> c`.
pub fn cut_ok(d1: &Derivation, d2: &Derivation, oracle: &dyn PreorderOracle) -> Result<bool, String> {
    let d = cut(d1, d2).map_err(|e| e.to_string())?;
    omega_calculus::check(&d, oracle).map_err(|e| e.to_string())?;
    Ok(d.conclusion.ante == d1.conclusion.ante && d.conclusion.succ == d2.conclusion.succ)
}

/// Weakens `d` to the antecedent `target` by inserting entries.
pub fn weaken_to(d: Derivation, target: &[Formula]) -> Derivation {
    omega_calculus::structural::adjust(d, target).unwrap()
}
