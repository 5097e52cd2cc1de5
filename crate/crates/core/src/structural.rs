//! Derived structural steps built from `d`, `g` and `h`: moving an
//! antecedent entry, permuting, contracting and weakening to a target list.

use crate::derivation::{mk_d, mk_g, mk_h, Derivation};
use crate::error::ProofError;
use crate::terms::Formula;

/// Moves the antecedent entry at `from` to index `to` by adjacent exchanges.
pub fn move_entry(mut d: Derivation, from: usize, to: usize) -> Result<Derivation, ProofError> {
    let mut at = from;
    while at > to {
        d = mk_h(at - 1, d)?;
        at -= 1;
    }
    while at < to {
        d = mk_h(at, d)?;
        at += 1;
    }
    Ok(d)
}

/// Inserts `prefix` in front of the antecedent.
pub fn weaken_front(mut d: Derivation, prefix: &[Formula]) -> Result<Derivation, ProofError> {
    for (i, f) in prefix.iter().enumerate() {
        d = mk_d(f.clone(), i, d)?;
    }
    Ok(d)
}

/// Reshapes the antecedent of `d` into `target` using contraction,
/// weakening and exchange. Every entry of the current antecedent must occur
/// in `target`.
pub fn adjust(mut d: Derivation, target: &[Formula]) -> Result<Derivation, ProofError> {
    let count = |list: &[Formula], f: &Formula| list.iter().filter(|g| *g == f).count();
    // Contract surplus copies.
    loop {
        let ante = &d.conclusion.ante;
        let surplus = ante.iter().find(|f| count(ante, f) > count(target, f));
        let Some(f) = surplus.cloned() else { break };
        if count(target, &f) == 0 {
            return Err(ProofError::mismatch(
                format!("antecedent {} to be contained in the target", f),
                format!("{}", d.conclusion),
            ));
        }
        let i = ante.iter().position(|g| *g == f).unwrap();
        let j = i + 1 + ante[i + 1..].iter().position(|g| *g == f).unwrap();
        d = move_entry(d, j, i + 1)?;
        d = mk_g(i, d)?;
    }
    // Weaken in missing copies at the end.
    let mut missing = Vec::new();
    {
        let ante = &d.conclusion.ante;
        for (k, f) in target.iter().enumerate() {
            let needed = count(&target[..=k], f);
            if needed > count(ante, f) + missing.iter().filter(|g| *g == f).count() {
                missing.push(f.clone());
            }
        }
    }
    for f in missing {
        let len = d.conclusion.ante.len();
        d = mk_d(f, len, d)?;
    }
    permute(d, target)
}

/// Sorts the antecedent of `d` into `target`, a permutation of it.
pub fn permute(mut d: Derivation, target: &[Formula]) -> Result<Derivation, ProofError> {
    let ante = d.conclusion.ante.clone();
    if ante.len() != target.len() {
        return Err(ProofError::mismatch(
            format!("a permutation of {} entries", target.len()),
            d.conclusion.to_string(),
        ));
    }
    let mut used = vec![false; target.len()];
    let mut keys = Vec::with_capacity(ante.len());
    for f in &ante {
        let k = (0..target.len())
            .find(|&k| !used[k] && target[k] == *f)
            .ok_or_else(|| ProofError::mismatch("a permutation of the target", d.conclusion.to_string()))?;
        used[k] = true;
        keys.push(k);
    }
    let n = keys.len();
    for pass in 0..n {
        for i in 0..n - 1 - pass.min(n - 1) {
            if keys[i] > keys[i + 1] {
                keys.swap(i, i + 1);
                d = mk_h(i, d)?;
            }
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::{check, mk_basic};
    use crate::terms::{finite_preorder, Sequent};

    fn a(s: &str) -> Formula {
        Formula::atom(s)
    }

    #[test]
    fn adjust_contracts_weakens_and_permutes() {
        let o = finite_preorder(&["p", "q", "r", "s"], &[("p", "q")]);
        let base = mk_basic(Sequent::new(vec![a("p")], Some(a("q")))).unwrap();
        let d = weaken_front(base, &[a("r"), a("p"), a("s")]).unwrap();
        assert_eq!(d.conclusion.ante, vec![a("r"), a("p"), a("s"), a("p")]);
        let target = vec![a("s"), a("p"), a("q"), a("r"), a("r")];
        let out = adjust(d, &target).unwrap();
        assert_eq!(out.conclusion.ante, target);
        check(&out, &o).unwrap();
    }

    #[test]
    fn adjust_rejects_dropping_a_formula() {
        let base = mk_basic(Sequent::new(vec![a("p")], Some(a("q")))).unwrap();
        assert!(adjust(base, &[a("q")]).is_err());
    }
}
