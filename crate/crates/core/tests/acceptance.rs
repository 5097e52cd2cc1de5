//! Acceptance suite: one PASS/FAIL line per criterion. Set
//! `UPDATE_GOLDEN=1` to rewrite the golden files of criterion 1.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use omega_calculus::admissible::{
    cut, derive_complete_induction, derive_dne, invert_meet_right, invert_omega, refl, substitute_freevar, Side,
};
use omega_calculus::derivation::{instantiate, mk_a, mk_c, Node, OmegaBranch};
use omega_calculus::search::{decide, generate_corpus, SearchConfig, SearchResult};
use omega_calculus::semantics::{compatible_assignments, sequent_holds, soundness_check, standard_models, Bounds};
use omega_calculus::syntax::print_proof_file;
use omega_calculus::terms::{arithmetic_oracle, fresh_name, FinitePreorder, Numeral, PrimeFormula, Term};
use omega_calculus::{check, Derivation, Formula, PreorderOracle, Sequent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

const FIGURES_TIME_LIMIT: Duration = Duration::from_secs(1);
const CUT_TIME_LIMIT: Duration = Duration::from_secs(60);
const INDUCTION_TIME_LIMIT: Duration = Duration::from_secs(5);
const CUT_PAIRS: usize = 1000;
const CUT_CARRIER_MAX: usize = 4;
const OMEGA_TRUNCATION: u64 = 3;
const RANDOM_PREORDERS: usize = 50;
const FUZZ_CASES: usize = 500;
const INDUCTION_INSTANCES: u64 = 20;
const ASSIGNMENTS_PER_MODEL: usize = 16;
const DNE_DEPTH: usize = 3;
const DNE_SEARCH_DEPTH: usize = 10;
const SEED: u64 = 20240601;

type Outcome = Result<String, String>;

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let figures = figures();
    for fig in &figures {
        check(&fig.derivation, &fig.oracle).map_err(|e| format!("{}: {e}", fig.name))?;
        let text = print_proof_file(&fig.derivation);
        let path = golden_dir().join(format!("{}.proof", fig.name));
        if update {
            std::fs::create_dir_all(golden_dir()).map_err(|e| e.to_string())?;
            std::fs::write(&path, &text).map_err(|e| e.to_string())?;
        }
        let golden = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        if golden != text {
            return Err(format!("{} differs from its golden file", fig.name));
        }
        let reparsed = omega_calculus::script::parse_proof(&golden).map_err(|e| e.to_string())?;
        if reparsed != fig.derivation {
            return Err(format!("{} does not parse back", fig.name));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > FIGURES_TIME_LIMIT {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{} figures byte-stable in {elapsed:?}", figures.len()))
}

fn cut_oracles(rng: &mut ChaCha8Rng) -> Vec<FinitePreorder> {
    (0..12).map(|k| random_preorder(rng, 2 + k % (CUT_CARRIER_MAX - 1))).collect()
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let cfg = SearchConfig { omega_truncation: OMEGA_TRUNCATION, depth_limit: 8 };
    let oracles = cut_oracles(&mut rng);
    let mut done = 0;
    while done < CUT_PAIRS {
        let o = &oracles[done % oracles.len()];
        let Some((d1, d2)) = cut_pair(&mut rng, o, &cfg, 20) else { continue };
        match cut_ok(&d1, &d2, o) {
            Ok(true) => {}
            Ok(false) => return Err(format!("wrong conclusion for {} / {}", d1.conclusion, d2.conclusion)),
            Err(e) => return Err(format!("{} / {}: {e}", d1.conclusion, d2.conclusion)),
        }
        done += 1;
        if start.elapsed() > CUT_TIME_LIMIT {
            return Err(format!("only {done} pairs within {CUT_TIME_LIMIT:?}"));
        }
    }
    Ok(format!("{done} cuts re-checked in {:?}", start.elapsed()))
}

fn conservativity_oracles() -> Vec<FinitePreorder> {
    let mut out = Vec::new();
    for n in 1..=3 {
        out.extend(preorders_up_to_iso(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    for k in 0..RANDOM_PREORDERS {
        out.push(random_preorder(&mut rng, 4 + k % 2));
    }
    out
}

fn criterion_3() -> Outcome {
    let cfg = SearchConfig::default();
    let oracles = conservativity_oracles();
    let mut pairs = 0;
    for o in &oracles {
        for p in o.elements() {
            for q in o.elements() {
                let s = Sequent::new(vec![Formula::atom(p)], Some(Formula::atom(q)));
                let result = decide(&s, o, &cfg);
                let expected = o.leq(p, q);
                match (&result, expected) {
                    (SearchResult::Derivable(_), true) | (SearchResult::Underivable, false) => {}
                    _ => return Err(format!("{s} over {:?}: {}", o.pairs(), result.verdict())),
                }
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} prime pairs over {} preorders", oracles.len()))
}

fn criterion_4() -> Outcome {
    let empty = Sequent::empty();
    let mut oracles: Vec<Box<dyn PreorderOracle>> = vec![Box::new(arithmetic_oracle())];
    for o in conservativity_oracles() {
        oracles.push(Box::new(o));
    }
    let mut runs = 0;
    for o in &oracles {
        for n in 1..=OMEGA_TRUNCATION {
            for depth in [1, 4, 8] {
                let cfg = SearchConfig { omega_truncation: n, depth_limit: depth };
                let r = decide(&empty, o, &cfg);
                if r != SearchResult::Underivable {
                    return Err(format!("decide of the empty sequent gave {}", r.verdict()));
                }
                runs += 1;
            }
        }
        if o.basic(&empty) {
            return Err("an oracle makes the empty sequent basic".into());
        }
    }
    for model in standard_models() {
        if sequent_holds(&empty, &model, &Bounds::auto()).map_err(|e| e.to_string())? {
            return Err("the empty sequent holds in a standard model".into());
        }
    }
    let mut corpus_size = 0;
    for (i, o) in oracles.iter().enumerate() {
        let cfg = SearchConfig { omega_truncation: OMEGA_TRUNCATION, depth_limit: 6 };
        for d in generate_corpus(o, &cfg, 50, SEED + i as u64) {
            if d.conclusion == empty {
                return Err("a corpus derivation concludes the empty sequent".into());
            }
            corpus_size += 1;
        }
    }
    Ok(format!("{runs} searches Underivable; {corpus_size} corpus derivations avoid the empty sequent"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let oracle = FinitePreorder::new(
        ["p", "q", "r"].iter().map(|s| omega_calculus::terms::var(s)).collect(),
        vec![(omega_calculus::terms::var("p"), omega_calculus::terms::var("q"))],
    );
    let cfg = SearchConfig::default();
    let corpus: Vec<Derivation> = generate_corpus(&oracle, &cfg, 4 * FUZZ_CASES, SEED)
        .into_iter()
        .filter(|d| d.conclusion.succ.is_some())
        .collect();
    if corpus.len() < FUZZ_CASES {
        return Err(format!("corpus too small: {}", corpus.len()));
    }
    for k in 0..FUZZ_CASES {
        let d1 = &corpus[k];
        let d2 = &corpus[rng.gen_range(0..corpus.len())];
        let mut target = d1.conclusion.ante.clone();
        target.extend(d2.conclusion.ante.iter().cloned());
        let l = weaken_to(d1.clone(), &target);
        let r = weaken_to(d2.clone(), &target);
        let a = mk_a(l.clone(), r).map_err(|e| e.to_string())?;
        if invert_meet_right(&a, Side::Left).map_err(|e| e.to_string())? != l {
            return Err(format!("meet inversion of case {k}"));
        }
        let taken = d1.names();
        let p = fresh_name("x", &taken);
        let mut branch = OmegaBranch::parametric(&p, d1.clone());
        branch = branch.with_exception(Numeral::new(2).unwrap(), d1.clone());
        let c = mk_c(branch.clone()).map_err(|e| e.to_string())?;
        let n = Numeral::new(rng.gen_range(1..6)).unwrap();
        if invert_omega(&c, n).map_err(|e| e.to_string())? != instantiate(&branch, n).map_err(|e| e.to_string())? {
            return Err(format!("ω inversion of case {k}"));
        }
        let succ = d1.conclusion.succ.clone().unwrap();
        let right = cut(d1, &refl(&succ)).map_err(|e| e.to_string())?;
        check(&right, &oracle).map_err(|e| e.to_string())?;
        if right.conclusion != d1.conclusion {
            return Err(format!("cut with reflexivity on the right changed {}", d1.conclusion));
        }
        if let Some(first) = d1.conclusion.ante.first() {
            let left = cut(&refl(first), d1).map_err(|e| e.to_string())?;
            check(&left, &oracle).map_err(|e| e.to_string())?;
            if left.conclusion != d1.conclusion {
                return Err(format!("cut with reflexivity on the left changed {}", d1.conclusion));
            }
        }
    }
    // Inversion of a genuine family: refl of x = x instantiated.
    let all = f("(all x (prime (= x x)))");
    let r = refl(&all);
    let Node::C { branch, .. } = &r.node else { return Err("refl of an ω-meet is not rule c".into()) };
    for n in 1..=5 {
        let n = Numeral::new(n).unwrap();
        if invert_omega(&r, n).map_err(|e| e.to_string())? != instantiate(branch, n).map_err(|e| e.to_string())? {
            return Err("ω inversion of refl".into());
        }
    }
    Ok(format!("{FUZZ_CASES} fuzzed cases for each invariant"))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let o = arithmetic_oracle();
    let step = induction_step();
    let j = derive_complete_induction(&step, "a", "b").map_err(|e| e.to_string())?;
    check(&j, &o).map_err(|e| e.to_string())?;
    let Node::J(branch) = &j.node else { return Err("not a j node".into()) };
    let mut chain = refl(&f("(prime (<= 1 1))"));
    for m in 1..=INDUCTION_INSTANCES {
        let n = Numeral::new(m).unwrap();
        if m > 1 {
            let link = substitute_freevar(&step, "a", Numeral::new(m - 1).unwrap()).map_err(|e| e.to_string())?;
            chain = cut(&chain, &link).map_err(|e| e.to_string())?;
        }
        let inst = branch.instantiate(n).map_err(|e| e.to_string())?;
        check(&inst, &o).map_err(|e| format!("instance {m}: {e}"))?;
        if inst.conclusion != chain.conclusion {
            return Err(format!("instance {m} concludes {} but the chain {}", inst.conclusion, chain.conclusion));
        }
        let expected = Sequent::new(
            vec![f("(prime (<= 1 1))")],
            Some(Formula::Prime(PrimeFormula::le(Term::num(1), Term::num(m)))),
        );
        if inst.conclusion != expected {
            return Err(format!("instance {m} concludes {}", inst.conclusion));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > INDUCTION_TIME_LIMIT {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("instances 1..={INDUCTION_INSTANCES} re-check in {elapsed:?}"))
}

fn criterion_7() -> Outcome {
    let cfg = SearchConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let mut checked = 0;
    let mut oracles: Vec<FinitePreorder> = preorders_up_to_iso(2);
    oracles.extend((0..4).map(|k| random_preorder(&mut rng, 3 + k % 2)));
    for (i, o) in oracles.iter().enumerate() {
        let mut corpus = generate_corpus(o, &cfg, 60, SEED + i as u64);
        for _ in 0..10 {
            if let Some((d1, d2)) = cut_pair(&mut rng, o, &cfg, 10) {
                corpus.push(cut(&d1, &d2).map_err(|e| e.to_string())?);
                corpus.push(d1);
                corpus.push(d2);
            }
        }
        let primes = omega_calculus::search::alphabet(o);
        for model in standard_models() {
            let models = compatible_assignments(&model, &primes, o, ASSIGNMENTS_PER_MODEL);
            if models.is_empty() {
                return Err("no compatible assignment".into());
            }
            for m in &models {
                for d in &corpus {
                    check(d, o).map_err(|e| e.to_string())?;
                    if !soundness_check(d, m, &Bounds::auto()).map_err(|e| e.to_string())? {
                        return Err(format!("unsound: {}", d.conclusion));
                    }
                    checked += 1;
                }
            }
        }
    }
    let o = arithmetic_oracle();
    let corpus = generate_corpus(&o, &cfg, 100, SEED);
    for model in standard_models() {
        for d in &corpus {
            check(d, &o).map_err(|e| e.to_string())?;
            if !soundness_check(d, &model, &Bounds::auto()).map_err(|e| e.to_string())? {
                return Err(format!("unsound: {}", d.conclusion));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} derivation-model pairs sound"))
}

fn formulas_up_to(depth: usize, primes: &[Formula]) -> Vec<Formula> {
    let mut layers: Vec<Vec<Formula>> = vec![primes.to_vec()];
    for _ in 0..depth {
        let below: Vec<Formula> = layers.iter().flatten().cloned().collect();
        let mut next = primes.to_vec();
        for a in &below {
            for b in &below {
                next.push(Formula::meet(a.clone(), b.clone()));
            }
            next.push(Formula::neg(a.clone()));
            next.push(Formula::all("x", a.clone()));
        }
        layers = vec![next];
    }
    let mut all: Vec<Formula> = layers.into_iter().flatten().collect();
    all.sort();
    all.dedup();
    all
}

fn dne_case(a: &Formula, o: &dyn PreorderOracle, cfg: &SearchConfig) -> Result<(), String> {
    let d = derive_dne(a, o).map_err(|e| format!("{a}: {e}"))?;
    check(&d, o).map_err(|e| format!("{a}: {e}"))?;
    let expected = Sequent::new(vec![Formula::neg(Formula::neg(a.clone()))], Some(a.clone()));
    if d.conclusion != expected {
        return Err(format!("{a}: concluded {}", d.conclusion));
    }
    let r = decide(&expected, o, cfg);
    if !r.is_derivable() {
        return Err(format!("{expected}: search says {}", r.verdict()));
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    let cfg = SearchConfig { omega_truncation: 1, depth_limit: DNE_SEARCH_DEPTH };
    let truths = [("(prime (= 1 1))", "(prime (= 1 2))"), ("(prime (= 2 1))", "(prime (= 2 2))")];
    let mut cases = Vec::new();
    for (p, q) in truths {
        cases.extend(formulas_up_to(DNE_DEPTH, &[f(p), f(q)]));
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = cases.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = cases
            .chunks(chunk)
            .map(|part| {
                let cfg = &cfg;
                scope.spawn(move || {
                    let o = arithmetic_oracle();
                    part.iter().try_for_each(|a| dne_case(a, &o, cfg))
                })
            })
            .collect();
        handles.into_iter().try_for_each(|h| h.join().map_err(|_| "worker panicked".to_string())?)
    })?;
    Ok(format!("{} formulas", cases.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("figure reconstruction", criterion_1),
        ("cut admissibility", criterion_2),
        ("conservativity", criterion_3),
        ("consistency", criterion_4),
        ("inversion and cut invariants", criterion_5),
        ("complete induction", criterion_6),
        ("soundness", criterion_7),
        ("double-negation elimination", criterion_8),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        match run() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail} ({:?})", i + 1, start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail} ({:?})", i + 1, start.elapsed());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
