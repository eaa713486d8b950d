//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use common::*;
use finimod::euf_cc::EGraph;
use finimod::fcc_solver::{new_engine, CliqueExplain, FccConfig};
use finimod::fmf_driver::{solve, trail_satisfied, validate_model, SolveResult, SolverConfig};
use finimod::frontend::generator::ColoringInstance;
use finimod::frontend::load;
use finimod::frontend::oracle::{oracle_fcc, oracle_formulas, oracle_solve, OracleVerdict};
use finimod::kernel::{CardScope, Clause, FuncId, Lit, Node, SortId, Store, Subst, TermId};
use finimod::mbqi::{choose_instances, h_m, EvalResult, Evaluator, InstMode};
use finimod::model_builder::{build_model, validate_defining_map, CandidateModel, DefiningMap};
use finimod::purifier::QuantRecord;
use finimod::sat_core::{Action, Theory, Verdict};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Sat answers seen while solving, checked again under criterion 4.
struct Audit {
    models: usize,
    failures: Vec<String>,
}

static AUDIT: Mutex<Audit> = Mutex::new(Audit { models: 0, failures: Vec::new() });

fn model_problems(st: &Store, m: &CandidateModel, trail: &[Lit]) -> Vec<String> {
    let mut out = Vec::new();
    for dm in m.maps.values() {
        let doms: Vec<Vec<TermId>> = st.func(dm.func).args.iter().map(|&s| m.domain(s).to_vec()).collect();
        let v = validate_defining_map(dm, Some(&doms));
        if !v.is_empty() {
            out.push(format!("map of {}: {v:?}", st.func(dm.func).name));
        }
    }
    if !trail_satisfied(st, m, trail) {
        out.push("trail not satisfied".into());
    }
    out
}

fn audit(st: &Store, res: &SolveResult, what: &str) {
    let Some(m) = &res.model else { return };
    let probs = model_problems(st, m, &res.trail);
    let mut a = AUDIT.lock().unwrap();
    a.models += 1;
    if !probs.is_empty() && a.failures.len() < 5 {
        a.failures.push(format!("{what}: {}", probs.join("; ")));
    }
}

fn within(t: Instant, limit: u64, detail: String) -> Outcome {
    let s = t.elapsed().as_secs_f64();
    if s < limit as f64 {
        Ok(format!("{detail}, {s:.1}s"))
    } else {
        Err(format!("{detail}, but took {s:.1}s (limit {limit}s)"))
    }
}

fn failures(what: &str, bad: &[String], total: usize) -> Result<(), String> {
    if bad.is_empty() {
        Ok(())
    } else {
        let shown: Vec<&str> = bad.iter().take(5).map(|s| s.as_str()).collect();
        Err(format!("{}/{total} {what} failed: {}", bad.len(), shown.join(" | ")))
    }
}

fn c1_ground_oracles() -> Outcome {
    let t = Instant::now();
    let mut r = rng(0xC1);
    let (mut bad, mut sat) = (Vec::new(), 0);
    for i in 0..1000 {
        let mut g = ground_case(&mut r);
        let mut p = unit_problem(&g.lits);
        let brute = oracle_solve(&g.store, &p, g.card_bound, 1e7).map_err(|e| format!("case {i}: {e}"))?;
        let split = oracle_fcc(&g.store, &g.lits);
        let res = solve(&mut g.store, &mut p, &SolverConfig::default()).map_err(|e| format!("case {i}: {e}"))?;
        audit(&g.store, &res, &format!("ground case {i}"));
        let brute = matches!(brute, OracleVerdict::Sat(_));
        let engine = match res.verdict {
            Verdict::Sat => Some(true),
            Verdict::Unsat => Some(false),
            Verdict::Unknown => None,
        };
        if engine != Some(brute) || brute != split {
            bad.push(format!("case {i}: engine {engine:?} brute {brute} split {split}"));
        }
        sat += brute as usize;
    }
    failures("ground sets", &bad, 1000)?;
    within(t, 60, format!("1000/1000 agree ({sat} sat)"))
}

fn c2_colouring_minimum() -> Outcome {
    let t = Instant::now();
    let mut r = rng(0xC2);
    let mut bad = Vec::new();
    for i in 0..100 {
        let n = r.gen_range(1..=7);
        let m = r.gen_range(0..=n * (n - 1) / 2);
        let g = ColoringInstance::random(n, m, r.gen()).unwrap();
        let mut l = load(&g.to_script()).map_err(|e| e.to_string())?;
        let res = solve(&mut l.store, &mut l.problem, &SolverConfig::default()).map_err(|e| e.to_string())?;
        audit(&l.store, &res, &format!("colouring {i}"));
        let want = vec![("S".to_string(), g.chromatic_number())];
        if res.verdict != Verdict::Sat || res.stats.cards != want {
            bad.push(format!("instance {i} (n={n}, m={m}): {:?} {:?}, chromatic {}", res.verdict, res.stats.cards, want[0].1));
        }
    }
    failures("instances", &bad, 100)?;
    within(t, 60, "100/100 minimal sizes equal the chromatic number".into())
}

fn c3_ablation() -> Outcome {
    let t = Instant::now();
    let mut r = rng(0xC3);
    let instances: Vec<ColoringInstance> = (0..50)
        .map(|_| {
            let n = r.gen_range(20..=30);
            let m = r.gen_range(2 * n..=4 * n);
            ColoringInstance::random(n, m, r.gen()).unwrap()
        })
        .collect();
    let configs: [(&str, SolverConfig); 4] = [
        ("regions-on", SolverConfig::default()),
        ("regions-off", SolverConfig { regions: false, ..SolverConfig::default() }),
        ("clique-conflict", SolverConfig { clique_explain: CliqueExplain::Conflict, ..SolverConfig::default() }),
        ("mace", SolverConfig { mace: true, ..SolverConfig::default() }),
    ];
    let budget = Duration::from_secs(10);
    // answers[i][c] = minimal size found, or None on timeout.
    let answers: Vec<Mutex<Vec<Option<usize>>>> = (0..instances.len()).map(|_| Mutex::new(vec![None; 4])).collect();
    let seconds = Mutex::new([0f64; 4]);
    let errors = Mutex::new(Vec::new());
    let jobs: Vec<(usize, usize)> = (0..instances.len()).flat_map(|i| (0..4).map(move |c| (i, c))).collect();
    let next = Mutex::new(0usize);
    let threads = std::thread::available_parallelism().map_or(2, |n| n.get()).min(8);
    std::thread::scope(|sc| {
        for _ in 0..threads {
            sc.spawn(|| loop {
                let job = {
                    let mut n = next.lock().unwrap();
                    let j = jobs.get(*n).copied();
                    *n += 1;
                    j
                };
                let Some((i, c)) = job else { break };
                let mut l = load(&instances[i].to_script()).unwrap();
                let cfg = SolverConfig { timeout: Some(budget), ..configs[c].1.clone() };
                let started = Instant::now();
                let out = catch_unwind(AssertUnwindSafe(|| solve(&mut l.store, &mut l.problem, &cfg)));
                seconds.lock().unwrap()[c] += started.elapsed().as_secs_f64();
                match out {
                    Ok(Ok(res)) => {
                        audit(&l.store, &res, &format!("ablation {i} {}", configs[c].0));
                        if res.verdict == Verdict::Sat {
                            answers[i].lock().unwrap()[c] = res.stats.cards.first().map(|x| x.1);
                        }
                    }
                    Ok(Err(e)) => errors.lock().unwrap().push(format!("instance {i} {}: {e}", configs[c].0)),
                    Err(_) => errors.lock().unwrap().push(format!("instance {i} {}: panic", configs[c].0)),
                }
            });
        }
    });
    let errors = errors.into_inner().unwrap();
    failures("runs", &errors, jobs.len())?;
    let mut solved = [0usize; 4];
    let mut bad = Vec::new();
    for (i, a) in answers.iter().enumerate() {
        let a = a.lock().unwrap().clone();
        for c in 0..4 {
            solved[c] += a[c].is_some() as usize;
        }
        let found: BTreeSet<usize> = a.iter().flatten().copied().collect();
        let chi = instances[i].chromatic_number();
        if found.iter().any(|&k| k != chi) {
            bad.push(format!("instance {i}: {a:?}, chromatic {chi}"));
        }
    }
    failures("instances", &bad, instances.len())?;
    let seconds = seconds.into_inner().unwrap();
    let counts: Vec<String> =
        (0..4).map(|c| format!("{} {}/50 in {:.1}s", configs[c].0, solved[c], seconds[c])).collect();
    within(t, 50 * 4 * 10, format!("sizes agree with the chromatic number; solved within 10s: {}", counts.join(", ")))
}

fn c4_model_validity() -> Outcome {
    let t = Instant::now();
    let mut r = rng(0xC4);
    let mut bad = Vec::new();
    let mut sat = 0;
    for i in 0..500 {
        let (mut st, fs) = quantified_problem(&mut r, true);
        let cfg = SolverConfig { max_card: 6, timeout: Some(Duration::from_secs(5)), ..SolverConfig::default() };
        let mut p = purify_all(&mut st, &fs);
        let res = solve(&mut st, &mut p, &cfg).map_err(|e| format!("problem {i}: {e}"))?;
        if let Some(m) = &res.model {
            sat += 1;
            let mut probs = model_problems(&st, m, &res.trail);
            if !validate_model(&st, m, &p) {
                probs.push("model does not satisfy the problem".into());
            }
            if !probs.is_empty() {
                bad.push(format!("problem {i}: {}", probs.join("; ")));
            }
        }
    }
    failures("random quantified problems", &bad, 500)?;
    let a = AUDIT.lock().unwrap();
    if !a.failures.is_empty() {
        return Err(format!("models from criteria 1-3: {}", a.failures.join(" | ")));
    }
    within(t, 600, format!("{} earlier models and {sat}/500 random sat models valid", a.models))
}

fn c5_h_m() -> Outcome {
    let t = Instant::now();
    let mut r = rng(0xC5);
    let mut bad = Vec::new();
    let mut empty = 0;
    for i in 0..1000 {
        let nv = r.gen_range(1..=3);
        let mut c = model_case(&mut r, nv);
        let q = c.record();
        let got = h_m(&Evaluator::new(&c.model), &c.store, &q, 0);
        let dom = c.domain().to_vec();
        let f = c.model.t_false();
        let falsified = all_substs(&c.store, &c.vars, &dom).iter().filter(|s| c.ground_value(c.body, s) == f).count();
        if got.is_empty() != (falsified == 0) {
            bad.push(format!("pair {i}: h_m returned {} with {falsified} false instances", got.len()));
        }
        if got.iter().any(|s| c.ground_value(c.body, s) != f) {
            bad.push(format!("pair {i}: returned an instance that holds"));
        }
        empty += got.is_empty() as usize;
    }
    failures("pairs", &bad, 1000)?;
    within(t, 60, format!("1000/1000 correct ({empty} certified)"))
}

fn c6_eval_generalization() -> Outcome {
    let t = Instant::now();
    let mut r = rng(0xC6);
    let mut bad = Vec::new();
    let mut checked = 0usize;
    for i in 0..1000 {
        let nv = r.gen_range(1..=3);
        let mut c = model_case(&mut r, nv);
        let dom = c.domain().to_vec();
        let mut all = all_substs(&c.store, &c.vars, &dom);
        let sigma = all.swap_remove(r.gen_range(0..all.len()));
        let res = Evaluator::new(&c.model).eval(&c.store, c.body, &sigma).map_err(|e| format!("call {i}: {e:?}"))?;
        let free: Vec<TermId> = c.vars.iter().copied().filter(|x| !res.critical.contains(x)).collect();
        for other in all_substs(&c.store, &free, &dom) {
            let mut s2 = sigma.clone();
            for (x, v) in other.iter() {
                s2.insert(&c.store, x, v);
            }
            checked += 1;
            if c.ground_value(c.body, &s2) != res.value {
                bad.push(format!("call {i}: value changes off the critical variables"));
                break;
            }
        }
    }
    failures("eval calls", &bad, 1000)?;
    within(t, 60, format!("1000/1000 sound over {checked} substitutions"))
}

/// The quantifier-under-equivalence fixture purifies to exactly
/// {¬P(b,c)}, {¬P(b,k), Q(b,c)}, {a, ¬Q(b,c)} with one record a ⇔ ∀x P(b,x).
fn purify_fixture(text: &str) -> Result<(), String> {
    let mut l = load(text).map_err(|e| e.to_string())?;
    let st = &mut l.store;
    let p = &l.problem;
    if p.records.len() != 1 || p.skolems.len() != 1 {
        return Err(format!("{} records, {} skolems", p.records.len(), p.skolems.len()));
    }
    let get = |st: &Store, n: &str| st.func_by_name(n).unwrap();
    let (pf, qf, b, c) = (get(st, "P"), get(st, "Q"), get(st, "b"), get(st, "c"));
    let (b, c) = (st.app(b, &[]), st.app(c, &[]));
    let k = st.app(p.skolems[0], &[]);
    let (pbc, qbc, pbk) = (st.app(pf, &[b, c]), st.app(qf, &[b, c]), st.app(pf, &[b, k]));
    let a = p.records[0].lit;
    let want: BTreeSet<Clause> = [
        vec![st.pred_lit(pbc, false)],
        vec![st.pred_lit(pbk, false), st.pred_lit(qbc, true)],
        vec![a, st.pred_lit(qbc, false)],
    ]
    .into_iter()
    .map(Clause::new)
    .collect();
    let got: BTreeSet<Clause> = p.clauses.iter().map(|c| Clause::new(c.clone())).collect();
    if got != want {
        return Err("purified clauses differ".into());
    }
    let r = &p.records[0];
    let Node::App { args, .. } = st.node(r.body).clone() else { return Err("record body".into()) };
    if r.vars.len() != 1 || st.as_app(r.body).map(|x| x.0) != Some(pf) || args[0] != b || args[1] != r.vars[0] {
        return Err("record is not a ⇔ ∀x P(b,x)".into());
    }
    Ok(())
}

fn c7_suite() -> Outcome {
    let t = Instant::now();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/suite");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "smt2"))
        .collect();
    files.sort();
    if files.len() < 30 {
        return Err(format!("only {} problems in the suite", files.len()));
    }
    let mut bad = Vec::new();
    let (mut sat, mut unsat, mut two_sorts) = (0, 0, 0);
    for f in &files {
        let name = f.file_name().unwrap().to_string_lossy().to_string();
        let text = std::fs::read_to_string(f).map_err(|e| e.to_string())?;
        let mut l = load(&text).map_err(|e| format!("{name}: {e}"))?;
        two_sorts += (l.store.uninterpreted_sorts().len() > 1) as usize;
        let purified = oracle_solve(&l.store, &l.problem, 4, 1e8).map_err(|e| format!("{name}: {e}"))?;
        let direct = oracle_formulas(&l.store, &l.assertions, 4, 1e8).map_err(|e| format!("{name}: {e}"))?;
        if purified != direct {
            bad.push(format!("{name}: purified {purified:?} but direct {direct:?}"));
        }
        let cfg = SolverConfig { max_card: 4, timeout: Some(Duration::from_secs(10)), ..SolverConfig::default() };
        let res = solve(&mut l.store, &mut l.problem, &cfg).map_err(|e| format!("{name}: {e}"))?;
        let want: Vec<(String, usize)> = match &direct {
            OracleVerdict::Sat(cs) => cs.iter().map(|&(s, k)| (l.store.sort_name(s).to_string(), k as usize)).collect(),
            OracleVerdict::UnsatUpTo(_) => vec![],
        };
        let ok = match res.verdict {
            Verdict::Sat => {
                sat += 1;
                let m = res.model.as_ref().unwrap();
                if !validate_model(&l.store, m, &l.problem) {
                    bad.push(format!("{name}: model fails validation"));
                }
                res.stats.cards == want
            }
            Verdict::Unsat | Verdict::Unknown => {
                unsat += 1;
                direct == OracleVerdict::UnsatUpTo(4)
            }
        };
        if !ok {
            bad.push(format!("{name}: solver {:?} {:?}, oracle {direct:?}", res.verdict, res.stats.cards));
        }
        if name == "purify_example.smt2" {
            if let Err(e) = purify_fixture(&text) {
                bad.push(format!("{name}: {e}"));
            }
        }
    }
    failures("problems", &bad, files.len())?;
    if sat == 0 || unsat == 0 || two_sorts == 0 {
        return Err(format!("suite lacks variety: {sat} sat, {unsat} unsat, {two_sorts} with two sorts"));
    }
    within(t, 120, format!("{} problems match ({sat} sat, {unsat} without a model up to 4)", files.len()))
}

fn c8_region_fuzz() -> Outcome {
    let t = Instant::now();
    let mut bad = Vec::new();
    for seed in 0..10_000u64 {
        if let Err(e) = region_events(seed, 60) {
            bad.push(format!("seed {seed}: {e}"));
        }
    }
    failures("sequences", &bad, 10_000)?;
    within(t, 600, "10000/10000 sequences keep the invariants".into())
}

fn consts(st: &mut Store, s: SortId, names: &[&str]) -> Vec<TermId> {
    names
        .iter()
        .map(|n| {
            let f = st.declare_fun(n, vec![], s).unwrap();
            st.app(f, &[])
        })
        .collect()
}

fn split_example() -> Result<(), String> {
    // a ≈ f(b), b ≈ f(c), a ≉ b, b ≉ c: the strong check guesses a ≈ c.
    let text = "(declare-sort S 0)(declare-fun a () S)(declare-fun b () S)(declare-fun c () S)\
                (declare-fun f (S) S)(assert (= a (f b)))(assert (= b (f c)))\
                (assert (not (= a b)))(assert (not (= b c)))(check-sat)";
    let mut l = load(text).map_err(|e| e.to_string())?;
    let res = solve(&mut l.store, &mut l.problem, &SolverConfig::default()).map_err(|e| e.to_string())?;
    if res.verdict != Verdict::Sat || res.stats.cards != vec![("S".to_string(), 2)] {
        return Err(format!("split example gave {:?} {:?}", res.verdict, res.stats.cards));
    }
    let mut st = Store::new();
    let s = st.declare_sort("S").unwrap();
    let v = consts(&mut st, s, &["a", "b", "c"]);
    let f = st.declare_fun("f", vec![s], s).unwrap();
    let (fb, fc) = (st.app(f, &[v[1]]), st.app(f, &[v[2]]));
    let lits = vec![
        st.eq_lit(v[0], fb, true),
        st.eq_lit(v[1], fc, true),
        st.eq_lit(v[0], v[1], false),
        st.eq_lit(v[1], v[2], false),
        st.card_lit(CardScope::Sort(s), 2, true),
    ];
    let mut eng = new_engine(&mut st, vec![s], FccConfig { ladder: false, ..FccConfig::default() });
    for &l in &lits {
        eng.add_clause(&mut st, vec![l], false);
    }
    for l in eng.sat.trail().to_vec() {
        eng.theory.assert_lit(&mut st, l).map_err(|_| "unexpected conflict")?;
    }
    let weak = eng.theory.weak_effort(&mut st, &eng.sat);
    let strong = eng.theory.strong_effort(&mut st, &eng.sat);
    let ac = st.eq_lit(v[0], v[2], true);
    if weak != Action::Clean || strong != (Action::Learn { clause: vec![ac, !ac], phase: Some(ac) }) {
        return Err(format!("split lemma: weak {weak:?}, strong {strong:?}"));
    }
    Ok(())
}

fn clique_example() -> Result<(), String> {
    // c1 ≈ c, c4 ≈ c, c1 ≉ c2, c2 ≉ c3, c3 ≉ c4 under |S| ≤ 2.
    let mut st = Store::new();
    let s = st.declare_sort("S").unwrap();
    let v = consts(&mut st, s, &["c", "c1", "c2", "c3", "c4"]);
    let lits = vec![
        st.eq_lit(v[1], v[0], true),
        st.eq_lit(v[4], v[0], true),
        st.eq_lit(v[1], v[2], false),
        st.eq_lit(v[2], v[3], false),
        st.eq_lit(v[3], v[4], false),
        st.card_lit(CardScope::Sort(s), 2, true),
    ];
    let mut eng = new_engine(&mut st, vec![s], FccConfig { ladder: false, ..FccConfig::default() });
    for &l in &lits {
        eng.add_clause(&mut st, vec![l], false);
    }
    for l in eng.sat.trail().to_vec() {
        eng.theory.assert_lit(&mut st, l).map_err(|_| "unexpected conflict")?;
    }
    let act = eng.theory.weak_effort(&mut st, &eng.sat);
    let Action::Learn { clause, phase: None } = act else { return Err(format!("expected a clique lemma, got {act:?}")) };
    // The class of c is represented by whichever of c, c1, c4 the e-graph
    // picked, so compare the terms the lemma mentions up to that class.
    let class: HashSet<TermId> = [v[0], v[1], v[4]].into();
    let norm = |t: TermId| if class.contains(&t) { v[0] } else { t };
    let want = Clause::new(vec![
        st.card_lit(CardScope::Sort(s), 2, false),
        st.eq_lit(v[0], v[2], true),
        st.eq_lit(v[0], v[3], true),
        st.eq_lit(v[2], v[3], true),
    ]);
    let mut got = Vec::new();
    for l in clause {
        got.push(match st.atom(l.atom()) {
            finimod::kernel::Atom::Eq(a, b) => st.eq_lit(norm(a), norm(b), l.is_pos()),
            _ => l,
        });
    }
    if Clause::new(got) != want {
        return Err("clique lemma is not ¬card(S,2) ∨ c≈c2 ∨ c≈c3 ∨ c2≈c3".into());
    }
    Ok(())
}

fn defining_map_example() -> Result<(), String> {
    let mut st = Store::new();
    let s = st.declare_sort("S").unwrap();
    let e = consts(&mut st, s, &["e"])[0];
    let mut c = vec![e];
    c.extend(consts(&mut st, s, &["c1", "c2", "c3", "c4", "c5", "c6"]));
    let f = st.declare_fun("f", vec![s, s], s).unwrap();
    let ap = |st: &mut Store, x: TermId, y: TermId| st.app(f, &[x, y]);
    let eqs = [
        (c[1], ap(&mut st, c[2], e)),
        (c[3], ap(&mut st, c[4], c[6])),
        (c[3], ap(&mut st, e, c[4])),
        (c[6], ap(&mut st, c[2], c[5])),
        (c[2], c[5]),
        (c[4], ap(&mut st, e, e)),
    ];
    let mut eg = EGraph::new();
    for &t in &c {
        eg.add_term(&st, t);
    }
    for &(a, b) in &eqs {
        eg.add_term(&st, a);
        eg.add_term(&st, b);
    }
    for &(a, b) in &eqs {
        let l = st.eq_lit(a, b, true);
        eg.assert_lit(&st, l).map_err(|_| "conflict")?;
    }
    let m = build_model(&st, &eg, &[s]);
    if m.domain(s) != [e, c[1], c[2], c[3], c[4], c[6]] {
        return Err(format!("domain {:?}", m.domain(s)));
    }
    let d = &m.maps[&f];
    let listed = [
        (vec![Some(c[2]), Some(e)], c[1]),
        (vec![Some(c[4]), Some(c[6])], c[3]),
        (vec![Some(c[2]), Some(c[2])], c[6]),
        (vec![Some(e), Some(e)], c[4]),
        (vec![Some(c[2]), None], c[1]),
        (vec![None, Some(c[4])], c[3]),
        (vec![None, None], c[4]),
        (vec![Some(c[2]), Some(c[4])], c[1]),
    ];
    for entry in &listed {
        if !d.entries.contains(entry) {
            return Err(format!("missing entry {entry:?}"));
        }
    }
    let extra: Vec<_> = d.entries.iter().filter(|x| !listed.contains(x)).collect();
    if extra != vec![&(vec![Some(e), Some(c[4])], c[3])] {
        return Err(format!("unexpected entries {extra:?}"));
    }
    let doms = vec![m.domain(s).to_vec(); 2];
    if !validate_defining_map(d, Some(&doms)).is_empty() {
        return Err("the map fails validation".into());
    }
    let probes = [((c[2], c[3]), c[1]), ((c[6], c[4]), c[3]), ((c[3], c[3]), c[4])];
    for ((x, y), want) in probes {
        let t = st.app(f, &[x, y]);
        if m.eval_ground(&st, t) != want {
            return Err(format!("f({}, {}) evaluates wrong", st.display(x), st.display(y)));
        }
    }
    Ok(())
}

fn eval_example() -> Result<(), String> {
    let mut st = Store::new();
    let s = st.declare_sort("S").unwrap();
    let abc = consts(&mut st, s, &["a", "b", "c"]);
    let (a, b, c) = (abc[0], abc[1], abc[2]);
    let f = st.declare_fun("f", vec![s], s).unwrap();
    let g = st.declare_fun("g", vec![s, s], s).unwrap();
    let h = st.declare_fun("h", vec![s, s], s).unwrap();
    let (x1, x2) = (st.mk_var("x1", s), st.mk_var("x2", s));
    let fx1 = st.app(f, &[x1]);
    let gx2b = st.app(g, &[x2, b]);
    let hx2x1 = st.app(h, &[x2, x1]);
    let e1 = st.mk_eq(fx1, gx2b).unwrap();
    let e2 = st.mk_eq(hx2x1, b).unwrap();
    let ne2 = st.mk_not(e2).unwrap();
    let body = st.mk_or(vec![e1, ne2]).unwrap();
    let mut maps = BTreeMap::new();
    for &t in &abc {
        let (k, _) = st.as_app(t).unwrap();
        maps.insert(k, DefiningMap { func: k, entries: vec![(vec![], t)] });
    }
    maps.insert(g, DefiningMap { func: g, entries: vec![(vec![Some(a), Some(a)], c), (vec![None, Some(b)], a), (vec![None, None], b)] });
    maps.insert(f, DefiningMap { func: f, entries: vec![(vec![Some(b)], b), (vec![None], a)] });
    maps.insert(h, DefiningMap { func: h, entries: vec![(vec![None, None], b)] });
    let model = CandidateModel::from_parts(&st, BTreeMap::from([(s, abc.clone())]), maps);
    let ev = Evaluator::new(&model);
    let sigma = Subst::from_pairs(&st, [(x1, a), (x2, a)]);
    let set = |v: &[TermId]| v.iter().copied().collect::<BTreeSet<_>>();
    let (tt, ff) = (model.t_true(), model.t_false());
    let table = [
        (x1, a, set(&[x1])),
        (x2, a, set(&[x2])),
        (b, b, set(&[])),
        (fx1, a, set(&[x1])),
        (gx2b, a, set(&[])),
        (hx2x1, b, set(&[])),
        (e1, tt, set(&[x1])),
        (ne2, ff, set(&[])),
        (body, tt, set(&[x1])),
    ];
    for (t, value, critical) in table {
        let got = ev.eval(&st, t, &sigma).map_err(|e| format!("{e:?}"))?;
        if got != (EvalResult { value, critical }) {
            return Err(format!("eval of {} gave {got:?}", st.display(t)));
        }
    }
    let q = QuantRecord { proxy: FuncId(0), lit: Lit(0), vars: vec![x1, x2], body, formula: body };
    let got = h_m(&ev, &st, &q, 0);
    let want = vec![Subst::from_pairs(&st, [(x1, b), (x2, a)])];
    if got != want {
        return Err(format!("h_m returned {} instances, expected only x1 = b, x2 = a", got.len()));
    }
    let chosen = choose_instances(InstMode::Mbqi, &ev, &st, &q, &EGraph::new(), &HashSet::new(), 0);
    if chosen != want {
        return Err("mbqi selection differs from h_m".into());
    }
    Ok(())
}

fn c9_worked_examples() -> Outcome {
    let t = Instant::now();
    let mut bad = Vec::new();
    for (name, f) in [
        ("split lemma", split_example as fn() -> Result<(), String>),
        ("clique lemma", clique_example),
        ("defining map", defining_map_example),
        ("eval and h_m tables", eval_example),
    ] {
        if let Err(e) = f() {
            bad.push(format!("{name}: {e}"));
        }
    }
    failures("examples", &bad, 4)?;
    within(t, 60, "4/4 examples reproduce".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("ground oracle equivalence", c1_ground_oracles),
        ("minimal cardinality on small colourings", c2_colouring_minimum),
        ("ablation agreement on larger colourings", c3_ablation),
        ("defining map validity", c4_model_validity),
        ("h_m certification", c5_h_m),
        ("eval generalization soundness", c6_eval_generalization),
        ("curated problem suite", c7_suite),
        ("region invariant fuzzing", c8_region_fuzz),
        ("worked examples", c9_worked_examples),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let out = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match out {
            Ok(detail) => println!("PASS {n} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n} {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
