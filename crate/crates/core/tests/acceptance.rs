//! End-to-end checks, one line per criterion. Exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num::{BigInt, One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use pcfr::abstraction::{heuristic_layers, LayerOptions};
use pcfr::bounds::{analyze, default_cover, BoundOutcome, PlrfKind};
use pcfr::cfr::{refine, refine_and_prune, unrolling_step_bound};
use pcfr::constraint::{Atom, Cmp, Constraint};
use pcfr::corpus;
use pcfr::entail::{entails, is_satisfiable, Satisfiability};
use pcfr::invariants::infer;
use pcfr::io::config::RunConfig;
use pcfr::poly::{Polynomial, State, Var};
use pcfr::program::{prob, Loc, Prob};
use pcfr::semantics::embedding::check_embedding;
use pcfr::semantics::enumerate::horizon_report;
use pcfr::semantics::mdp::mdp_sup_truncated;
use pcfr::semantics::simulate::monte_carlo;
use pcfr::semantics::{Caps, SchedulerPolicy};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn golden_refinement() -> Outcome {
    let start = Instant::now();
    let p = corpus::fig1();
    let cfg = RunConfig::from_json(corpus::FIG1_CONFIG).map_err(|e| e.to_string())?;
    let s = cfg.selection(&p).map_err(|e| e.to_string())?;
    let names: BTreeSet<&str> = s.iter().map(|&id| p.transition(id).name.as_str()).collect();
    ensure(names == BTreeSet::from(["t1a", "t1b", "t2", "t3"]), || format!("selection {names:?}"))?;
    let r = refine_and_prune(&p, &s, &cfg.layers(&p).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    within(start, Duration::from_secs(1))?;
    let q = &r.program;
    ensure(q.locations.len() == 4, || format!("{} locations", q.locations.len()))?;
    ensure(q.num_transitions() == 5, || format!("{} transitions", q.num_transitions()))?;
    ensure(q.find_transition("t2''").is_none(), || "t2'' present".into())?;
    let gi = q.find_gt("t1a'").ok_or("t1a' missing")?;
    let g = &q.gts[gi];
    let members: Vec<&str> = g.members.iter().map(|t| t.name.as_str()).collect();
    ensure(members == ["t1a'", "t1b'"], || format!("members {members:?}"))?;
    ensure(g.members.iter().all(|t| t.prob == prob(1, 2)), || "probabilities".into())?;
    let x_pos = Atom::new(&Polynomial::var("x"), Cmp::Gt, &Polynomial::zero());
    ensure(g.guard.atoms().eq([&x_pos]), || format!("guard {}", g.guard))?;
    ensure(*q == corpus::fig2(), || "not isomorphic to the reference program".into())?;
    Ok(format!("4 locations, 5 transitions, {:?}", start.elapsed()))
}

fn bound_reproduction() -> Outcome {
    let start = Instant::now();
    let (p, r) = fig1_refined();
    let q = &r.program;
    let BoundOutcome::Bound(b) = analyze(q, &infer(q), &default_cover(q)).map_err(|e| e.to_string())? else {
        return Err("refined program unbounded".into());
    };
    ensure(b.total.to_string() == "3 + 2*y", || format!("total {}", b.total))?;
    let l1 = Loc::new("l1");
    let l1x = Loc::new("l1[x = 0]");
    let constant = b.entries.iter().find(|e| {
        e.plrf.kind == PlrfKind::Constant
            && e.plrf.at(&l1).to_string() == "2"
            && e.plrf.at(&l1x).to_string() == "0"
    });
    ensure(constant.is_some(), || "constant certificate missing".into())?;
    match analyze(&p, &infer(&p), &default_cover(&p)).map_err(|e| e.to_string())? {
        BoundOutcome::NoBound(_) => {}
        BoundOutcome::Bound(b) => return Err(format!("unrefined program bounded by {}", b.total)),
    }
    within(start, Duration::from_secs(5))?;
    Ok(format!("total {}, unrefined unbounded, {:?}", b.total, start.elapsed()))
}

fn exact_mdp() -> Outcome {
    let start = Instant::now();
    let (p, q) = (corpus::fig1(), corpus::fig2());
    let temps = values(&[1, 2]);
    for y in 0..=5 {
        let s = xy(0, y);
        let a = mdp_sup_truncated(&p, &s, 40, &temps, &Caps::default()).map_err(|e| e.to_string())?;
        let b = mdp_sup_truncated(&q, &s, 40, &temps, &Caps::default()).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("y = {y}: {a} vs {b}"))?;
        if y > 0 {
            let gap = (a.to_f64().unwrap_or(f64::NAN) - (3 + 2 * y) as f64).abs();
            ensure(gap < 1e-6, || format!("y = {y}: value {a} is {gap} from {}", 3 + 2 * y))?;
        }
    }
    within(start, Duration::from_secs(30))?;
    Ok(format!("y in 0..=5 equal, {:?}", start.elapsed()))
}

fn embedding_oracle() -> Outcome {
    let start = Instant::now();
    let (p, r) = fig1_refined();
    let mut checked = 0;
    for seed in 0..20 {
        for y in 0..3 {
            let rep = check_embedding(&p, &r, &hashed(seed, &[1, 2]), &xy(0, y), 12, &Caps::default())
                .map_err(|e| e.to_string())?;
            if let Some(c) = rep.counterexample {
                return Err(format!("policy {seed}, y = {y}: {} ({})", c.path, c.reason));
            }
            checked += 1;
        }
    }
    for (i, p) in random_programs(50).iter().enumerate() {
        let r = heuristic_refinement(p);
        for x in [-1, 0, 2] {
            let rep = check_embedding(p, &r, &hashed(i as u64, &[0, 1]), &xy(x, 1), 8, &Caps::default())
                .map_err(|e| e.to_string())?;
            if let Some(c) = rep.counterexample {
                return Err(format!("random program {i}: {} ({})", c.path, c.reason));
            }
            checked += 1;
        }
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!("{checked} embeddings, {:?}", start.elapsed()))
}

fn mass_and_monotonicity() -> Outcome {
    let start = Instant::now();
    let programs = corpus_programs(50);
    for (i, p) in programs.iter().enumerate() {
        let pol = hashed(i as u64, &[0, 1]);
        let mut last = Prob::zero();
        for h in 0..=10 {
            let r = horizon_report(p, &pol, xy(1, 2), h, &Caps::default()).map_err(|e| e.to_string())?;
            ensure(r.total_mass == Prob::one(), || format!("program {i}, horizon {h}: mass {}", r.total_mass))?;
            ensure(r.expected_truncated_runtime >= last, || format!("program {i}, horizon {h}: decreased"))?;
            last = r.expected_truncated_runtime;
        }
    }
    Ok(format!("{} programs, horizons 0..=10, {:?}", programs.len(), start.elapsed()))
}

const VARS: [&str; 3] = ["a", "b", "c"];

fn random_atom(rng: &mut ChaCha8Rng, n: usize) -> Atom {
    let mut p = Polynomial::constant(rng.gen_range(-3..=3));
    for v in &VARS[..n] {
        p = &p + &Polynomial::var(*v).scale(&BigInt::from(rng.gen_range(-3..=3)));
    }
    let cmp = [Cmp::Le, Cmp::Lt, Cmp::Eq, Cmp::Ge, Cmp::Gt][rng.gen_range(0..5)];
    Atom::new(&p, cmp, &Polynomial::zero())
}

fn grid(n: usize) -> Vec<State> {
    let mut out = vec![State::new()];
    for v in &VARS[..n] {
        out = out
            .into_iter()
            .flat_map(|s| {
                (-8i64..=8).map(move |x| {
                    let mut t = s.clone();
                    t.set(Var::new(v), x.into());
                    t
                })
            })
            .collect();
    }
    out
}

fn entailment_soundness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grids: Vec<Vec<State>> = (0..=3).map(grid).collect();
    let (mut unsat, mut entailed) = (0, 0);
    for query in 0..1000 {
        let n = rng.gen_range(1..=3);
        let k = rng.gen_range(0..=4);
        let premise = Constraint::from_atoms((0..k).map(|_| random_atom(&mut rng, n)).collect::<Vec<_>>());
        let conclusion = random_atom(&mut rng, n);
        let models: Vec<&State> = grids[n]
            .iter()
            .filter(|s| premise.satisfied_by(s).unwrap())
            .collect();
        if is_satisfiable(&premise) == Satisfiability::Unsat {
            unsat += 1;
            ensure(models.is_empty(), || format!("query {query}: {premise} claimed unsat"))?;
        }
        if entails(&premise, &conclusion) {
            entailed += 1;
            let bad = models.iter().find(|s| !conclusion.holds(s).unwrap());
            ensure(bad.is_none(), || format!("query {query}: {premise} does not entail {conclusion}"))?;
        }
    }
    Ok(format!("1000 queries, {unsat} unsat, {entailed} entailed, {:?}", start.elapsed()))
}

fn monte_carlo_consistency() -> Outcome {
    let start = Instant::now();
    let pol = SchedulerPolicy::first_enabled(values(&[1]));
    let mut means = Vec::new();
    for (name, p) in [("fig1", corpus::fig1()), ("fig2", corpus::fig2())] {
        let run = || monte_carlo(&p, &pol, &xy(0, 2), 100_000, 10_000, 7).map_err(|e| e.to_string());
        let (a, b) = (run()?, run()?);
        ensure(a.mean == b.mean && a.stderr == b.stderr, || format!("{name}: not deterministic"))?;
        ensure(a.censored == 0, || format!("{name}: {} runs censored", a.censored))?;
        ensure((a.mean - 7.0).abs() <= 3.0 * a.stderr, || {
            format!("{name}: mean {} stderr {}", a.mean, a.stderr)
        })?;
        means.push(format!("{name} {:.4} ± {:.4}", a.mean, a.stderr));
    }
    Ok(format!("{}, {:?}", means.join(", "), start.elapsed()))
}

fn step_bound_conformance() -> Outcome {
    let start = Instant::now();
    let cfg = RunConfig::from_json(corpus::FIG1_CONFIG).map_err(|e| e.to_string())?;
    let p = corpus::fig1();
    let layers = cfg.layers(&p).map_err(|e| e.to_string())?;
    let r = refine(&p, &cfg.selection(&p).map_err(|e| e.to_string())?, &layers).map_err(|e| e.to_string())?;
    let bound = unrolling_step_bound(&p, &layers);
    ensure(r.stats.steps as u128 <= bound, || format!("fig1: {} steps, bound {bound}", r.stats.steps))?;
    let programs = corpus_programs(50);
    for (i, p) in programs.iter().enumerate() {
        let s = p.transitions().map(|(id, _, _)| id).collect();
        let layers = heuristic_layers(p, &s, &LayerOptions::default());
        let r = refine(p, &s, &layers).map_err(|e| e.to_string())?;
        let bound = unrolling_step_bound(p, &layers);
        ensure(r.stats.steps as u128 <= bound, || format!("program {i}: {} steps, bound {bound}", r.stats.steps))?;
    }
    Ok(format!("{} refinements, {:?}", programs.len() + 1, start.elapsed()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("golden refinement", golden_refinement),
        ("bound reproduction", bound_reproduction),
        ("exact mdp equality", exact_mdp),
        ("embedding oracle", embedding_oracle),
        ("mass conservation and monotonicity", mass_and_monotonicity),
        ("entailment soundness", entailment_soundness),
        ("monte carlo consistency", monte_carlo_consistency),
        ("step bound conformance", step_bound_conformance),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
