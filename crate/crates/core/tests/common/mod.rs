//! Shared fixtures for the integration suites.
#![allow(dead_code)]

use num::BigInt;

use pcfr::abstraction::LayerOptions;
use pcfr::abstraction::heuristic_layers;
use pcfr::cfr::{refine_and_prune, RefinementResult};
use pcfr::corpus;
use pcfr::gen::{random_pip, GenOptions};
use pcfr::io::config::RunConfig;
use pcfr::poly::State;
use pcfr::program::{Pip, TransId};
use pcfr::semantics::SchedulerPolicy;

pub fn values(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

pub fn xy(x: i64, y: i64) -> State {
    State::from_pairs([("x", x), ("y", y)])
}

/// `fig1` refined with the shipped configuration.
pub fn fig1_refined() -> (Pip, RefinementResult) {
    let p = corpus::fig1();
    let cfg = RunConfig::from_json(corpus::FIG1_CONFIG).unwrap();
    let r = refine_and_prune(&p, &cfg.selection(&p).unwrap(), &cfg.layers(&p).unwrap()).unwrap();
    (p, r)
}

/// Refinement of every transition with heuristic layers.
pub fn heuristic_refinement(p: &Pip) -> RefinementResult {
    let s: std::collections::BTreeSet<TransId> = p.transitions().map(|(id, _, _)| id).collect();
    let layers = heuristic_layers(p, &s, &LayerOptions::default());
    refine_and_prune(p, &s, &layers).unwrap()
}

pub fn random_programs(n: u64) -> Vec<Pip> {
    (0..n).map(|seed| random_pip(seed, &GenOptions::default())).collect()
}

/// `fig1` and `fig2` followed by `n` random programs.
pub fn corpus_programs(n: u64) -> Vec<Pip> {
    let mut v = vec![corpus::fig1(), corpus::fig2()];
    v.extend(random_programs(n));
    v
}

pub fn hashed(seed: u64, temps: &[i64]) -> SchedulerPolicy {
    SchedulerPolicy::hashed(seed, values(temps))
}
