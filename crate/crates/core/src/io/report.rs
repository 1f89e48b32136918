//! JSON reports. Rationals are written as strings such as `"3/2"` so that
//! exact values survive; `schema/report.schema.json` describes every kind.

use std::collections::BTreeMap;

use num::ToPrimitive;
use serde::Serialize;

use crate::bounds::{BoundOutcome, RuntimeBound};
use crate::cfr::RefinementResult;
use crate::invariants::InvariantMap;
use crate::io::print::print_program;
use crate::program::{Pip, Prob};
use crate::semantics::embedding::EmbeddingReport;
use crate::semantics::enumerate::{HorizonReport, PathRecord};
use crate::semantics::simulate::McReport;

pub const SCHEMA: &str = include_str!("../../schema/report.schema.json");

fn q(x: &Prob) -> String {
    x.to_string()
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Report {
    Refine {
        program: String,
        locations: usize,
        transitions: usize,
        steps: usize,
        step_bound: String,
        pruned_transitions: usize,
        pruned_locations: usize,
        origin: BTreeMap<String, String>,
    },
    Invariants {
        invariants: BTreeMap<String, String>,
    },
    Bound {
        bounded: bool,
        total: Option<String>,
        entries: Vec<EntryJson>,
        failing: Vec<FailingJson>,
    },
    Enumerate {
        horizon: usize,
        total_mass: String,
        expected_truncated_runtime: String,
        terminated_mass: String,
        residual_mass: String,
        per_gt: BTreeMap<String, String>,
        paths: Vec<PathJson>,
    },
    Simulate {
        samples: usize,
        mean: f64,
        stderr: f64,
        censored: usize,
    },
    MdpSup {
        horizon: usize,
        value: String,
        approx: f64,
    },
    CheckEmbedding {
        ok: bool,
        original_paths: usize,
        refined_paths: usize,
        counterexample: Option<CounterexampleJson>,
    },
}

#[derive(Serialize)]
pub struct EntryJson {
    pub targets: Vec<String>,
    pub plrf: String,
    pub bound: String,
    pub f: BTreeMap<String, String>,
}

#[derive(Serialize)]
pub struct FailingJson {
    pub gt: String,
    pub reason: String,
}

#[derive(Serialize)]
pub struct PathJson {
    pub path: String,
    pub probability: String,
    pub runtime: usize,
    pub terminated: bool,
}

#[derive(Serialize)]
pub struct CounterexampleJson {
    pub path: String,
    pub reason: String,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

pub fn refine(r: &RefinementResult) -> Report {
    Report::Refine {
        program: print_program(&r.program),
        locations: r.program.locations.len(),
        transitions: r.program.num_transitions(),
        steps: r.stats.steps,
        step_bound: r.stats.step_bound.to_string(),
        pruned_transitions: r.stats.pruned_transitions,
        pruned_locations: r.stats.pruned_locations,
        origin: r.origin.clone(),
    }
}

pub fn invariants(inv: &InvariantMap) -> Report {
    Report::Invariants {
        invariants: inv.iter().map(|(l, c)| (l.to_string(), c.to_string())).collect(),
    }
}

fn entries(p: &Pip, b: &RuntimeBound) -> Vec<EntryJson> {
    b.entries
        .iter()
        .map(|e| EntryJson {
            targets: e.targets.iter().map(|&gi| p.gts[gi].label()).collect(),
            plrf: e.plrf.kind.to_string(),
            bound: e.bound.to_string(),
            f: e.plrf.f.iter().map(|(l, a)| (l.to_string(), a.to_string())).collect(),
        })
        .collect()
}

pub fn bound(p: &Pip, out: &BoundOutcome) -> Report {
    match out {
        BoundOutcome::Bound(b) => Report::Bound {
            bounded: true,
            total: Some(b.total.to_string()),
            entries: entries(p, b),
            failing: Vec::new(),
        },
        BoundOutcome::NoBound(failing) => Report::Bound {
            bounded: false,
            total: None,
            entries: Vec::new(),
            failing: failing
                .iter()
                .map(|(gi, reason)| FailingJson {
                    gt: p.gts[*gi].label(),
                    reason: reason.clone(),
                })
                .collect(),
        },
    }
}

pub fn enumerate(p: &Pip, r: &HorizonReport, paths: &[PathRecord]) -> Report {
    Report::Enumerate {
        horizon: r.horizon,
        total_mass: q(&r.total_mass),
        expected_truncated_runtime: q(&r.expected_truncated_runtime),
        terminated_mass: q(&r.terminated_mass),
        residual_mass: q(&r.residual_mass),
        per_gt: r.per_gt.iter().map(|(g, x)| (g.clone(), q(x))).collect(),
        paths: paths
            .iter()
            .map(|f| PathJson {
                path: f.render(p),
                probability: q(&f.probability),
                runtime: f.runtime,
                terminated: f.terminated,
            })
            .collect(),
    }
}

pub fn simulate(r: &McReport) -> Report {
    Report::Simulate {
        samples: r.samples,
        mean: r.mean,
        stderr: r.stderr,
        censored: r.censored,
    }
}

pub fn mdp_sup(horizon: usize, value: &Prob) -> Report {
    Report::MdpSup {
        horizon,
        value: q(value),
        approx: value.to_f64().unwrap_or(f64::NAN),
    }
}

pub fn check_embedding(r: &EmbeddingReport) -> Report {
    Report::CheckEmbedding {
        ok: r.ok(),
        original_paths: r.original_paths,
        refined_paths: r.refined_paths,
        counterexample: r.counterexample.as_ref().map(|c| CounterexampleJson {
            path: c.path.clone(),
            reason: c.reason.clone(),
        }),
    }
}
