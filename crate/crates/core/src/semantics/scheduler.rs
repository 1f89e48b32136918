//! Schedulers and their validation.
//!
//! A scheduler proposes, for a configuration (and possibly the path that led
//! to it), a general transition together with values for its temporaries, or
//! stops. [`resolve`] checks every proposal against the four scheduler
//! clauses before the proposal is used:
//!
//! * (a) the proposed valuation only assigns temporaries;
//! * (b) the general transition starts at the current location;
//! * (c) the extended state satisfies its guard and defines every variable
//!   the transition reads;
//! * (d) stopping is allowed only at the terminal location or when no
//!   general transition is enabled for any valuation over `temp_values`.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use num::BigInt;
use thiserror::Error;

use super::{Conf, Step};
use crate::constraint::Constraint;
use crate::poly::{State, Var};
use crate::program::{Loc, Pip};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision {
    Take {
        gt: String,
        temps: BTreeMap<Var, BigInt>,
    },
    Stop,
}

/// A validated decision: the general transition index and the extended state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Choice {
    Take { gt: usize, valuation: State },
    Stop,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("scheduler clause ({clause}) violated at {conf}: {message}")]
pub struct PolicyError {
    pub clause: char,
    pub conf: String,
    pub message: String,
}

pub trait Scheduler {
    fn decide(&self, p: &Pip, conf: &Conf, history: &[Step]) -> Decision;

    /// Finite value set for temporaries; clause (d) quantifies over it.
    fn temp_values(&self) -> &[BigInt];

    fn is_history_dependent(&self) -> bool {
        false
    }
}

/// Temporaries read by a general transition, in variable order.
pub fn gt_temporaries(p: &Pip, gi: usize) -> Vec<Var> {
    p.gts[gi]
        .vars()
        .into_iter()
        .filter(|v| !p.is_program_var(v))
        .collect()
}

/// Every `(g, extended state)` pair enabled at `conf` with temporaries drawn
/// from `values`, in program order then lexicographic valuation order.
pub fn enabled_choices(p: &Pip, conf: &Conf, values: &[BigInt]) -> Vec<(usize, State)> {
    let Some(loc) = &conf.loc else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for gi in p.outgoing(loc) {
        let temps = gt_temporaries(p, gi);
        let mut valuations: Vec<Vec<&BigInt>> = vec![Vec::new()];
        for _ in &temps {
            valuations = valuations
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |x| {
                        let mut w = prefix.clone();
                        w.push(x);
                        w
                    })
                })
                .collect();
        }
        for vals in valuations {
            let mut s = conf.state.clone();
            for (v, x) in temps.iter().zip(vals) {
                s.set(v.clone(), x.clone());
            }
            if p.gts[gi].guard.satisfied_by(&s).unwrap_or(false) {
                out.push((gi, s));
            }
        }
    }
    out
}

fn violation(clause: char, conf: &Conf, message: String) -> PolicyError {
    PolicyError {
        clause,
        conf: conf.to_string(),
        message,
    }
}

pub fn resolve(
    p: &Pip,
    sched: &dyn Scheduler,
    conf: &Conf,
    history: &[Step],
) -> Result<Choice, PolicyError> {
    let Some(loc) = &conf.loc else {
        return Ok(Choice::Stop);
    };
    match sched.decide(p, conf, history) {
        Decision::Stop => {
            if let Some((gi, _)) = enabled_choices(p, conf, sched.temp_values()).first() {
                return Err(violation(
                    'd',
                    conf,
                    format!("stopped although {} is enabled", p.gts[*gi].label()),
                ));
            }
            Ok(Choice::Stop)
        }
        Decision::Take { gt, temps } => {
            let Some(gi) = p.gts.iter().position(|g| g.name == gt) else {
                return Err(violation('b', conf, format!("unknown general transition {gt}")));
            };
            let g = &p.gts[gi];
            if g.source != *loc {
                return Err(violation('b', conf, format!("{} does not start at {loc}", g.label())));
            }
            let mut valuation = conf.state.clone();
            for (v, x) in temps {
                if p.is_program_var(&v) {
                    return Err(violation('a', conf, format!("valuation changes program variable {v}")));
                }
                valuation.set(v, x);
            }
            for v in g.vars() {
                if valuation.get(&v).is_none() {
                    return Err(violation('c', conf, format!("valuation leaves {v} unassigned")));
                }
            }
            if !g.guard.satisfied_by(&valuation).unwrap_or(false) {
                return Err(violation('c', conf, format!("guard {} of {} fails", g.guard, g.label())));
            }
            Ok(Choice::Take { gt: gi, valuation })
        }
    }
}

/// How a [`SchedulerPolicy`] decides when no rule matches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fallback {
    /// The first enabled choice.
    FirstEnabled,
    /// An enabled choice picked by hashing the configuration with a seed.
    Hashed(u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyRule {
    pub location: Loc,
    pub when: Constraint,
    pub decision: Decision,
}

/// A decision table. History entries take precedence over rules, rules
/// are tried in order, and the fallback covers everything else.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchedulerPolicy {
    pub rules: Vec<PolicyRule>,
    /// Keyed by the names of the transitions taken so far.
    pub history: BTreeMap<Vec<String>, Decision>,
    pub fallback: Fallback,
    pub temp_values: Vec<BigInt>,
}

impl SchedulerPolicy {
    pub fn first_enabled(temp_values: Vec<BigInt>) -> SchedulerPolicy {
        SchedulerPolicy {
            rules: Vec::new(),
            history: BTreeMap::new(),
            fallback: Fallback::FirstEnabled,
            temp_values,
        }
    }

    pub fn hashed(seed: u64, temp_values: Vec<BigInt>) -> SchedulerPolicy {
        SchedulerPolicy {
            fallback: Fallback::Hashed(seed),
            ..SchedulerPolicy::first_enabled(temp_values)
        }
    }
}

fn take(p: &Pip, gi: usize, valuation: &State) -> Decision {
    Decision::Take {
        gt: p.gts[gi].name.clone(),
        temps: gt_temporaries(p, gi)
            .into_iter()
            .map(|v| {
                let x = valuation.get(&v).cloned().expect("enabled choice assigns temporaries");
                (v, x)
            })
            .collect(),
    }
}

impl Scheduler for SchedulerPolicy {
    fn decide(&self, p: &Pip, conf: &Conf, history: &[Step]) -> Decision {
        let Some(loc) = &conf.loc else {
            return Decision::Stop;
        };
        if !self.history.is_empty() {
            let names: Vec<String> = history.iter().map(|s| s.name(p)).collect();
            if let Some(d) = self.history.get(&names) {
                return d.clone();
            }
        }
        for r in &self.rules {
            if r.location == *loc && r.when.satisfied_by(&conf.state).unwrap_or(false) {
                return r.decision.clone();
            }
        }
        let choices = enabled_choices(p, conf, &self.temp_values);
        if choices.is_empty() {
            return Decision::Stop;
        }
        let i = match self.fallback {
            Fallback::FirstEnabled => 0,
            Fallback::Hashed(seed) => {
                let mut h = DefaultHasher::new();
                seed.hash(&mut h);
                conf.hash(&mut h);
                (h.finish() % choices.len() as u64) as usize
            }
        };
        take(p, choices[i].0, &choices[i].1)
    }

    fn temp_values(&self) -> &[BigInt] {
        &self.temp_values
    }

    fn is_history_dependent(&self) -> bool {
        !self.history.is_empty()
    }
}
