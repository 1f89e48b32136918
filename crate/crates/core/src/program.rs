//! Probabilistic integer programs: locations, general transitions and
//! structural validation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use num::{BigRational, One, Signed, Zero};

use crate::constraint::{Constraint, Update};
use crate::entail::{is_satisfiable, Satisfiability};
use crate::poly::Var;

pub type Prob = BigRational;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Loc(Arc<str>);

impl Loc {
    pub fn new(name: &str) -> Loc {
        Loc(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Loc {
    fn from(s: &str) -> Loc {
        Loc::new(s)
    }
}

/// One probabilistic branch of a general transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub name: String,
    pub prob: Prob,
    pub update: Update,
    pub target: Loc,
}

/// Branches sharing a source and a guard; probabilities sum to one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralTransition {
    pub name: String,
    pub source: Loc,
    pub guard: Constraint,
    pub members: Vec<Transition>,
}

impl GeneralTransition {
    pub fn is_singleton(&self) -> bool {
        self.members.len() == 1
    }

    /// `t0` for singletons, `{t1a,t1b}` otherwise.
    pub fn label(&self) -> String {
        if self.is_singleton() {
            self.members[0].name.clone()
        } else {
            let names: Vec<&str> = self.members.iter().map(|t| t.name.as_str()).collect();
            format!("{{{}}}", names.join(","))
        }
    }

    pub fn prob_sum(&self) -> Prob {
        self.members.iter().map(|t| t.prob.clone()).sum()
    }

    /// Variables read by the guard or any update.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut vs = self.guard.vars();
        for t in &self.members {
            vs.extend(t.update.vars_read());
        }
        vs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransId {
    pub gt: usize,
    pub member: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateLocation(Loc),
    DuplicateName(String),
    UnknownInitial(Loc),
    UnknownLocation { entity: String, loc: Loc },
    EmptyGeneralTransition(String),
    NonPositiveProbability { transition: String, prob: Prob },
    ProbabilitySum { gt: String, sum: Prob },
    TargetIsInitial(String),
    AssignsTemporary { transition: String, var: Var },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateLocation(l) => write!(f, "location {l} declared twice"),
            Violation::DuplicateName(n) => write!(f, "name {n} used twice"),
            Violation::UnknownInitial(l) => write!(f, "initial location {l} is not declared"),
            Violation::UnknownLocation { entity, loc } => {
                write!(f, "{entity}: unknown location {loc}")
            }
            Violation::EmptyGeneralTransition(g) => write!(f, "gt {g} has no branches"),
            Violation::NonPositiveProbability { transition, prob } => {
                write!(f, "{transition}: probability {prob} is not positive")
            }
            Violation::ProbabilitySum { gt, sum } => write!(f, "gt {gt} sums to {sum}"),
            Violation::TargetIsInitial(t) => write!(f, "{t}: target is initial location"),
            Violation::AssignsTemporary { transition, var } => {
                write!(f, "{transition}: assigns temporary variable {var}")
            }
        }
    }
}

/// A probabilistic integer program `(PV, L, l0, GT)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pip {
    pub program_vars: Vec<Var>,
    pub locations: Vec<Loc>,
    pub initial: Loc,
    pub gts: Vec<GeneralTransition>,
}

impl Pip {
    pub fn is_program_var(&self, v: &Var) -> bool {
        self.program_vars.contains(v)
    }

    /// Variables read anywhere that are not program variables.
    pub fn temporaries(&self) -> BTreeSet<Var> {
        self.gts
            .iter()
            .flat_map(GeneralTransition::vars)
            .filter(|v| !self.is_program_var(v))
            .collect()
    }

    pub fn transitions(&self) -> impl Iterator<Item = (TransId, &GeneralTransition, &Transition)> {
        self.gts.iter().enumerate().flat_map(|(gi, g)| {
            g.members
                .iter()
                .enumerate()
                .map(move |(mi, t)| (TransId { gt: gi, member: mi }, g, t))
        })
    }

    pub fn transition(&self, id: TransId) -> &Transition {
        &self.gts[id.gt].members[id.member]
    }

    pub fn num_transitions(&self) -> usize {
        self.gts.iter().map(|g| g.members.len()).sum()
    }

    pub fn find_transition(&self, name: &str) -> Option<TransId> {
        self.transitions()
            .find(|(_, _, t)| t.name == name)
            .map(|(id, _, _)| id)
    }

    /// Finds a general transition by its own name or by any member's name.
    pub fn find_gt(&self, name: &str) -> Option<usize> {
        self.gts
            .iter()
            .position(|g| g.name == name)
            .or_else(|| self.find_transition(name).map(|id| id.gt))
    }

    /// Indices of the general transitions leaving `l`, in program order.
    pub fn outgoing(&self, l: &Loc) -> Vec<usize> {
        (0..self.gts.len())
            .filter(|&i| self.gts[i].source == *l)
            .collect()
    }

    pub fn incoming(&self, l: &Loc) -> Vec<TransId> {
        self.transitions()
            .filter(|(_, _, t)| t.target == *l)
            .map(|(id, _, _)| id)
            .collect()
    }

    /// Locations reachable from the initial one along transitions whose
    /// guard is not provably unsatisfiable.
    pub fn reachable_locations(&self) -> BTreeSet<Loc> {
        let live: Vec<bool> = self
            .gts
            .iter()
            .map(|g| is_satisfiable(&g.guard) != Satisfiability::Unsat)
            .collect();
        let mut seen = BTreeSet::from([self.initial.clone()]);
        let mut queue = VecDeque::from([self.initial.clone()]);
        while let Some(l) = queue.pop_front() {
            for gi in self.outgoing(&l) {
                if !live[gi] {
                    continue;
                }
                for t in &self.gts[gi].members {
                    if seen.insert(t.target.clone()) {
                        queue.push_back(t.target.clone());
                    }
                }
            }
        }
        seen
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        let mut locs = BTreeSet::new();
        for l in &self.locations {
            if !locs.insert(l) {
                out.push(Violation::DuplicateLocation(l.clone()));
            }
        }
        if !locs.contains(&self.initial) {
            out.push(Violation::UnknownInitial(self.initial.clone()));
        }
        let mut gt_names = BTreeSet::new();
        let mut t_names = BTreeSet::new();
        for g in &self.gts {
            if !gt_names.insert(g.name.as_str()) {
                out.push(Violation::DuplicateName(g.name.clone()));
            }
            if !locs.contains(&g.source) {
                out.push(Violation::UnknownLocation {
                    entity: g.label(),
                    loc: g.source.clone(),
                });
            }
            if g.members.is_empty() {
                out.push(Violation::EmptyGeneralTransition(g.name.clone()));
                continue;
            }
            let sum = g.prob_sum();
            if !sum.is_one() {
                out.push(Violation::ProbabilitySum { gt: g.label(), sum });
            }
            for t in &g.members {
                if !t_names.insert(t.name.as_str()) {
                    out.push(Violation::DuplicateName(t.name.clone()));
                }
                if !t.prob.is_positive() {
                    out.push(Violation::NonPositiveProbability {
                        transition: t.name.clone(),
                        prob: t.prob.clone(),
                    });
                }
                if !locs.contains(&t.target) {
                    out.push(Violation::UnknownLocation {
                        entity: t.name.clone(),
                        loc: t.target.clone(),
                    });
                }
                if t.target == self.initial {
                    out.push(Violation::TargetIsInitial(t.name.clone()));
                }
                for (v, _) in t.update.assigned() {
                    if !self.is_program_var(v) {
                        out.push(Violation::AssignsTemporary {
                            transition: t.name.clone(),
                            var: v.clone(),
                        });
                    }
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Location graph edges, one per transition.
    pub fn edges(&self) -> impl Iterator<Item = (&Loc, &Loc, TransId)> {
        self.transitions().map(|(id, g, t)| (&g.source, &t.target, id))
    }

    /// Transition names mapped to their ids.
    pub fn transition_index(&self) -> BTreeMap<String, TransId> {
        self.transitions()
            .map(|(id, _, t)| (t.name.clone(), id))
            .collect()
    }
}

pub fn prob(n: i64, d: i64) -> Prob {
    debug_assert!(!d.is_zero());
    Prob::new(n.into(), d.into())
}
