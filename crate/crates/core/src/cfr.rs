//! Control-flow refinement by partial evaluation.
//!
//! Locations of the refined program are pairs `<l, tau>` of an original
//! location and a label drawn from `alpha_l`. Every `<l, true>` exists; from
//! each `<l, tau>` and each general transition `g` leaving `l` one copy of
//! `g` is made with guard `tau && phi_g`. A member in `S` moves to the label
//! of the atoms of `alpha_l'` implied after the step, any other member moves
//! to `<l', true>`. The worklist is FIFO and transitions are visited in
//! program order, so output is deterministic.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::abstraction::{label, AbstractionLayer};
use crate::constraint::Constraint;
use crate::entail::{is_satisfiable, Satisfiability};
use crate::invariants::{infer, InvariantMap};
use crate::program::{GeneralTransition, Loc, Pip, TransId, Transition, Violation};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabeledLocation {
    pub base: Loc,
    pub label: Constraint,
}

impl LabeledLocation {
    /// `base` for the label `true`, `base[label]` otherwise.
    pub fn name(&self) -> Loc {
        if self.label.is_true() {
            self.base.clone()
        } else {
            Loc::new(&format!("{}[{}]", self.base, self.label))
        }
    }
}

impl fmt::Display for LabeledLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}>", self.base, self.label)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RefineStats {
    pub steps: usize,
    pub step_bound: u128,
    pub pruned_transitions: usize,
    pub pruned_locations: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefinementResult {
    pub program: Pip,
    /// New transition name to original transition name.
    pub origin: BTreeMap<String, String>,
    /// New general transition name to original general transition name.
    pub gt_origin: BTreeMap<String, String>,
    pub location_origin: BTreeMap<Loc, LabeledLocation>,
    pub stats: RefineStats,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RefineError {
    #[error("unknown transition {0} in S")]
    UnknownTransition(String),
    #[error("refined program is invalid: {0:?}")]
    Invalid(Vec<Violation>),
}

/// `|T| * sum over l of 2^|alpha_l|`, saturating.
pub fn unrolling_step_bound(p: &Pip, layers: &AbstractionLayer) -> u128 {
    let per_loc: u128 = p
        .locations
        .iter()
        .map(|l| {
            let k = layers.get(l).len() as u32;
            1u128.checked_shl(k).unwrap_or(u128::MAX)
        })
        .fold(0u128, u128::saturating_add);
    (p.num_transitions() as u128).saturating_mul(per_loc)
}

/// Resolves transition names to ids.
pub fn selection(p: &Pip, names: &[String]) -> Result<BTreeSet<TransId>, RefineError> {
    names
        .iter()
        .map(|n| {
            p.find_transition(n)
                .ok_or_else(|| RefineError::UnknownTransition(n.clone()))
        })
        .collect()
}

// Appends primes until the name is unused.
struct Namer {
    used: BTreeSet<String>,
}

impl Namer {
    fn fresh(&mut self, base: &str) -> String {
        let mut name = format!("{base}'");
        while self.used.contains(&name) {
            name.push('\'');
        }
        self.used.insert(name.clone());
        name
    }
}

pub fn refine(
    p: &Pip,
    s: &BTreeSet<TransId>,
    layers: &AbstractionLayer,
) -> Result<RefinementResult, RefineError> {
    let mut locs: Vec<LabeledLocation> = Vec::new();
    let mut index: HashMap<LabeledLocation, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut intern = |ll: LabeledLocation, locs: &mut Vec<LabeledLocation>, queue: &mut VecDeque<usize>| {
        *index.entry(ll.clone()).or_insert_with(|| {
            locs.push(ll);
            queue.push_back(locs.len() - 1);
            locs.len() - 1
        })
    };
    for l in &p.locations {
        intern(
            LabeledLocation {
                base: l.clone(),
                label: Constraint::truth(),
            },
            &mut locs,
            &mut queue,
        );
    }

    let mut namer = Namer {
        used: BTreeSet::new(),
    };
    let mut gts = Vec::new();
    let mut origin = BTreeMap::new();
    let mut gt_origin = BTreeMap::new();
    let mut steps = 0usize;
    while let Some(li) = queue.pop_front() {
        let here = locs[li].clone();
        for gi in p.outgoing(&here.base) {
            let g = &p.gts[gi];
            let guard = here.label.and(&g.guard);
            let mut members = Vec::new();
            for (mi, t) in g.members.iter().enumerate() {
                steps += 1;
                let target_label = if s.contains(&TransId { gt: gi, member: mi }) {
                    label(&here.label, &g.guard, &t.update, layers.get(&t.target))
                } else {
                    Constraint::truth()
                };
                let ti = intern(
                    LabeledLocation {
                        base: t.target.clone(),
                        label: target_label,
                    },
                    &mut locs,
                    &mut queue,
                );
                let name = namer.fresh(&t.name);
                origin.insert(name.clone(), t.name.clone());
                members.push(Transition {
                    name,
                    prob: t.prob.clone(),
                    update: t.update.clone(),
                    target: locs[ti].name(),
                });
            }
            let name = if g.is_singleton() {
                members[0].name.clone()
            } else {
                namer.fresh(&g.name)
            };
            gt_origin.insert(name.clone(), g.name.clone());
            gts.push(GeneralTransition {
                name,
                source: here.name(),
                guard,
                members,
            });
        }
    }

    let step_bound = unrolling_step_bound(p, layers);
    assert!(steps as u128 <= step_bound, "{steps} unrolling steps exceed {step_bound}");
    let program = Pip {
        program_vars: p.program_vars.clone(),
        locations: locs.iter().map(LabeledLocation::name).collect(),
        initial: p.initial.clone(),
        gts,
    };
    program.validate().map_err(RefineError::Invalid)?;
    Ok(RefinementResult {
        program,
        origin,
        gt_origin,
        location_origin: locs.into_iter().map(|ll| (ll.name(), ll)).collect(),
        stats: RefineStats {
            steps,
            step_bound,
            ..RefineStats::default()
        },
    })
}

/// Drops general transitions whose guard contradicts the source invariant,
/// then locations unreachable from the initial one. Survivors are renamed
/// with the fewest primes available, in program order.
pub fn prune(r: &RefinementResult, inv: &InvariantMap) -> Result<RefinementResult, RefineError> {
    let p = &r.program;
    let live: Vec<bool> = p
        .gts
        .iter()
        .map(|g| is_satisfiable(&g.guard.and(&inv.get(&g.source))) != Satisfiability::Unsat)
        .collect();
    let kept = Pip {
        gts: p
            .gts
            .iter()
            .zip(&live)
            .filter(|(_, &l)| l)
            .map(|(g, _)| g.clone())
            .collect(),
        ..p.clone()
    };
    let reachable = kept.reachable_locations();
    let locations: Vec<Loc> = p
        .locations
        .iter()
        .filter(|l| reachable.contains(l))
        .cloned()
        .collect();

    let mut namer = Namer {
        used: BTreeSet::new(),
    };
    let mut origin = BTreeMap::new();
    let mut gt_origin = BTreeMap::new();
    let mut gts = Vec::new();
    for g in kept.gts.iter().filter(|g| reachable.contains(&g.source)) {
        let members: Vec<Transition> = g
            .members
            .iter()
            .map(|t| {
                let orig = &r.origin[&t.name];
                let name = namer.fresh(orig);
                origin.insert(name.clone(), orig.clone());
                Transition {
                    name,
                    ..t.clone()
                }
            })
            .collect();
        let orig_gt = &r.gt_origin[&g.name];
        let name = if g.is_singleton() {
            members[0].name.clone()
        } else {
            namer.fresh(orig_gt)
        };
        gt_origin.insert(name.clone(), orig_gt.clone());
        gts.push(GeneralTransition {
            name,
            members,
            ..g.clone()
        });
    }

    let program = Pip {
        program_vars: p.program_vars.clone(),
        locations: locations.clone(),
        initial: p.initial.clone(),
        gts,
    };
    program.validate().map_err(RefineError::Invalid)?;
    let pruned_transitions = p.num_transitions() - program.num_transitions();
    Ok(RefinementResult {
        location_origin: r
            .location_origin
            .iter()
            .filter(|(l, _)| reachable.contains(*l))
            .map(|(l, ll)| (l.clone(), ll.clone()))
            .collect(),
        program,
        origin,
        gt_origin,
        stats: RefineStats {
            pruned_transitions,
            pruned_locations: p.locations.len() - locations.len(),
            ..r.stats.clone()
        },
    })
}

/// Refines, infers invariants on the result and prunes with them.
pub fn refine_and_prune(
    p: &Pip,
    s: &BTreeSet<TransId>,
    layers: &AbstractionLayer,
) -> Result<RefinementResult, RefineError> {
    let raw = refine(p, s, layers)?;
    let inv = infer(&raw.program);
    prune(&raw, &inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::io::parse::{parse, parse_atom, parse_constraint};

    fn fig1_layers() -> AbstractionLayer {
        let x0 = BTreeSet::from([parse_atom("x = 0").unwrap()]);
        AbstractionLayer::new(BTreeMap::from([
            (Loc::new("l0"), BTreeSet::new()),
            (Loc::new("l1"), x0.clone()),
            (Loc::new("l2"), x0),
        ]))
    }

    fn fig1_s(p: &Pip) -> BTreeSet<TransId> {
        let names: Vec<String> = ["t1a", "t1b", "t2", "t3"].iter().map(|s| s.to_string()).collect();
        selection(p, &names).unwrap()
    }

    #[test]
    fn fig1_refines_to_fig2() {
        let p = corpus::fig1();
        let r = refine_and_prune(&p, &fig1_s(&p), &fig1_layers()).unwrap();
        assert_eq!(r.program, corpus::fig2());
        assert_eq!(r.stats.step_bound, 25);
        assert!(r.stats.steps <= 25);
    }

    #[test]
    fn before_pruning_the_dead_copies_exist() {
        let p = corpus::fig1();
        let r = refine(&p, &fig1_s(&p), &fig1_layers()).unwrap();
        let t2_copies: Vec<&GeneralTransition> = r
            .program
            .gts
            .iter()
            .filter(|g| r.gt_origin[&g.name] == "t2")
            .collect();
        assert!(t2_copies
            .iter()
            .any(|g| g.source == Loc::new("l1") && g.members[0].target == Loc::new("l2[x = 0]")));
        let self_loop = r
            .program
            .gts
            .iter()
            .find(|g| g.source == Loc::new("l1[x = 0]") && r.gt_origin[&g.name] == "t1")
            .unwrap();
        assert_eq!(self_loop.guard, parse_constraint("x = 0 && x > 0").unwrap());
        assert!(r.program.locations.contains(&Loc::new("l2")));
    }

    #[test]
    fn empty_selection_is_a_relabeling() {
        let p = corpus::fig1();
        let r = refine_and_prune(&p, &BTreeSet::new(), &fig1_layers()).unwrap();
        assert_eq!(r.program.locations, p.locations);
        assert_eq!(r.program.gts.len(), p.gts.len());
        for (g, h) in r.program.gts.iter().zip(&p.gts) {
            assert_eq!(g.guard, h.guard);
            assert_eq!(g.source, h.source);
            assert_eq!(r.gt_origin[&g.name], h.name);
        }
    }

    #[test]
    fn step_bound_with_empty_layers() {
        let p = corpus::fig1();
        assert_eq!(unrolling_step_bound(&p, &AbstractionLayer::default()), 5 * 3);
    }

    #[test]
    fn dead_chain_is_pruned() {
        let p = parse("start l0; trans t: l0 -> l1 when 0 > 1;").unwrap();
        let r = refine_and_prune(&p, &BTreeSet::new(), &AbstractionLayer::default()).unwrap();
        assert_eq!(r.program.locations, vec![Loc::new("l0")]);
        assert!(r.program.gts.is_empty());
        assert_eq!(r.stats.pruned_transitions, 1);
        assert_eq!(r.stats.pruned_locations, 1);
    }

    #[test]
    fn unknown_selection_is_named() {
        let p = corpus::fig1();
        assert_eq!(
            selection(&p, &["t9".to_string()]),
            Err(RefineError::UnknownTransition("t9".into()))
        );
    }
}
