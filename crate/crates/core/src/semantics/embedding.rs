//! Path embedding between a program and its refinement.
//!
//! A scheduler for the original program induces one for the refinement: at
//! `(<l, tau>, sigma)` with `sigma |= tau` it asks the original scheduler at
//! `(l, sigma)` and takes the copy of the chosen general transition that
//! leaves `<l, tau>`; otherwise it stops. Each original path `f` then has
//! an image `beta(f)` that visits the same states through copies, and
//! [`check_embedding`] verifies that `beta` is a bijection between the
//! admissible paths of both programs preserving probability, runtime and
//! termination.

use std::collections::HashMap;

use num::BigInt;

use super::enumerate::{enumerate_paths, PathRecord};
use super::{Caps, Conf, Decision, Scheduler, SemanticsError, Step};
use crate::cfr::RefinementResult;
use crate::poly::State;
use crate::program::{Loc, Pip};

pub struct InducedScheduler<'a> {
    original: &'a Pip,
    refinement: &'a RefinementResult,
    inner: &'a dyn Scheduler,
}

impl<'a> InducedScheduler<'a> {
    pub fn new(original: &'a Pip, refinement: &'a RefinementResult, inner: &'a dyn Scheduler) -> Self {
        InducedScheduler {
            original,
            refinement,
            inner,
        }
    }

    fn original_history(&self, history: &[Step]) -> Vec<Step> {
        history
            .iter()
            .map(|s| match s {
                Step::Bottom => Step::Bottom,
                Step::Fire(id) => {
                    let name = &self.refinement.program.transition(*id).name;
                    let orig = &self.refinement.origin[name];
                    Step::Fire(self.original.find_transition(orig).expect("origin names an original transition"))
                }
            })
            .collect()
    }
}

impl Scheduler for InducedScheduler<'_> {
    fn decide(&self, p: &Pip, conf: &Conf, history: &[Step]) -> Decision {
        let Some(loc) = &conf.loc else {
            return Decision::Stop;
        };
        let Some(ll) = self.refinement.location_origin.get(loc) else {
            return Decision::Stop;
        };
        if !ll.label.satisfied_by(&conf.state).unwrap_or(false) {
            return Decision::Stop;
        }
        let inner_conf = Conf::new(ll.base.clone(), conf.state.clone());
        match self.inner.decide(self.original, &inner_conf, &self.original_history(history)) {
            Decision::Stop => Decision::Stop,
            Decision::Take { gt, temps } => {
                let copy = p.gts.iter().find(|g| {
                    g.source == *loc && self.refinement.gt_origin.get(&g.name) == Some(&gt)
                });
                match copy {
                    Some(g) => Decision::Take {
                        gt: g.name.clone(),
                        temps,
                    },
                    None => Decision::Stop,
                }
            }
        }
    }

    fn temp_values(&self) -> &[BigInt] {
        self.inner.temp_values()
    }

    fn is_history_dependent(&self) -> bool {
        self.inner.is_history_dependent()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub path: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddingReport {
    pub original_paths: usize,
    pub refined_paths: usize,
    pub counterexample: Option<Counterexample>,
}

impl EmbeddingReport {
    pub fn ok(&self) -> bool {
        self.counterexample.is_none()
    }
}

type PathKey = Vec<(String, Option<Loc>, State)>;

fn key(p: &Pip, f: &PathRecord) -> PathKey {
    f.steps
        .iter()
        .map(|(s, c)| (s.name(p), c.loc.clone(), c.state.clone()))
        .collect()
}

// Follows `f` through the refinement: every step keeps its state and moves
// along the copy whose member originates from the original member.
fn image(p: &Pip, r: &RefinementResult, induced: &InducedScheduler, f: &PathRecord) -> Result<PathKey, String> {
    let q = &r.program;
    let mut loc = Some(q.initial.clone());
    let mut history = Vec::new();
    let mut out = Vec::new();
    let mut prev = f.start.state.clone();
    for (i, (s, c)) in f.steps.iter().enumerate() {
        let (name, next) = match (s, &loc) {
            (Step::Bottom, _) => ("⊥".to_string(), None),
            (Step::Fire(_), None) => return Err(format!("step {} leaves ⊥", i + 1)),
            (Step::Fire(id), Some(l)) => {
                let here = Conf::new(l.clone(), prev.clone());
                let Decision::Take { gt, .. } = induced.decide(q, &here, &history) else {
                    return Err(format!("induced scheduler stops at {here} (step {})", i + 1));
                };
                let g = q.gts.iter().find(|g| g.name == gt).expect("decided gt exists");
                let want = &p.transition(*id).name;
                let Some(m) = g.members.iter().position(|t| r.origin.get(&t.name) == Some(want)) else {
                    return Err(format!("no copy of {want} in {} (step {})", g.label(), i + 1));
                };
                let gi = q.gts.iter().position(|h| h.name == gt).expect("decided gt exists");
                history.push(Step::Fire(crate::program::TransId { gt: gi, member: m }));
                (g.members[m].name.clone(), Some(g.members[m].target.clone()))
            }
        };
        if s.is_bottom() {
            history.push(Step::Bottom);
        }
        out.push((name, next.clone(), c.state.clone()));
        loc = next;
        prev = c.state.clone();
    }
    Ok(out)
}

pub fn check_embedding(
    p: &Pip,
    r: &RefinementResult,
    pol: &dyn Scheduler,
    sigma0: &State,
    horizon: usize,
    caps: &Caps,
) -> Result<EmbeddingReport, SemanticsError> {
    let induced = InducedScheduler::new(p, r, pol);
    let q = &r.program;
    let paths = enumerate_paths(p, pol, Conf::initial(p, sigma0.clone()), horizon, caps)?;
    let refined = match enumerate_paths(q, &induced, Conf::initial(q, sigma0.clone()), horizon, caps) {
        Ok(v) => v,
        Err(SemanticsError::Policy(e)) => {
            return Ok(EmbeddingReport {
                original_paths: paths.len(),
                refined_paths: 0,
                counterexample: Some(Counterexample {
                    path: e.conf.clone(),
                    reason: format!("induced scheduler is invalid: {e}"),
                }),
            })
        }
        Err(e) => return Err(e),
    };
    let mut report = EmbeddingReport {
        original_paths: paths.len(),
        refined_paths: refined.len(),
        counterexample: None,
    };
    let mut index: HashMap<PathKey, (usize, bool)> = refined
        .iter()
        .enumerate()
        .map(|(i, g)| (key(q, g), (i, false)))
        .collect();
    let fail = |path: String, reason: String| Some(Counterexample { path, reason });
    for f in &paths {
        let k = match image(p, r, &induced, f) {
            Ok(k) => k,
            Err(reason) => {
                report.counterexample = fail(f.render(p), reason);
                return Ok(report);
            }
        };
        let Some((j, seen)) = index.get_mut(&k) else {
            report.counterexample = fail(f.render(p), "image is not admissible in the refinement".into());
            return Ok(report);
        };
        if *seen {
            report.counterexample = fail(f.render(p), "two paths share an image".into());
            return Ok(report);
        }
        *seen = true;
        let g = &refined[*j];
        let reason = if g.probability != f.probability {
            Some(format!("probability {} becomes {}", f.probability, g.probability))
        } else if g.runtime != f.runtime {
            Some(format!("runtime {} becomes {}", f.runtime, g.runtime))
        } else if g.terminated != f.terminated {
            Some("termination differs".to_string())
        } else {
            None
        };
        if let Some(reason) = reason {
            report.counterexample = fail(f.render(p), reason);
            return Ok(report);
        }
    }
    if let Some(g) = refined.iter().find(|g| !index[&key(q, g)].1) {
        report.counterexample = fail(g.render(q), "refined path has no preimage".into());
    }
    Ok(report)
}
