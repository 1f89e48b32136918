//! Exact finite-horizon enumeration.
//!
//! Every admissible path of exactly `horizon` steps is produced with its
//! exact probability. Paths that reach `⊥` early are padded with `⊥`
//! steps, so the masses at every horizon sum to one.

use std::collections::BTreeMap;

use num::{One, Zero};

use super::{resolve, step_distribution, successors, Caps, Choice, Conf, Scheduler, SemanticsError, Step};
use crate::poly::State;
use crate::program::{Pip, Prob};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathRecord {
    pub start: Conf,
    pub steps: Vec<(Step, Conf)>,
    pub probability: Prob,
    /// Number of steps other than `⊥`.
    pub runtime: usize,
    pub terminated: bool,
}

impl PathRecord {
    pub fn initial(start: Conf) -> PathRecord {
        PathRecord {
            start,
            steps: Vec::new(),
            probability: Prob::one(),
            runtime: 0,
            terminated: false,
        }
    }

    pub fn last(&self) -> &Conf {
        self.steps.last().map_or(&self.start, |(_, c)| c)
    }

    pub fn history(&self) -> Vec<Step> {
        self.steps.iter().map(|(s, _)| *s).collect()
    }

    fn extended(&self, step: Step, conf: Conf, q: &Prob) -> PathRecord {
        let mut steps = self.steps.clone();
        steps.push((step, conf));
        PathRecord {
            start: self.start.clone(),
            steps,
            probability: &self.probability * q,
            runtime: self.runtime + usize::from(!step.is_bottom()),
            terminated: self.terminated || step.is_bottom(),
        }
    }

    /// `c0 -t1-> c1 -t2-> ...` with program transition names.
    pub fn render(&self, p: &Pip) -> String {
        let mut out = self.start.to_string();
        for (s, c) in &self.steps {
            out.push_str(&format!(" -{}-> {c}", s.name(p)));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HorizonReport {
    pub horizon: usize,
    pub total_mass: Prob,
    pub expected_truncated_runtime: Prob,
    pub terminated_mass: Prob,
    pub residual_mass: Prob,
    /// Expected truncated number of firings per general transition name.
    pub per_gt: BTreeMap<String, Prob>,
}

impl HorizonReport {
    fn empty(p: &Pip, horizon: usize) -> HorizonReport {
        HorizonReport {
            horizon,
            total_mass: Prob::zero(),
            expected_truncated_runtime: Prob::zero(),
            terminated_mass: Prob::zero(),
            residual_mass: Prob::zero(),
            per_gt: p.gts.iter().map(|g| (g.name.clone(), Prob::zero())).collect(),
        }
    }

    pub fn from_paths(p: &Pip, horizon: usize, paths: &[PathRecord]) -> HorizonReport {
        let mut r = HorizonReport::empty(p, horizon);
        for f in paths {
            r.total_mass += &f.probability;
            r.expected_truncated_runtime += &f.probability * Prob::from_integer(f.runtime.into());
            if f.terminated {
                r.terminated_mass += &f.probability;
            } else {
                r.residual_mass += &f.probability;
            }
            for (s, _) in &f.steps {
                if let Step::Fire(id) = s {
                    *r.per_gt.get_mut(&p.gts[id.gt].name).expect("known gt") += &f.probability;
                }
            }
        }
        r
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enumeration {
    pub report: HorizonReport,
    pub paths: Vec<PathRecord>,
}

pub fn enumerate_paths(
    p: &Pip,
    sched: &dyn Scheduler,
    start: Conf,
    horizon: usize,
    caps: &Caps,
) -> Result<Vec<PathRecord>, SemanticsError> {
    let mut paths = vec![PathRecord::initial(start)];
    for _ in 0..horizon {
        let mut next = Vec::with_capacity(paths.len());
        for f in &paths {
            for (step, conf, q) in step_distribution(p, sched, f.last(), &f.history())? {
                next.push(f.extended(step, conf, &q));
            }
            if next.len() > caps.paths {
                return Err(SemanticsError::PathCap {
                    cap: caps.paths,
                    count: next.len(),
                });
            }
        }
        paths = next;
    }
    Ok(paths)
}

pub fn enumerate(
    p: &Pip,
    sched: &dyn Scheduler,
    sigma0: State,
    horizon: usize,
    caps: &Caps,
) -> Result<Enumeration, SemanticsError> {
    let paths = enumerate_paths(p, sched, Conf::initial(p, sigma0), horizon, caps)?;
    Ok(Enumeration {
        report: HorizonReport::from_paths(p, horizon, &paths),
        paths,
    })
}

/// The same report as [`enumerate`], computed on the distribution over
/// configurations when the scheduler ignores history.
pub fn horizon_report(
    p: &Pip,
    sched: &dyn Scheduler,
    sigma0: State,
    horizon: usize,
    caps: &Caps,
) -> Result<HorizonReport, SemanticsError> {
    if sched.is_history_dependent() {
        return Ok(enumerate(p, sched, sigma0, horizon, caps)?.report);
    }
    let mut r = HorizonReport::empty(p, horizon);
    let mut dist: BTreeMap<Conf, Prob> = BTreeMap::from([(Conf::initial(p, sigma0), Prob::one())]);
    for _ in 0..horizon {
        let mut next: BTreeMap<Conf, Prob> = BTreeMap::new();
        for (c, m) in &dist {
            let choice = resolve(p, sched, c, &[])?;
            if let Choice::Take { gt, .. } = &choice {
                r.expected_truncated_runtime += m;
                *r.per_gt.get_mut(&p.gts[*gt].name).expect("known gt") += m;
            }
            for (_, c2, q) in successors(p, c, &choice)? {
                *next.entry(c2).or_insert_with(Prob::zero) += m * q;
            }
        }
        if next.len() > caps.states {
            return Err(SemanticsError::StateCap {
                cap: caps.states,
                count: next.len(),
            });
        }
        dist = next;
    }
    for (c, m) in &dist {
        r.total_mass += m;
        if c.is_terminal() {
            r.terminated_mass += m;
        } else {
            r.residual_mass += m;
        }
    }
    Ok(r)
}

/// Lower estimate of the expected runtime with the mass not yet terminated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuntimeEstimate {
    pub lower: Prob,
    pub residual_mass: Prob,
    pub per_gt: BTreeMap<String, Prob>,
}

pub fn expected_runtime_estimate(
    p: &Pip,
    sched: &dyn Scheduler,
    sigma0: State,
    horizon: usize,
    caps: &Caps,
) -> Result<RuntimeEstimate, SemanticsError> {
    let r = horizon_report(p, sched, sigma0, horizon, caps)?;
    Ok(RuntimeEstimate {
        lower: r.expected_truncated_runtime,
        residual_mass: r.residual_mass,
        per_gt: r.per_gt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::io::parse::parse;
    use crate::program::prob;
    use crate::semantics::SchedulerPolicy;
    use num::{BigInt, ToPrimitive};

    fn u1() -> SchedulerPolicy {
        SchedulerPolicy::first_enabled(vec![BigInt::from(1)])
    }

    fn xy(x: i64, y: i64) -> State {
        State::from_pairs([("x", x), ("y", y)])
    }

    #[test]
    fn horizon_zero_is_the_initial_configuration() {
        let p = corpus::fig1();
        let e = enumerate(&p, &u1(), xy(0, 1), 0, &Caps::default()).unwrap();
        assert_eq!(e.paths.len(), 1);
        assert_eq!(e.paths[0].probability, Prob::one());
        assert_eq!(e.report.total_mass, Prob::one());
        assert!(e.report.expected_truncated_runtime.is_zero());
    }

    #[test]
    fn fig1_depth_three() {
        // t0, then two coin flips; a reset at the first flip leaves l1 stuck
        // unless y > 0, and y = 1 enables t2 after it.
        let p = corpus::fig1();
        let e = enumerate(&p, &u1(), xy(0, 1), 3, &Caps::default()).unwrap();
        let names: Vec<Vec<String>> = e
            .paths
            .iter()
            .map(|f| f.steps.iter().map(|(s, _)| s.name(&p)).collect())
            .collect();
        let expect: Vec<Vec<String>> = [
            ["t0", "t1a", "t1a"],
            ["t0", "t1a", "t1b"],
            ["t0", "t1b", "t2"],
        ]
        .iter()
        .map(|r| r.iter().map(|s| s.to_string()).collect())
        .collect();
        assert_eq!(names, expect);
        let probs: Vec<Prob> = e.paths.iter().map(|f| f.probability.clone()).collect();
        assert_eq!(probs, vec![prob(1, 4), prob(1, 4), prob(1, 2)]);
        assert_eq!(e.report.total_mass, Prob::one());
        assert_eq!(e.report.expected_truncated_runtime, Prob::from_integer(3.into()));
    }

    #[test]
    fn forward_report_matches_paths() {
        for p in [corpus::fig1(), corpus::fig2()] {
            for h in 0..8 {
                let e = enumerate(&p, &u1(), xy(0, 2), h, &Caps::default()).unwrap();
                let r = horizon_report(&p, &u1(), xy(0, 2), h, &Caps::default()).unwrap();
                assert_eq!(e.report, r);
            }
        }
    }

    #[test]
    fn fig1_runtime_is_three_plus_two_y() {
        let p = corpus::fig1();
        let est = expected_runtime_estimate(&p, &u1(), xy(0, 2), 60, &Caps::default()).unwrap();
        let gap = (Prob::from_integer(7.into()) - &est.lower).to_f64().unwrap();
        assert!((0.0..1e-9).contains(&gap), "gap {gap}");
        assert!(est.residual_mass.to_f64().unwrap() < 1e-9);
    }

    #[test]
    fn false_guard_has_no_runtime() {
        let p = parse("vars x; start l0; trans t: l0 -> l1 when 1 <= 0; trans s: l1 -> l1;").unwrap();
        let est = expected_runtime_estimate(&p, &u1(), State::from_pairs([("x", 0)]), 5, &Caps::default())
            .unwrap();
        assert!(est.lower.is_zero());
        assert!(est.residual_mass.is_zero());
    }

    #[test]
    fn fig2_tail_counts() {
        let p = corpus::fig2();
        let est = expected_runtime_estimate(&p, &u1(), xy(0, 3), 80, &Caps::default()).unwrap();
        for g in ["t2'", "t3'"] {
            let gap = (Prob::from_integer(3.into()) - &est.per_gt[g]).to_f64().unwrap();
            assert!((0.0..1e-12).contains(&gap), "{g}: gap {gap}");
        }
    }

    #[test]
    fn path_cap_aborts() {
        let p = corpus::fig1();
        let caps = Caps {
            paths: 4,
            ..Caps::default()
        };
        let err = enumerate(&p, &u1(), xy(0, 3), 10, &caps).unwrap_err();
        assert!(matches!(err, SemanticsError::PathCap { cap: 4, .. }));
    }
}
