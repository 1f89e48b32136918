//! Executable semantics of probabilistic integer programs.
//!
//! A configuration is a location (or the terminal location, written `⊥`)
//! and a state. One step resolves the scheduler's choice and splits the
//! mass over the members of the chosen general transition; stopping moves
//! the whole mass to `⊥`, which then loops on itself without cost.
//! Temporaries chosen by the scheduler stay in the state after the step.

pub mod embedding;
pub mod enumerate;
pub mod mdp;
pub mod scheduler;
pub mod simulate;

use std::fmt;

use num::{One, Zero};
use thiserror::Error;

use crate::poly::{EvalError, State};
use crate::program::{Loc, Pip, Prob, TransId};

pub use scheduler::{
    enabled_choices, resolve, Choice, Decision, Fallback, PolicyError, PolicyRule, Scheduler,
    SchedulerPolicy,
};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Conf {
    /// `None` is the terminal location.
    pub loc: Option<Loc>,
    pub state: State,
}

impl Conf {
    pub fn new(loc: Loc, state: State) -> Conf {
        Conf {
            loc: Some(loc),
            state,
        }
    }

    pub fn initial(p: &Pip, sigma0: State) -> Conf {
        Conf::new(p.initial.clone(), sigma0)
    }

    pub fn is_terminal(&self) -> bool {
        self.loc.is_none()
    }

    /// The configuration with temporaries removed.
    pub fn restricted(&self, p: &Pip) -> Conf {
        Conf {
            loc: self.loc.clone(),
            state: restrict(p, &self.state),
        }
    }
}

impl fmt::Display for Conf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.loc {
            Some(l) => write!(f, "({l}, {})", self.state),
            None => write!(f, "(⊥, {})", self.state),
        }
    }
}

pub fn restrict(p: &Pip, s: &State) -> State {
    let mut out = State::new();
    for (v, x) in s.iter().filter(|(v, _)| p.is_program_var(v)) {
        out.set(v.clone(), x.clone());
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    Fire(TransId),
    /// The terminal transition into, or looping at, `⊥`.
    Bottom,
}

impl Step {
    pub fn name(&self, p: &Pip) -> String {
        match self {
            Step::Fire(id) => p.transition(*id).name.clone(),
            Step::Bottom => "⊥".to_string(),
        }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Step::Bottom)
    }
}

/// Limits on exhaustive exploration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub paths: usize,
    pub states: usize,
    pub steps: usize,
}

impl Default for Caps {
    fn default() -> Caps {
        Caps {
            paths: 1_000_000,
            states: 1_000_000,
            steps: 1_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("more than {cap} admissible paths (reached {count})")]
    PathCap { cap: usize, count: usize },
    #[error("more than {cap} configurations (reached {count})")]
    StateCap { cap: usize, count: usize },
}

/// Successors of `conf` once `choice` is fixed; the probabilities sum to one.
pub fn successors(p: &Pip, conf: &Conf, choice: &Choice) -> Result<Vec<(Step, Conf, Prob)>, EvalError> {
    match choice {
        Choice::Stop => Ok(vec![(
            Step::Bottom,
            Conf {
                loc: None,
                state: conf.state.clone(),
            },
            Prob::one(),
        )]),
        Choice::Take { gt, valuation } => p.gts[*gt]
            .members
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.prob.is_zero())
            .map(|(member, t)| {
                let state = t.update.apply(valuation)?;
                Ok((
                    Step::Fire(TransId { gt: *gt, member }),
                    Conf::new(t.target.clone(), state),
                    t.prob.clone(),
                ))
            })
            .collect(),
    }
}

/// One step from `conf` after `history` under `sched`.
pub fn step_distribution(
    p: &Pip,
    sched: &dyn Scheduler,
    conf: &Conf,
    history: &[Step],
) -> Result<Vec<(Step, Conf, Prob)>, SemanticsError> {
    let choice = resolve(p, sched, conf, history)?;
    Ok(successors(p, conf, &choice)?)
}
