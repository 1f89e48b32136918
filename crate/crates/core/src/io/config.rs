//! Run configuration read from `.cfr.json` files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use num::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{heuristic_layers, AbstractionLayer, LayerOptions};
use crate::constraint::{Atom, Constraint};
use crate::io::parse::{parse_atom, parse_constraint, SyntaxError};
use crate::poly::{State, Var};
use crate::program::{Loc, Pip, TransId};
use crate::semantics::{Caps, Decision, Fallback, PolicyRule, SchedulerPolicy};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown transition {0}")]
    UnknownTransition(String),
    #[error("unknown location {0}")]
    UnknownLocation(String),
    #[error("cannot parse `{text}`: {source}")]
    Syntax { text: String, source: SyntaxError },
    #[error("policy entry needs exactly one of `take` and `stop`")]
    AmbiguousDecision,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsConfig {
    pub paths: Option<usize>,
    pub states: Option<usize>,
    pub steps: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleConfig {
    pub location: String,
    #[serde(default)]
    pub when: Option<String>,
    #[serde(default)]
    pub take: Option<String>,
    #[serde(default)]
    pub temps: BTreeMap<String, i64>,
    #[serde(default)]
    pub stop: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryConfig {
    pub path: Vec<String>,
    #[serde(default)]
    pub take: Option<String>,
    #[serde(default)]
    pub temps: BTreeMap<String, i64>,
    #[serde(default)]
    pub stop: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FallbackConfig {
    #[default]
    First,
    Hashed(u64),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    #[serde(default)]
    pub rules: Vec<RuleConfig>,
    #[serde(default)]
    pub history: Vec<HistoryConfig>,
    #[serde(default)]
    pub fallback: FallbackConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Transitions to refine; every transition when absent.
    #[serde(default)]
    pub s: Option<Vec<String>>,
    /// Exact layers per location.
    #[serde(default)]
    pub alpha: BTreeMap<String, Vec<String>>,
    /// Atoms added to the heuristic layers.
    #[serde(default)]
    pub alpha_extra: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub split_equalities: bool,
    #[serde(default)]
    pub temp_values: Vec<i64>,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub caps: CapsConfig,
    #[serde(default)]
    pub sigma0: BTreeMap<String, i64>,
    #[serde(default)]
    pub policy: Option<PolicyConfig>,
    /// Bound cover as lists of general transition names.
    #[serde(default)]
    pub cover: Option<Vec<Vec<String>>>,
}

fn atom(text: &str) -> Result<Atom, ConfigError> {
    parse_atom(text).map_err(|source| ConfigError::Syntax {
        text: text.to_string(),
        source,
    })
}

fn location(p: &Pip, name: &str) -> Result<Loc, ConfigError> {
    let l = Loc::new(name);
    if p.locations.contains(&l) {
        Ok(l)
    } else {
        Err(ConfigError::UnknownLocation(name.to_string()))
    }
}

fn atom_map(p: &Pip, m: &BTreeMap<String, Vec<String>>) -> Result<BTreeMap<Loc, BTreeSet<Atom>>, ConfigError> {
    m.iter()
        .map(|(l, atoms)| {
            Ok((
                location(p, l)?,
                atoms.iter().map(|a| atom(a)).collect::<Result<_, _>>()?,
            ))
        })
        .collect()
}

fn decision(
    p: &Pip,
    take: &Option<String>,
    temps: &BTreeMap<String, i64>,
    stop: bool,
) -> Result<Decision, ConfigError> {
    match (take, stop) {
        (None, true) => Ok(Decision::Stop),
        (Some(name), false) => {
            let gi = p
                .find_gt(name)
                .ok_or_else(|| ConfigError::UnknownTransition(name.clone()))?;
            Ok(Decision::Take {
                gt: p.gts[gi].name.clone(),
                temps: temps
                    .iter()
                    .map(|(v, x)| (Var::new(v), BigInt::from(*x)))
                    .collect(),
            })
        }
        _ => Err(ConfigError::AmbiguousDecision),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        RunConfig::from_json(&text)
    }

    /// Checks that every name refers to something in `p`.
    pub fn validate(&self, p: &Pip) -> Result<(), ConfigError> {
        self.selection(p)?;
        self.layer_options(p)?;
        self.policy(p)?;
        self.cover(p)?;
        Ok(())
    }

    pub fn selection(&self, p: &Pip) -> Result<BTreeSet<TransId>, ConfigError> {
        match &self.s {
            None => Ok(p.transitions().map(|(id, _, _)| id).collect()),
            Some(names) => names
                .iter()
                .map(|n| {
                    p.find_transition(n)
                        .ok_or_else(|| ConfigError::UnknownTransition(n.clone()))
                })
                .collect(),
        }
    }

    pub fn layer_options(&self, p: &Pip) -> Result<LayerOptions, ConfigError> {
        Ok(LayerOptions {
            split_equalities: self.split_equalities,
            pinned: atom_map(p, &self.alpha)?,
            extra: atom_map(p, &self.alpha_extra)?,
        })
    }

    pub fn layers(&self, p: &Pip) -> Result<AbstractionLayer, ConfigError> {
        Ok(heuristic_layers(p, &self.selection(p)?, &self.layer_options(p)?))
    }

    pub fn temp_values(&self) -> Vec<BigInt> {
        self.temp_values.iter().map(|&x| BigInt::from(x)).collect()
    }

    pub fn sigma0(&self) -> State {
        State::from_pairs(self.sigma0.iter().map(|(v, x)| (v.as_str(), *x)))
    }

    pub fn caps(&self) -> Caps {
        let d = Caps::default();
        Caps {
            paths: self.caps.paths.unwrap_or(d.paths),
            states: self.caps.states.unwrap_or(d.states),
            steps: self.caps.steps.unwrap_or(d.steps),
        }
    }

    pub fn policy(&self, p: &Pip) -> Result<SchedulerPolicy, ConfigError> {
        let Some(pc) = &self.policy else {
            return Ok(SchedulerPolicy::first_enabled(self.temp_values()));
        };
        let rules = pc
            .rules
            .iter()
            .map(|r| {
                let when = match &r.when {
                    None => Constraint::truth(),
                    Some(text) => parse_constraint(text).map_err(|source| ConfigError::Syntax {
                        text: text.clone(),
                        source,
                    })?,
                };
                Ok(PolicyRule {
                    location: location(p, &r.location)?,
                    when,
                    decision: decision(p, &r.take, &r.temps, r.stop)?,
                })
            })
            .collect::<Result<_, ConfigError>>()?;
        let history = pc
            .history
            .iter()
            .map(|h| {
                for n in &h.path {
                    if n != "⊥" && p.find_transition(n).is_none() {
                        return Err(ConfigError::UnknownTransition(n.clone()));
                    }
                }
                Ok((h.path.clone(), decision(p, &h.take, &h.temps, h.stop)?))
            })
            .collect::<Result<_, ConfigError>>()?;
        Ok(SchedulerPolicy {
            rules,
            history,
            fallback: match pc.fallback {
                FallbackConfig::First => Fallback::FirstEnabled,
                FallbackConfig::Hashed(seed) => Fallback::Hashed(seed),
            },
            temp_values: self.temp_values(),
        })
    }

    /// The cover as general transition indices, when one is given.
    pub fn cover(&self, p: &Pip) -> Result<Option<Vec<BTreeSet<usize>>>, ConfigError> {
        let Some(cover) = &self.cover else {
            return Ok(None);
        };
        cover
            .iter()
            .map(|entry| {
                entry
                    .iter()
                    .map(|n| p.find_gt(n).ok_or_else(|| ConfigError::UnknownTransition(n.clone())))
                    .collect()
            })
            .collect::<Result<_, _>>()
            .map(Some)
    }
}
