//! Satisfiability and entailment for conjunctions of linear atoms.
//!
//! Both questions are answered over the rationals by Fourier-Motzkin
//! elimination with exact arithmetic. Atoms are already integer-normalized
//! (see [`crate::constraint`]), so e.g. `y > 0` reaches this module as
//! `y >= 1`, which lets rational reasoning prove `y - 1 >= 0`.
//!
//! Rational answers are one-sided sound for integers: `Unsat` implies no
//! integer model, and a positive entailment holds for every integer model.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigRational, Signed, Zero};

use crate::constraint::{Atom, Constraint, Rel};
use crate::poly::Var;

pub type Q = BigRational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearRow {
    pub coeffs: Vec<Q>,
    pub constant: Q,
    pub rel: Rel,
}

/// Rows `coeffs . vars + constant (<= | =) 0` over a fixed variable order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSystem {
    pub vars: Vec<Var>,
    pub rows: Vec<LinearRow>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Linearized {
    System(LinearSystem),
    /// At least one atom has degree > 1.
    Nonlinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Satisfiability {
    Sat,
    Unsat,
    Unknown,
}

fn q(n: &num::BigInt) -> Q {
    Q::from_integer(n.clone())
}

impl LinearSystem {
    pub fn from_atoms<'a, I>(atoms: I, extra_vars: &BTreeSet<Var>) -> Option<LinearSystem>
    where
        I: IntoIterator<Item = &'a Atom> + Clone,
    {
        let mut vars: BTreeSet<Var> = extra_vars.clone();
        for a in atoms.clone() {
            if !a.is_linear() {
                return None;
            }
            vars.extend(a.vars());
        }
        let vars: Vec<Var> = vars.into_iter().collect();
        let rows = atoms
            .into_iter()
            .map(|a| LinearRow {
                coeffs: vars.iter().map(|v| q(&a.poly().linear_coeff(v))).collect(),
                constant: q(&a.poly().constant_term()),
                rel: a.rel(),
            })
            .collect();
        Some(LinearSystem { vars, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_satisfiable(&self) -> Satisfiability {
        let rows = self.rows.iter().map(FmRow::from_linear).collect();
        if fm_feasible(rows, self.vars.len()) {
            Satisfiability::Sat
        } else {
            Satisfiability::Unsat
        }
    }
}

pub fn linearize(c: &Constraint) -> Linearized {
    match LinearSystem::from_atoms(c.atom_set(), &BTreeSet::new()) {
        Some(s) => Linearized::System(s),
        None => Linearized::Nonlinear,
    }
}

pub fn is_satisfiable(c: &Constraint) -> Satisfiability {
    if c.atoms().any(Atom::is_trivially_false) {
        return Satisfiability::Unsat;
    }
    match linearize(c) {
        Linearized::System(s) => s.is_satisfiable(),
        Linearized::Nonlinear => Satisfiability::Unknown,
    }
}

/// Does every rational model of `premise` satisfy `conclusion`?
///
/// Nonlinear premise atoms are dropped (a weaker premise); a nonlinear
/// conclusion is only entailed when it literally occurs in the premise.
pub fn entails(premise: &Constraint, conclusion: &Atom) -> bool {
    if conclusion.is_trivially_true() || premise.contains(conclusion) {
        return true;
    }
    if !conclusion.is_linear() {
        return false;
    }
    let linear: Vec<&Atom> = premise.atoms().filter(|a| a.is_linear()).collect();
    let sys = LinearSystem::from_atoms(linear.iter().copied(), &conclusion.vars())
        .expect("filtered to linear atoms");
    let base: Vec<FmRow> = sys.rows.iter().map(FmRow::from_linear).collect();
    let negations: Vec<FmRow> = match conclusion.rel() {
        Rel::Le => vec![negated(conclusion, &sys.vars, false)],
        Rel::Eq => vec![
            negated(conclusion, &sys.vars, false),
            negated(conclusion, &sys.vars, true),
        ],
    };
    negations.into_iter().all(|neg| {
        let mut rows = base.clone();
        rows.push(neg);
        !fm_feasible(rows, sys.vars.len())
    })
}

pub fn entails_all(premise: &Constraint, conclusion: &Constraint) -> bool {
    conclusion.atoms().all(|a| entails(premise, a))
}

// Strict row expressing the failure of `p <= 0` (or of `-p <= 0` when `flip`).
fn negated(a: &Atom, vars: &[Var], flip: bool) -> FmRow {
    // not (p <= 0)  <=>  p > 0  <=>  -p < 0
    let sign = if flip { Q::from_integer(1.into()) } else { Q::from_integer((-1).into()) };
    FmRow {
        coeffs: vars
            .iter()
            .map(|v| &sign * q(&a.poly().linear_coeff(v)))
            .collect(),
        constant: &sign * q(&a.poly().constant_term()),
        kind: FmKind::Lt,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum FmKind {
    Le,
    Lt,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct FmRow {
    coeffs: Vec<Q>,
    constant: Q,
    kind: FmKind,
}

impl FmRow {
    fn from_linear(r: &LinearRow) -> FmRow {
        FmRow {
            coeffs: r.coeffs.clone(),
            constant: r.constant.clone(),
            kind: match r.rel {
                Rel::Le => FmKind::Le,
                Rel::Eq => FmKind::Eq,
            },
        }
    }

    fn is_constant(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    fn constant_holds(&self) -> bool {
        match self.kind {
            FmKind::Le => !self.constant.is_positive(),
            FmKind::Lt => self.constant.is_negative(),
            FmKind::Eq => self.constant.is_zero(),
        }
    }

    // Scale so the first nonzero coefficient has absolute value one.
    fn normalize(mut self) -> FmRow {
        if let Some(lead) = self.coeffs.iter().find(|c| !c.is_zero()).cloned() {
            let mut s = lead.abs();
            if self.kind == FmKind::Eq && lead.is_negative() {
                s = -s;
            }
            for c in self.coeffs.iter_mut() {
                *c /= &s;
            }
            self.constant /= &s;
        }
        self
    }
}

fn fm_feasible(rows: Vec<FmRow>, nvars: usize) -> bool {
    let mut rows: Vec<FmRow> = rows;
    let mut eliminated = vec![false; nvars];

    // Equalities first: solve for one variable and substitute.
    while let Some(pos) = rows
        .iter()
        .position(|r| r.kind == FmKind::Eq && !r.is_constant())
    {
        let eq = rows.swap_remove(pos);
        let j = eq.coeffs.iter().position(|c| !c.is_zero()).unwrap();
        eliminated[j] = true;
        let pivot = eq.coeffs[j].clone();
        for r in rows.iter_mut() {
            if r.coeffs[j].is_zero() {
                continue;
            }
            let f = &r.coeffs[j] / &pivot;
            for (c, e) in r.coeffs.iter_mut().zip(&eq.coeffs) {
                *c -= &f * e;
            }
            r.constant -= &f * &eq.constant;
        }
    }

    let mut set: BTreeSet<(Vec<Q>, Q, FmKind)> = BTreeSet::new();
    for r in rows {
        if r.is_constant() {
            if !r.constant_holds() {
                return false;
            }
            continue;
        }
        let r = r.normalize();
        set.insert((r.coeffs, r.constant, r.kind));
    }

    loop {
        let live: Vec<FmRow> = set
            .iter()
            .map(|(c, k, kind)| FmRow {
                coeffs: c.clone(),
                constant: k.clone(),
                kind: *kind,
            })
            .collect();
        if live.is_empty() {
            return true;
        }
        // Pick the variable with the fewest generated combinations.
        let mut best: Option<(usize, usize)> = None;
        for j in 0..nvars {
            if eliminated[j] {
                continue;
            }
            let pos = live.iter().filter(|r| r.coeffs[j].is_positive()).count();
            let neg = live.iter().filter(|r| r.coeffs[j].is_negative()).count();
            if pos + neg == 0 {
                continue;
            }
            let cost = pos * neg;
            if best.map(|(_, b)| cost < b).unwrap_or(true) {
                best = Some((j, cost));
            }
        }
        let Some((j, _)) = best else {
            return true;
        };
        eliminated[j] = true;
        let mut next: BTreeSet<(Vec<Q>, Q, FmKind)> = BTreeSet::new();
        let (mut ups, mut downs) = (Vec::new(), Vec::new());
        for r in live {
            if r.coeffs[j].is_positive() {
                ups.push(r);
            } else if r.coeffs[j].is_negative() {
                downs.push(r);
            } else {
                next.insert((r.coeffs, r.constant, r.kind));
            }
        }
        for u in &ups {
            for d in &downs {
                let a = u.coeffs[j].clone();
                let b = -d.coeffs[j].clone();
                let coeffs: Vec<Q> = u
                    .coeffs
                    .iter()
                    .zip(&d.coeffs)
                    .map(|(cu, cd)| &b * cu + &a * cd)
                    .collect();
                let row = FmRow {
                    coeffs,
                    constant: &b * &u.constant + &a * &d.constant,
                    kind: if u.kind == FmKind::Lt || d.kind == FmKind::Lt {
                        FmKind::Lt
                    } else {
                        FmKind::Le
                    },
                };
                if row.is_constant() {
                    if !row.constant_holds() {
                        return false;
                    }
                    continue;
                }
                let row = row.normalize();
                next.insert((row.coeffs, row.constant, row.kind));
            }
        }
        set = prune_parallel(next);
    }
}

// Among rows with identical coefficients keep only the tightest bound.
fn prune_parallel(rows: BTreeSet<(Vec<Q>, Q, FmKind)>) -> BTreeSet<(Vec<Q>, Q, FmKind)> {
    let mut best: BTreeMap<Vec<Q>, (Q, FmKind)> = BTreeMap::new();
    for (c, k, kind) in rows {
        match best.get(&c) {
            // c.x + k <= 0: a larger k is tighter; at equal k strict wins.
            Some((bk, bkind)) if *bk > k || (*bk == k && *bkind >= kind) => {}
            _ => {
                best.insert(c, (k, kind));
            }
        }
    }
    best.into_iter().map(|(c, (k, kind))| (c, k, kind)).collect()
}
