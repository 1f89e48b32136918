//! Per-location invariants over a finite universe of program atoms.
//!
//! The result is the greatest fixpoint of: the initial location gets
//! `true`, every other location starts with the whole universe, and an atom
//! is dropped at `l'` whenever some transition into `l'` fails to preserve
//! it. Termination is immediate since each round only removes atoms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::constraint::{Atom, Constraint, Update};
use crate::entail::entails;
use crate::poly::Polynomial;
use crate::program::{Loc, Pip};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InvariantMap {
    inv: BTreeMap<Loc, Constraint>,
}

impl InvariantMap {
    pub fn from_map(inv: BTreeMap<Loc, Constraint>) -> InvariantMap {
        InvariantMap { inv }
    }

    /// The invariant at `l`; `true` for unknown locations.
    pub fn get(&self, l: &Loc) -> Constraint {
        self.inv.get(l).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Loc, &Constraint)> {
        self.inv.iter()
    }
}

impl fmt::Display for InvariantMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (l, c) in &self.inv {
            writeln!(f, "{l}: {c}")?;
        }
        Ok(())
    }
}

fn over_program_vars(p: &Pip, a: &Atom) -> bool {
    a.is_linear() && a.vars().iter().all(|v| p.is_program_var(v))
}

fn informative(a: &Atom) -> bool {
    !a.is_trivially_true() && !a.is_trivially_false()
}

// If every variable of `a` is assigned `v + c` (or left alone) by `eta`,
// the image of `a` after the step is `a[v := v - c]`.
fn post_image(a: &Atom, eta: &Update) -> Option<Atom> {
    let mut inverse = BTreeMap::new();
    for v in a.vars() {
        let img = eta.image(&v);
        let shift = &img - &Polynomial::var(v.clone());
        if !shift.is_constant() {
            return None;
        }
        inverse.insert(v.clone(), &Polynomial::var(v.clone()) - &shift);
    }
    Some(a.substitute(&Update::from_pairs(inverse)))
}

/// Guard atoms over program variables, their pre- and post-images under the
/// owning transition's update, and `x = c` for constant assignments.
pub fn atom_universe(p: &Pip) -> BTreeSet<Atom> {
    let mut out = BTreeSet::new();
    for (_, g, t) in p.transitions() {
        for a in g.guard.atoms() {
            let candidates = [
                Some(a.clone()),
                Some(a.substitute(&t.update)),
                post_image(a, &t.update),
            ];
            for c in candidates.into_iter().flatten() {
                if over_program_vars(p, &c) && informative(&c) {
                    out.insert(c);
                }
            }
        }
        for (v, img) in t.update.assigned() {
            if img.is_constant() && p.is_program_var(v) {
                out.insert(Atom::eq(Polynomial::var(v.clone()), img.clone()));
            }
        }
    }
    out
}

pub fn infer(p: &Pip) -> InvariantMap {
    infer_over(p, &atom_universe(p))
}

pub fn infer_over(p: &Pip, universe: &BTreeSet<Atom>) -> InvariantMap {
    let mut inv: BTreeMap<Loc, BTreeSet<Atom>> = p
        .locations
        .iter()
        .map(|l| {
            let start = if *l == p.initial {
                BTreeSet::new()
            } else {
                universe.clone()
            };
            (l.clone(), start)
        })
        .collect();
    loop {
        let mut changed = false;
        for (_, g, t) in p.transitions() {
            let pre = Constraint::from_atoms(inv[&g.source].iter().cloned()).and(&g.guard);
            let kept: BTreeSet<Atom> = inv[&t.target]
                .iter()
                .filter(|psi| entails(&pre, &psi.substitute(&t.update)))
                .cloned()
                .collect();
            if kept.len() != inv[&t.target].len() {
                inv.insert(t.target.clone(), kept);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    InvariantMap {
        inv: inv
            .into_iter()
            .map(|(l, atoms)| (l, Constraint::from_atoms(atoms)))
            .collect(),
    }
}
